#include "ascn/tape.hpp"

#include <algorithm>
#include <cmath>

#include "ascn/error.hpp"

namespace ascn {

namespace {

// Directions shorter than this cannot be normalized meaningfully; they score
// zero and stay out of the gradient flow. Must match the scalar kernels.
constexpr double kNormFloor = 1e-12;

}  // namespace

NodeId Tape::push(Node n) {
    if (n.value.rows() == 0 || n.value.cols() == 0)
        throw InvalidParam("tape nodes cannot hold empty matrices");
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

const FeatureMap& Tape::val(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw InvalidParam("tape node id out of range");
    return nodes_[static_cast<std::size_t>(id)].value;
}

const FeatureMap& Tape::value(NodeId id) const { return val(id); }

NodeId Tape::constant(FeatureMap value) {
    Node n;
    n.op = Op::constant;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Tape::param(ParamTensor& tensor) {
    Node n;
    n.op = Op::param;
    n.value = tensor.value;
    n.bound = &tensor;
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const FeatureMap& A = val(a);
    const FeatureMap& B = val(b);
    if (A.cols() != B.rows()) throw DimensionMismatch("matmul inner dimensions differ");
    Node n;
    n.op = Op::matmul;
    n.a = a;
    n.b = b;
    n.value = FeatureMap(A.rows(), B.cols());
    for (std::size_t i = 0; i < A.rows(); ++i) {
        const auto arow = A.row(i);
        auto orow = n.value.row(i);
        for (std::size_t k = 0; k < A.cols(); ++k) {
            const double av = arow[k];
            const auto brow = B.row(k);
            for (std::size_t j = 0; j < B.cols(); ++j) orow[j] += av * brow[j];
        }
    }
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    const FeatureMap& A = val(a);
    const FeatureMap& B = val(b);
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw DimensionMismatch("elementwise add requires equal shapes");
    Node n;
    n.op = Op::add;
    n.a = a;
    n.b = b;
    n.value = A;
    for (std::size_t k = 0; k < n.value.data().size(); ++k) n.value.data()[k] += B.data()[k];
    return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
    const FeatureMap& A = val(a);
    const FeatureMap& B = val(b);
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw DimensionMismatch("elementwise mul requires equal shapes");
    Node n;
    n.op = Op::mul;
    n.a = a;
    n.b = b;
    n.value = A;
    for (std::size_t k = 0; k < n.value.data().size(); ++k) n.value.data()[k] *= B.data()[k];
    return push(std::move(n));
}

NodeId Tape::add_row_vec(NodeId a, NodeId row) {
    const FeatureMap& A = val(a);
    const FeatureMap& R = val(row);
    if (R.rows() != 1 || R.cols() != A.cols())
        throw DimensionMismatch("row vector must be 1 x cols(a)");
    Node n;
    n.op = Op::add_row_vec;
    n.a = a;
    n.b = row;
    n.value = A;
    for (std::size_t r = 0; r < A.rows(); ++r)
        for (std::size_t c = 0; c < A.cols(); ++c) n.value(r, c) += R(0, c);
    return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
    Node n;
    n.op = Op::relu;
    n.a = a;
    n.value = val(a);
    for (double& x : n.value.data()) x = x > 0.0 ? x : 0.0;
    return push(std::move(n));
}

NodeId Tape::clamp_unit(NodeId a) {
    Node n;
    n.op = Op::clamp_unit;
    n.a = a;
    n.value = val(a);
    for (double& x : n.value.data()) x = std::clamp(x, -1.0, 1.0);
    return push(std::move(n));
}

NodeId Tape::gather_rows(NodeId a, std::vector<int> rows) {
    const FeatureMap& A = val(a);
    if (rows.empty()) throw InvalidParam("gather needs at least one row");
    Node n;
    n.op = Op::gather_rows;
    n.a = a;
    n.value = FeatureMap(rows.size(), A.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= A.rows())
            throw DimensionMismatch("gathered row out of range");
        const auto src = A.row(static_cast<std::size_t>(rows[i]));
        std::copy(src.begin(), src.end(), n.value.row(i).begin());
    }
    n.ints = std::move(rows);
    return push(std::move(n));
}

NodeId Tape::segment_max_rows(NodeId a, int group) {
    const FeatureMap& A = val(a);
    if (group < 1 || A.rows() % static_cast<std::size_t>(group) != 0)
        throw DimensionMismatch("rows must split into equal segments");
    const std::size_t g = static_cast<std::size_t>(group);
    const std::size_t segs = A.rows() / g;
    Node n;
    n.op = Op::segment_max_rows;
    n.a = a;
    n.group = group;
    n.value = FeatureMap(segs, A.cols());
    n.argmax.resize(segs * A.cols());
    for (std::size_t s = 0; s < segs; ++s)
        for (std::size_t c = 0; c < A.cols(); ++c) {
            double best = A(s * g, c);
            std::size_t arg = s * g;
            for (std::size_t r = 1; r < g; ++r) {
                const double v = A(s * g + r, c);
                if (v > best) {
                    best = v;
                    arg = s * g + r;
                }
            }
            n.value(s, c) = best;
            n.argmax[s * A.cols() + c] = static_cast<int>(arg);
        }
    return push(std::move(n));
}

NodeId Tape::col_group_sum(NodeId a, int group) {
    const FeatureMap& A = val(a);
    if (group < 1 || A.cols() % static_cast<std::size_t>(group) != 0)
        throw DimensionMismatch("columns must split into equal groups");
    const std::size_t g = static_cast<std::size_t>(group);
    const std::size_t out_cols = A.cols() / g;
    Node n;
    n.op = Op::col_group_sum;
    n.a = a;
    n.group = group;
    n.value = FeatureMap(A.rows(), out_cols);
    for (std::size_t r = 0; r < A.rows(); ++r)
        for (std::size_t q = 0; q < out_cols; ++q) {
            double acc = 0.0;
            for (std::size_t s = 0; s < g; ++s) acc += A(r, q * g + s);
            n.value(r, q) = acc;
        }
    return push(std::move(n));
}

NodeId Tape::outer(NodeId col, NodeId row) {
    const FeatureMap& C = val(col);
    const FeatureMap& R = val(row);
    if (C.cols() != 1 || R.rows() != 1)
        throw DimensionMismatch("outer needs a column vector and a row vector");
    Node n;
    n.op = Op::outer;
    n.a = col;
    n.b = row;
    n.value = FeatureMap(C.rows(), R.cols());
    for (std::size_t r = 0; r < C.rows(); ++r)
        for (std::size_t c = 0; c < R.cols(); ++c) n.value(r, c) = C(r, 0) * R(0, c);
    return push(std::move(n));
}

NodeId Tape::hstack(NodeId a, NodeId b) {
    const FeatureMap& A = val(a);
    const FeatureMap& B = val(b);
    if (A.rows() != B.rows()) throw DimensionMismatch("hstack requires equal heights");
    Node n;
    n.op = Op::hstack;
    n.a = a;
    n.b = b;
    n.value = FeatureMap(A.rows(), A.cols() + B.cols());
    for (std::size_t r = 0; r < A.rows(); ++r) {
        auto dst = n.value.row(r);
        const auto ra = A.row(r);
        const auto rb = B.row(r);
        std::copy(ra.begin(), ra.end(), dst.begin());
        std::copy(rb.begin(), rb.end(), dst.begin() + static_cast<std::ptrdiff_t>(A.cols()));
    }
    return push(std::move(n));
}

NodeId Tape::neighborhood_max(NodeId a, std::vector<int> neighbor_ids,
                              std::vector<int> valid_counts, int slots) {
    const FeatureMap& A = val(a);
    const std::size_t rows = A.rows();
    if (slots < 0 || valid_counts.size() != rows ||
        neighbor_ids.size() != rows * static_cast<std::size_t>(slots))
        throw DimensionMismatch("neighbor table does not match the feature map");
    Node n;
    n.op = Op::neighborhood_max;
    n.a = a;
    n.group = slots;
    n.value = FeatureMap(rows, A.cols());
    n.argmax.resize(rows * A.cols());
    for (std::size_t r = 0; r < rows; ++r) {
        const int valid = valid_counts[r];
        if (valid < 0 || valid > slots)
            throw DimensionMismatch("valid neighbor count out of range");
        for (std::size_t c = 0; c < A.cols(); ++c) {
            // The point itself always participates and wins ties.
            double best = A(r, c);
            int arg = static_cast<int>(r);
            for (int m = 0; m < valid; ++m) {
                const int id = neighbor_ids[r * static_cast<std::size_t>(slots) +
                                            static_cast<std::size_t>(m)];
                if (id < 0 || static_cast<std::size_t>(id) >= rows)
                    throw DimensionMismatch("neighbor id out of range");
                const double v = A(static_cast<std::size_t>(id), c);
                if (v > best) {
                    best = v;
                    arg = id;
                }
            }
            n.value(r, c) = best;
            n.argmax[r * A.cols() + c] = arg;
        }
    }
    n.ints = std::move(neighbor_ids);
    n.ints2 = std::move(valid_counts);
    return push(std::move(n));
}

NodeId Tape::col_max(NodeId a) {
    const FeatureMap& A = val(a);
    Node n;
    n.op = Op::col_max;
    n.a = a;
    n.value = FeatureMap(1, A.cols());
    n.argmax.resize(A.cols());
    for (std::size_t c = 0; c < A.cols(); ++c) {
        double best = A(0, c);
        int arg = 0;
        for (std::size_t r = 1; r < A.rows(); ++r)
            if (A(r, c) > best) {
                best = A(r, c);
                arg = static_cast<int>(r);
            }
        n.value(0, c) = best;
        n.argmax[c] = arg;
    }
    return push(std::move(n));
}

NodeId Tape::unit_columns(NodeId a) {
    const FeatureMap& A = val(a);
    Node n;
    n.op = Op::unit_columns;
    n.a = a;
    n.value = FeatureMap(A.rows(), A.cols());
    n.auxd.resize(A.cols());
    for (std::size_t c = 0; c < A.cols(); ++c) {
        double n2 = 0.0;
        for (std::size_t r = 0; r < A.rows(); ++r) n2 += A(r, c) * A(r, c);
        const double norm = std::sqrt(n2);
        if (norm < kNormFloor) {
            n.auxd[c] = 0.0;  // column stays zero; no gradient flows back
            continue;
        }
        n.auxd[c] = norm;
        for (std::size_t r = 0; r < A.rows(); ++r) n.value(r, c) = A(r, c) / norm;
    }
    return push(std::move(n));
}

NodeId Tape::log_softmax_row(NodeId a) {
    const FeatureMap& A = val(a);
    if (A.rows() != 1) throw DimensionMismatch("log-softmax expects a single row");
    Node n;
    n.op = Op::log_softmax_row;
    n.a = a;
    n.value = FeatureMap(1, A.cols());
    double m = A(0, 0);
    for (std::size_t c = 1; c < A.cols(); ++c)
        if (A(0, c) > m) m = A(0, c);
    double acc = 0.0;
    for (std::size_t c = 0; c < A.cols(); ++c) acc += std::exp(A(0, c) - m);
    const double lse = std::log(acc);
    for (std::size_t c = 0; c < A.cols(); ++c) n.value(0, c) = (A(0, c) - m) - lse;
    return push(std::move(n));
}

NodeId Tape::select_neg(NodeId a, int column) {
    const FeatureMap& A = val(a);
    if (A.rows() != 1) throw DimensionMismatch("selection expects a single row");
    if (column < 0 || static_cast<std::size_t>(column) >= A.cols())
        throw InvalidParam("selected column out of range");
    Node n;
    n.op = Op::select_neg;
    n.a = a;
    n.group = column;
    n.value = FeatureMap(1, 1, -A(0, static_cast<std::size_t>(column)));
    return push(std::move(n));
}

void Tape::backward(NodeId loss) {
    const FeatureMap& top = val(loss);
    if (top.rows() != 1 || top.cols() != 1)
        throw InvalidParam("backward starts from a scalar node");

    std::vector<FeatureMap> grad(nodes_.size());
    auto g = [&](NodeId id) -> FeatureMap& {
        FeatureMap& gm = grad[static_cast<std::size_t>(id)];
        const FeatureMap& v = nodes_[static_cast<std::size_t>(id)].value;
        if (gm.rows() == 0) gm = FeatureMap(v.rows(), v.cols());
        return gm;
    };
    g(loss)(0, 0) = 1.0;

    for (NodeId i = loss; i >= 0; --i) {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        const FeatureMap& go = grad[static_cast<std::size_t>(i)];
        if (go.rows() == 0) continue;  // nothing flowed into this node
        switch (n.op) {
            case Op::constant:
            case Op::param:
                break;
            case Op::matmul: {
                const FeatureMap& A = nodes_[static_cast<std::size_t>(n.a)].value;
                const FeatureMap& B = nodes_[static_cast<std::size_t>(n.b)].value;
                FeatureMap& da = g(n.a);
                FeatureMap& db = g(n.b);
                for (std::size_t i2 = 0; i2 < A.rows(); ++i2) {
                    const auto grow = go.row(i2);
                    for (std::size_t k = 0; k < A.cols(); ++k) {
                        const auto brow = B.row(k);
                        double acc = 0.0;
                        for (std::size_t j = 0; j < B.cols(); ++j) acc += grow[j] * brow[j];
                        da(i2, k) += acc;
                        const double av = A(i2, k);
                        auto dbrow = db.row(k);
                        for (std::size_t j = 0; j < B.cols(); ++j) dbrow[j] += av * grow[j];
                    }
                }
                break;
            }
            case Op::add: {
                FeatureMap& da = g(n.a);
                FeatureMap& db = g(n.b);
                for (std::size_t k = 0; k < go.data().size(); ++k) {
                    da.data()[k] += go.data()[k];
                    db.data()[k] += go.data()[k];
                }
                break;
            }
            case Op::mul: {
                const FeatureMap& A = nodes_[static_cast<std::size_t>(n.a)].value;
                const FeatureMap& B = nodes_[static_cast<std::size_t>(n.b)].value;
                FeatureMap& da = g(n.a);
                FeatureMap& db = g(n.b);
                for (std::size_t k = 0; k < go.data().size(); ++k) {
                    da.data()[k] += go.data()[k] * B.data()[k];
                    db.data()[k] += go.data()[k] * A.data()[k];
                }
                break;
            }
            case Op::add_row_vec: {
                FeatureMap& da = g(n.a);
                FeatureMap& dr = g(n.b);
                for (std::size_t r = 0; r < go.rows(); ++r)
                    for (std::size_t c = 0; c < go.cols(); ++c) {
                        da(r, c) += go(r, c);
                        dr(0, c) += go(r, c);
                    }
                break;
            }
            case Op::relu: {
                const FeatureMap& X = nodes_[static_cast<std::size_t>(n.a)].value;
                FeatureMap& da = g(n.a);
                for (std::size_t k = 0; k < go.data().size(); ++k)
                    if (X.data()[k] > 0.0) da.data()[k] += go.data()[k];
                break;
            }
            case Op::clamp_unit: {
                const FeatureMap& X = nodes_[static_cast<std::size_t>(n.a)].value;
                FeatureMap& da = g(n.a);
                for (std::size_t k = 0; k < go.data().size(); ++k)
                    if (X.data()[k] >= -1.0 && X.data()[k] <= 1.0)
                        da.data()[k] += go.data()[k];
                break;
            }
            case Op::gather_rows: {
                FeatureMap& da = g(n.a);
                for (std::size_t r = 0; r < go.rows(); ++r) {
                    auto dst = da.row(static_cast<std::size_t>(n.ints[r]));
                    const auto src = go.row(r);
                    for (std::size_t c = 0; c < go.cols(); ++c) dst[c] += src[c];
                }
                break;
            }
            case Op::segment_max_rows: {
                FeatureMap& da = g(n.a);
                for (std::size_t s = 0; s < go.rows(); ++s)
                    for (std::size_t c = 0; c < go.cols(); ++c)
                        da(static_cast<std::size_t>(n.argmax[s * go.cols() + c]), c) +=
                            go(s, c);
                break;
            }
            case Op::col_group_sum: {
                FeatureMap& da = g(n.a);
                const std::size_t gw = static_cast<std::size_t>(n.group);
                for (std::size_t r = 0; r < go.rows(); ++r)
                    for (std::size_t q = 0; q < go.cols(); ++q)
                        for (std::size_t s = 0; s < gw; ++s) da(r, q * gw + s) += go(r, q);
                break;
            }
            case Op::outer: {
                const FeatureMap& C = nodes_[static_cast<std::size_t>(n.a)].value;
                const FeatureMap& R = nodes_[static_cast<std::size_t>(n.b)].value;
                FeatureMap& dc = g(n.a);
                FeatureMap& dr = g(n.b);
                for (std::size_t r = 0; r < go.rows(); ++r)
                    for (std::size_t c = 0; c < go.cols(); ++c) {
                        dc(r, 0) += go(r, c) * R(0, c);
                        dr(0, c) += go(r, c) * C(r, 0);
                    }
                break;
            }
            case Op::hstack: {
                FeatureMap& da = g(n.a);
                FeatureMap& db = g(n.b);
                const std::size_t ca = da.cols();
                for (std::size_t r = 0; r < go.rows(); ++r) {
                    for (std::size_t c = 0; c < ca; ++c) da(r, c) += go(r, c);
                    for (std::size_t c = 0; c < db.cols(); ++c) db(r, c) += go(r, ca + c);
                }
                break;
            }
            case Op::neighborhood_max: {
                FeatureMap& da = g(n.a);
                for (std::size_t r = 0; r < go.rows(); ++r)
                    for (std::size_t c = 0; c < go.cols(); ++c)
                        da(static_cast<std::size_t>(n.argmax[r * go.cols() + c]), c) +=
                            go(r, c);
                break;
            }
            case Op::col_max: {
                FeatureMap& da = g(n.a);
                for (std::size_t c = 0; c < go.cols(); ++c)
                    da(static_cast<std::size_t>(n.argmax[c]), c) += go(0, c);
                break;
            }
            case Op::unit_columns: {
                FeatureMap& da = g(n.a);
                const FeatureMap& Y = n.value;
                for (std::size_t c = 0; c < go.cols(); ++c) {
                    const double norm = n.auxd[c];
                    if (norm == 0.0) continue;  // degenerate column: no gradient
                    double dot = 0.0;
                    for (std::size_t r = 0; r < go.rows(); ++r) dot += Y(r, c) * go(r, c);
                    for (std::size_t r = 0; r < go.rows(); ++r)
                        da(r, c) += (go(r, c) - Y(r, c) * dot) / norm;
                }
                break;
            }
            case Op::log_softmax_row: {
                FeatureMap& da = g(n.a);
                double gsum = 0.0;
                for (std::size_t c = 0; c < go.cols(); ++c) gsum += go(0, c);
                for (std::size_t c = 0; c < go.cols(); ++c)
                    da(0, c) += go(0, c) - std::exp(n.value(0, c)) * gsum;
                break;
            }
            case Op::select_neg: {
                FeatureMap& da = g(n.a);
                da(0, static_cast<std::size_t>(n.group)) -= go(0, 0);
                break;
            }
        }
    }

    for (std::size_t i = 0; i <= static_cast<std::size_t>(loss); ++i) {
        const Node& n = nodes_[i];
        if (n.op != Op::param || grad[i].rows() == 0) continue;
        auto& acc = n.bound->grad.data();
        const auto& src = grad[i].data();
        for (std::size_t k = 0; k < src.size(); ++k) {
            acc[k] += src[k];
            if (!std::isfinite(acc[k]))
                throw NumericalError("non-finite gradient for " + n.bound->name);
        }
    }
}

}  // namespace ascn
