#pragma once

#include <vector>

#include "ascn/feature_map.hpp"
#include "ascn/param_store.hpp"

namespace ascn {

using NodeId = int;

// Reverse-mode differentiation over matrix-valued expressions. Values are
// computed eagerly as nodes are appended; backward() replays the recording in
// reverse and accumulates parameter gradients into the bound tensors.
//
// Forward arithmetic is pinned to the same evaluation order as the scalar
// kernel routines (zero-seeded ascending accumulation, strict-greater maxima
// that keep the earliest winner), so the two paths agree to the last bit.
class Tape {
public:
    // Leaves. Constants receive no gradient; params accumulate into the
    // bound tensor's grad buffer when backward() finishes.
    NodeId constant(FeatureMap value);
    NodeId param(ParamTensor& tensor);

    // (n x k) * (k x m) -> n x m.
    NodeId matmul(NodeId a, NodeId b);
    // Same-shape elementwise sum and product.
    NodeId add(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    // Adds a 1 x c row vector to every row of an n x c matrix.
    NodeId add_row_vec(NodeId a, NodeId row);
    // max(x, 0); the derivative at exactly 0 is taken as 0.
    NodeId relu(NodeId a);
    // Clamp into [-1, 1]; gradient passes through the closed interval.
    NodeId clamp_unit(NodeId a);
    // out.row(i) = a.row(rows[i]); rows may repeat.
    NodeId gather_rows(NodeId a, std::vector<int> rows);
    // Rows come in consecutive groups of `group`; emits the elementwise max
    // of each group. Ties keep the earliest row of the group.
    NodeId segment_max_rows(NodeId a, int group);
    // Columns come in consecutive groups of `group`; emits each group's sum.
    NodeId col_group_sum(NodeId a, int group);
    // (n x 1) times (1 x m) -> n x m.
    NodeId outer(NodeId col, NodeId row);
    // Concatenates two equal-height matrices side by side.
    NodeId hstack(NodeId a, NodeId b);
    // Per-row max over the row itself and its listed neighbors. Row r of the
    // output scans input row r first, then neighbor_ids[r*slots + m] for
    // m < valid_counts[r]; strict-greater keeps the earliest winner.
    NodeId neighborhood_max(NodeId a, std::vector<int> neighbor_ids,
                            std::vector<int> valid_counts, int slots);
    // Column-wise max over all rows -> 1 x c; ties keep the lowest row.
    NodeId col_max(NodeId a);
    // Normalizes every column to unit length. Columns with norm below the
    // degeneracy floor become zero and receive zero gradient.
    NodeId unit_columns(NodeId a);
    // Row log-softmax of a 1 x c matrix.
    NodeId log_softmax_row(NodeId a);
    // Scalar -a(0, column): the loss of a log-probability row.
    NodeId select_neg(NodeId a, int column);

    const FeatureMap& value(NodeId id) const;
    std::size_t size() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1 on a 1 x 1 node and walks the recording
    // backwards. Throws NumericalError if any accumulated parameter gradient
    // is non-finite.
    void backward(NodeId loss);

private:
    enum class Op {
        constant,
        param,
        matmul,
        add,
        mul,
        add_row_vec,
        relu,
        clamp_unit,
        gather_rows,
        segment_max_rows,
        col_group_sum,
        outer,
        hstack,
        neighborhood_max,
        col_max,
        unit_columns,
        log_softmax_row,
        select_neg,
    };

    struct Node {
        Op op;
        NodeId a = -1;
        NodeId b = -1;
        FeatureMap value;
        std::vector<int> ints;   // gathered rows / packed neighbor ids
        std::vector<int> ints2;  // per-row valid counts
        std::vector<int> argmax;
        std::vector<double> auxd;  // per-column norms
        int group = 0;             // group width / slot count / label column
        ParamTensor* bound = nullptr;
    };

    NodeId push(Node n);
    const FeatureMap& val(NodeId id) const;

    std::vector<Node> nodes_;
};

}  // namespace ascn
