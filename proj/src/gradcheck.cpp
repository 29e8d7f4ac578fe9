#include "ascn/gradcheck.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ascn/error.hpp"
#include "ascn/tape.hpp"

namespace ascn {

namespace {

// Offsets of each tensor inside the flat parameter vector, by name.
struct FlatLayout {
    const Model* model;

    std::size_t offset(const std::string& name) const {
        std::size_t off = 0;
        for (std::size_t i = 0; i < model->params.tensor_count(); ++i) {
            const ParamTensor& t = model->params.at(i);
            if (t.name == name) return off;
            off += t.count();
        }
        throw ConfigError("missing parameter tensor: " + name);
    }
};

// Straight-line re-evaluation of the whole classifier in extended precision,
// written from the definitions rather than shared kernel code. Every argmax
// decision and rectifier sign is appended to `sig`, so two probes can be
// compared for crossing a non-smooth boundary.
template <typename T>
T reference_loss(const Model& m, const GeometryPlan& plan, int label,
                 const std::vector<double>& flat, std::vector<std::int32_t>& sig) {
    const FlatLayout lay{&m};
    const int s_count = m.config.supports;
    auto at = [&](std::size_t base, std::size_t cols, std::size_t r, std::size_t c) {
        return static_cast<T>(flat[base + r * cols + c]);
    };

    std::vector<T> cur(static_cast<std::size_t>(plan.stages[0].n), T(1));
    std::size_t cur_cols = 1;

    for (int stage = 0; stage < m.stages(); ++stage) {
        const StageGeometry& g = plan.stages[static_cast<std::size_t>(stage)];
        const std::string p = "conv" + std::to_string(stage) + ".";
        const std::size_t j_count =
            static_cast<std::size_t>(m.config.channels[static_cast<std::size_t>(stage)]);
        const std::size_t d_in = cur_cols;
        const std::size_t js = j_count * static_cast<std::size_t>(s_count);
        const bool full = m.config.mode == ConvMode::full;
        const std::size_t fused = full ? 2 * j_count : j_count;

        const std::size_t o_center = lay.offset(p + "center");
        const std::size_t o_supw = lay.offset(p + "support_weight");
        const std::size_t o_supd = lay.offset(p + "support_dir");
        const std::size_t o_dw = full ? lay.offset(p + "dist_weight") : 0;
        const std::size_t o_db = full ? lay.offset(p + "dist_bias") : 0;
        const std::size_t o_w1 = lay.offset(p + "w1");
        const std::size_t o_b1 = lay.offset(p + "b1");
        const std::size_t o_w2 = lay.offset(p + "w2");
        const std::size_t o_b2 = lay.offset(p + "b2");

        const std::size_t n = static_cast<std::size_t>(g.n);
        std::vector<T> next(n * j_count, T(0));
        std::vector<T> x(fused), hidden(fused);
        for (std::size_t pt = 0; pt < n; ++pt) {
            const ReceptiveField& rf = g.fields[pt];
            for (std::size_t j = 0; j < j_count; ++j) {
                T center = T(0);
                for (std::size_t d = 0; d < d_in; ++d)
                    center += cur[pt * cur_cols + d] * at(o_center, j_count, d, j);
                T branch = T(0);
                for (int s = 0; s < s_count; ++s) {
                    const std::size_t col = j * static_cast<std::size_t>(s_count) +
                                            static_cast<std::size_t>(s);
                    const T kx = at(o_supd, js, 0, col);
                    const T ky = at(o_supd, js, 1, col);
                    const T kz = at(o_supd, js, 2, col);
                    const T kn = std::sqrt(kx * kx + ky * ky + kz * kz);
                    T best = T(0);
                    int arg = -1;
                    for (int slot = 0; slot < rf.slot_count(); ++slot) {
                        T v = T(0);
                        if (slot < rf.valid_count) {
                            const Vec3& dv = rf.directions[static_cast<std::size_t>(slot)];
                            const T dn = std::sqrt(T(dv.x) * T(dv.x) + T(dv.y) * T(dv.y) +
                                                   T(dv.z) * T(dv.z));
                            T cosv = T(0);
                            if (dn >= T(1e-12) && kn >= T(1e-12)) {
                                cosv = (T(dv.x) * kx + T(dv.y) * ky + T(dv.z) * kz) / (dn * kn);
                                if (cosv > T(1)) cosv = T(1);
                                if (cosv < T(-1)) cosv = T(-1);
                            }
                            T feat = T(0);
                            const std::size_t nbr =
                                static_cast<std::size_t>(rf.neighbors[static_cast<std::size_t>(slot)]);
                            for (std::size_t d = 0; d < d_in; ++d)
                                feat += cur[nbr * cur_cols + d] * at(o_supw, js, d, col);
                            v = feat * cosv;
                        }
                        if (slot == 0 || v > best) {
                            best = v;
                            arg = slot;
                        }
                    }
                    sig.push_back(arg);
                    branch += best;
                }
                x[j] = center + branch;
                if (full) {
                    T wsum = T(0);
                    for (int s = 0; s < s_count; ++s)
                        wsum += at(o_dw, js, 0,
                                   j * static_cast<std::size_t>(s_count) +
                                       static_cast<std::size_t>(s));
                    x[j_count + j] = T(rf.max_distance()) * wsum + at(o_db, j_count, 0, j);
                }
            }
            for (std::size_t h = 0; h < fused; ++h) {
                T acc = T(0);
                for (std::size_t i = 0; i < fused; ++i) acc += x[i] * at(o_w1, fused, i, h);
                acc += at(o_b1, fused, 0, h);
                sig.push_back(acc > T(0) ? 1 : 0);
                hidden[h] = acc > T(0) ? acc : T(0);
            }
            for (std::size_t d = 0; d < j_count; ++d) {
                T acc = T(0);
                for (std::size_t h = 0; h < fused; ++h) acc += hidden[h] * at(o_w2, j_count, h, d);
                next[pt * j_count + d] = acc + at(o_b2, j_count, 0, d);
            }
        }

        if (stage < m.pools) {
            const std::vector<int>& keep = plan.keeps[static_cast<std::size_t>(stage)];
            std::vector<T> pooled(keep.size() * j_count);
            for (std::size_t kk = 0; kk < keep.size(); ++kk) {
                const std::size_t r = static_cast<std::size_t>(keep[kk]);
                const ReceptiveField& rf = g.fields[r];
                for (std::size_t c = 0; c < j_count; ++c) {
                    T best = next[r * j_count + c];
                    int arg = static_cast<int>(r);
                    for (int mm = 0; mm < rf.valid_count; ++mm) {
                        const std::size_t nb =
                            static_cast<std::size_t>(rf.neighbors[static_cast<std::size_t>(mm)]);
                        const T v = next[nb * j_count + c];
                        if (v > best) {
                            best = v;
                            arg = static_cast<int>(nb);
                        }
                    }
                    sig.push_back(arg);
                    pooled[kk * j_count + c] = best;
                }
            }
            next = std::move(pooled);
        }
        cur = std::move(next);
        cur_cols = j_count;
    }

    // Global aggregation and the classifier head.
    const std::size_t rows = cur.size() / cur_cols;
    std::vector<T> agg(cur_cols);
    for (std::size_t c = 0; c < cur_cols; ++c) {
        T best = cur[c];
        int arg = 0;
        for (std::size_t r = 1; r < rows; ++r)
            if (cur[r * cur_cols + c] > best) {
                best = cur[r * cur_cols + c];
                arg = static_cast<int>(r);
            }
        sig.push_back(arg);
        agg[c] = best;
    }

    const std::size_t hid = static_cast<std::size_t>(m.config.classifier_hidden);
    const std::size_t classes = static_cast<std::size_t>(m.config.classes);
    const std::size_t o_hw1 = lay.offset("head.w1");
    const std::size_t o_hb1 = lay.offset("head.b1");
    const std::size_t o_hw2 = lay.offset("head.w2");
    const std::size_t o_hb2 = lay.offset("head.b2");

    std::vector<T> hidden(hid), logits(classes);
    for (std::size_t h = 0; h < hid; ++h) {
        T acc = T(0);
        for (std::size_t k = 0; k < cur_cols; ++k) acc += agg[k] * at(o_hw1, hid, k, h);
        acc += at(o_hb1, hid, 0, h);
        sig.push_back(acc > T(0) ? 1 : 0);
        hidden[h] = acc > T(0) ? acc : T(0);
    }
    for (std::size_t c = 0; c < classes; ++c) {
        T acc = T(0);
        for (std::size_t h = 0; h < hid; ++h) acc += hidden[h] * at(o_hw2, classes, h, c);
        logits[c] = acc + at(o_hb2, classes, 0, c);
    }

    T mx = logits[0];
    for (std::size_t c = 1; c < classes; ++c)
        if (logits[c] > mx) mx = logits[c];
    T denom = T(0);
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(logits[c] - mx);
    return -((logits[static_cast<std::size_t>(label)] - mx) - std::log(denom));
}

}  // namespace

GradCheckReport grad_check(Model& m, const GeometryPlan& plan, int label, double h,
                           double tol, double floor) {
    GradCheckReport report;
    report.tolerance = tol;

    m.params.zero_grad();
    {
        Tape t;
        const TapeForward fwd = forward_tape(t, m, plan, label);
        t.backward(fwd.loss);
    }
    std::vector<double> analytic;
    analytic.reserve(m.params.scalar_count());
    for (std::size_t i = 0; i < m.params.tensor_count(); ++i) {
        const auto& g = m.params.at(i).grad.data();
        analytic.insert(analytic.end(), g.begin(), g.end());
    }

    std::vector<double> flat = m.params.flatten();
    for (std::size_t k = 0; k < flat.size(); ++k) {
        const double saved = flat[k];
        std::vector<std::int32_t> sig_plus, sig_minus;
        flat[k] = saved + h;
        const long double fp = reference_loss<long double>(m, plan, label, flat, sig_plus);
        flat[k] = saved - h;
        const long double fm = reference_loss<long double>(m, plan, label, flat, sig_minus);
        flat[k] = saved;
        if (sig_plus != sig_minus) {
            ++report.skipped;
            continue;
        }
        ++report.checked;
        if (std::abs(analytic[k]) <= floor) continue;
        const double fd = static_cast<double>((fp - fm) / (2.0L * static_cast<long double>(h)));
        const double rel = std::abs(fd - analytic[k]) / std::abs(analytic[k]);
        if (rel > report.max_rel_err) report.max_rel_err = rel;
    }
    report.passed = report.max_rel_err < tol;
    return report;
}

}  // namespace ascn
