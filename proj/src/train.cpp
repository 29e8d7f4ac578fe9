#include "ascn/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <thread>

#include <json.hpp>

#include "ascn/error.hpp"
#include "ascn/log.hpp"
#include "ascn/pipeline.hpp"
#include "ascn/rng.hpp"
#include "ascn/tape.hpp"

namespace ascn {

namespace {

constexpr std::uint64_t kShuffleSalt = 0x73687566;  // "shuf"

void check_labels(const Model& m, const Dataset& data) {
    if (data.items.empty()) throw InvalidParam("dataset has no items");
    for (const LabeledCloud& item : data.items)
        if (item.label < 0 || item.label >= m.config.classes)
            throw InvalidParam("dataset label outside the model's class range");
}

}  // namespace

TrainResult train_model(Model& m, const Dataset& data, const TrainConfig& cfg, Adam& opt) {
    if (cfg.epochs < 0) throw InvalidParam("epoch count cannot be negative");
    check_labels(m, data);

    std::ofstream log_file;
    if (!cfg.log_path.empty()) {
        log_file.open(cfg.log_path,
                      cfg.append_log ? std::ios::out | std::ios::app : std::ios::out | std::ios::trunc);
        if (!log_file) throw IoError("cannot open training log: " + cfg.log_path);
    }

    TrainResult result;
    const std::size_t n_items = data.items.size();
    // First-stage geometry depends only on the item, never the epoch.
    std::vector<std::unique_ptr<StageGeometry>> stage0(n_items);
    std::vector<char> degenerate(n_items, 0);
    const GeometryConfig geo = m.config.geometry();

    for (int local = 0; local < cfg.epochs; ++local) {
        const int epoch = cfg.epoch_offset + local;

        std::vector<std::size_t> order(n_items);
        for (std::size_t i = 0; i < n_items; ++i) order[i] = i;
        Rng shuffle(mix64(cfg.seed, kShuffleSalt, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = 0; i + 1 < n_items; ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(shuffle.below(static_cast<std::uint64_t>(n_items - i)));
            std::swap(order[i], order[j]);
        }

        double loss_sum = 0.0;
        int processed = 0;
        int correct = 0;
        PlanOptions opt_plan;
        opt_plan.pool_seeds = train_pool_seeds(cfg.seed, m.pools, epoch);
        for (std::size_t idx : order) {
            if (degenerate[idx]) continue;
            const LabeledCloud& item = data.items[idx];
            GeometryPlan plan;
            try {
                if (!stage0[idx]) {
                    std::vector<int> identity(item.cloud.size());
                    for (std::size_t i = 0; i < identity.size(); ++i)
                        identity[i] = static_cast<int>(i);
                    stage0[idx] = std::make_unique<StageGeometry>(
                        build_stage_geometry(item.cloud, geo, std::move(identity)));
                }
                opt_plan.cached_stage0 = stage0[idx].get();
                plan = plan_geometry(item.cloud, geo, m.stages(), m.pools, opt_plan);
            } catch (const DegenerateCloud& e) {
                log::warn("skipping degenerate training item %zu: %s", idx, e.what());
                degenerate[idx] = 1;
                ++result.skipped;
                continue;
            }

            Tape tape;
            m.params.zero_grad();
            const TapeForward fwd = forward_tape(tape, m, plan, item.label);
            const double loss = tape.value(fwd.loss)(0, 0);
            if (!std::isfinite(loss)) {
                log::error("training diverged at epoch %d: non-finite loss", epoch);
                result.diverged = true;
                return result;
            }
            try {
                tape.backward(fwd.loss);
            } catch (const NumericalError& e) {
                log::error("training diverged at epoch %d: %s", epoch, e.what());
                result.diverged = true;
                return result;
            }
            opt.step(m.params);

            loss_sum += loss;
            ++processed;
            if (argmax_lowest(tape.value(fwd.logits).row(0)) == item.label) ++correct;
        }
        if (processed == 0)
            throw DegenerateCloud("every training item was skipped as degenerate");

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = loss_sum / processed;
        stats.train_acc = static_cast<double>(correct) / processed;
        result.history.push_back(stats);
        log::info("epoch %d: loss %.6f, train accuracy %.3f", epoch, stats.loss,
                  stats.train_acc);
        if (log_file.is_open()) {
            const nlohmann::json line{
                {"epoch", stats.epoch}, {"loss", stats.loss}, {"train_acc", stats.train_acc}};
            log_file << line.dump() << '\n';
            log_file.flush();
            if (!log_file) throw IoError("failed to write training log: " + cfg.log_path);
        }
    }
    return result;
}

EvalResult evaluate(const Model& m, const Dataset& data, std::uint64_t pool_salt,
                    int workers) {
    check_labels(m, data);
    const int classes = m.config.classes;
    EvalResult total;
    total.confusion.assign(static_cast<std::size_t>(classes),
                           std::vector<int>(static_cast<std::size_t>(classes), 0));

    const std::size_t n = data.items.size();
    const int w = std::clamp(workers, 1, static_cast<int>(n));
    std::vector<EvalResult> parts(static_cast<std::size_t>(w));
    for (EvalResult& p : parts)
        p.confusion.assign(static_cast<std::size_t>(classes),
                           std::vector<int>(static_cast<std::size_t>(classes), 0));

    auto run_range = [&](std::size_t begin, std::size_t end, EvalResult& out) {
        for (std::size_t i = begin; i < end; ++i) {
            const LabeledCloud& item = data.items[i];
            std::vector<double> logits;
            try {
                logits = forward_cloud(m, item.cloud, pool_salt);
            } catch (const DegenerateCloud& e) {
                log::warn("skipping degenerate item %zu during evaluation: %s", i, e.what());
                ++out.skipped;
                continue;
            }
            const int pred = argmax_lowest(logits);
            ++out.total;
            if (pred == item.label) ++out.correct;
            ++out.confusion[static_cast<std::size_t>(item.label)][static_cast<std::size_t>(pred)];
        }
    };

    if (w == 1) {
        run_range(0, n, parts[0]);
    } else {
        std::vector<std::thread> threads;
        const std::size_t chunk = (n + static_cast<std::size_t>(w) - 1) / static_cast<std::size_t>(w);
        for (int t = 0; t < w; ++t) {
            const std::size_t begin = static_cast<std::size_t>(t) * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            threads.emplace_back(run_range, begin, end, std::ref(parts[static_cast<std::size_t>(t)]));
        }
        for (std::thread& t : threads) t.join();
    }

    for (const EvalResult& p : parts) {
        total.correct += p.correct;
        total.total += p.total;
        total.skipped += p.skipped;
        for (int r = 0; r < classes; ++r)
            for (int c = 0; c < classes; ++c)
                total.confusion[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] +=
                    p.confusion[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    return total;
}

}  // namespace ascn
