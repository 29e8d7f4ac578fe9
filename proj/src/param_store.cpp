#include "ascn/param_store.hpp"

#include <algorithm>
#include <cmath>

#include "ascn/error.hpp"

namespace ascn {

namespace {

// Matches the guard used when scoring directions: below this, a direction is
// treated as degenerate. Updates that would collapse a column are undone.
constexpr double kNormFloor = 1e-12;

void guard_columns(ParamTensor& t, const FeatureMap& before) {
    if (!t.unit_columns) return;
    for (std::size_t c = 0; c < t.cols(); ++c) {
        double n2 = 0.0;
        for (std::size_t r = 0; r < t.rows(); ++r) n2 += t.value(r, c) * t.value(r, c);
        if (std::sqrt(n2) < kNormFloor)
            for (std::size_t r = 0; r < t.rows(); ++r) t.value(r, c) = before(r, c);
    }
}

}  // namespace

ParamTensor& ParamStore::create(std::string name, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw InvalidParam("parameter tensors cannot be empty");
    if (find(name) != nullptr) throw InvalidParam("duplicate parameter name: " + name);
    auto t = std::make_unique<ParamTensor>();
    t->name = std::move(name);
    t->value = FeatureMap(rows, cols);
    t->grad = FeatureMap(rows, cols);
    items_.push_back(std::move(t));
    return *items_.back();
}

ParamTensor* ParamStore::find(std::string_view name) {
    for (auto& t : items_)
        if (t->name == name) return t.get();
    return nullptr;
}

const ParamTensor* ParamStore::find(std::string_view name) const {
    for (const auto& t : items_)
        if (t->name == name) return t.get();
    return nullptr;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : items_) n += t->count();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& t : items_) std::fill(t->grad.data().begin(), t->grad.data().end(), 0.0);
}

std::vector<double> ParamStore::flatten() const {
    std::vector<double> out;
    out.reserve(scalar_count());
    for (const auto& t : items_)
        out.insert(out.end(), t->value.data().begin(), t->value.data().end());
    return out;
}

void ParamStore::load_flat(std::span<const double> flat) {
    if (flat.size() != scalar_count())
        throw DimensionMismatch("flat parameter vector has the wrong length");
    std::size_t off = 0;
    for (auto& t : items_) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + t->count()),
                  t->value.data().begin());
        off += t->count();
    }
}

void sgd_step(ParamStore& store, double lr) {
    for (std::size_t i = 0; i < store.tensor_count(); ++i) {
        ParamTensor& t = store.at(i);
        const FeatureMap before = t.unit_columns ? t.value : FeatureMap();
        auto& v = t.value.data();
        const auto& g = t.grad.data();
        for (std::size_t k = 0; k < v.size(); ++k) v[k] -= lr * g[k];
        guard_columns(t, before);
    }
}

void Adam::step(ParamStore& store) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < store.tensor_count(); ++i) {
        ParamTensor& t = store.at(i);
        if (t.moment1.rows() == 0) {
            t.moment1 = FeatureMap(t.rows(), t.cols());
            t.moment2 = FeatureMap(t.rows(), t.cols());
        }
        const FeatureMap before = t.unit_columns ? t.value : FeatureMap();
        auto& v = t.value.data();
        const auto& g = t.grad.data();
        auto& m1 = t.moment1.data();
        auto& m2 = t.moment2.data();
        for (std::size_t k = 0; k < v.size(); ++k) {
            m1[k] = cfg_.beta1 * m1[k] + (1.0 - cfg_.beta1) * g[k];
            m2[k] = cfg_.beta2 * m2[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
            const double mh = m1[k] / c1;
            const double vh = m2[k] / c2;
            v[k] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
        }
        guard_columns(t, before);
    }
}

double cross_entropy(std::span<const double> logits, int label) {
    if (logits.empty()) throw InvalidParam("cross entropy needs at least one logit");
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
        throw InvalidParam("class label out of range");
    double m = logits[0];
    for (double x : logits)
        if (x > m) m = x;
    double acc = 0.0;
    for (double x : logits) acc += std::exp(x - m);
    return -((logits[static_cast<std::size_t>(label)] - m) - std::log(acc));
}

}  // namespace ascn
