#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ascn/feature_map.hpp"

namespace ascn {

// One learnable tensor: its value, the gradient accumulator, and first/second
// moment buffers that stay empty until Adam first touches the tensor.
struct ParamTensor {
    std::string name;
    FeatureMap value;
    FeatureMap grad;
    FeatureMap moment1;
    FeatureMap moment2;
    // Columns of this tensor are spatial directions whose norm must stay
    // above the degeneracy floor; the optimizers enforce that after updates.
    bool unit_columns = false;

    std::size_t rows() const { return value.rows(); }
    std::size_t cols() const { return value.cols(); }
    std::size_t count() const { return value.rows() * value.cols(); }
};

// Registry of every tensor in a model. Registration order is stable and is
// the order used by the flat export/import and the on-disk format.
class ParamStore {
public:
    ParamTensor& create(std::string name, std::size_t rows, std::size_t cols);
    ParamTensor* find(std::string_view name);
    const ParamTensor* find(std::string_view name) const;

    std::size_t tensor_count() const { return items_.size(); }
    std::size_t scalar_count() const;
    ParamTensor& at(std::size_t i) { return *items_[i]; }
    const ParamTensor& at(std::size_t i) const { return *items_[i]; }

    void zero_grad();
    std::vector<double> flatten() const;
    void load_flat(std::span<const double> flat);

private:
    std::vector<std::unique_ptr<ParamTensor>> items_;
};

// Plain gradient descent: value -= lr * grad, for every tensor.
void sgd_step(ParamStore& store, double lr);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction; the step counter advances once per call and
// feeds the correction terms, so one optimizer instance serves a whole run.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
    void step(ParamStore& store);
    long long steps_taken() const { return t_; }

private:
    AdamConfig cfg_;
    long long t_ = 0;
};

// Negative log-likelihood of `label` under a softmax over the logits, with
// the usual max-subtraction for stability.
double cross_entropy(std::span<const double> logits, int label);

}  // namespace ascn
