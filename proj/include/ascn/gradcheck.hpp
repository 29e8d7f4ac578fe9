#pragma once

#include <cstddef>

#include "ascn/model.hpp"
#include "ascn/pipeline.hpp"

namespace ascn {

struct GradCheckReport {
    std::size_t checked = 0;   // parameters with a valid two-sided probe
    std::size_t skipped = 0;   // probes that crossed a max/rectifier boundary
    double max_rel_err = 0.0;  // worst relative error among enforced entries
    double tolerance = 0.0;
    bool passed = false;
};

// Central finite differences of an independently written extended-precision
// evaluator against the recorded-tape gradients, parameter by parameter.
// Probes whose two evaluations disagree on any argmax or rectifier sign sit
// on a kink and are reported as skipped instead of compared. The relative
// error is enforced wherever the analytic gradient exceeds `floor`.
GradCheckReport grad_check(Model& m, const GeometryPlan& plan, int label,
                           double h = 1e-5, double tol = 1e-4, double floor = 1e-8);

}  // namespace ascn
