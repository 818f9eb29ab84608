#pragma once

#include <functional>
#include <vector>

#include "sfdmc/tensor.hpp"

namespace sfdmc {

// Compares the tape gradient of a scalar-valued function against central
// finite differences, one coordinate at a time:
//
//   numeric_i = (f(x + h e_i) - f(x - h e_i)) / (2 h)
//
// Returns the max over coordinates of |analytic - numeric| / max(1, |numeric|).
// `f` must build its value through the given tape and be deterministic.
double finite_diff_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& x,
                         double h = 1e-5);

// Same check for a function of several tensors; the max runs over every
// coordinate of every input.
double finite_diff_check_multi(
    const std::function<Tensor(Tape&, const std::vector<Tensor>&)>& f,
    const std::vector<Tensor>& xs, double h = 1e-5);

}  // namespace sfdmc
