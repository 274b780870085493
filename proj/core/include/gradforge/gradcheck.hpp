#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "gradforge/tensor.hpp"

namespace gradforge {

// Scalar-valued function of one tensor. The argument may arrive attached to a
// tape (analytic pass) or detached (central-difference evaluations), so the
// body must build the value with the differentiable ops.
using TensorFn = std::function<Tensor(const Tensor&)>;

// Central-difference gradient verification: returns
//   max_i |analytic_i - fd_i| / max(1, |fd_i|)
// over the checked coordinates, with fd_i = (f(x + h e_i) - f(x - h e_i)) / 2h.
double check_gradient(const TensorFn& f, const Tensor& x, double h);

// Same, restricted to a coordinate subset; used where full-coordinate sweeps
// are too expensive (whole-network parameter checks).
double check_gradient(const TensorFn& f, const Tensor& x, double h,
                      std::span<const std::int64_t> coords);

}  // namespace gradforge
