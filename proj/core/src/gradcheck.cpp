#include "gradforge/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace gradforge {

namespace {

double run_checks(const TensorFn& f, const Tensor& x, double h,
                  std::span<const std::int64_t> coords) {
    Tape tape;
    Tensor xt = tape.watch(x.detached());
    Tensor loss = f(xt);
    if (loss.size() != 1) {
        throw ShapeError("check_gradient: f must be scalar-valued, got " + shape_str(loss.shape));
    }
    std::vector<double> analytic(static_cast<std::size_t>(x.size()), 0.0);
    if (loss.attached()) {
        tape.backward(loss);
        analytic = *tape.grad_of(xt).data;
    }
    // loss detached from x entirely -> analytic gradient is identically zero

    double max_err = 0.0;
    Tensor probe = x.clone();
    for (std::int64_t i : coords) {
        const double orig = probe.at(i);
        probe.at(i) = orig + h;
        const double fp = f(probe).value();
        probe.at(i) = orig - h;
        const double fm = f(probe).value();
        probe.at(i) = orig;
        const double fd = (fp - fm) / (2.0 * h);
        const double err =
            std::abs(analytic[static_cast<std::size_t>(i)] - fd) / std::max(1.0, std::abs(fd));
        max_err = std::max(max_err, err);
    }
    return max_err;
}

}  // namespace

double check_gradient(const TensorFn& f, const Tensor& x, double h) {
    std::vector<std::int64_t> coords(static_cast<std::size_t>(x.size()));
    std::iota(coords.begin(), coords.end(), std::int64_t{0});
    return run_checks(f, x, h, coords);
}

double check_gradient(const TensorFn& f, const Tensor& x, double h,
                      std::span<const std::int64_t> coords) {
    return run_checks(f, x, h, coords);
}

}  // namespace gradforge
