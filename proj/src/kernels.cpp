#include "ddfv/kernels.hpp"

#include <cmath>
#include <limits>

#include "ddfv/errors.hpp"

namespace ddfv {

namespace detail {

double bernoulli_series(double x) {
    const double x2 = x * x;
    return 1.0 - 0.5 * x + x2 / 12.0 - x2 * x2 / 720.0;
}

double bernoulli_direct(double x) { return x / std::expm1(x); }

}  // namespace detail

double bernoulli(double x, const KernelConfig& cfg) {
    if (!std::isfinite(x)) throw invalid_argument("bernoulli: non-finite argument");
    if (std::abs(x) < cfg.bernoulli_switch_radius) return detail::bernoulli_series(x);
    if (x > 700.0) {
        // e^x overflows near 709; B(x) = x e^{-x} / (1 - e^{-x}) and e^{-x} is negligible here.
        const double v = std::exp(std::log(x) - x);
        return v > 0.0 ? v : std::numeric_limits<double>::denorm_min();
    }
    // For x < 0, expm1(x) -> -1 and B(x) -> -x without overflow.
    return detail::bernoulli_direct(x);
}

double entropy_h(double x) {
    if (!(x >= 0.0)) throw invalid_argument("entropy_h: negative argument");
    if (x == 0.0) return 1.0;
    return x * std::log(x) - x + 1.0;
}

double relative_entropy_density(double x, double y) {
    if (!(x >= 0.0) || !(y > 0.0)) throw invalid_argument("relative_entropy_density: need x >= 0, y > 0");
    if (x == 0.0) return y;
    const double t = (x - y) / y;
    double g = 0.0;
    if (std::abs(t) < 1e-3) {
        // (1+t) log(1+t) - t = sum_{k>=2} (-1)^k t^k / (k (k-1))
        double tk = t * t;
        for (int k = 2; k <= 7; ++k, tk *= -t) g += tk / (k * (k - 1.0));
    } else {
        g = (1.0 + t) * std::log1p(t) - t;
    }
    return std::max(0.0, y * g);
}

double guarded_log(double x, double floor) { return std::log(std::max(x, floor)); }

}  // namespace ddfv
