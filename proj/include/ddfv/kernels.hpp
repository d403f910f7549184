#pragma once

namespace ddfv {

struct KernelConfig {
    double bernoulli_switch_radius = 1e-2;
    double log_floor = 1e-300;
};

/// B(x) = x / (e^x - 1), B(0) = 1. Positive and strictly decreasing.
double bernoulli(double x, const KernelConfig& cfg = {});

/// H(x) = x log x - x + 1 with H(0) = 1.
double entropy_h(double x);

/// H(x) - H(y) - log(y) (x - y) = x log(x/y) - x + y for x >= 0, y > 0, evaluated
/// without cancellation near x = y. Always >= 0.
double relative_entropy_density(double x, double y);

/// log(max(x, floor)).
double guarded_log(double x, double floor);

namespace detail {

/// Truncated expansion 1 - x/2 + x^2/12 - x^4/720, accurate for |x| <= 1e-2.
double bernoulli_series(double x);

/// x / expm1(x) for x != 0.
double bernoulli_direct(double x);

}  // namespace detail

}  // namespace ddfv
