#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

namespace sempref::detail {

// Regularized incomplete beta I_x(a, b) by continued fraction, accurate to
// ~1e-14 for the moderate a, b used in correlation p-values.
inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;

    auto contfrac = [](double a_, double b_, double x_) {
        constexpr int kMaxIter = 300;
        constexpr double kEps = 3e-16;
        const double tiny = std::numeric_limits<double>::min() / kEps;
        double qab = a_ + b_, qap = a_ + 1.0, qam = a_ - 1.0;
        double c = 1.0;
        double d = 1.0 - qab * x_ / qap;
        if (std::fabs(d) < tiny) d = tiny;
        d = 1.0 / d;
        double h = d;
        for (int m = 1; m <= kMaxIter; ++m) {
            const double m2 = 2.0 * m;
            double aa = m * (b_ - m) * x_ / ((qam + m2) * (a_ + m2));
            d = 1.0 + aa * d;
            if (std::fabs(d) < tiny) d = tiny;
            c = 1.0 + aa / c;
            if (std::fabs(c) < tiny) c = tiny;
            d = 1.0 / d;
            h *= d * c;
            aa = -(a_ + m) * (qab + m) * x_ / ((a_ + m2) * (qap + m2));
            d = 1.0 + aa * d;
            if (std::fabs(d) < tiny) d = tiny;
            c = 1.0 + aa / c;
            if (std::fabs(c) < tiny) c = tiny;
            d = 1.0 / d;
            const double del = d * c;
            h *= del;
            if (std::fabs(del - 1.0) < kEps) break;
        }
        return h;
    };

    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * contfrac(a, b, x) / a;
    return 1.0 - front * contfrac(b, a, 1.0 - x) / b;
}

// Two-sided p-value for a Student-t statistic with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    const double x = df / (df + t * t);
    return incomplete_beta(df / 2.0, 0.5, x);
}

// Two-sided p-value under a standard normal.
inline double normal_two_sided_p(double z) {
    return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

} // namespace sempref::detail
