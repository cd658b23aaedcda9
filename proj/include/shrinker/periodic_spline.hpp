#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace shrinker {

/// Solves the cyclic tridiagonal system
///   lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]   (indices mod n)
/// with the Sherman-Morrison correction on top of the Thomas algorithm.
/// Requires n >= 3 and a diagonally dominant matrix.
inline std::vector<double> solve_cyclic_tridiagonal(std::span<const double> lower,
                                                    std::span<const double> diag,
                                                    std::span<const double> upper,
                                                    std::span<const double> rhs) {
    const std::size_t n = diag.size();
    if (n < 3 || lower.size() != n || upper.size() != n || rhs.size() != n) {
        throw std::invalid_argument("solve_cyclic_tridiagonal: size mismatch or n < 3");
    }
    const double alpha = upper[n - 1]; // couples row n-1 to x[0]
    const double beta = lower[0];      // couples row 0 to x[n-1]
    const double gamma = -diag[0];

    std::vector<double> b(diag.begin(), diag.end());
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;

    // Thomas solve with the modified diagonal for two right-hand sides.
    std::vector<double> c_prime(n), x(n), z(n);
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = alpha;

    c_prime[0] = upper[0] / b[0];
    x[0] = rhs[0] / b[0];
    z[0] = u[0] / b[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double denom = b[i] - lower[i] * c_prime[i - 1];
        c_prime[i] = (i + 1 < n) ? upper[i] / denom : 0.0;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / denom;
        z[i] = (u[i] - lower[i] * z[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] -= c_prime[i] * x[i + 1];
        z[i] -= c_prime[i] * z[i + 1];
    }

    const double factor = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] -= factor * z[i];
    }
    return x;
}

/// C2 periodic cubic interpolant y(t) through (t_i, y_i) with period
/// `period`. Knots must be strictly increasing and span less than one period.
class PeriodicCubicSpline {
public:
    PeriodicCubicSpline() = default;

    PeriodicCubicSpline(std::vector<double> knots, std::vector<double> values, double period)
        : knots_(std::move(knots)), values_(std::move(values)), period_(period) {
        const std::size_t n = knots_.size();
        if (n < 3 || values_.size() != n) {
            throw std::invalid_argument("PeriodicCubicSpline: need at least 3 knots");
        }
        if (!(knots_.back() - knots_.front() < period_)) {
            throw std::invalid_argument("PeriodicCubicSpline: knots exceed one period");
        }
        std::vector<double> lower(n), diag(n), upper(n), rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double h_prev = spacing((i + n - 1) % n);
            const double h_next = spacing(i);
            if (!(h_prev > 0.0) || !(h_next > 0.0)) {
                throw std::invalid_argument("PeriodicCubicSpline: knots must be strictly increasing");
            }
            lower[i] = h_prev;
            diag[i] = 2.0 * (h_prev + h_next);
            upper[i] = h_next;
            const double y_prev = values_[(i + n - 1) % n];
            const double y_next = values_[(i + 1) % n];
            rhs[i] = 6.0 * ((y_next - values_[i]) / h_next - (values_[i] - y_prev) / h_prev);
        }
        second_ = solve_cyclic_tridiagonal(lower, diag, upper, rhs);
    }

    std::size_t size() const noexcept { return knots_.size(); }
    double period() const noexcept { return period_; }
    std::span<const double> knots() const noexcept { return knots_; }

    /// Width of segment i (from knot i to knot i+1, wrapping at the end).
    double spacing(std::size_t i) const {
        const std::size_t n = knots_.size();
        return (i + 1 < n) ? knots_[i + 1] - knots_[i] : knots_[0] + period_ - knots_[n - 1];
    }

    double value(double t) const { return eval<0>(t); }
    double derivative(double t) const { return eval<1>(t); }
    double second_derivative(double t) const { return eval<2>(t); }

    /// Same as value(t) but with the segment already known; t is measured
    /// from knot `segment` and must lie in [0, spacing(segment)].
    template <int Order>
    double eval_in_segment(std::size_t segment, double offset) const {
        const std::size_t n = knots_.size();
        const std::size_t next = (segment + 1) % n;
        const double h = spacing(segment);
        const double a = offset;
        const double b = h - offset;
        const double m0 = second_[segment];
        const double m1 = second_[next];
        const double c0 = values_[segment] / h - m0 * h / 6.0;
        const double c1 = values_[next] / h - m1 * h / 6.0;
        if constexpr (Order == 0) {
            return (m0 * b * b * b + m1 * a * a * a) / (6.0 * h) + c0 * b + c1 * a;
        } else if constexpr (Order == 1) {
            return (-m0 * b * b + m1 * a * a) / (2.0 * h) - c0 + c1;
        } else {
            return (m0 * b + m1 * a) / h;
        }
    }

    /// Segment index and offset for parameter t (taken modulo the period).
    std::pair<std::size_t, double> locate(double t) const {
        const double t0 = knots_.front();
        double local = std::fmod(t - t0, period_);
        if (local < 0.0) {
            local += period_;
        }
        const double wrapped = t0 + local;
        auto it = std::upper_bound(knots_.begin(), knots_.end(), wrapped);
        const std::size_t segment = static_cast<std::size_t>(std::distance(knots_.begin(), it)) - 1;
        const double offset = std::clamp(wrapped - knots_[segment], 0.0, spacing(segment));
        return {segment, offset};
    }

private:
    template <int Order>
    double eval(double t) const {
        const auto [segment, offset] = locate(t);
        return eval_in_segment<Order>(segment, offset);
    }

    std::vector<double> knots_;
    std::vector<double> values_;
    std::vector<double> second_;
    double period_ = 0.0;
};

} // namespace shrinker
