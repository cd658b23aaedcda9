#pragma once

#include "shrinker/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace shrinker {

/// Symmetric matrix with nonzeros on the diagonal, the first off-diagonals
/// and the two periodic corners. off[i] couples rows i and (i + 1) mod n, so
/// off[n - 1] is the corner entry (0, n - 1).
class CyclicTridiagonal {
public:
    CyclicTridiagonal(std::vector<double> diag, std::vector<double> off)
        : diag_(std::move(diag)), off_(std::move(off)) {
        if (diag_.size() < 3 || off_.size() != diag_.size()) {
            throw std::invalid_argument("CyclicTridiagonal: need n >= 3 and n off-diagonal entries");
        }
    }

    std::size_t size() const noexcept { return diag_.size(); }
    std::span<const double> diag() const noexcept { return diag_; }
    std::span<const double> off() const noexcept { return off_; }

    Eigen::MatrixXd to_dense() const {
        const auto n = static_cast<Eigen::Index>(size());
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index j = (i + 1) % n;
            m(i, i) = diag_[static_cast<std::size_t>(i)];
            m(i, j) += off_[static_cast<std::size_t>(i)];
            m(j, i) += off_[static_cast<std::size_t>(i)];
        }
        return m;
    }

    std::vector<double> apply(std::span<const double> x) const {
        const std::size_t n = size();
        if (x.size() != n) {
            throw std::invalid_argument("CyclicTridiagonal::apply: size mismatch");
        }
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t next = (i + 1) % n;
            const std::size_t prev = (i + n - 1) % n;
            y[i] = diag_[i] * x[i] + off_[i] * x[next] + off_[prev] * x[prev];
        }
        return y;
    }

    /// Max absolute row sum; an upper bound for the 2-norm.
    double inf_norm() const {
        const std::size_t n = size();
        double best = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            best = std::max(best, std::abs(diag_[i]) + std::abs(off_[i]) + std::abs(off_[(i + n - 1) % n]));
        }
        return best;
    }

    /// W M W for W = diag(w).
    CyclicTridiagonal congruence(std::span<const double> w) const {
        const std::size_t n = size();
        std::vector<double> d(n), o(n);
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = w[i] * diag_[i] * w[i];
            o[i] = w[i] * off_[i] * w[(i + 1) % n];
        }
        return {std::move(d), std::move(o)};
    }

    /// M + shift * I.
    CyclicTridiagonal shifted(double shift) const {
        std::vector<double> d(diag_);
        for (double& v : d) {
            v += shift;
        }
        return {std::move(d), off_};
    }

private:
    std::vector<double> diag_;
    std::vector<double> off_;
};

struct Inertia {
    std::size_t negative = 0;
    std::size_t zero = 0;
    std::size_t positive = 0;
    bool breakdown = false; ///< a pivot fell below the breakdown threshold
};

/// Sylvester inertia from a bordered LDL^T factorization: factor the leading
/// (n-1)x(n-1) tridiagonal block, then add the sign of the Schur complement
/// of the last row, which carries both periodic corners. O(n).
inline Inertia inertia(const CyclicTridiagonal& m) {
    const std::size_t n = m.size();
    const auto d = m.diag();
    const auto e = m.off();
    const std::size_t nb = n - 1; // leading block size
    const double pivmin = std::numeric_limits<double>::epsilon() * std::max(m.inf_norm(), 1e-300);

    Inertia out;
    std::vector<double> pivots(nb);
    auto tally = [&](double v) {
        if (std::abs(v) <= pivmin) {
            out.breakdown = true;
            ++out.zero;
        } else if (v < 0.0) {
            ++out.negative;
        } else {
            ++out.positive;
        }
    };
    for (std::size_t i = 0; i < nb; ++i) {
        double p = d[i];
        if (i > 0) {
            p -= e[i - 1] * e[i - 1] / pivots[i - 1];
        }
        tally(p);
        if (std::abs(p) <= pivmin) {
            p = -pivmin;
        }
        pivots[i] = p;
    }

    // Border column: b[0] = corner, b[nb - 1] = off[n - 2].
    std::vector<double> y(nb, 0.0);
    y[0] = e[n - 1];
    y[nb - 1] += e[n - 2];
    for (std::size_t i = 1; i < nb; ++i) {
        y[i] -= e[i - 1] / pivots[i - 1] * y[i - 1];
    }
    // Schur complement s = d[n-1] - b^T T^{-1} b = d[n-1] - sum y_i^2 / p_i.
    double schur = d[n - 1];
    for (std::size_t i = 0; i < nb; ++i) {
        schur -= y[i] * y[i] / pivots[i];
    }
    tally(schur);
    return out;
}

inline std::vector<double> dense_eigenvalues(const CyclicTridiagonal& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.to_dense(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw SpectralError("dense symmetric eigensolver did not converge");
    }
    const auto& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

struct DenseEigensystem {
    std::vector<double> eigenvalues;
    Eigen::MatrixXd eigenvectors; ///< columns, same order as eigenvalues
};

inline DenseEigensystem dense_eigensystem(const CyclicTridiagonal& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.to_dense(), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw SpectralError("dense symmetric eigensolver did not converge");
    }
    const auto& ev = solver.eigenvalues();
    return {{ev.data(), ev.data() + ev.size()}, solver.eigenvectors()};
}

} // namespace shrinker
