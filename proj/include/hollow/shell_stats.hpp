#pragma once

// Statistics of the hollow shell formed by noisy realizations around a point
// or a manifold: empirical estimators, the out-of-training correction and the
// closed-form shell location/thickness for isotropic Gaussian noise.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "hollow/chi.hpp"

namespace hollow {

using Vector = std::vector<double>;

/// Incremental (mean, variance, weight) of a stream of distances.
///
/// `weight` is the sample count in batch use and the accumulated smoothing
/// weight in moving-average use. Once `frozen` is set the estimate is a fixed
/// reference and observers must stop updating `mu`/`var`.
struct ShellEstimate {
    double mu = 0.0;
    double var = 0.0;
    double weight = 0.0;
    bool frozen = false;

    double sigma() const { return std::sqrt(var); }

    friend bool operator==(const ShellEstimate&, const ShellEstimate&) = default;
};

struct PointShell {
    Vector centroid;
    ShellEstimate shell;
};

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

/// Centroid and shell of a cloud of realizations around an unknown point.
/// Divisors are M (population convention), not M - 1.
inline PointShell estimate_point_shell(std::span<const Vector> realizations) {
    if (realizations.empty()) throw std::invalid_argument("no realizations");
    const std::size_t dims = realizations.front().size();
    const auto count = static_cast<double>(realizations.size());

    PointShell out;
    out.centroid.assign(dims, 0.0);
    for (const auto& y : realizations) {
        if (y.size() != dims) throw std::invalid_argument("dimension mismatch");
        for (std::size_t i = 0; i < dims; ++i) {
            if (!std::isfinite(y[i])) throw std::invalid_argument("non-finite realization entry");
            out.centroid[i] += y[i];
        }
    }
    for (auto& c : out.centroid) c /= count;

    std::vector<double> distances;
    distances.reserve(realizations.size());
    double sum = 0.0;
    for (const auto& y : realizations) {
        distances.push_back(euclidean_distance(y, out.centroid));
        sum += distances.back();
    }
    out.shell.mu = sum / count;
    double sq = 0.0;
    for (double d : distances) sq += (d - out.shell.mu) * (d - out.shell.mu);
    out.shell.var = sq / count;
    out.shell.weight = count;
    return out;
}

/// Extra distance carried by a realization that did not contribute to the
/// centroid estimate: mu * sqrt(1 / (M (M - 1))).
inline double new_realization_correction(double mu, double count) {
    if (!(count >= 2.0)) throw std::invalid_argument("undefined correction");
    return mu * std::sqrt(1.0 / (count * (count - 1.0)));
}

inline double new_realization_correction(const ShellEstimate& shell, double count) {
    return new_realization_correction(shell.mu, count);
}

struct ZScore {
    double z = 0.0;
    double density = 0.0;
};

/// Position of a realization distance inside the shell, with the normal
/// density N(mu, var) evaluated there. Realizations outside the training set
/// are first shifted by the new-realization correction.
inline ZScore realization_zscore(const ShellEstimate& shell, double distance, bool in_training,
                                 double count = 0.0) {
    if (!(shell.var > 0.0)) throw std::invalid_argument("degenerate shell");
    const double sigma = std::sqrt(shell.var);
    double center = shell.mu;
    if (!in_training) center += new_realization_correction(shell.mu, count);
    ZScore out;
    out.z = (distance - center) / sigma;
    out.density = std::exp(-0.5 * out.z * out.z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    return out;
}

/// Shell of isotropic Gaussian noise eps0 around an L-dimensional manifold in
/// R^N. The `approx_*` fields are the large-(N-L) closed forms; the `exact_*`
/// fields are the chi moments with N - L degrees of freedom.
struct TheoreticalShell {
    std::size_t dims = 0;
    std::size_t manifold_dims = 0;
    double eps0 = 0.0;
    double mu_point = 0.0;
    double mu_approx = 0.0;
    double var_approx = 0.0;
    double mu_exact = 0.0;
    double var_exact = 0.0;
};

inline TheoreticalShell theoretical_shell(std::size_t dims, std::size_t manifold_dims, double eps0) {
    if (dims <= manifold_dims) throw std::invalid_argument("no perpendicular dimensions");
    if (!(eps0 > 0.0)) throw std::invalid_argument("theoretical_shell: eps0 must be > 0");
    const auto n = static_cast<double>(dims);
    const auto perp = static_cast<double>(dims - manifold_dims);

    TheoreticalShell out;
    out.dims = dims;
    out.manifold_dims = manifold_dims;
    out.eps0 = eps0;
    out.mu_point = eps0 * std::sqrt(n);
    out.mu_approx = eps0 * std::sqrt(perp);
    out.var_approx = eps0 * eps0 * n / (2.0 * perp);
    const ChiMoments chi = chi_moments(perp, eps0);
    out.mu_exact = chi.mean;
    out.var_exact = chi.variance;
    return out;
}

/// Mean distance between two realizations taken at the same manifold
/// location, eps0 * sqrt(2N). Large-N approximation: the exact value is the
/// chi mean with N dof scaled by sqrt(2).
inline double expected_pair_distance(std::size_t dims, std::size_t manifold_dims, double eps0) {
    if (dims <= manifold_dims) throw std::invalid_argument("no perpendicular dimensions");
    return eps0 * std::sqrt(2.0 * static_cast<double>(dims));
}

}  // namespace hollow
