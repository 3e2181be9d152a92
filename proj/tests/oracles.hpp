#pragma once

// Test-only reference computations. Nothing here calls into the library code
// paths it is used to check.

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

/// E[X^power] of the chi distribution with k dof, by composite Simpson
/// quadrature of the density in log space.
inline double chi_raw_moment(double k, int power) {
    const double log_norm = (k / 2.0 - 1.0) * std::log(2.0) + std::lgamma(k / 2.0);
    const double hi = std::sqrt(k) + 40.0;
    const int n = 200000;
    const double h = hi / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = i * h;
        double f = 0.0;
        if (x > 0.0) f = std::exp((k - 1.0 + power) * std::log(x) - 0.5 * x * x - log_norm);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * f;
    }
    return acc * h / 3.0;
}

struct Moments {
    double mean;
    double variance;
};

inline Moments chi_by_quadrature(double k, double eps0 = 1.0) {
    const double m1 = chi_raw_moment(k, 1);
    const double m2 = chi_raw_moment(k, 2);
    return {eps0 * m1, eps0 * eps0 * (m2 - m1 * m1)};
}

/// Straight replay of the batch comparison recurrence, one step at a time.
struct ReplayStep {
    bool decided;
    bool match;
    double shelldist;
    double shellvar;
};

inline std::vector<ReplayStep> replay_batch(const std::vector<double>& d, double k) {
    std::vector<ReplayStep> out;
    double mean = 0.0;
    double var = 0.0;
    for (std::size_t m = 0; m < d.size(); ++m) {
        ReplayStep step{false, true, 0.0, 0.0};
        if (m >= 2) {
            step.decided = true;
            step.match = std::fabs(d[m] - mean) <= k * std::sqrt(var);
        }
        if (m >= 1) var = ((d[m] - mean) * (d[m] - mean) + (static_cast<double>(m) - 1.0) * var) / static_cast<double>(m);
        mean = (d[m] + static_cast<double>(m) * mean) / (static_cast<double>(m) + 1.0);
        step.shelldist = mean;
        step.shellvar = var;
        out.push_back(step);
    }
    return out;
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        }
        if (std::fabs(a[piv][c]) < 1e-300) throw std::runtime_error("singular");
        std::swap(a[piv], a[c]);
        std::swap(b[piv], b[c]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

/// Ordinary kriging in one dimension with covariance sill * exp(-h^2/range^2)
/// and per-site measurement variances; returns (estimate, variance).
struct Kriged {
    double estimate;
    double variance;
    std::vector<double> weights;
};

inline Kriged ordinary_kriging_1d(const std::vector<double>& sites, const std::vector<double>& values,
                                  const std::vector<double>& noise, double sill, double range, double q) {
    const std::size_t n = sites.size();
    auto cov = [&](double h) { return sill * std::exp(-(h * h) / (range * range)); };
    std::vector<std::vector<double>> a(n + 1, std::vector<double>(n + 1, 0.0));
    std::vector<double> b(n + 1, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a[i][j] = cov(sites[i] - sites[j]);
        a[i][i] += noise[i];
        a[i][n] = a[n][i] = 1.0;
        b[i] = cov(sites[i] - q);
    }
    const auto x = gauss_solve(a, b);
    Kriged out{0.0, sill, {}};
    for (std::size_t i = 0; i < n; ++i) {
        out.estimate += x[i] * values[i];
        out.variance -= x[i] * b[i];
        out.weights.push_back(x[i]);
    }
    out.variance -= x[n];
    return out;
}

/// Standard normals from a fixed engine, for tests that must not depend on
/// the library generator.
class Normals {
public:
    explicit Normals(unsigned seed) : engine_(seed) {}
    double operator()() { return dist_(engine_); }

private:
    std::mt19937 engine_;
    std::normal_distribution<double> dist_;
};

}  // namespace oracle
