#pragma once

// Ordinary kriging of cluster dependent means over the independent
// coordinates. One variogram shape (Gaussian) is fitted on per-channel
// standardized means and shared by every dependent channel, so a single
// linear system gives the weights for all channels. Each site carries its own
// nugget, the standard error of its cluster mean, which is how cluster
// populations enter the interpolation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "hollow/clustering.hpp"

namespace hollow {

/// gamma(h) = nugget + sill * (1 - exp(-h^2 / range^2))
struct Variogram {
    double nugget = 0.0;
    double sill = 0.0;
    double range = 1.0;

    double operator()(double h) const { return nugget + sill * (1.0 - std::exp(-(h * h) / (range * range))); }

    friend bool operator==(const Variogram&, const Variogram&) = default;
};

struct InterpolationResult {
    Vector estimate;  // raw units
    double sigma_m = 0.0;  // normalized units
};

struct EmpiricalVariogram {
    std::vector<double> lag;          // mean pair distance per bin
    std::vector<double> semivariance;  // mean semivariance per bin
    std::vector<double> pairs;         // pair count per bin
};

namespace detail {

inline constexpr double kSillFloor = 1e-9;
inline constexpr double kJitter = 1e-10;
inline constexpr std::size_t kMaxBins = 10;
inline constexpr std::size_t kMinBinsForFit = 4;
inline constexpr double kTrendRangeSpacings = 2.0;  // in median nearest-neighbour spacings

// Least-squares fit of sill and range with the nugget held fixed.
// A least-squares optimum at the range ceiling means the semivariance never
// levels off (a trend rather than a correlated field): the range is then set to
// `trend_range`, which keeps the interpolator local.
inline Variogram fit_gaussian(const EmpiricalVariogram& ev, double nugget, double hmin, double hmax, double trend_range) {
    auto sill_for = [&](double range, double& sse) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t b = 0; b < ev.lag.size(); ++b) {
            const double f = 1.0 - std::exp(-(ev.lag[b] * ev.lag[b]) / (range * range));
            num += ev.pairs[b] * f * (ev.semivariance[b] - nugget);
            den += ev.pairs[b] * f * f;
        }
        const double sill = den > 0.0 ? std::max(num / den, 0.0) : 0.0;
        sse = 0.0;
        for (std::size_t b = 0; b < ev.lag.size(); ++b) {
            const double f = 1.0 - std::exp(-(ev.lag[b] * ev.lag[b]) / (range * range));
            const double r = ev.semivariance[b] - nugget - sill * f;
            sse += ev.pairs[b] * r * r;
        }
        return sill;
    };

    const double lo = std::log(hmin / 4.0);
    const double hi = std::log(hmax);
    constexpr int grid = 200;
    const double step = (hi - lo) / grid;
    int best_i = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
        double sse = 0.0;
        sill_for(std::exp(lo + step * i), sse);
        if (sse < best_sse) {
            best_sse = sse;
            best_i = i;
        }
    }

    if (best_i == grid) {
        const double range = std::min(trend_range, hmax);
        double sse = 0.0;
        return {nugget, sill_for(range, sse), range};
    }

    // Golden-section refinement on log(range) around the best grid point.
    double a = lo + step * std::max(best_i - 1, 0);
    double b = lo + step * std::min(best_i + 1, grid);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = 0.0;
    double fd = 0.0;
    sill_for(std::exp(c), fc);
    sill_for(std::exp(d), fd);
    for (int it = 0; it < 60; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            sill_for(std::exp(c), fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            sill_for(std::exp(d), fd);
        }
    }
    const double range = std::exp(0.5 * (a + b));
    double sse = 0.0;
    const double sill = sill_for(range, sse);
    return {nugget, sill, range};
}

}  // namespace detail

class KrigingModel {
public:
    struct Site {
        Vector coords;  // normalized independent coordinates
        Vector values;  // normalized dependent means
        double nugget = 0.0;  // standard error of the site mean, normalized units squared

        friend bool operator==(const Site&, const Site&) = default;
    };

    /// Stored parameters; everything else is derived deterministically.
    struct Parameters {
        std::vector<Site> sites;
        Variogram variogram;
        Vector independent_scales;
        Vector dependent_scales;
        Vector channel_units;  // per-channel standardization scale u_d
        double nugget_factor = 0.0;  // mean over channels of 1 / u_d^2

        friend bool operator==(const Parameters&, const Parameters&) = default;
    };

    static KrigingModel fit(std::span<const Cluster> input, const Mask& mask, std::span<const double> scales = {}) {
        if (input.size() < 2) throw std::invalid_argument("kriging needs at least 2 clusters");
        if (!scales.empty() && scales.size() != mask.size()) throw std::invalid_argument("dimension mismatch");
        // Canonical site order, so the fit does not depend on slot order.
        std::vector<Cluster> clusters(input.begin(), input.end());
        std::sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
            return std::tie(a.centroid, a.population, a.per_dim_var, a.cvar) <
                   std::tie(b.centroid, b.population, b.per_dim_var, b.cvar);
        });
        const auto indep = mask.independent_indices();
        const auto dep = mask.dependent_indices();
        auto scale_of = [&](std::size_t i) { return scales.empty() ? 1.0 : scales[i]; };

        Parameters p;
        for (std::size_t i : indep) p.independent_scales.push_back(scale_of(i));
        for (std::size_t i : dep) p.dependent_scales.push_back(scale_of(i));

        // Single-member clusters have no spread of their own; they borrow the
        // population-weighted dispersion of the populated clusters.
        double pooled_var = 0.0;
        double pooled_pop = 0.0;
        auto mean_dep_var = [&](const Cluster& c) {
            if (dep.empty()) return 0.0;
            double acc = 0.0;
            for (std::size_t n = 0; n < dep.size(); ++n) {
                const double s = p.dependent_scales[n];
                acc += c.per_dim_var[dep[n]] / (s * s);
            }
            return acc / static_cast<double>(dep.size());
        };
        for (const auto& c : clusters) {
            if (c.population == 0) throw std::invalid_argument("kriging: empty cluster");
            if (c.centroid.size() != mask.size()) throw std::invalid_argument("dimension mismatch");
            if (c.population >= 2) {
                pooled_var += static_cast<double>(c.population) * mean_dep_var(c);
                pooled_pop += static_cast<double>(c.population);
            }
        }
        if (pooled_pop > 0.0) pooled_var /= pooled_pop;

        for (const auto& c : clusters) {
            Site s;
            for (std::size_t n = 0; n < indep.size(); ++n) s.coords.push_back(c.centroid[indep[n]] / p.independent_scales[n]);
            for (std::size_t n = 0; n < dep.size(); ++n) s.values.push_back(c.centroid[dep[n]] / p.dependent_scales[n]);
            const double v = c.population >= 2 ? mean_dep_var(c) : pooled_var;
            s.nugget = v / static_cast<double>(c.population);
            p.sites.push_back(std::move(s));
        }

        const std::size_t n_sites = p.sites.size();
        double hmax = 0.0;
        double hmin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n_sites; ++i) {
            for (std::size_t j = i + 1; j < n_sites; ++j) {
                const double h = euclidean_distance(p.sites[i].coords, p.sites[j].coords);
                hmax = std::max(hmax, h);
                if (h > 0.0) hmin = std::min(hmin, h);
            }
        }
        if (!(hmax > 0.0)) throw std::runtime_error("no spatial spread");

        std::vector<double> nearest(n_sites, std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n_sites; ++i) {
            for (std::size_t j = 0; j < n_sites; ++j) {
                const double h = i == j ? 0.0 : euclidean_distance(p.sites[i].coords, p.sites[j].coords);
                if (h > 0.0) nearest[i] = std::min(nearest[i], h);
            }
        }
        std::erase_if(nearest, [](double h) { return !std::isfinite(h); });
        std::nth_element(nearest.begin(), nearest.begin() + static_cast<std::ptrdiff_t>(nearest.size() / 2), nearest.end());
        const double spacing = nearest[nearest.size() / 2];

        double mean_nugget = 0.0;
        for (const auto& s : p.sites) mean_nugget += s.nugget;
        mean_nugget /= static_cast<double>(n_sites);

        // Per-channel standardization: spread of the site means plus the pooled nugget.
        const std::size_t n_dep = dep.size();
        Vector channel_mean(n_dep, 0.0);
        for (const auto& s : p.sites) {
            for (std::size_t d = 0; d < n_dep; ++d) channel_mean[d] += s.values[d];
        }
        for (auto& m : channel_mean) m /= static_cast<double>(n_sites);
        p.channel_units.assign(n_dep, 0.0);
        std::size_t informative = 0;
        for (std::size_t d = 0; d < n_dep; ++d) {
            double spread = 0.0;
            for (const auto& s : p.sites) spread += (s.values[d] - channel_mean[d]) * (s.values[d] - channel_mean[d]);
            spread /= static_cast<double>(n_sites);
            p.channel_units[d] = std::sqrt(spread + mean_nugget);
            if (p.channel_units[d] > 0.0) {
                p.nugget_factor += 1.0 / (p.channel_units[d] * p.channel_units[d]);
                ++informative;
            }
        }
        if (informative > 0) p.nugget_factor /= static_cast<double>(informative);

        const double nugget = mean_nugget * p.nugget_factor;
        if (informative == 0) {
            // Noise-free constant field: any weights reproduce it.
            p.variogram = {0.0, 0.0, 0.5 * hmax};
            return KrigingModel(std::move(p));
        }

        const EmpiricalVariogram ev = empirical_variogram(p, hmax);
        if (ev.lag.size() < detail::kMinBinsForFit) {
            double gamma = 0.0;
            double count = 0.0;
            double lag = 0.0;
            for (std::size_t b = 0; b < ev.lag.size(); ++b) {
                gamma += ev.pairs[b] * ev.semivariance[b];
                lag += ev.pairs[b] * ev.lag[b];
                count += ev.pairs[b];
            }
            p.variogram = {nugget, gamma / count, 0.5 * lag / count};
        } else {
            p.variogram = detail::fit_gaussian(ev, nugget, hmin, hmax, detail::kTrendRangeSpacings * spacing);
        }
        return KrigingModel(std::move(p));
    }

    /// Rebuilds a model from stored parameters (deterministic refactorization).
    static KrigingModel restore(Parameters p) { return KrigingModel(std::move(p)); }

    /// Semivariances of the standardized site means, binned by site distance.
    static EmpiricalVariogram empirical_variogram(const Parameters& p, double hmax) {
        const std::size_t n_sites = p.sites.size();
        const std::size_t n_dep = p.channel_units.size();
        Vector channel_mean(n_dep, 0.0);
        for (const auto& s : p.sites) {
            for (std::size_t d = 0; d < n_dep; ++d) channel_mean[d] += s.values[d];
        }
        for (auto& m : channel_mean) m /= static_cast<double>(n_sites);

        const std::size_t pair_count = n_sites * (n_sites - 1) / 2;
        const std::size_t bins = std::min(detail::kMaxBins, pair_count);
        const double width = hmax / static_cast<double>(bins);
        std::vector<double> lag(bins, 0.0), gamma(bins, 0.0), count(bins, 0.0);
        for (std::size_t i = 0; i < n_sites; ++i) {
            for (std::size_t j = i + 1; j < n_sites; ++j) {
                const double h = euclidean_distance(p.sites[i].coords, p.sites[j].coords);
                double sq = 0.0;
                std::size_t used = 0;
                for (std::size_t d = 0; d < n_dep; ++d) {
                    if (!(p.channel_units[d] > 0.0)) continue;
                    const double diff = (p.sites[i].values[d] - p.sites[j].values[d]) / p.channel_units[d];
                    sq += diff * diff;
                    ++used;
                }
                const double semivariance = used > 0 ? 0.5 * sq / static_cast<double>(used) : 0.0;
                auto b = static_cast<std::size_t>(std::ceil(h / width)) ;
                b = b == 0 ? 0 : std::min(b - 1, bins - 1);
                lag[b] += h;
                gamma[b] += semivariance;
                count[b] += 1.0;
            }
        }
        EmpiricalVariogram ev;
        for (std::size_t b = 0; b < bins; ++b) {
            if (count[b] == 0.0) continue;
            ev.lag.push_back(lag[b] / count[b]);
            ev.semivariance.push_back(gamma[b] / count[b]);
            ev.pairs.push_back(count[b]);
        }
        return ev;
    }

    /// Ordinary-kriging weights at the given raw independent coordinates.
    Vector weights(std::span<const double> w) const {
        Vector out;
        double lagrange = 0.0;
        solve(w, out, lagrange);
        return out;
    }

    InterpolationResult interpolate(std::span<const double> w) const {
        Vector lambda;
        double lagrange = 0.0;
        const double structural = solve(w, lambda, lagrange);

        const std::size_t n_dep = params_.dependent_scales.size();
        InterpolationResult out;
        out.estimate.assign(n_dep, 0.0);
        // Centered form keeps a constant field exact whatever the rounding of
        // the weights.
        for (std::size_t d = 0; d < n_dep; ++d) {
            double acc = 0.0;
            for (std::size_t i = 0; i < lambda.size(); ++i) acc += lambda[i] * (params_.sites[i].values[d] - channel_mean_[d]);
            out.estimate[d] = (channel_mean_[d] + acc) * params_.dependent_scales[d];
        }
        const double var = std::max(structural - kriged_cov(lambda, w) - lagrange, 0.0);
        out.sigma_m = std::sqrt(var * unit_sq_sum_);
        return out;
    }

    const Parameters& parameters() const { return params_; }
    const Variogram& variogram() const { return params_.variogram; }
    std::size_t site_count() const { return params_.sites.size(); }
    std::size_t independent_dims() const { return params_.independent_scales.size(); }
    std::size_t dependent_dims() const { return params_.dependent_scales.size(); }

private:
    explicit KrigingModel(Parameters p) : params_(std::move(p)) {
        const std::size_t n = params_.sites.size();
        if (n < 2) throw std::invalid_argument("kriging needs at least 2 sites");
        if (!(params_.variogram.range > 0.0)) throw std::invalid_argument("variogram range must be > 0");

        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (params_.sites[i].coords == params_.sites[j].coords && params_.sites[i].nugget == 0.0 &&
                    params_.sites[j].nugget == 0.0) {
                    throw std::runtime_error("degenerate site geometry");
                }
            }
        }

        const std::size_t n_dep = params_.dependent_scales.size();
        channel_mean_.assign(n_dep, 0.0);
        for (const auto& s : params_.sites) {
            for (std::size_t d = 0; d < n_dep; ++d) channel_mean_[d] += s.values[d];
        }
        for (auto& m : channel_mean_) m /= static_cast<double>(n);
        unit_sq_sum_ = 0.0;
        for (double u : params_.channel_units) unit_sq_sum_ += u * u;

        sill_ = std::max(params_.variogram.sill, detail::kSillFloor);
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            for (std::size_t j = 0; j < n; ++j) {
                const double h = euclidean_distance(params_.sites[i].coords, params_.sites[j].coords);
                a(ii, static_cast<Eigen::Index>(j)) = covariance(h);
            }
            a(ii, ii) += params_.sites[i].nugget * params_.nugget_factor + detail::kJitter * sill_;
            a(ii, static_cast<Eigen::Index>(n)) = 1.0;
            a(static_cast<Eigen::Index>(n), ii) = 1.0;
        }
        lu_.compute(a);
        if (!lu_.isInvertible()) throw std::runtime_error("degenerate site geometry");
    }

    double covariance(double h) const { return sill_ * std::exp(-(h * h) / (params_.variogram.range * params_.variogram.range)); }

    Vector normalized_query(std::span<const double> w) const {
        if (w.size() != params_.independent_scales.size()) throw std::invalid_argument("dimension mismatch");
        Vector q(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (!std::isfinite(w[i])) throw std::invalid_argument("non-finite query coordinate");
            q[i] = w[i] / params_.independent_scales[i];
        }
        return q;
    }

    // Returns the structural variance C(0); fills the weights and multiplier.
    double solve(std::span<const double> w, Vector& lambda, double& lagrange) const {
        const Vector q = normalized_query(w);
        const std::size_t n = params_.sites.size();
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(n + 1));
        for (std::size_t i = 0; i < n; ++i) {
            rhs(static_cast<Eigen::Index>(i)) = covariance(euclidean_distance(params_.sites[i].coords, q));
        }
        rhs(static_cast<Eigen::Index>(n)) = 1.0;
        const Eigen::VectorXd sol = lu_.solve(rhs);
        lambda.assign(sol.data(), sol.data() + n);
        lagrange = sol(static_cast<Eigen::Index>(n));
        return sill_;
    }

    double kriged_cov(const Vector& lambda, std::span<const double> w) const {
        const Vector q = normalized_query(w);
        double acc = 0.0;
        for (std::size_t i = 0; i < lambda.size(); ++i) {
            acc += lambda[i] * covariance(euclidean_distance(params_.sites[i].coords, q));
        }
        return acc;
    }

    Parameters params_;
    Vector channel_mean_;
    double unit_sq_sum_ = 0.0;
    double sill_ = 0.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace hollow
