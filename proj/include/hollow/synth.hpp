#pragma once

// Ground-truth generators: noisy realizations around known manifolds, defect
// injection and the chi-moment reference.
//
// Gaussian variates come from the Box-Muller transform applied to 53-bit
// uniforms drawn from std::mt19937_64, so streams are reproducible across
// standard libraries for a given seed.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hollow/chi.hpp"
#include "hollow/shell_stats.hpp"

namespace hollow::synth {

using hollow::chi_moments;
using hollow::ChiMoments;

class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on (0, 1).
    double uniform() {
        const std::uint64_t bits = engine_() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

enum class ManifoldKind { point, line, circle, curve, plane, flat };

inline std::string_view to_string(ManifoldKind k) {
    switch (k) {
        case ManifoldKind::point: return "point";
        case ManifoldKind::line: return "line";
        case ManifoldKind::circle: return "circle";
        case ManifoldKind::curve: return "curve";
        case ManifoldKind::plane: return "plane";
        case ManifoldKind::flat: return "flat";
    }
    return "point";
}

inline ManifoldKind parse_manifold_kind(std::string_view s) {
    if (s == "point") return ManifoldKind::point;
    if (s == "line") return ManifoldKind::line;
    if (s == "circle") return ManifoldKind::circle;
    if (s == "curve") return ManifoldKind::curve;
    if (s == "plane") return ManifoldKind::plane;
    if (s == "flat") return ManifoldKind::flat;
    throw std::invalid_argument("unknown manifold kind: " + std::string(s));
}

inline std::size_t manifold_dims(ManifoldKind k) {
    switch (k) {
        case ManifoldKind::point: return 0;
        case ManifoldKind::line:
        case ManifoldKind::circle:
        case ManifoldKind::curve: return 1;
        case ManifoldKind::plane: return 2;
        case ManifoldKind::flat: break;
    }
    return 0;
}

/// Noise-free response x = f(w) in R^N plus isotropic or per-channel noise.
///
/// point:  x = origin
/// line:   x = origin + w * e1                    (w uniform on [0, extent])
/// plane:  x = origin + w1 * e1 + w2 * e2          (w uniform on [0, extent]^2)
/// circle: x = origin + radius (cos w e1 + sin w e2)   (w uniform on [0, 2 pi))
/// curve:  x_n = origin_n + amplitude * sin(w + phase_n) (w uniform on [0, extent]),
///         phase_n = 2 pi n / N; a smooth closed-form trajectory through all channels.
struct ManifoldSpec {
    ManifoldKind kind = ManifoldKind::point;
    std::size_t dims = 2;
    double eps0 = 1.0;
    Vector noise;  // optional per-channel noise sd, overrides eps0
    double radius = 10.0;
    double extent = 10.0;
    double amplitude = 1.0;
    double origin = 0.0;
    std::size_t flat_dims = 3;  // L for the flat kind
    std::uint64_t seed = 1;

    std::size_t latent_dims() const { return kind == ManifoldKind::flat ? flat_dims : manifold_dims(kind); }

    void validate() const {
        if (dims <= latent_dims()) throw std::invalid_argument("manifold: N must exceed L");
        if (kind == ManifoldKind::circle && dims < 2) throw std::invalid_argument("circle needs N >= 2");
        if (!noise.empty()) {
            if (noise.size() != dims) throw std::invalid_argument("noise vector length must equal N");
            for (double e : noise) {
                if (!(e >= 0.0)) throw std::invalid_argument("noise entries must be >= 0");
            }
        } else if (!(eps0 >= 0.0)) {
            throw std::invalid_argument("eps0 must be >= 0");
        }
    }

    double noise_sd(std::size_t n) const { return noise.empty() ? eps0 : noise[n]; }

    Vector point_at(std::span<const double> w) const {
        Vector x(dims, origin);
        switch (kind) {
            case ManifoldKind::point: break;
            case ManifoldKind::line: x[0] += w[0]; break;
            case ManifoldKind::plane:
                x[0] += w[0];
                x[1] += w[1];
                break;
            case ManifoldKind::flat:
                for (std::size_t l = 0; l < flat_dims; ++l) x[l] += w[l];
                break;
            case ManifoldKind::circle:
                x[0] += radius * std::cos(w[0]);
                x[1] += radius * std::sin(w[0]);
                break;
            case ManifoldKind::curve:
                for (std::size_t n = 0; n < dims; ++n) {
                    const double phase = 2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(dims);
                    x[n] += amplitude * std::sin(w[0] + phase);
                }
                break;
        }
        return x;
    }

    /// Exact perpendicular distance of y to the manifold (linear and circular kinds).
    double perpendicular_distance(std::span<const double> y) const {
        if (y.size() != dims) throw std::invalid_argument("dimension mismatch");
        double acc = 0.0;
        switch (kind) {
            case ManifoldKind::point:
                for (double v : y) acc += (v - origin) * (v - origin);
                return std::sqrt(acc);
            case ManifoldKind::line:
                for (std::size_t n = 1; n < dims; ++n) acc += (y[n] - origin) * (y[n] - origin);
                return std::sqrt(acc);
            case ManifoldKind::plane:
                for (std::size_t n = 2; n < dims; ++n) acc += (y[n] - origin) * (y[n] - origin);
                return std::sqrt(acc);
            case ManifoldKind::flat:
                for (std::size_t n = flat_dims; n < dims; ++n) acc += (y[n] - origin) * (y[n] - origin);
                return std::sqrt(acc);
            case ManifoldKind::circle: {
                const double in_plane = std::hypot(y[0] - origin, y[1] - origin) - radius;
                acc = in_plane * in_plane;
                for (std::size_t n = 2; n < dims; ++n) acc += (y[n] - origin) * (y[n] - origin);
                return std::sqrt(acc);
            }
            case ManifoldKind::curve: break;
        }
        throw std::logic_error("perpendicular distance has no closed form for this manifold");
    }
};

struct GroundTruth {
    Vector latent;          // w
    Vector manifold_point;  // x = f(w)
    double noise_length = 0.0;  // ||y - x||
    double perpendicular = std::numeric_limits<double>::quiet_NaN();  // linear/circular kinds only
};

struct Cloud {
    std::vector<Vector> latent;        // independent coordinates per realization
    std::vector<Vector> realizations;  // dependent responses y
    std::vector<GroundTruth> truth;
};

/// Draws M realizations y_m = f(w_m) + eps_m.
inline Cloud gen_cloud(const ManifoldSpec& spec, std::size_t count) {
    spec.validate();
    if (count < 1) throw std::invalid_argument("gen_cloud: M must be >= 1");
    GaussianSource rng(spec.seed);
    Cloud out;
    out.latent.reserve(count);
    out.realizations.reserve(count);
    out.truth.reserve(count);
    const std::size_t L = spec.latent_dims();
    for (std::size_t m = 0; m < count; ++m) {
        Vector w(L);
        for (auto& v : w) {
            const double u = rng.uniform();
            v = spec.kind == ManifoldKind::circle ? 2.0 * std::numbers::pi * u : spec.extent * u;
        }
        Vector x = spec.point_at(w);
        Vector y(spec.dims);
        double len = 0.0;
        for (std::size_t n = 0; n < spec.dims; ++n) {
            const double e = spec.noise_sd(n) * rng.normal();
            y[n] = x[n] + e;
            len += e * e;
        }
        GroundTruth t;
        t.latent = w;
        t.manifold_point = std::move(x);
        t.noise_length = std::sqrt(len);
        if (spec.kind != ManifoldKind::curve) t.perpendicular = spec.perpendicular_distance(y);
        out.truth.push_back(std::move(t));
        out.latent.push_back(std::move(w));
        out.realizations.push_back(std::move(y));
    }
    return out;
}

/// Adds `offset` to the listed channels of every realization from `from_index` on.
inline void inject_defect(std::vector<Vector>& realizations, std::span<const std::size_t> dims, double offset,
                          std::size_t from_index) {
    if (dims.empty()) throw std::invalid_argument("inject_defect: empty dimension set");
    for (std::size_t m = from_index; m < realizations.size(); ++m) {
        for (std::size_t d : dims) realizations[m].at(d) += offset;
    }
}

struct PairStats {
    double mean = 0.0;
    double variance = 0.0;
};

/// Monte-Carlo distance between two independent realizations at the same
/// manifold location.
inline PairStats monte_carlo_pair_distance(std::size_t dims, double eps0, std::size_t pairs, std::uint64_t seed) {
    GaussianSource rng(seed);
    double sum = 0.0;
    double sq = 0.0;
    for (std::size_t p = 0; p < pairs; ++p) {
        double acc = 0.0;
        for (std::size_t n = 0; n < dims; ++n) {
            const double diff = eps0 * (rng.normal() - rng.normal());
            acc += diff * diff;
        }
        const double d = std::sqrt(acc);
        sum += d;
        sq += d * d;
    }
    const auto n = static_cast<double>(pairs);
    const double mean = sum / n;
    return {mean, sq / n - mean * mean};
}

}  // namespace hollow::synth
