#pragma once

// Dynamic clustering of realizations along the process manifold.
//
// The model holds at most kmax clusters. The first kmax realizations seed the
// clusters; afterwards each realization either merges into its nearest cluster
// or, when it lies farther than dmax = cdist * shelldist from every centroid
// and farther than the closest pair of centroids, triggers the fusion of that
// pair and takes over the freed slot. Distances only use the dimensions the
// mask flags as independent. Centroids and per-dimension variances are stored
// in raw units; normalization scales enter through the masked distance only.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "hollow/shell_stats.hpp"

namespace hollow {

/// Per-dimension role flags: true for an independent variable (used in the
/// clustering distance), false for a dependent one.
class Mask {
public:
    Mask() = default;

    explicit Mask(std::vector<bool> independent) : independent_(std::move(independent)) {
        if (independent_.empty()) throw std::invalid_argument("mask: empty");
        if (independent_count() == 0) throw std::invalid_argument("mask: no independent dimension");
    }

    std::size_t size() const { return independent_.size(); }
    bool independent(std::size_t i) const { return independent_[i]; }
    const std::vector<bool>& flags() const { return independent_; }

    std::size_t independent_count() const {
        std::size_t n = 0;
        for (bool b : independent_) n += b ? 1 : 0;
        return n;
    }

    std::vector<std::size_t> independent_indices() const { return indices(true); }
    std::vector<std::size_t> dependent_indices() const { return indices(false); }

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    std::vector<std::size_t> indices(bool role) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < independent_.size(); ++i) {
            if (independent_[i] == role) out.push_back(i);
        }
        return out;
    }

    std::vector<bool> independent_;
};

/// Squared masked distance; `scales` may be empty (unit scales).
inline double masked_distance_sq(std::span<const double> a, std::span<const double> b, const Mask& mask,
                                 std::span<const double> scales = {}) {
    if (a.size() != b.size() || a.size() != mask.size()) throw std::invalid_argument("dimension mismatch");
    if (!scales.empty() && scales.size() != a.size()) throw std::invalid_argument("dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!mask.independent(i)) continue;
        double diff = a[i] - b[i];
        if (!scales.empty()) {
            if (!(scales[i] > 0.0)) throw std::invalid_argument("scales must be > 0");
            diff /= scales[i];
        }
        acc += diff * diff;
    }
    return acc;
}

inline double masked_distance(std::span<const double> a, std::span<const double> b, const Mask& mask,
                              std::span<const double> scales = {}) {
    return std::sqrt(masked_distance_sq(a, b, mask, scales));
}

struct Cluster {
    Vector centroid;
    Vector per_dim_var;
    std::uint64_t population = 0;
    double cvar = 0.0;  // variance of masked realization-to-centroid distance

    friend bool operator==(const Cluster&, const Cluster&) = default;
};

enum class IngestKind { seeded, merged, fused };

struct IngestOutcome {
    IngestKind kind = IngestKind::seeded;
    std::size_t cluster = 0;     // slot receiving the realization
    std::size_t fused_into = 0;  // fused: slot keeping the merged pair
    double distance = 0.0;       // masked distance to the nearest centroid (0 when seeding)
};

struct PairDistance {
    std::size_t first = 0;
    std::size_t second = 0;
    double distance = 0.0;
};

struct DependentStats {
    Vector mean;
    Vector variance;
};

inline DependentStats cluster_dependent_stats(const Cluster& cluster, const Mask& mask) {
    DependentStats out;
    for (std::size_t i : mask.dependent_indices()) {
        out.mean.push_back(cluster.centroid.at(i));
        out.variance.push_back(cluster.per_dim_var.at(i));
    }
    return out;
}

/// Folds a realization into a cluster; `distance` is its masked distance to
/// the centroid before the update. The per-dimension variance uses the
/// already-updated centroid.
inline void merge_realization(Cluster& c, std::span<const double> x, double distance) {
    if (x.size() != c.centroid.size()) throw std::invalid_argument("dimension mismatch");
    const auto p = static_cast<double>(c.population);
    for (std::size_t i = 0; i < x.size(); ++i) {
        c.centroid[i] = (x[i] + p * c.centroid[i]) / (p + 1.0);
        const double dev = c.centroid[i] - x[i];
        c.per_dim_var[i] = (dev * dev + p * c.per_dim_var[i]) / (p + 1.0);
    }
    c.cvar = (p * c.cvar + distance * distance) / (p + 1.0);
    c.population += 1;
}

inline Cluster seed_cluster(std::span<const double> x) {
    return {Vector(x.begin(), x.end()), Vector(x.size(), 0.0), 1, 0.0};
}

class ClusterModel {
public:
    ClusterModel(std::size_t kmax, double cdist, Mask mask) : kmax_(kmax), cdist_(cdist), mask_(std::move(mask)) {
        if (kmax_ < 2) throw std::invalid_argument("kmax must be >= 2");
        if (!(cdist_ > 0.0)) throw std::invalid_argument("cdist must be > 0");
        clusters_.reserve(kmax_);
    }

    IngestOutcome ingest(std::span<const double> x, std::span<const double> scales = {}) {
        if (x.size() != mask_.size()) throw std::invalid_argument("dimension mismatch");
        ++kcount_;
        IngestOutcome out;

        if (clusters_.size() < kmax_) {
            clusters_.push_back(seed_cluster(x));
            out.kind = IngestKind::seeded;
            out.cluster = clusters_.size() - 1;
            update_shelldist();
            return out;
        }

        std::size_t nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < clusters_.size(); ++k) {
            const double dist = masked_distance(clusters_[k].centroid, x, mask_, scales);
            if (dist < best) {
                best = dist;
                nearest = k;
            }
        }
        out.distance = best;

        if (best > dmax_) {
            const PairDistance pair = min_pair_distance(scales);
            ++fusion_search_count_;
            if (best > pair.distance) {
                fuse(pair.first, pair.second, scales);
                clusters_[pair.first] = seed_cluster(x);
                out.kind = IngestKind::fused;
                out.cluster = pair.first;
                out.fused_into = pair.second;
                update_shelldist();
                return out;
            }
        }

        merge_realization(clusters_[nearest], x, best);
        out.kind = IngestKind::merged;
        out.cluster = nearest;
        update_shelldist();
        return out;
    }

    /// Closest pair of centroids over the upper triangle; ties go to the
    /// lexicographically smallest (first, second).
    PairDistance min_pair_distance(std::span<const double> scales = {}) const {
        if (clusters_.size() < 2) throw std::logic_error("fewer than 2 clusters");
        PairDistance best{0, 1, std::numeric_limits<double>::infinity()};
        for (std::size_t j = 0; j < clusters_.size(); ++j) {
            for (std::size_t k = j + 1; k < clusters_.size(); ++k) {
                const double dist = masked_distance(clusters_[j].centroid, clusters_[k].centroid, mask_, scales);
                if (dist < best.distance) best = {j, k, dist};
            }
        }
        return best;
    }

    const std::vector<Cluster>& clusters() const { return clusters_; }
    const Mask& mask() const { return mask_; }
    std::size_t kmax() const { return kmax_; }
    double cdist() const { return cdist_; }
    double shelldist() const { return shelldist_; }
    double dmax() const { return dmax_; }
    std::uint64_t kcount() const { return kcount_; }
    std::uint64_t fusion_search_count() const { return fusion_search_count_; }
    bool seeded() const { return clusters_.size() == kmax_; }

    std::uint64_t total_population() const {
        std::uint64_t n = 0;
        for (const auto& c : clusters_) n += c.population;
        return n;
    }

    struct State {
        std::vector<Cluster> clusters;
        double shelldist = 0.0;
        double dmax = 0.0;
        std::uint64_t kcount = 0;
        std::uint64_t fusion_search_count = 0;
    };

    State state() const { return {clusters_, shelldist_, dmax_, kcount_, fusion_search_count_}; }

    static ClusterModel restore(std::size_t kmax, double cdist, Mask mask, State s) {
        ClusterModel m(kmax, cdist, std::move(mask));
        if (s.clusters.size() > kmax) throw std::invalid_argument("cluster model: more clusters than kmax");
        for (const auto& c : s.clusters) {
            if (c.centroid.size() != m.mask_.size() || c.per_dim_var.size() != m.mask_.size()) {
                throw std::invalid_argument("cluster model: dimension mismatch");
            }
        }
        m.clusters_ = std::move(s.clusters);
        m.shelldist_ = s.shelldist;
        m.dmax_ = s.dmax;
        m.kcount_ = s.kcount;
        m.fusion_search_count_ = s.fusion_search_count;
        return m;
    }

private:
    // Fuses slot j into slot k; slot j is left for the caller to re-seed.
    void fuse(std::size_t j, std::size_t k, std::span<const double> scales) {
        Cluster& a = clusters_[j];
        Cluster& b = clusters_[k];
        const auto pa = static_cast<double>(a.population);
        const auto pb = static_cast<double>(b.population);
        const double total = pa + pb;

        Vector fused(a.centroid.size());
        for (std::size_t i = 0; i < fused.size(); ++i) {
            fused[i] = (pa * a.centroid[i] + pb * b.centroid[i]) / total;
            b.per_dim_var[i] = (pa * a.per_dim_var[i] + pb * b.per_dim_var[i]) / total;
        }
        const double spread_a = masked_distance_sq(a.centroid, fused, mask_, scales);
        const double spread_b = masked_distance_sq(b.centroid, fused, mask_, scales);
        b.cvar = (pa * (a.cvar + spread_a) + pb * (b.cvar + spread_b)) / total;
        b.centroid = std::move(fused);
        b.population = a.population + b.population;
    }

    void update_shelldist() {
        double weighted = 0.0;
        double population = 0.0;
        for (const auto& c : clusters_) {
            weighted += static_cast<double>(c.population) * c.cvar;
            population += static_cast<double>(c.population);
        }
        shelldist_ = population > 0.0 ? std::sqrt(weighted / population) : 0.0;
        dmax_ = cdist_ * shelldist_;
    }

    std::size_t kmax_;
    double cdist_;
    Mask mask_;
    std::vector<Cluster> clusters_;
    double shelldist_ = 0.0;
    double dmax_ = 0.0;
    std::uint64_t kcount_ = 0;
    std::uint64_t fusion_search_count_ = 0;
};

}  // namespace hollow
