#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clustering.hpp"
#include "data_model.hpp"
#include "distances.hpp"
#include "error.hpp"

namespace soilnet {

enum class Aggregation { mean, median };

inline std::string_view to_string(Aggregation a) { return a == Aggregation::mean ? "mean" : "median"; }

inline Aggregation parse_aggregation(std::string_view s) {
    if (s == "mean") return Aggregation::mean;
    if (s == "median") return Aggregation::median;
    throw Error("unknown aggregation '" + std::string(s) + "' (expected mean or median)");
}

struct ImputationPlan {
    SensorId target;
    /// Cluster co-members, nearest first.
    std::vector<SensorId> donors;
    Aggregation aggregation = Aggregation::mean;
    /// Distance from each donor to the target on the training window,
    /// aligned with `donors`.
    std::vector<double> donor_distance;
    std::size_t cluster = 0;
};

namespace detail {

inline std::size_t network_index(const SensorNetwork& network, std::string_view id) {
    auto i = network.index_of(id);
    if (!i) throw Error("sensor '" + std::string(id) + "' is not in the network");
    return *i;
}

inline std::vector<double> prepared_window(const SensorSeries& s, SlotRange window, bool normalize) {
    auto v = s.complete_values(window);
    return normalize ? znormalize(std::span<const double>(v)) : v;
}

}  // namespace detail

/// Donors for `target`: its cluster co-members ranked by distance to the
/// target over `training` (the clustering's own measure), truncated to the
/// `top_j` nearest when given. Ties keep network order.
inline ImputationPlan plan_imputation(const ClusteringResult& result, const SensorNetwork& network,
                                      std::string_view target, std::optional<std::size_t> top_j = std::nullopt,
                                      Aggregation aggregation = Aggregation::mean,
                                      std::optional<SlotRange> training = std::nullopt) {
    const auto ti = result.index_of(target);
    if (!ti) throw Error("target '" + std::string(target) + "' has no cluster label");
    if (top_j && *top_j == 0) throw Error("top_j must be >= 1");
    const std::size_t cluster = result.labels[*ti];
    const SlotRange window = training.value_or(SlotRange::whole(network.grid()));

    const auto& target_series = network[detail::network_index(network, target)];
    const auto target_values = detail::prepared_window(target_series, window, result.config.normalize);
    const Measure measure = measure_for(result.config.method);

    struct Candidate {
        std::size_t order;
        SensorId id;
        double distance;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < result.labels.size(); ++i) {
        if (i == *ti || result.labels[i] != cluster) continue;
        const auto& id = result.sensors[i];
        const std::size_t ni = detail::network_index(network, id.id);
        const auto v = detail::prepared_window(network[ni], window, result.config.normalize);
        candidates.push_back({ni, id, distance(target_values, v, measure, result.config.band)});
    }
    if (candidates.empty()) {
        throw Error("no donors available: target '" + std::string(target) + "' is alone in cluster " +
                    std::to_string(cluster));
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.order < b.order);
    });
    if (top_j && *top_j < candidates.size()) candidates.resize(*top_j);

    ImputationPlan plan;
    plan.target = result.sensors[*ti];
    plan.aggregation = aggregation;
    plan.cluster = cluster;
    for (auto& c : candidates) {
        plan.donors.push_back(c.id);
        plan.donor_distance.push_back(c.distance);
    }
    return plan;
}

/// Slot-wise aggregate of the donors' raw values over `window`. Slots where
/// some donors are absent use the present ones. The result is independent of
/// donor order.
inline SensorSeries impute(const ImputationPlan& plan, const SensorNetwork& network, SlotRange window) {
    if (plan.donors.empty()) throw Error("impute: plan has no donors");
    if (window.end > network.grid().length || window.size() == 0) throw Error("impute: window out of range");
    std::vector<const SensorSeries*> donors;
    for (const auto& d : plan.donors) donors.push_back(&network.at(d.id));

    std::vector<double> values(window.size(), kAbsent);
    std::vector<bool> present(window.size(), false);
    std::vector<std::size_t> uncovered;
    std::vector<double> column;
    for (std::size_t s = window.begin; s < window.end; ++s) {
        column.clear();
        for (const auto* d : donors)
            if (d->present()[s]) column.push_back(d->values()[s]);
        if (column.empty()) {
            uncovered.push_back(s);
            continue;
        }
        std::sort(column.begin(), column.end());
        double v;
        if (plan.aggregation == Aggregation::mean) {
            // Running mean: exact when all donors agree.
            v = column[0];
            for (std::size_t i = 1; i < column.size(); ++i) v += (column[i] - v) / static_cast<double>(i + 1);
        } else {
            const std::size_t h = column.size() / 2;
            v = column.size() % 2 ? column[h] : 0.5 * (column[h - 1] + column[h]);
        }
        values[s - window.begin] = v;
        present[s - window.begin] = true;
    }
    if (!uncovered.empty()) {
        std::string list;
        for (std::size_t i = 0; i < uncovered.size() && i < 20; ++i) list += (i ? "," : "") + std::to_string(uncovered[i]);
        if (uncovered.size() > 20) list += ",...";
        throw Error("impute: no donor has a value at " + std::to_string(uncovered.size()) + " slot(s): " + list);
    }
    const auto& g = network.grid();
    return {plan.target, TimeGrid{g.time_at(window.begin), g.step_minutes, window.size()}, std::move(values),
            std::move(present), true};
}

inline SensorSeries impute(const ImputationPlan& plan, const SensorNetwork& network) {
    return impute(plan, network, SlotRange::whole(network.grid()));
}

// ---------------------------------------------------------------------------
// Anomalies

inline constexpr double kDefaultAnomalyThreshold = 3.0;
/// Lower bound on the robust scale, so clusters of identical sensors do not
/// divide by zero.
inline constexpr double kMinRobustScale = 1e-6;

struct AnomalyReport {
    /// Robust z-score of each scored sensor's centroid distance.
    std::map<std::string, double> scores;
    /// Raw distance to the own-cluster centroid over the window.
    std::map<std::string, double> distances;
    std::vector<std::string> flagged;
    /// Clusters with fewer than 3 members; their sensors are not scored.
    std::vector<std::size_t> skipped_clusters;
    double threshold = kDefaultAnomalyThreshold;
    SlotRange window;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace detail

/// Distance of each sensor to its centroid over `window`, standardized within
/// its cluster by median and MAD (scaled by 1.4826). Sensors whose score
/// exceeds `threshold` are flagged.
inline AnomalyReport detect_anomalies(const ClusteringResult& result, const SensorNetwork& network,
                                      SlotRange window, double threshold = kDefaultAnomalyThreshold) {
    if (window.end > network.grid().length || window.size() < 2) throw Error("detect_anomalies: invalid window");
    AnomalyReport rep;
    rep.threshold = threshold;
    rep.window = window;
    const Measure measure = measure_for(result.config.method);
    const bool normalize = result.config.normalize;

    for (std::size_t c = 0; c < result.k(); ++c) {
        const auto members = result.members(c);
        if (members.empty()) continue;
        if (members.size() < 3) {
            rep.skipped_clusters.push_back(c);
            continue;
        }
        const auto& centroid = result.centroids.at(c);
        if (centroid.size() < window.end) throw Error("detect_anomalies: centroid shorter than the window");
        std::vector<double> cw(centroid.begin() + static_cast<std::ptrdiff_t>(window.begin),
                               centroid.begin() + static_cast<std::ptrdiff_t>(window.end));
        if (normalize) cw = znormalize(std::span<const double>(cw));

        std::vector<double> d;
        d.reserve(members.size());
        for (auto i : members) {
            const auto& s = network.at(result.sensors[i].id);
            d.push_back(distance(cw, detail::prepared_window(s, window, normalize), measure, result.config.band));
        }
        const double med = detail::median_of(d);
        std::vector<double> dev;
        for (double v : d) dev.push_back(std::abs(v - med));
        const double scale = std::max(1.4826 * detail::median_of(dev), kMinRobustScale);
        for (std::size_t m = 0; m < members.size(); ++m) {
            const auto& id = result.sensors[members[m]].id;
            const double score = std::max(0.0, (d[m] - med) / scale);
            rep.scores[id] = score;
            rep.distances[id] = d[m];
            if (score > threshold) rep.flagged.push_back(id);
        }
    }
    std::sort(rep.flagged.begin(), rep.flagged.end());
    return rep;
}

}  // namespace soilnet
