#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "data_model.hpp"
#include "distances.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace soilnet {

enum class Method { dtw_kmeans, kshape };

inline std::string_view to_string(Method m) { return m == Method::dtw_kmeans ? "dtw-kmeans" : "kshape"; }

inline Method parse_method(std::string_view s) {
    if (s == "dtw-kmeans" || s == "dtw_kmeans" || s == "dtw") return Method::dtw_kmeans;
    if (s == "kshape" || s == "k-shape") return Method::kshape;
    throw Error("unknown clustering method '" + std::string(s) + "' (expected dtw-kmeans or kshape)");
}

/// Each method is evaluated in its own geometry.
inline Measure measure_for(Method m) { return m == Method::dtw_kmeans ? Measure::dtw : Measure::sbd; }

enum class CentroidUpdate { dba, medoid };

inline std::string_view to_string(CentroidUpdate u) { return u == CentroidUpdate::dba ? "dba" : "medoid"; }

inline CentroidUpdate parse_centroid_update(std::string_view s) {
    if (s == "dba") return CentroidUpdate::dba;
    if (s == "medoid") return CentroidUpdate::medoid;
    throw Error("unknown centroid update '" + std::string(s) + "' (expected dba or medoid)");
}

/// Documented park-scale defaults (202 sensors, two concatenated months).
inline constexpr std::size_t kParkScaleDtwK = 16;
inline constexpr std::size_t kParkScaleKshapeK = 21;

struct ClusteringConfig {
    Method method = Method::kshape;
    std::size_t k = 2;
    std::size_t max_iter = 100;
    std::uint64_t seed = 0;
    /// Sakoe-Chiba radius for DTW; unconstrained when empty.
    std::optional<std::size_t> band;
    /// DBA refinement passes per centroid update.
    std::size_t dba_iter = 10;
    CentroidUpdate centroid_update = CentroidUpdate::dba;
    bool normalize = true;
    unsigned threads = 1;
    /// Independent restarts; the run with the lowest total
    /// sensor-to-centroid distance is kept.
    std::size_t n_init = 10;
};

struct ClusteringResult {
    ClusteringConfig config;
    std::vector<SensorId> sensors;
    /// Cluster index per sensor, in network order.
    std::vector<std::size_t> labels;
    /// One centroid per cluster; empty for empty clusters.
    std::vector<std::vector<double>> centroids;
    std::vector<std::size_t> occupancy;
    std::size_t iterations_run = 0;
    bool converged = false;
    /// Sum over sensors of the distance to their own centroid.
    double inertia = 0.0;

    std::size_t k() const { return occupancy.size(); }
    std::size_t empty_clusters() const {
        return static_cast<std::size_t>(std::count(occupancy.begin(), occupancy.end(), std::size_t{0}));
    }
    std::size_t min_occupancy() const {
        return occupancy.empty() ? 0 : *std::min_element(occupancy.begin(), occupancy.end());
    }

    std::optional<std::size_t> index_of(std::string_view id) const {
        for (std::size_t i = 0; i < sensors.size(); ++i)
            if (sensors[i].id == id) return i;
        return std::nullopt;
    }

    std::vector<std::size_t> members(std::size_t cluster) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cluster) out.push_back(i);
        return out;
    }
};

inline std::vector<std::size_t> occupancy_of(const std::vector<std::size_t>& labels, std::size_t k) {
    std::vector<std::size_t> occ(k, 0);
    for (auto l : labels) ++occ.at(l);
    return occ;
}

namespace detail {

/// Random partition with balanced sizes: shuffled sensors dealt round-robin.
inline std::vector<std::size_t> random_partition(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    std::vector<std::size_t> labels(n);
    for (std::size_t p = 0; p < n; ++p) labels[order[p]] = p % k;
    return labels;
}

inline double assignment_distance(Method method, std::span<const double> centroid, std::span<const double> x,
                                  std::optional<std::size_t> band) {
    return method == Method::dtw_kmeans ? dtw_distance(centroid, x, band) : sbd(centroid, x).distance;
}

/// Nearest non-empty centroid per series; ties to the lowest cluster index.
inline std::vector<std::size_t> assign(Method method, const std::vector<std::vector<double>>& series,
                                       const std::vector<std::vector<double>>& centroids,
                                       std::optional<std::size_t> band, unsigned threads,
                                       std::vector<double>& best_distance) {
    std::vector<std::size_t> labels(series.size(), 0);
    best_distance.assign(series.size(), 0.0);
    parallel_for(series.size(), threads, [&](std::size_t i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            if (centroids[c].empty()) continue;
            const double d = assignment_distance(method, centroids[c], series[i], band);
            if (d < best) {
                best = d;
                arg = c;
            }
        }
        labels[i] = arg;
        best_distance[i] = best;
    });
    return labels;
}

inline std::size_t medoid(const std::vector<std::size_t>& members, const Eigen::MatrixXd& dist) {
    std::size_t best = members.front();
    double best_sum = std::numeric_limits<double>::infinity();
    for (auto a : members) {
        double s = 0.0;
        for (auto b : members) s += dist(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (s < best_sum) {
            best_sum = s;
            best = a;
        }
    }
    return best;
}

}  // namespace detail

/// DTW barycenter averaging: each pass aligns every member to the current
/// average and replaces each average point by the mean of the member points
/// warped onto it. Member order is fixed, so the result is deterministic.
inline std::vector<double> dba(const std::vector<std::vector<double>>& members, std::vector<double> initial,
                               std::size_t iterations, std::optional<std::size_t> band = std::nullopt,
                               unsigned threads = 1) {
    if (members.empty()) throw Error("dba: no members");
    std::vector<double> centroid = std::move(initial);
    std::vector<WarpingPath> paths(members.size());
    for (std::size_t it = 0; it < iterations; ++it) {
        parallel_for(members.size(), threads, [&](std::size_t m) {
            // Band must admit the centroid/member length difference.
            std::optional<std::size_t> b = band;
            if (b) {
                const std::size_t diff = centroid.size() > members[m].size() ? centroid.size() - members[m].size()
                                                                             : members[m].size() - centroid.size();
                b = std::max(*b, diff);
            }
            paths[m] = dtw(centroid, members[m], b).path;
        });
        std::vector<double> sum(centroid.size(), 0.0);
        std::vector<std::size_t> count(centroid.size(), 0);
        for (std::size_t m = 0; m < members.size(); ++m) {
            for (const auto& step : paths[m]) {
                sum[step.i] += members[m][step.j];
                ++count[step.i];
            }
        }
        std::vector<double> next(centroid.size());
        for (std::size_t i = 0; i < centroid.size(); ++i) next[i] = sum[i] / static_cast<double>(count[i]);
        if (next == centroid) break;
        centroid = std::move(next);
    }
    return centroid;
}

/// K-shape centroid: the unit vector maximizing the summed squared
/// correlation with the members after aligning them to `reference`
/// (skipped when the reference is empty), z-normalized, with its sign
/// chosen to correlate positively with the members.
inline std::vector<double> shape_extraction(const std::vector<std::vector<double>>& members,
                                            const std::vector<double>& reference) {
    if (members.empty()) throw Error("shape_extraction: no members");
    const std::size_t m = members.front().size();
    const bool have_ref =
        !reference.empty() && std::any_of(reference.begin(), reference.end(), [](double v) { return v != 0.0; });

    Eigen::MatrixXd y(static_cast<Eigen::Index>(members.size()), static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < members.size(); ++r) {
        std::vector<double> row = members[r];
        if (have_ref) row = align_to(row, sbd(reference, row).shift);
        row = znormalize(std::span<const double>(row));
        for (std::size_t t = 0; t < m; ++t) y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = row[t];
    }
    // Centering operator Q = I - 11'/m applied on the time axis; the target
    // matrix is Q' Y'Y Q = A'A with A = YQ.
    Eigen::MatrixXd a = y.colwise() - y.rowwise().mean();

    Eigen::VectorXd v;
    if (a.rows() < a.cols()) {
        // Top right-singular vector of A via the small Gram matrix A A'.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a * a.transpose());
        const Eigen::VectorXd u = es.eigenvectors().col(es.eigenvectors().cols() - 1);
        v = a.transpose() * u;
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.transpose() * a);
        v = es.eigenvectors().col(es.eigenvectors().cols() - 1);
    }
    const double norm = v.norm();
    if (norm > 0) v /= norm;
    const double agreement = (y * v).sum();
    if (agreement < 0) v = -v;
    std::vector<double> out(v.data(), v.data() + v.size());
    return znormalize(std::span<const double>(out));
}

namespace detail {

inline void validate_config(const ClusteringConfig& cfg, std::size_t n) {
    if (cfg.k < 1) throw Error("clustering: k must be >= 1");
    if (cfg.k > n) {
        throw Error("clustering: k=" + std::to_string(cfg.k) + " exceeds the number of sensors (" +
                    std::to_string(n) + ")");
    }
    if (cfg.max_iter < 1) throw Error("clustering: max_iter must be >= 1");
    if (cfg.n_init < 1) throw Error("clustering: n_init must be >= 1");
}

inline std::vector<std::vector<double>> update_centroids(const ClusteringConfig& cfg,
                                                         const std::vector<std::vector<double>>& series,
                                                         const std::vector<std::size_t>& labels,
                                                         const std::vector<std::vector<double>>& previous,
                                                         const Eigen::MatrixXd* dist) {
    std::vector<std::vector<double>> centroids(cfg.k);
    for (std::size_t c = 0; c < cfg.k; ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) idx.push_back(i);
        if (idx.empty()) continue;
        std::vector<std::vector<double>> members;
        members.reserve(idx.size());
        for (auto i : idx) members.push_back(series[i]);
        if (cfg.method == Method::kshape) {
            centroids[c] = shape_extraction(members, previous[c]);
        } else {
            const auto start = series[medoid(idx, *dist)];
            centroids[c] = cfg.centroid_update == CentroidUpdate::dba
                               ? dba(members, start, cfg.dba_iter, cfg.band, cfg.threads)
                               : start;
        }
    }
    return centroids;
}

inline ClusteringResult run_once(const ClusteringConfig& cfg, const std::vector<std::vector<double>>& series,
                                 std::uint64_t seed, const Eigen::MatrixXd* dist) {
    Rng rng(seed);
    ClusteringResult r;
    r.config = cfg;
    r.labels = random_partition(series.size(), cfg.k, rng);
    r.centroids.assign(cfg.k, {});
    std::vector<double> best;
    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        r.centroids = update_centroids(cfg, series, r.labels, r.centroids, dist);
        auto next = assign(cfg.method, series, r.centroids, cfg.band, cfg.threads, best);
        r.iterations_run = it;
        if (next == r.labels) {
            r.converged = true;
            break;
        }
        r.labels = std::move(next);
    }
    if (!r.converged) {
        r.centroids = update_centroids(cfg, series, r.labels, r.centroids, dist);
        best.assign(series.size(), 0.0);
        for (std::size_t i = 0; i < series.size(); ++i)
            best[i] = assignment_distance(cfg.method, r.centroids[r.labels[i]], series[i], cfg.band);
    }
    r.occupancy = occupancy_of(r.labels, cfg.k);
    r.inertia = std::accumulate(best.begin(), best.end(), 0.0);
    return r;
}

inline ClusteringResult run(const SensorNetwork& network, const ClusteringConfig& cfg, Method expected,
                            const Eigen::MatrixXd* dist) {
    if (cfg.method != expected) throw Error("clustering: config.method does not match the requested algorithm");
    validate_config(cfg, network.size());
    const auto series = prepared_values(network, cfg.normalize);
    if (cfg.method == Method::kshape) {
        for (const auto& s : series)
            if (s.size() != series.front().size()) throw Error("kshape: all series must have equal length");
    }

    Eigen::MatrixXd own;
    if (cfg.method == Method::dtw_kmeans && !dist) {
        own = pairwise_matrix(series, Measure::dtw, cfg.band, cfg.threads);
        dist = &own;
    }
    if (dist && (static_cast<std::size_t>(dist->rows()) != series.size() || dist->rows() != dist->cols())) {
        throw Error("clustering: distance matrix does not match the network size");
    }

    ClusteringResult best;
    for (std::size_t restart = 0; restart < cfg.n_init; ++restart) {
        auto r = run_once(cfg, series, cfg.seed + 0x9E3779B97F4A7C15ULL * restart, dist);
        if (restart == 0 || r.inertia < best.inertia) best = std::move(r);
    }
    best.sensors = network.ids();
    return best;
}

}  // namespace detail

/// K-means under DTW. Centroids are DBA averages started from each cluster's
/// medoid (or the medoid itself with CentroidUpdate::medoid). `dtw_matrix`,
/// when given, must hold DTW distances between the prepared series and is
/// used for medoid selection; otherwise it is computed.
inline ClusteringResult dtw_kmeans(const SensorNetwork& network, const ClusteringConfig& config,
                                   const Eigen::MatrixXd* dtw_matrix = nullptr) {
    return detail::run(network, config, Method::dtw_kmeans, dtw_matrix);
}

/// K-shape: SBD assignment and shape-extraction centroids. Empty clusters
/// stay empty.
inline ClusteringResult kshape(const SensorNetwork& network, const ClusteringConfig& config) {
    return detail::run(network, config, Method::kshape, nullptr);
}

inline ClusteringResult cluster(const SensorNetwork& network, const ClusteringConfig& config,
                                const Eigen::MatrixXd* dtw_matrix = nullptr) {
    return config.method == Method::dtw_kmeans ? dtw_kmeans(network, config, dtw_matrix) : kshape(network, config);
}

// ---------------------------------------------------------------------------
// Silhouette

struct SilhouetteReport {
    /// s(i) per sensor, in matrix order.
    std::vector<double> per_sensor;
    double mean = 0.0;
    /// Mean s(i) per cluster index; nullopt for empty clusters.
    std::vector<std::optional<double>> per_cluster_mean;
};

/// s(i) = (b - a) / max(a, b), with a the mean distance to co-members and b
/// the smallest mean distance to another non-empty cluster. Members of
/// singleton clusters get 0.
inline SilhouetteReport silhouette(const std::vector<std::size_t>& labels, const Eigen::MatrixXd& dist) {
    const std::size_t n = labels.size();
    if (static_cast<std::size_t>(dist.rows()) != n || static_cast<std::size_t>(dist.cols()) != n) {
        throw Error("silhouette: distance matrix size does not match the number of labels");
    }
    if (n == 0) throw Error("silhouette: no points");
    const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
    const auto occ = occupancy_of(labels, k);
    const auto non_empty = std::count_if(occ.begin(), occ.end(), [](std::size_t c) { return c > 0; });
    if (non_empty < 2) throw Error("silhouette: at least 2 non-empty clusters are required");

    SilhouetteReport rep;
    rep.per_sensor.assign(n, 0.0);
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) sums[labels[j]] += dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        const std::size_t own = labels[i];
        if (occ[own] == 1) continue;
        const double a = sums[own] / static_cast<double>(occ[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c == own || occ[c] == 0) continue;
            b = std::min(b, sums[c] / static_cast<double>(occ[c]));
        }
        const double denom = std::max(a, b);
        rep.per_sensor[i] = denom > 0 ? (b - a) / denom : 0.0;
    }
    rep.mean = std::accumulate(rep.per_sensor.begin(), rep.per_sensor.end(), 0.0) / static_cast<double>(n);
    rep.per_cluster_mean.assign(k, std::nullopt);
    for (std::size_t c = 0; c < k; ++c) {
        if (occ[c] == 0) continue;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (labels[i] == c) s += rep.per_sensor[i];
        rep.per_cluster_mean[c] = s / static_cast<double>(occ[c]);
    }
    return rep;
}

inline SilhouetteReport silhouette(const SensorNetwork& network, const std::vector<std::size_t>& labels,
                                   const Eigen::MatrixXd& dist) {
    if (labels.size() != network.size()) throw Error("silhouette: labels do not match the network size");
    return silhouette(labels, dist);
}

// ---------------------------------------------------------------------------
// Cluster-count sweep

struct OccupancyConstraints {
    std::size_t min_size = 2;
};

struct SweepEntry {
    std::size_t k = 0;
    /// NaN when fewer than 2 clusters are non-empty.
    double mean_silhouette = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::size_t> occupancy;
    std::size_t min_occupancy = 0;
    std::size_t empty_clusters = 0;
    bool feasible = false;
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    std::size_t selected_k = 0;
    /// Clustering at the selected k.
    ClusteringResult selected;
};

inline std::string describe(const std::vector<SweepEntry>& entries) {
    std::ostringstream os;
    for (const auto& e : entries) {
        os << "\n  k=" << e.k << " silhouette=" << e.mean_silhouette << " min_occupancy=" << e.min_occupancy
           << " empty=" << e.empty_clusters << (e.feasible ? " feasible" : " infeasible");
    }
    return os.str();
}

/// Index of the feasible entry with the highest mean silhouette, ties to the
/// earlier entry.
inline std::optional<std::size_t> select_entry(const std::vector<SweepEntry>& entries) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].feasible && (!best || entries[i].mean_silhouette > entries[*best].mean_silhouette)) best = i;
    }
    return best;
}

/// Clusters for every k in [k_min, k_max] and picks the feasible k with the
/// highest mean silhouette (ties to the smaller k). A k is feasible when no
/// cluster is empty and every cluster has at least `min_size` members.
/// `base` supplies everything but k.
inline SweepResult sweep_k(const SensorNetwork& network, const ClusteringConfig& base, std::size_t k_min,
                           std::size_t k_max, OccupancyConstraints constraints = {}) {
    if (k_min < 2) throw Error("sweep_k: k_min must be >= 2");
    if (k_max > network.size()) {
        throw Error("sweep_k: k_max=" + std::to_string(k_max) + " exceeds the number of sensors (" +
                    std::to_string(network.size()) + ")");
    }
    if (k_min > k_max) throw Error("sweep_k: k_min must not exceed k_max");

    const auto series = prepared_values(network, base.normalize);
    const auto dist = pairwise_matrix(series, measure_for(base.method), base.band, base.threads);

    SweepResult out;
    std::vector<ClusteringResult> results;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        ClusteringConfig cfg = base;
        cfg.k = k;
        auto r = cluster(network, cfg, &dist);
        SweepEntry e;
        e.k = k;
        e.occupancy = r.occupancy;
        e.min_occupancy = r.min_occupancy();
        e.empty_clusters = r.empty_clusters();
        const auto non_empty = k - e.empty_clusters;
        if (non_empty >= 2) e.mean_silhouette = silhouette(r.labels, dist).mean;
        e.feasible = e.empty_clusters == 0 && e.min_occupancy >= constraints.min_size && non_empty >= 2;
        out.entries.push_back(std::move(e));
        results.push_back(std::move(r));
    }
    const auto best_index = select_entry(out.entries);
    if (!best_index) throw Error("sweep_k: no feasible k in [" + std::to_string(k_min) + ", " +
                                 std::to_string(k_max) + "]:" + describe(out.entries));
    out.selected_k = out.entries[*best_index].k;
    out.selected = std::move(results[*best_index]);
    return out;
}

// ---------------------------------------------------------------------------
// Agreement between labelings

/// Adjusted Rand index from the contingency table.
inline double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    if (a.size() != b.size()) throw Error("adjusted_rand_index: labelings differ in length");
    const std::size_t n = a.size();
    if (n < 2) return 1.0;
    const std::size_t ka = *std::max_element(a.begin(), a.end()) + 1;
    const std::size_t kb = *std::max_element(b.begin(), b.end()) + 1;
    std::vector<double> table(ka * kb, 0.0), rows(ka, 0.0), cols(kb, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        table[a[i] * kb + b[i]] += 1;
        rows[a[i]] += 1;
        cols[b[i]] += 1;
    }
    auto c2 = [](double x) { return x * (x - 1) / 2; };
    double index = 0, sa = 0, sb = 0;
    for (double v : table) index += c2(v);
    for (double v : rows) sa += c2(v);
    for (double v : cols) sb += c2(v);
    const double expected = sa * sb / c2(static_cast<double>(n));
    const double max_index = 0.5 * (sa + sb);
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

}  // namespace soilnet
