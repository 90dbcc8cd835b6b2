#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "clustering.hpp"
#include "data_model.hpp"
#include "error.hpp"
#include "evaluation.hpp"
#include "imputation.hpp"
#include "robot_sim.hpp"
#include "synthetic.hpp"

namespace soilnet::io {

using nlohmann::json;

/// Shortest round-trip decimal form.
inline std::string num(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw Error("number formatting failed");
    return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// CSV

/// Readings in ingest format; absent slots are omitted. With `imputed_column`
/// an `imputed` column carries each series' imputed flag.
inline std::string series_csv(const std::vector<SensorSeries>& series, bool imputed_column = false) {
    std::ostringstream os;
    os << "timestamp,sensor_id,value" << (imputed_column ? ",imputed" : "") << "\n";
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s.present()[i]) continue;
            os << format_timestamp(s.grid().time_at(i)) << "," << s.sensor().id << "," << num(s.values()[i]);
            if (imputed_column) os << "," << (s.imputed() ? "true" : "false");
            os << "\n";
        }
    }
    return os.str();
}

inline std::string network_csv(const SensorNetwork& network) { return series_csv(network.series()); }

inline std::string assignments_csv(const ClusteringResult& r) {
    std::ostringstream os;
    os << "sensor_id,cluster\n";
    for (std::size_t i = 0; i < r.sensors.size(); ++i) os << r.sensors[i].id << "," << r.labels[i] << "\n";
    return os.str();
}

inline std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<SensorId>& ids) {
    std::ostringstream os;
    os << "sensor_id";
    for (const auto& id : ids) os << "," << id.id;
    os << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << ids[static_cast<std::size_t>(i)].id;
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << "," << num(m(i, j));
        os << "\n";
    }
    return os.str();
}

inline std::string sweep_csv(const SweepResult& s) {
    std::ostringstream os;
    os << "k,mean_silhouette,min_occupancy,empty_clusters,feasible\n";
    for (const auto& e : s.entries) {
        os << e.k << "," << (std::isnan(e.mean_silhouette) ? std::string("nan") : num(e.mean_silhouette)) << ","
           << e.min_occupancy << "," << e.empty_clusters << "," << (e.feasible ? "true" : "false") << "\n";
    }
    return os.str();
}

inline std::string sampled_csv(const std::vector<SampledSeries>& sampled) {
    std::ostringstream os;
    os << "timestamp,sensor_id,value,robot_id\n";
    for (const auto& s : sampled) {
        for (std::size_t k = 0; k < s.samples.size(); ++k) {
            os << format_timestamp(s.visit_times[k]) << "," << s.sensor.id << "," << num(s.samples[k]) << ","
               << s.robot_id << "\n";
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const ClusteringConfig& c) {
    json j;
    j["method"] = std::string(to_string(c.method));
    j["k"] = c.k;
    j["max_iter"] = c.max_iter;
    j["seed"] = c.seed;
    j["band"] = c.band ? json(*c.band) : json(nullptr);
    j["dba_iter"] = c.dba_iter;
    j["centroid_update"] = std::string(to_string(c.centroid_update));
    j["normalize"] = c.normalize;
    j["n_init"] = c.n_init;
    return j;
}

inline ClusteringConfig config_from_json(const json& j) {
    ClusteringConfig c;
    c.method = parse_method(j.at("method").get<std::string>());
    c.k = j.at("k").get<std::size_t>();
    c.max_iter = j.value("max_iter", c.max_iter);
    c.seed = j.value("seed", c.seed);
    if (j.contains("band") && !j["band"].is_null()) c.band = j["band"].get<std::size_t>();
    c.dba_iter = j.value("dba_iter", c.dba_iter);
    if (j.contains("centroid_update")) c.centroid_update = parse_centroid_update(j["centroid_update"].get<std::string>());
    c.normalize = j.value("normalize", c.normalize);
    c.n_init = j.value("n_init", c.n_init);
    return c;
}

inline json to_json(const SilhouetteReport& s, const std::vector<SensorId>& ids) {
    json j;
    j["mean"] = s.mean;
    json per = json::object();
    for (std::size_t i = 0; i < ids.size(); ++i) per[ids[i].id] = s.per_sensor[i];
    j["per_sensor"] = per;
    json pc = json::array();
    for (const auto& v : s.per_cluster_mean) pc.push_back(v ? json(*v) : json(nullptr));
    j["per_cluster_mean"] = pc;
    return j;
}

inline json to_json(const ClusteringResult& r) {
    json j;
    j["config"] = to_json(r.config);
    j["seed"] = r.config.seed;
    json labels = json::object();
    for (std::size_t i = 0; i < r.sensors.size(); ++i) labels[r.sensors[i].id] = r.labels[i];
    j["labels"] = labels;
    json order = json::array();
    for (const auto& s : r.sensors) order.push_back(s.id);
    j["sensor_order"] = order;
    j["occupancy"] = r.occupancy;
    j["iterations_run"] = r.iterations_run;
    j["converged"] = r.converged;
    j["inertia"] = r.inertia;
    j["centroids"] = r.centroids;
    return j;
}

inline ClusteringResult clustering_from_json(const json& j) {
    ClusteringResult r;
    r.config = config_from_json(j.at("config"));
    const auto& labels = j.at("labels");
    for (const auto& id : j.at("sensor_order")) {
        const auto name = id.get<std::string>();
        r.sensors.push_back(SensorId{name});
        r.labels.push_back(labels.at(name).get<std::size_t>());
    }
    r.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
    r.occupancy = occupancy_of(r.labels, r.config.k);
    r.iterations_run = j.value("iterations_run", std::size_t{0});
    r.converged = j.value("converged", false);
    r.inertia = j.value("inertia", 0.0);
    if (r.centroids.size() != r.config.k) throw Error("clustering result: centroid count does not match k");
    return r;
}

inline json to_json(const SweepResult& s) {
    json j;
    json entries = json::array();
    for (const auto& e : s.entries) {
        entries.push_back({{"k", e.k},
                           {"mean_silhouette", std::isnan(e.mean_silhouette) ? json(nullptr) : json(e.mean_silhouette)},
                           {"occupancy", e.occupancy},
                           {"min_occupancy", e.min_occupancy},
                           {"empty_clusters", e.empty_clusters},
                           {"feasible", e.feasible}});
    }
    j["entries"] = entries;
    j["selected_k"] = s.selected_k;
    return j;
}

inline json to_json(const ImputationPlan& p) {
    json j;
    j["target"] = p.target.id;
    j["cluster"] = p.cluster;
    j["aggregation"] = std::string(to_string(p.aggregation));
    json donors = json::array();
    for (std::size_t i = 0; i < p.donors.size(); ++i) {
        donors.push_back({{"sensor_id", p.donors[i].id}, {"distance", p.donor_distance[i]}});
    }
    j["donors"] = donors;
    return j;
}

inline json to_json(const AnomalyReport& a, const TimeGrid& grid) {
    json j;
    j["threshold"] = a.threshold;
    j["window"] = {{"begin_slot", a.window.begin},
                   {"end_slot", a.window.end},
                   {"begin", format_timestamp(grid.time_at(a.window.begin))},
                   {"end", format_timestamp(grid.time_at(a.window.end))}};
    j["scores"] = a.scores;
    j["distances"] = a.distances;
    j["flagged"] = a.flagged;
    j["skipped_clusters"] = a.skipped_clusters;
    return j;
}

inline SyntheticSpec synthetic_spec_from_json(const json& j) {
    SyntheticSpec s;
    s.groups = j.value("groups", s.groups);
    s.sensors_per_group = j.value("sensors_per_group", s.sensors_per_group);
    s.length = j.value("length", s.length);
    s.step_minutes = j.value("step_minutes", s.step_minutes);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.max_shift_slots = j.value("max_shift_slots", s.max_shift_slots);
    if (j.contains("scale_range")) {
        const auto& r = j["scale_range"];
        if (!r.is_array() || r.size() != 2) throw Error("synthetic spec: scale_range must be [lo, hi]");
        s.scale_lo = r[0].get<double>();
        s.scale_hi = r[1].get<double>();
    }
    s.seed = j.value("seed", s.seed);
    if (j.contains("start")) {
        const auto t = parse_timestamp(j["start"].get<std::string>());
        if (!t) throw Error("synthetic spec: unparseable start timestamp");
        s.start = *t;
    }
    return s;
}

inline json to_json(const SyntheticSpec& s) {
    return {{"groups", s.groups},
            {"sensors_per_group", s.sensors_per_group},
            {"length", s.length},
            {"step_minutes", s.step_minutes},
            {"noise_sigma", s.noise_sigma},
            {"max_shift_slots", s.max_shift_slots},
            {"scale_range", {s.scale_lo, s.scale_hi}},
            {"seed", s.seed},
            {"start", format_timestamp(s.start)}};
}

/// One schedule object, or `{"robots": [...]}` for several.
inline std::vector<RobotSchedule> schedules_from_json(const json& j) {
    auto one = [](const json& o, std::size_t index) {
        std::vector<SensorId> sensors;
        for (const auto& s : o.at("sensors")) sensors.push_back(SensorId{s.get<std::string>()});
        return build_schedule(std::move(sensors), parse_path_kind(o.value("path_kind", std::string("circular"))),
                              o.value("t_s_minutes", std::int64_t{120}), o.value("offset", std::int64_t{0}),
                              o.value("stagger", false),
                              o.value("robot_id", "robot-" + std::to_string(index + 1)));
    };
    std::vector<RobotSchedule> out;
    if (j.contains("robots")) {
        std::size_t i = 0;
        for (const auto& o : j["robots"]) out.push_back(one(o, i++));
    } else {
        out.push_back(one(j, 0));
    }
    if (out.empty()) throw Error("schedule spec: no robots");
    return out;
}

inline json to_json(const RobotSchedule& s) {
    json sensors = json::array();
    for (const auto& id : s.group) sensors.push_back(id.id);
    return {{"robot_id", s.robot_id},
            {"sensors", sensors},
            {"path_kind", std::string(to_string(s.path_kind))},
            {"t_s_minutes", s.t_s_minutes},
            {"n_s", s.n_s},
            {"round_minutes", s.round_minutes},
            {"offset", s.offset_minutes},
            {"stagger", s.stagger}};
}

inline json to_json(const MaeSummary& s) {
    return {{"mean", s.mean},   {"std", s.std}, {"median", s.median},           {"q1", s.q1},
            {"q3", s.q3},       {"n", s.n},     {"whisker_low", s.whisker_low}, {"whisker_high", s.whisker_high}};
}

inline json to_json(const ComparisonRow& r) {
    return {{"method", r.method},
            {"condition", r.label},
            {"base", to_json(r.base)},
            {"variant", to_json(r.variant)},
            {"percent_change", r.percent_change},
            {"rendered", render_percent(r)},
            {"direction", direction(r)}};
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("invalid JSON in '" + path.string() + "': " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace soilnet::io
