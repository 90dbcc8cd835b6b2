// soilnet: sensor-network clustering, imputation and robot-sampling pipeline.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <soilnet/io.hpp>
#include <soilnet/soilnet.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace soilnet;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kOutputDirEnv = "SOILNET_OUTPUT_DIR";

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open '" + p.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

/// Everything a subcommand may need. Sentinels mark unset values: 0 for k,
/// top_j and resample_to, -1 for band, empty strings for windows and times.
struct RunConfig {
    std::string config_path;
    std::string input;
    std::int64_t step = 60;
    std::string start;
    std::string end;
    std::int64_t resample_to = 0;
    std::size_t max_gap = kDefaultMaxGap;

    std::string method = "kshape";
    std::size_t k = 0;
    std::size_t k_min = 4;
    std::size_t k_max = 40;
    std::size_t min_size = 2;
    std::uint64_t seed = 0;
    std::int64_t band = -1;
    std::size_t max_iter = 100;
    std::size_t dba_iter = 10;
    std::size_t n_init = 10;
    std::string centroid_update = "dba";
    bool no_normalize = false;
    bool export_matrix = false;

    std::string clustering;
    std::vector<std::string> targets;
    std::size_t top_j = 0;
    std::string aggregation = "mean";
    std::string window;
    std::string train_window;
    std::size_t lag = 1;
    double threshold = kDefaultAnomalyThreshold;

    std::string schedule;
    std::vector<std::string> sensors;
    std::string path_kind = "circular";
    std::int64_t t_s = 120;
    std::int64_t offset = 0;
    bool stagger = false;
    std::string robot_id = "robot-1";
    std::string horizon;
    std::string reconstruction = "hold";

    std::string spec;
    std::size_t groups = 3;
    std::size_t sensors_per_group = 10;
    std::size_t length = 336;
    double noise = 0.05;
    std::int64_t max_shift = 6;
    double scale_lo = 0.5;
    double scale_hi = 2.0;

    std::string truth;
    std::string estimate;
    std::string base;
    std::string sensor;
    std::string label = "variant";
    std::string method_label = "Evaluation";
    double base_mean = 0.0;
    double base_std = 0.0;
    double variant_mean = 0.0;
    double variant_std = 0.0;

    std::string output_dir;
    unsigned threads = 1;
};

/// Options bound to RunConfig fields, so a JSON config can fill any option
/// the command line left unset.
class Binder {
public:
    Binder(CLI::App* app, RunConfig& cfg) : app_(app), cfg_(cfg) {
        app_->add_option("--config", cfg_.config_path, "JSON config file; command-line flags override it");
        app_->add_option("--output-dir,-o", cfg_.output_dir,
                         std::string("Output directory (default: $") + kOutputDirEnv + " or ./soilnet-out)");
        app_->add_option("--threads", cfg_.threads, "Worker threads; results do not depend on this")
            ->capture_default_str();
        app_->add_option("--seed", cfg_.seed, "Seed for all randomness")->capture_default_str();
    }

    template <typename T>
    CLI::Option* option(const std::string& flag, T& field, const std::string& help) {
        auto* opt = app_->add_option(flag, field, help)->capture_default_str();
        bind(opt, field);
        return opt;
    }

    CLI::Option* flag(const std::string& flag, bool& field, const std::string& help) {
        auto* opt = app_->add_flag(flag, field, help);
        bind(opt, field);
        return opt;
    }

    void apply_config() {
        if (cfg_.config_path.empty()) return;
        const json j = io::read_json(cfg_.config_path);
        for (auto& [opt, set] : bound_) {
            if (opt->count() == 0) set(j);
        }
        if (app_->get_option("--output-dir")->count() == 0 && j.contains("output_dir")) {
            cfg_.output_dir = j["output_dir"].get<std::string>();
        }
        if (app_->get_option("--threads")->count() == 0 && j.contains("threads")) cfg_.threads = j["threads"];
        if (app_->get_option("--seed")->count() == 0 && j.contains("seed")) cfg_.seed = j["seed"];
    }

    /// Effective settings for the manifest (output dir and threads excluded:
    /// they cannot change artifact contents).
    json effective(const RunConfig&) const { return effective_; }

    void snapshot() {
        effective_ = json::object();
        for (auto& [opt, get] : getters_) effective_[key_of(opt->get_name())] = get();
        effective_["seed"] = cfg_.seed;
    }

private:
    static std::string key_of(std::string name) {
        while (!name.empty() && name.front() == '-') name.erase(0, 1);
        std::replace(name.begin(), name.end(), '-', '_');
        return name;
    }

    template <typename T>
    void bind(CLI::Option* opt, T& field) {
        const std::string key = key_of(opt->get_name());
        bound_.emplace_back(opt, [&field, key](const json& j) {
            if (j.contains(key)) field = j[key].get<T>();
        });
        getters_.emplace_back(opt, [&field] { return json(field); });
    }

    CLI::App* app_;
    RunConfig& cfg_;
    std::vector<std::pair<CLI::Option*, std::function<void(const json&)>>> bound_;
    std::vector<std::pair<CLI::Option*, std::function<json()>>> getters_;
    json effective_;
};

/// Output directory plus manifest bookkeeping.
class Artifacts {
public:
    Artifacts(const RunConfig& cfg, std::string command) : command_(std::move(command)) {
        std::string dir = cfg.output_dir;
        if (dir.empty()) {
            const char* env = std::getenv(kOutputDirEnv);
            dir = env && *env ? env : "soilnet-out";
        }
        dir_ = dir;
        fs::create_directories(dir_);
    }

    const fs::path& dir() const { return dir_; }

    void write(const std::string& name, const std::string& content) {
        write_text(dir_ / name, content);
        files_[name] = content;
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    void add_input(const std::string& path) {
        if (path.empty()) return;
        inputs_.push_back({{"path", path}, {"fnv1a64", hex(fnv1a(read_file(path)))}});
    }

    void finish(const json& config) {
        json m;
        m["tool"] = "soilnet";
        m["version"] = kVersion;
        m["command"] = command_;
        m["inputs"] = inputs_;
        m["config"] = config;
        m["config_hash"] = hex(fnv1a(config.dump()));
        json arts = json::array();
        for (const auto& [name, content] : files_) {
            arts.push_back({{"name", name}, {"bytes", content.size()}, {"fnv1a64", hex(fnv1a(content))}});
        }
        m["artifacts"] = arts;
        write_text(dir_ / "manifest.json", m.dump(2) + "\n");
        std::cout << "wrote " << files_.size() + 1 << " artifact(s) to " << dir_.string() << "\n";
    }

private:
    std::string command_;
    fs::path dir_;
    json inputs_ = json::array();
    std::map<std::string, std::string> files_;
};

SlotRange parse_range(const std::string& text, std::size_t length, const char* what) {
    if (text.empty()) return {0, length};
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw Error(std::string(what) + " must be BEGIN:END slot indices");
    auto part = [&](std::string s, std::size_t fallback) -> std::size_t {
        if (s.empty()) return fallback;
        try {
            return static_cast<std::size_t>(std::stoull(s));
        } catch (...) {
            throw Error(std::string(what) + ": invalid slot index '" + s + "'");
        }
    };
    SlotRange r{part(text.substr(0, colon), 0), part(text.substr(colon + 1), length)};
    if (r.begin >= r.end || r.end > length) {
        throw Error(std::string(what) + " " + text + " is outside [0, " + std::to_string(length) + ")");
    }
    return r;
}

struct Loaded {
    SensorNetwork network;
    std::map<std::string, std::vector<SlotRange>> unfilled;
};

Loaded load_network(const RunConfig& cfg, const std::string& path) {
    if (path.empty()) throw Error("--input is required");
    std::ifstream in(path);
    if (!in) throw Error("cannot open input file '" + path + "'");
    const auto rows = parse_readings(in, path);
    TimeGrid grid = infer_grid(rows, cfg.step);
    Timestamp last = grid.time_at(grid.length - 1);
    if (!cfg.start.empty()) {
        const auto t = parse_timestamp(cfg.start);
        if (!t) throw Error("unparseable --start '" + cfg.start + "'");
        grid.start = *t;
    }
    if (!cfg.end.empty()) {
        const auto t = parse_timestamp(cfg.end);
        if (!t) throw Error("unparseable --end '" + cfg.end + "'");
        last = *t;
    }
    if (last <= grid.start) throw Error("grid end must come after the grid start");
    grid.length = static_cast<std::size_t>((last - grid.start) / grid.step_seconds()) + 1;
    SensorNetwork net = build_network(rows, grid);
    if (cfg.resample_to > 0) net = resample(net, cfg.resample_to);

    Loaded out;
    std::vector<SensorSeries> filled;
    for (const auto& s : net.series()) {
        if (s.present_count() == 0) {
            out.unfilled[s.sensor().id].push_back(SlotRange::whole(s.grid()));
            filled.push_back(s);
            continue;
        }
        auto f = fill_gaps(s, cfg.max_gap);
        if (!f.unfilled.empty()) out.unfilled[s.sensor().id] = f.unfilled;
        filled.push_back(std::move(f.series));
    }
    out.network = SensorNetwork(std::move(filled));
    return out;
}

void require_complete(const Loaded& data) {
    if (data.unfilled.empty()) return;
    std::string msg = "series still have gaps longer than --max-gap after filling:";
    for (const auto& [id, runs] : data.unfilled) {
        msg += " " + id + "[";
        for (std::size_t i = 0; i < runs.size(); ++i)
            msg += (i ? "," : "") + std::to_string(runs[i].begin) + ":" + std::to_string(runs[i].end);
        msg += "]";
    }
    throw Error(msg);
}

ClusteringConfig clustering_config(const RunConfig& cfg, std::size_t k) {
    ClusteringConfig c;
    c.method = parse_method(cfg.method);
    c.k = k;
    c.max_iter = cfg.max_iter;
    c.seed = cfg.seed;
    if (cfg.band >= 0) c.band = static_cast<std::size_t>(cfg.band);
    c.dba_iter = cfg.dba_iter;
    c.centroid_update = parse_centroid_update(cfg.centroid_update);
    c.normalize = !cfg.no_normalize;
    c.threads = std::max(1u, cfg.threads);
    c.n_init = cfg.n_init;
    return c;
}

void write_clustering(Artifacts& out, const ClusteringResult& r, const Eigen::MatrixXd& dist) {
    out.write("assignments.csv", io::assignments_csv(r));
    json j = io::to_json(r);
    if (r.k() - r.empty_clusters() >= 2) {
        const auto sil = silhouette(r.labels, dist);
        j["silhouette"] = io::to_json(sil, r.sensors);
        std::ostringstream os;
        os << "sensor_id,cluster,silhouette\n";
        for (std::size_t i = 0; i < r.sensors.size(); ++i)
            os << r.sensors[i].id << "," << r.labels[i] << "," << io::num(sil.per_sensor[i]) << "\n";
        out.write("silhouette.csv", os.str());
    } else {
        j["silhouette"] = nullptr;
    }
    out.write_json("clustering.json", j);
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_generate(const RunConfig& cfg, const json& effective) {
    SyntheticSpec spec;
    if (!cfg.spec.empty()) {
        spec = io::synthetic_spec_from_json(io::read_json(cfg.spec));
    } else {
        spec.groups = cfg.groups;
        spec.sensors_per_group = cfg.sensors_per_group;
        spec.length = cfg.length;
        spec.step_minutes = cfg.step;
        spec.noise_sigma = cfg.noise;
        spec.max_shift_slots = cfg.max_shift;
        spec.scale_lo = cfg.scale_lo;
        spec.scale_hi = cfg.scale_hi;
        spec.seed = cfg.seed;
    }
    const auto corpus = generate_synthetic(spec, spec.seed);
    Artifacts out(cfg, "gen-synthetic");
    out.add_input(cfg.spec);
    out.write("readings.csv", io::network_csv(corpus.network));
    std::ostringstream labels;
    labels << "sensor_id,group\n";
    for (std::size_t i = 0; i < corpus.network.size(); ++i)
        labels << corpus.network[i].sensor().id << "," << corpus.labels[i] << "\n";
    out.write("truth_labels.csv", labels.str());
    out.write_json("synthetic_spec.json", io::to_json(spec));
    out.finish(effective);
    return 0;
}

int cmd_cluster(const RunConfig& cfg, const json& effective) {
    const auto data = load_network(cfg, cfg.input);
    require_complete(data);
    const Method method = parse_method(cfg.method);
    const std::size_t k = cfg.k > 0 ? cfg.k : (method == Method::dtw_kmeans ? kParkScaleDtwK : kParkScaleKshapeK);
    const auto ccfg = clustering_config(cfg, k);
    const auto series = prepared_values(data.network, ccfg.normalize);
    const auto dist = pairwise_matrix(series, measure_for(method), ccfg.band, ccfg.threads);
    const auto result = cluster(data.network, ccfg, &dist);

    Artifacts out(cfg, "cluster");
    out.add_input(cfg.input);
    write_clustering(out, result, dist);
    if (cfg.export_matrix) out.write("distance_matrix.csv", io::matrix_csv(dist, data.network.ids()));
    out.finish(effective);
    std::cout << "k=" << k << " occupancy:";
    for (auto o : result.occupancy) std::cout << " " << o;
    std::cout << (result.converged ? " (converged)" : " (max_iter reached)") << "\n";
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const json& effective) {
    const auto data = load_network(cfg, cfg.input);
    require_complete(data);
    const auto base = clustering_config(cfg, cfg.k_min);
    const auto sweep = sweep_k(data.network, base, cfg.k_min, cfg.k_max, {cfg.min_size});

    Artifacts out(cfg, "sweep");
    out.add_input(cfg.input);
    out.write("sweep.csv", io::sweep_csv(sweep));
    out.write_json("sweep.json", io::to_json(sweep));
    const auto series = prepared_values(data.network, base.normalize);
    const auto dist = pairwise_matrix(series, measure_for(base.method), base.band, base.threads);
    write_clustering(out, sweep.selected, dist);
    out.finish(effective);
    std::cout << "selected k=" << sweep.selected_k << "\n";
    return 0;
}

/// Persistence-forecast errors against `truth` when the forecaster is fed
/// `feed`, over slots where everything needed is present.
std::vector<double> consumer_errors(const SensorSeries& truth, const SensorSeries& feed, std::size_t lag) {
    return paired_errors(truth, persistence_forecast(feed, lag), SlotRange{lag, truth.size()});
}

int cmd_impute(const RunConfig& cfg, const json& effective) {
    if (cfg.clustering.empty()) throw Error("--clustering is required (clustering.json from `cluster` or `sweep`)");
    if (cfg.targets.empty()) throw Error("--target is required");
    const auto data = load_network(cfg, cfg.input);
    const auto result = io::clustering_from_json(io::read_json(cfg.clustering));
    const auto window = parse_range(cfg.window, data.network.grid().length, "--window");
    std::optional<SlotRange> training;
    if (!cfg.train_window.empty()) training = parse_range(cfg.train_window, data.network.grid().length, "--train-window");
    const auto aggregation = parse_aggregation(cfg.aggregation);

    Artifacts out(cfg, "impute");
    out.add_input(cfg.input);
    out.add_input(cfg.clustering);
    std::vector<SensorSeries> imputed;
    std::vector<ComparisonRow> rows;
    json report = json::array();
    for (const auto& target : cfg.targets) {
        if (!result.index_of(target)) throw Error("target '" + target + "' is absent from the clustering result");
        const auto plan = plan_imputation(result, data.network, target,
                                          cfg.top_j > 0 ? std::optional<std::size_t>(cfg.top_j) : std::nullopt,
                                          aggregation, training);
        auto series = impute(plan, data.network, window);
        json entry = io::to_json(plan);
        if (data.network.index_of(target)) {
            const auto truth = data.network.at(target).slice(window);
            const auto recon = paired_errors(truth, series, SlotRange::whole(truth.grid()));
            const auto base_err = consumer_errors(truth, truth, cfg.lag);
            const auto var_err = consumer_errors(truth, series, cfg.lag);
            if (!recon.empty()) entry["reconstruction_mae"] = io::to_json(summarize(recon));
            if (!base_err.empty() && !var_err.empty()) {
                const auto row = compare(summarize(base_err), summarize(var_err),
                                         target + "/" + std::string(to_string(result.config.method)), "Clustering");
                entry["comparison"] = io::to_json(row);
                rows.push_back(row);
            }
        }
        report.push_back(entry);
        imputed.push_back(std::move(series));
    }
    out.write("imputed.csv", io::series_csv(imputed, true));
    out.write_json("imputation.json", {{"window", {window.begin, window.end}}, {"lag", cfg.lag}, {"targets", report}});
    if (!rows.empty()) {
        out.write("comparison.csv", comparison_csv(rows));
        out.write("comparison.txt", comparison_table(rows));
        out.write("mae_boxplot.svg", boxplot_svg(rows));
        out.write("mae_boxplot.csv", boxplot_csv(rows));
    }
    out.finish(effective);
    return 0;
}

int cmd_anomaly(const RunConfig& cfg, const json& effective) {
    if (cfg.clustering.empty()) throw Error("--clustering is required");
    const auto data = load_network(cfg, cfg.input);
    const auto result = io::clustering_from_json(io::read_json(cfg.clustering));
    const auto window = parse_range(cfg.window, data.network.grid().length, "--window");
    const auto report = detect_anomalies(result, data.network, window, cfg.threshold);

    Artifacts out(cfg, "anomaly");
    out.add_input(cfg.input);
    out.add_input(cfg.clustering);
    out.write_json("anomalies.json", io::to_json(report, data.network.grid()));
    out.finish(effective);
    std::cout << report.flagged.size() << " sensor(s) flagged\n";
    return 0;
}

int cmd_robot(const RunConfig& cfg, const json& effective) {
    const auto data = load_network(cfg, cfg.input);
    const auto& grid = data.network.grid();
    std::vector<RobotSchedule> schedules;
    if (!cfg.schedule.empty()) {
        schedules = io::schedules_from_json(io::read_json(cfg.schedule));
    } else {
        if (cfg.sensors.empty()) throw Error("either --schedule or --sensors is required");
        std::vector<SensorId> ids;
        for (const auto& s : cfg.sensors) ids.push_back(SensorId{s});
        schedules.push_back(build_schedule(std::move(ids), parse_path_kind(cfg.path_kind), cfg.t_s, cfg.offset,
                                           cfg.stagger, cfg.robot_id));
    }
    const auto horizon = parse_range(cfg.horizon, grid.length, "--horizon");
    const auto method = parse_reconstruction(cfg.reconstruction);
    const TimeGrid hgrid{grid.time_at(horizon.begin), grid.step_minutes, horizon.size()};

    Artifacts out(cfg, "robot-sim");
    out.add_input(cfg.input);
    out.add_input(cfg.schedule);
    std::vector<SampledSeries> all_samples;
    std::vector<SensorSeries> reconstructed;
    std::vector<ComparisonRow> rows;
    json robots = json::array();
    for (const auto& sched : schedules) {
        const auto sampled = simulate_collection(sched, data.network, horizon);
        json rj = io::to_json(sched);
        rj["unsampled"] = unsampled_sensors(sampled);
        std::vector<double> base_err, var_err, recon_err;
        for (const auto& s : sampled) {
            if (s.samples.empty()) continue;
            auto rec = reconstruct(s, hgrid, method);
            const auto truth = data.network.at(s.sensor.id).slice(horizon);
            auto r = paired_errors(truth, rec, SlotRange::whole(hgrid));
            recon_err.insert(recon_err.end(), r.begin(), r.end());
            auto b = consumer_errors(truth, truth, cfg.lag);
            auto v = consumer_errors(truth, rec, cfg.lag);
            base_err.insert(base_err.end(), b.begin(), b.end());
            var_err.insert(var_err.end(), v.begin(), v.end());
            reconstructed.push_back(std::move(rec));
        }
        if (!recon_err.empty()) rj["reconstruction_mae"] = io::to_json(summarize(recon_err));
        if (!base_err.empty() && !var_err.empty()) {
            std::string condition(to_string(sched.path_kind));
            condition[0] = static_cast<char>(std::toupper(condition[0]));
            if (schedules.size() > 1) condition += "/" + sched.robot_id;
            const auto row = compare(summarize(base_err), summarize(var_err), condition, "Robotic");
            rj["comparison"] = io::to_json(row);
            rows.push_back(row);
        }
        robots.push_back(rj);
        all_samples.insert(all_samples.end(), sampled.begin(), sampled.end());
    }
    if (reconstructed.empty()) throw Error("no scheduled sensor received any sample within the horizon");
    out.write("sampled.csv", io::sampled_csv(all_samples));
    out.write("reconstructed.csv", io::series_csv(reconstructed, true));
    out.write_json("robot.json", {{"horizon", {horizon.begin, horizon.end}},
                                  {"reconstruction", std::string(to_string(method))},
                                  {"lag", cfg.lag},
                                  {"robots", robots}});
    if (!rows.empty()) {
        out.write("comparison.csv", comparison_csv(rows));
        out.write("comparison.txt", comparison_table(rows));
        out.write("mae_boxplot.svg", boxplot_svg(rows));
        out.write("mae_boxplot.csv", boxplot_csv(rows));
    }
    out.finish(effective);
    for (const auto& r : rows) std::cout << r.label << ": " << render_percent(r) << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const json& effective) {
    Artifacts out(cfg, "evaluate");
    std::vector<ComparisonRow> rows;
    json report;
    if (cfg.truth.empty()) {
        if (!(cfg.base_mean > 0)) throw Error("either --truth/--estimate or --base-mean/--variant-mean is required");
        const auto row = compare(summary_from_moments(cfg.base_mean, cfg.base_std),
                                 summary_from_moments(cfg.variant_mean, cfg.variant_std), cfg.label, cfg.method_label);
        rows.push_back(row);
        report["comparison"] = io::to_json(row);
    } else {
        if (cfg.estimate.empty()) throw Error("--estimate is required with --truth");
        const auto truth = load_network(cfg, cfg.truth);
        out.add_input(cfg.truth);
        out.add_input(cfg.estimate);
        auto load_on = [&](const std::string& path) {
            std::ifstream in(path);
            if (!in) throw Error("cannot open '" + path + "'");
            auto net = build_network(parse_readings(in, path), truth.network.grid());
            return net;
        };
        const auto estimate = load_on(cfg.estimate);
        std::optional<SensorNetwork> base;
        if (!cfg.base.empty()) {
            base = load_on(cfg.base);
            out.add_input(cfg.base);
        }
        std::vector<double> est_err, base_err;
        json per = json::object();
        for (const auto& s : estimate.series()) {
            if (!cfg.sensor.empty() && s.sensor().id != cfg.sensor) continue;
            if (!truth.network.index_of(s.sensor().id)) continue;
            const auto& t = truth.network.at(s.sensor().id);
            auto e = paired_errors(t, s, SlotRange::whole(t.grid()));
            if (e.empty()) continue;
            per[s.sensor().id] = io::to_json(summarize(e));
            est_err.insert(est_err.end(), e.begin(), e.end());
            if (base && base->index_of(s.sensor().id)) {
                auto b = paired_errors(t, base->at(s.sensor().id), SlotRange::whole(t.grid()));
                base_err.insert(base_err.end(), b.begin(), b.end());
            }
        }
        if (est_err.empty()) throw Error("no overlapping present slots between truth and estimate");
        report["per_sensor"] = per;
        report["estimate"] = io::to_json(summarize(est_err));
        if (base) {
            if (base_err.empty()) throw Error("no overlapping present slots between truth and base");
            const auto row = compare(summarize(base_err), summarize(est_err), cfg.label, cfg.method_label);
            rows.push_back(row);
            report["comparison"] = io::to_json(row);
        }
    }
    out.write_json("evaluation.json", report);
    if (!rows.empty()) {
        out.write("comparison.csv", comparison_csv(rows));
        out.write("comparison.txt", comparison_table(rows));
        out.write("mae_boxplot.svg", boxplot_svg(rows));
        out.write("mae_boxplot.csv", boxplot_csv(rows));
        for (const auto& r : rows) std::cout << r.label << ": " << render_percent(r) << "\n";
    }
    out.finish(effective);
    return 0;
}

void add_data_options(Binder& b, RunConfig& cfg, bool with_input = true) {
    if (with_input) b.option("--input,-i", cfg.input, "Readings CSV (timestamp,sensor_id,value)");
    b.option("--step", cfg.step, "Grid step in minutes");
    b.option("--start", cfg.start, "Grid start (ISO-8601); default: earliest reading");
    b.option("--end", cfg.end, "Grid end (ISO-8601, inclusive); default: latest reading");
    b.option("--resample-to", cfg.resample_to, "Resample to this step in minutes (0 = off)");
    b.option("--max-gap", cfg.max_gap, "Longest gap run (slots) filled by interpolation");
}

void add_clustering_options(Binder& b, RunConfig& cfg) {
    b.option("--method", cfg.method, "dtw-kmeans or kshape")
        ->check(CLI::IsMember({"dtw-kmeans", "dtw_kmeans", "kshape", "k-shape"}));
    b.option("--band", cfg.band, "Sakoe-Chiba radius for DTW (-1 = unconstrained)");
    b.option("--max-iter", cfg.max_iter, "Maximum clustering iterations");
    b.option("--dba-iter", cfg.dba_iter, "DBA refinement passes per centroid update");
    b.option("--n-init", cfg.n_init, "Random restarts; lowest total centroid distance wins");
    b.option("--centroid-update", cfg.centroid_update, "dba or medoid (DTW-K-means)")
        ->check(CLI::IsMember({"dba", "medoid"}));
    b.flag("--no-normalize", cfg.no_normalize, "Measure distances on raw instead of z-normalized series");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"soilnet: soil-moisture sensor network clustering, imputation and robot-sampling emulation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    RunConfig cfg;
    std::vector<std::pair<CLI::App*, std::unique_ptr<Binder>>> subs;
    auto sub = [&](const char* name, const char* help) {
        auto* s = app.add_subcommand(name, help);
        subs.emplace_back(s, std::make_unique<Binder>(s, cfg));
        return std::pair<CLI::App*, Binder*>{s, subs.back().second.get()};
    };

    auto [gen, gb] = sub("gen-synthetic", "Generate a synthetic sensor corpus with ground-truth groups");
    gb->option("--spec", cfg.spec, "Synthetic spec JSON (overrides the shape flags below)");
    gb->option("--groups", cfg.groups, "Number of ground-truth groups");
    gb->option("--sensors-per-group", cfg.sensors_per_group, "Sensors per group");
    gb->option("--length", cfg.length, "Series length in slots");
    gb->option("--step", cfg.step, "Grid step in minutes");
    gb->option("--noise", cfg.noise, "Noise sigma as a fraction of the group waveform half-range");
    gb->option("--max-shift", cfg.max_shift, "Maximum per-sensor time shift in slots");
    gb->option("--scale-lo", cfg.scale_lo, "Lower bound of the per-sensor amplitude scale");
    gb->option("--scale-hi", cfg.scale_hi, "Upper bound of the per-sensor amplitude scale");

    auto [clu, cb] = sub("cluster", "Cluster sensors with a fixed k");
    add_data_options(*cb, cfg);
    add_clustering_options(*cb, cfg);
    cb->option("--k", cfg.k, "Number of clusters (0 = 16 for dtw-kmeans, 21 for kshape)");
    cb->flag("--export-matrix", cfg.export_matrix, "Also write the pairwise distance matrix CSV");

    auto [swp, sb] = sub("sweep", "Sweep k and select by silhouette subject to occupancy");
    add_data_options(*sb, cfg);
    add_clustering_options(*sb, cfg);
    sb->option("--k-min", cfg.k_min, "Smallest k");
    sb->option("--k-max", cfg.k_max, "Largest k");
    sb->option("--min-size", cfg.min_size, "Minimum members per cluster for a feasible k");

    auto [imp, ib] = sub("impute", "Reconstruct target sensors from their cluster mates");
    add_data_options(*ib, cfg);
    ib->option("--clustering", cfg.clustering, "clustering.json from cluster or sweep");
    ib->option("--target", cfg.targets, "Target sensor id (repeatable)");
    ib->option("--top-j", cfg.top_j, "Use only the j most similar donors (0 = all)");
    ib->option("--aggregation", cfg.aggregation, "mean or median")->check(CLI::IsMember({"mean", "median"}));
    ib->option("--window", cfg.window, "Imputation/evaluation slots BEGIN:END (default: all)");
    ib->option("--train-window", cfg.train_window, "Slots used to rank donors BEGIN:END (default: all)");
    ib->option("--lag", cfg.lag, "Persistence-forecast lag in slots for the comparison row");

    auto [ano, ab] = sub("anomaly", "Flag sensors that deviate from their cluster");
    add_data_options(*ab, cfg);
    ab->option("--clustering", cfg.clustering, "clustering.json from cluster or sweep");
    ab->option("--window", cfg.window, "Slots BEGIN:END to score (default: all)");
    ab->option("--threshold", cfg.threshold, "Robust z-score threshold");

    auto [rob, rb] = sub("robot-sim", "Emulate sequential robotic collection and score it");
    add_data_options(*rb, cfg);
    rb->option("--schedule", cfg.schedule, "Schedule JSON (sensors, path_kind, t_s_minutes, offset, stagger)");
    rb->option("--sensors", cfg.sensors, "Visit order when no --schedule is given")->delimiter(',');
    rb->option("--path-kind", cfg.path_kind, "linear or circular")->check(CLI::IsMember({"linear", "circular"}));
    rb->option("--t-s", cfg.t_s, "Minutes between consecutive collections");
    rb->option("--offset", cfg.offset, "Minutes from the horizon start to the first visit");
    rb->flag("--stagger", cfg.stagger, "Visit sensors sequentially instead of synchronized decimation");
    rb->option("--robot-id", cfg.robot_id, "Robot identifier for the sampled CSV");
    rb->option("--horizon", cfg.horizon, "Slots BEGIN:END to emulate (default: all)");
    rb->option("--reconstruction", cfg.reconstruction, "hold or linear")->check(CLI::IsMember({"hold", "linear"}));
    rb->option("--lag", cfg.lag, "Persistence-forecast lag in slots for the comparison row");

    auto [eva, eb] = sub("evaluate", "MAE summaries and base-vs-variant comparison rows");
    add_data_options(*eb, cfg, false);
    eb->option("--truth", cfg.truth, "Ground-truth readings CSV");
    eb->option("--estimate", cfg.estimate, "Estimated readings CSV");
    eb->option("--base", cfg.base, "Base estimate CSV for a comparison row");
    eb->option("--sensor", cfg.sensor, "Restrict to one sensor id");
    eb->option("--label", cfg.label, "Condition label for the comparison row");
    eb->option("--method-label", cfg.method_label, "Method label for the comparison row");
    eb->option("--base-mean", cfg.base_mean, "Base mean MAE (compare published figures directly)");
    eb->option("--base-std", cfg.base_std, "Base MAE std");
    eb->option("--variant-mean", cfg.variant_mean, "Variant mean MAE");
    eb->option("--variant-std", cfg.variant_std, "Variant MAE std");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        for (auto& [s, b] : subs) {
            if (!s->parsed()) continue;
            b->apply_config();
            b->snapshot();
            const json effective = b->effective(cfg);
            const std::string name = s->get_name();
            if (name == "gen-synthetic") return cmd_generate(cfg, effective);
            if (name == "cluster") return cmd_cluster(cfg, effective);
            if (name == "sweep") return cmd_sweep(cfg, effective);
            if (name == "impute") return cmd_impute(cfg, effective);
            if (name == "anomaly") return cmd_anomaly(cfg, effective);
            if (name == "robot-sim") return cmd_robot(cfg, effective);
            if (name == "evaluate") return cmd_evaluate(cfg, effective);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
