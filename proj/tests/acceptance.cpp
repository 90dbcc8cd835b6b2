// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <soilnet/soilnet.hpp>

#include "oracles.hpp"

#ifndef SOILNET_CLI
#error "SOILNET_CLI must name the soilnet executable"
#endif

using namespace soilnet;
namespace fs = std::filesystem;
using Vec = std::vector<double>;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Outcome {
    bool pass;
    std::string detail;
};

// AC1: unconstrained DTW agrees with exhaustive path enumeration.
Outcome dtw_oracle() {
    Rng rng(101);
    const auto t0 = Clock::now();
    double worst = 0;
    for (int p = 0; p < 500; ++p) {
        Vec x(1 + rng.below(8)), y(1 + rng.below(8));
        for (auto& v : x) v = rng.normal();
        for (auto& v : y) v = rng.normal();
        worst = std::max(worst, std::abs(dtw(x, y).distance - oracle::dtw_brute(x, y)));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-12 && secs < 10,
            "500 pairs, max |diff| = " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

// AC2: SBD identity, symmetry, scale invariance, range and pulse shift.
Outcome sbd_properties() {
    Rng rng(202);
    const auto t0 = Clock::now();
    std::vector<Vec> xs;
    for (int i = 0; i < 500; ++i) {
        Vec v(64);
        for (auto& e : v) e = rng.normal();
        xs.push_back(znormalize(std::span<const double>(v)));
    }
    std::size_t bad = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto& x = xs[i];
        const auto& y = xs[(i + 1) % xs.size()];
        if (sbd(x, x).distance > 1e-9) ++bad;
        const double d = sbd(x, y).distance;
        if (std::abs(d - sbd(y, x).distance) > 1e-9) ++bad;
        if (d < -1e-12 || d > 2 + 1e-12) ++bad;
        for (double a : {0.5, 2.0, 10.0}) {
            Vec s(x);
            for (auto& e : s) e *= a;
            if (std::abs(sbd(s, y).distance - d) > 1e-9) ++bad;
        }
    }
    for (std::int64_t w = -16; w <= 16; ++w) {
        Vec x(64, 0.0), y(64, 0.0);
        x[32] = 1.0;
        y[static_cast<std::size_t>(32 + w)] = 1.0;
        if (sbd(x, y).shift != w) ++bad;
    }
    const double secs = seconds_since(t0);
    return {bad == 0 && secs < 5,
            std::to_string(bad) + " violations over 500 series and 33 pulse shifts, " + fmt("%.2f", secs) + " s"};
}

// AC3: silhouette against the direct formula.
Outcome silhouette_oracle() {
    Rng rng(303);
    double worst = 0;
    for (int inst = 0; inst < 20; ++inst) {
        const std::size_t k = 2 + rng.below(3);
        const std::size_t n = k + 1 + rng.below(12 - k);
        std::vector<std::size_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = i < k ? i : rng.below(k);
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < d.rows(); ++i)
            for (Eigen::Index j = i + 1; j < d.cols(); ++j) d(i, j) = d(j, i) = rng.uniform(0.1, 5.0);
        const auto got = silhouette(labels, d);
        const auto want = oracle::silhouette(labels, d);
        double mean = 0;
        for (std::size_t i = 0; i < n; ++i) {
            worst = std::max(worst, std::abs(got.per_sensor[i] - want[i]));
            mean += want[i];
        }
        worst = std::max(worst, std::abs(got.mean - mean / static_cast<double>(n)));
    }
    return {worst <= 1e-9, "20 instances, max |diff| = " + fmt("%.3g", worst)};
}

SyntheticSpec planted(std::size_t groups, bool scaled) {
    SyntheticSpec s;
    s.groups = groups;
    s.sensors_per_group = 10;
    s.length = 336;
    s.noise_sigma = 0.05;
    s.max_shift_slots = 6;
    if (scaled) {
        s.scale_lo = 0.5;
        s.scale_hi = 2.0;
    }
    return s;
}

// AC4: both methods recover three planted groups.
Outcome planted_recovery() {
    std::string detail;
    bool pass = true;
    for (auto method : {Method::kshape, Method::dtw_kmeans}) {
        const bool scaled = method == Method::kshape;
        int hits = 0;
        double min_ari = 1;
        const auto t0 = Clock::now();
        for (std::uint64_t s = 0; s < 10; ++s) {
            const auto corpus = generate_synthetic(planted(3, scaled), 1000 + s);
            ClusteringConfig cfg;
            cfg.method = method;
            cfg.k = 3;
            cfg.seed = s;
            const auto r = cluster(corpus.network, cfg);
            const double a = adjusted_rand_index(r.labels, corpus.labels);
            min_ari = std::min(min_ari, a);
            if (a >= 0.9) ++hits;
        }
        const double secs = seconds_since(t0);
        pass = pass && hits >= 8 && secs < 120;
        detail += std::string(detail.empty() ? "" : "; ") + std::string(to_string(method)) + " " +
                  std::to_string(hits) + "/10 seeds ARI>=0.9 (min " + fmt("%.3f", min_ari) + "), " +
                  fmt("%.1f", secs) + " s";
    }
    return {pass, detail};
}

// AC5: the k sweep picks the planted group count and rejects empty clusters.
Outcome sweep_selection() {
    int hits = 0;
    std::size_t empty_feasible = 0;
    std::string picks;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto corpus = generate_synthetic(planted(5, true), 1000 + s);
        ClusteringConfig cfg;
        cfg.seed = s;
        const auto sw = sweep_k(corpus.network, cfg, 2, 10, {2});
        for (const auto& e : sw.entries)
            if (e.empty_clusters > 0 && e.feasible) ++empty_feasible;
        if (sw.selected_k == 5) ++hits;
        picks += (picks.empty() ? "" : ",") + std::to_string(sw.selected_k);
    }
    return {hits >= 8 && empty_feasible == 0, std::to_string(hits) + "/10 seeds selected k=5 (picks " + picks +
                                                  "), feasible entries with empty clusters: " +
                                                  std::to_string(empty_feasible)};
}

ClusteringResult one_cluster(const SensorNetwork& net) {
    ClusteringResult r;
    r.config.k = 1;
    r.config.method = Method::kshape;
    for (const auto& s : net.series()) {
        r.sensors.push_back(s.sensor());
        r.labels.push_back(0);
    }
    r.centroids = {net[0].values()};
    r.occupancy = {net.size()};
    return r;
}

// AC6: imputation from identical and from noisy donors.
Outcome imputation_accuracy() {
    Vec truth(200);
    for (std::size_t t = 0; t < truth.size(); ++t) truth[t] = std::sin(0.1 * static_cast<double>(t)) + 0.01 * static_cast<double>(t);
    const auto ident = fixture::network({truth, truth, truth, truth});
    const auto plan0 = plan_imputation(one_cluster(ident), ident, "S000");
    const double exact = mean_of(mae(ident[0], impute(plan0, ident)));

    const double sigma = 0.3;
    double total = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        std::vector<Vec> rows{truth};
        for (int d = 0; d < 4; ++d) {
            Vec v(truth);
            for (auto& e : v) e += rng.normal(0, sigma);
            rows.push_back(v);
        }
        const auto net = fixture::network(rows);
        const auto plan = plan_imputation(one_cluster(net), net, "S000");
        total += mean_of(mae(net[0], impute(plan, net)));
    }
    const double ratio = total / 100 / sigma;
    return {exact == 0.0 && ratio <= 0.55,
            "identical donors MAE = " + fmt("%g", exact) + ", noisy donors mean MAE = " + fmt("%.3f", ratio) + " sigma"};
}

SensorNetwork sinusoids(std::size_t sensors, std::size_t length, std::int64_t step) {
    std::vector<Vec> rows;
    for (std::size_t s = 0; s < sensors; ++s) {
        Vec v(length);
        for (std::size_t t = 0; t < length; ++t) {
            const double hours = static_cast<double>(t) * static_cast<double>(step) / 60.0;
            v[t] = 25 + 3 * std::sin(2 * std::numbers::pi * hours / 24.0 + 0.9 * static_cast<double>(s));
        }
        rows.push_back(v);
    }
    return fixture::network(rows, step);
}

std::vector<SensorId> first_ids(const SensorNetwork& net, std::size_t n) {
    std::vector<SensorId> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(net[i].sensor());
    return out;
}

Vec persistence_errors(const SensorSeries& truth, const SensorSeries& feed) {
    return paired_errors(truth, persistence_forecast(feed, 1), SlotRange{1, truth.size()});
}

// AC7: round time, identity sampling and monotone reconstruction error.
Outcome robot_sampling() {
    const auto net = sinusoids(12, 24 * 4 * 7, 15);
    std::size_t round_bad = 0;
    for (std::size_t n = 1; n <= 12; ++n)
        for (auto kind : {PathKind::circular, PathKind::linear})
            for (std::int64_t ts : {15, 30, 60, 120, 240})
                if (build_schedule(first_ids(net, n), kind, ts).round_minutes != static_cast<std::int64_t>(n) * ts)
                    ++round_bad;

    const auto whole = SlotRange::whole(net.grid());
    const auto id_sampled = simulate_collection(build_schedule(first_ids(net, 1), PathKind::circular, 15), net, whole);
    const auto id_rec = reconstruct(id_sampled[0], net.grid());
    const auto row = compare(summarize(persistence_errors(net[0], net[0])),
                             summarize(persistence_errors(net[0], id_rec)), "identity", "Robotic");
    const std::string identity = render_percent(row);

    bool monotone = true;
    std::string trace;
    for (auto method : {Reconstruction::hold, Reconstruction::linear}) {
        double previous = INFINITY;
        for (std::int64_t ts : {240, 120, 60, 30, 15}) {
            const auto sampled = simulate_collection(build_schedule(first_ids(net, 1), PathKind::circular, ts), net, whole);
            const double m = mean_of(mae(net[0], reconstruct(sampled[0], net.grid(), method)));
            if (m > previous) monotone = false;
            previous = m;
            if (method == Reconstruction::hold) trace += (trace.empty() ? "" : " ") + fmt("%.3f", m);
        }
    }
    return {round_bad == 0 && identity == "0.0%" && monotone,
            "round-time mismatches " + std::to_string(round_bad) + ", identity change " + identity +
                ", hold MAE over t_s 240..15: " + trace};
}

// AC8: rendered table rows and CSV layout.
Outcome reporting() {
    const auto a = compare(summary_from_moments(0.77), summary_from_moments(1.27), "S98", "K-shape");
    const auto b = compare(summary_from_moments(0.77), summary_from_moments(0.93), "S98", "DTW");
    const auto csv = comparison_csv({a, b});
    std::istringstream in(csv);
    std::string header, line;
    std::getline(in, header);
    bool cols = header == "method,condition,base_mae_mean,base_mae_std,variant_mae_mean,variant_mae_std,percent_change";
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        cols = cols && std::count(line.begin(), line.end(), ',') == 6;
    }
    const bool pass = render_percent(a) == "+64.9%" && render_percent(b) == "+20.8%" && cols && rows == 2;
    return {pass, render_percent(a) + ", " + render_percent(b) + ", csv columns " + (cols ? "ok" : "wrong")};
}

int shell(const std::string& cmd) {
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file() || e.path().filename() == "log.txt") continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        out[fs::relative(e.path(), root).string()] = os.str();
    }
    return out;
}

// AC9: the CLI pipeline is byte-for-byte reproducible across runs and thread counts.
Outcome pipeline_determinism() {
    const auto root = fs::temp_directory_path() / "soilnet_acceptance_pipeline";
    fs::remove_all(root);
    const std::string cli = "\"" SOILNET_CLI "\"";
    std::vector<std::string> runs{"run1_t1", "run2_t1", "run3_t8"};
    for (const auto& run : runs) {
        const auto dir = root / run;
        fs::create_directories(dir);
        const std::string threads = run.back() == '8' ? "8" : "1";
        const std::string t = " --threads " + threads;
        const std::string steps[] = {
            "gen-synthetic --groups 3 --sensors-per-group 6 --length 168 --noise 0.05 --max-shift 3 --seed 42 -o gen",
            "cluster -i gen/readings.csv --method kshape --k 3 --seed 7 -o cluster",
            "impute -i gen/readings.csv --clustering cluster/clustering.json --target SENS0001-SM-SYN -o impute",
            "robot-sim -i gen/readings.csv --sensors SENS0001-SM-SYN,SENS0002-SM-SYN,SENS0003-SM-SYN "
            "--path-kind linear --t-s 120 -o robot",
            "evaluate --truth gen/readings.csv --estimate robot/reconstructed.csv -o evaluate",
        };
        for (const auto& step : steps) {
            if (shell("cd \"" + dir.string() + "\" && " + cli + " " + step + t + " >> log.txt 2>&1") != 0)
                return {false, "step failed in " + run + ": " + step};
        }
    }
    const auto ref = tree(root / runs[0]);
    std::size_t mismatches = 0;
    for (std::size_t i = 1; i < runs.size(); ++i) {
        const auto other = tree(root / runs[i]);
        if (other.size() != ref.size()) ++mismatches;
        for (const auto& [name, bytes] : ref) {
            const auto it = other.find(name);
            if (it == other.end() || it->second != bytes) {
                ++mismatches;
                std::cerr << "  differs: " << runs[i] << "/" << name << "\n";
            }
        }
    }
    fs::remove_all(root);
    return {mismatches == 0 && ref.size() >= 20, std::to_string(ref.size()) + " artifacts compared across 3 runs, " +
                                                     std::to_string(mismatches) + " mismatches"};
}

// AC10: park-scale DTW distance matrix.
Outcome park_scale_matrix() {
    Rng rng(1010);
    std::vector<Vec> series;
    for (int i = 0; i < 202; ++i) series.push_back(znormalize(std::span<const double>(oracle::random_walk(rng, 1464))));
    const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    const auto t0 = Clock::now();
    const auto d = pairwise_matrix(series, Measure::dtw, 64, threads);
    const double secs = seconds_since(t0);
    const bool finite = d.allFinite() && d.isApprox(d.transpose());
    return {finite && secs < 300, "202 x 1464 with band 64 on " + std::to_string(threads) + " thread(s) in " +
                                      fmt("%.1f", secs) + " s"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"DTW matches exhaustive path search", dtw_oracle},
        {"SBD properties", sbd_properties},
        {"silhouette matches direct formula", silhouette_oracle},
        {"planted-group recovery", planted_recovery},
        {"k sweep selects planted count", sweep_selection},
        {"imputation accuracy", imputation_accuracy},
        {"robot sampling and reconstruction", robot_sampling},
        {"comparison reporting", reporting},
        {"CLI pipeline determinism", pipeline_determinism},
        {"park-scale DTW matrix", park_scale_matrix},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << ": " << criteria[i].first << " -- "
                  << o.detail << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
              << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
