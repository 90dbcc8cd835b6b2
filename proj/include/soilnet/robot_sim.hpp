#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "data_model.hpp"
#include "error.hpp"

namespace soilnet {

enum class PathKind { linear, circular };

inline std::string_view to_string(PathKind p) { return p == PathKind::linear ? "linear" : "circular"; }

inline PathKind parse_path_kind(std::string_view s) {
    if (s == "linear") return PathKind::linear;
    if (s == "circular") return PathKind::circular;
    throw Error("unknown path kind '" + std::string(s) + "' (expected linear or circular)");
}

enum class Reconstruction { hold, linear };

inline std::string_view to_string(Reconstruction r) { return r == Reconstruction::hold ? "hold" : "linear"; }

inline Reconstruction parse_reconstruction(std::string_view s) {
    if (s == "hold") return Reconstruction::hold;
    if (s == "linear") return Reconstruction::linear;
    throw Error("unknown reconstruction '" + std::string(s) + "' (expected hold or linear)");
}

/// One robot's visiting plan over a group of sensors.
///
/// Round time is n_s * t_s. With `stagger` off every sensor is read at
/// offset + k * t_s (synchronized decimation). With `stagger` on the robot
/// visits the sensors one after another: on a circular path sensor p is read
/// at offset + p * t_s + k * T_r; on a linear path the robot reverses
/// direction each round, so every sensor is still read exactly once per
/// round.
struct RobotSchedule {
    std::vector<SensorId> group;
    PathKind path_kind = PathKind::circular;
    std::int64_t t_s_minutes = 120;
    std::size_t n_s = 0;
    std::int64_t round_minutes = 0;
    std::int64_t offset_minutes = 0;
    bool stagger = false;
    std::string robot_id = "robot-1";
};

inline RobotSchedule build_schedule(std::vector<SensorId> sensors, PathKind path_kind, std::int64_t t_s_minutes,
                                    std::int64_t offset_minutes = 0, bool stagger = false,
                                    std::string robot_id = "robot-1") {
    if (sensors.empty()) throw Error("build_schedule: sensor group is empty");
    if (t_s_minutes <= 0) throw Error("build_schedule: t_s must be positive");
    if (offset_minutes < 0) throw Error("build_schedule: offset must be >= 0");
    std::set<std::string> seen;
    for (const auto& s : sensors) {
        if (!seen.insert(s.id).second) throw Error("build_schedule: duplicate sensor '" + s.id + "'");
    }
    RobotSchedule r;
    r.n_s = sensors.size();
    r.group = std::move(sensors);
    r.path_kind = path_kind;
    r.t_s_minutes = t_s_minutes;
    r.round_minutes = static_cast<std::int64_t>(r.n_s) * t_s_minutes;
    r.offset_minutes = offset_minutes;
    r.stagger = stagger;
    r.robot_id = std::move(robot_id);
    return r;
}

struct SampledSeries {
    SensorId sensor;
    std::string robot_id;
    std::vector<Timestamp> visit_times;
    std::vector<double> samples;
    /// Visits that found the ground-truth slot absent.
    std::size_t missed_visits = 0;
};

namespace detail {

/// Visit times in minutes after the horizon start for the sensor at `position`.
inline std::vector<std::int64_t> visit_minutes(const RobotSchedule& s, std::size_t position, std::int64_t horizon) {
    std::vector<std::int64_t> out;
    if (!s.stagger) {
        for (std::int64_t t = s.offset_minutes; t < horizon; t += s.t_s_minutes) out.push_back(t);
        return out;
    }
    const auto p = static_cast<std::int64_t>(position);
    const auto last = static_cast<std::int64_t>(s.n_s) - 1;
    for (std::int64_t round = 0;; ++round) {
        std::int64_t pos = p;
        if (s.path_kind == PathKind::linear && round % 2 == 1) pos = last - p;
        const std::int64_t t = s.offset_minutes + round * s.round_minutes + pos * s.t_s_minutes;
        if (t >= horizon) break;
        out.push_back(t);
    }
    return out;
}

}  // namespace detail

/// Reads each scheduled sensor's ground truth at its visit times within
/// `horizon`. Sensors whose first visit falls after the horizon get no
/// samples.
inline std::vector<SampledSeries> simulate_collection(const RobotSchedule& schedule, const SensorNetwork& network,
                                                      SlotRange horizon) {
    const auto& g = network.grid();
    if (schedule.t_s_minutes % g.step_minutes != 0) {
        throw Error("simulate_collection: t_s=" + std::to_string(schedule.t_s_minutes) +
                    " min is not a multiple of the grid step (" + std::to_string(g.step_minutes) + " min)");
    }
    if (schedule.offset_minutes % g.step_minutes != 0) {
        throw Error("simulate_collection: offset is not a multiple of the grid step");
    }
    if (horizon.end > g.length || horizon.begin > horizon.end) throw Error("simulate_collection: horizon out of range");
    for (const auto& s : schedule.group) {
        if (!network.index_of(s.id)) throw Error("simulate_collection: sensor '" + s.id + "' is not in the network");
    }

    const std::int64_t horizon_minutes = static_cast<std::int64_t>(horizon.size()) * g.step_minutes;
    std::vector<SampledSeries> out;
    for (std::size_t p = 0; p < schedule.group.size(); ++p) {
        const auto& truth = network.at(schedule.group[p].id);
        SampledSeries ss;
        ss.sensor = schedule.group[p];
        ss.robot_id = schedule.robot_id;
        for (const auto t : detail::visit_minutes(schedule, p, horizon_minutes)) {
            const std::size_t slot = horizon.begin + static_cast<std::size_t>(t / g.step_minutes);
            if (!truth.present()[slot]) {
                ++ss.missed_visits;
                continue;
            }
            ss.visit_times.push_back(g.time_at(slot));
            ss.samples.push_back(truth.values()[slot]);
        }
        out.push_back(std::move(ss));
    }
    return out;
}

/// Ids of sensors that received no samples.
inline std::vector<std::string> unsampled_sensors(const std::vector<SampledSeries>& sampled) {
    std::vector<std::string> out;
    for (const auto& s : sampled)
        if (s.samples.empty()) out.push_back(s.sensor.id);
    return out;
}

/// Continuous series on `grid` from sparse samples. Slots before the first
/// sample are absent; after the last sample the value is held.
inline SensorSeries reconstruct(const SampledSeries& sampled, const TimeGrid& grid,
                                Reconstruction method = Reconstruction::hold) {
    if (sampled.samples.empty()) throw Error("reconstruct: sensor '" + sampled.sensor.id + "' has no samples");
    if (sampled.samples.size() != sampled.visit_times.size()) throw Error("reconstruct: sample/time count mismatch");
    const std::int64_t step = grid.step_seconds();
    std::vector<std::size_t> slots;
    std::vector<double> vals;
    for (std::size_t k = 0; k < sampled.samples.size(); ++k) {
        const std::int64_t off = sampled.visit_times[k] - grid.start;
        if (off % step != 0) throw Error("reconstruct: visit time is not on the target grid");
        if (off < 0 || off / step >= static_cast<std::int64_t>(grid.length)) continue;
        if (!slots.empty() && static_cast<std::size_t>(off / step) <= slots.back()) {
            throw Error("reconstruct: visit times must be strictly increasing");
        }
        slots.push_back(static_cast<std::size_t>(off / step));
        vals.push_back(sampled.samples[k]);
    }
    if (slots.empty()) throw Error("reconstruct: no samples fall on the target grid");

    std::vector<double> values(grid.length, kAbsent);
    std::vector<bool> present(grid.length, false);
    std::size_t k = 0;
    for (std::size_t s = slots.front(); s < grid.length; ++s) {
        while (k + 1 < slots.size() && slots[k + 1] <= s) ++k;
        double v = vals[k];
        if (method == Reconstruction::linear && k + 1 < slots.size() && s > slots[k]) {
            const double frac = static_cast<double>(s - slots[k]) / static_cast<double>(slots[k + 1] - slots[k]);
            v = vals[k] + (vals[k + 1] - vals[k]) * frac;
        }
        values[s] = v;
        present[s] = true;
    }
    return {sampled.sensor, grid, std::move(values), std::move(present), true};
}

}  // namespace soilnet
