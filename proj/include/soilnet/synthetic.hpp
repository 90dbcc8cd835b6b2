#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <vector>

#include "data_model.hpp"
#include "random.hpp"

namespace soilnet {

/// Parameters for a synthetic soil-moisture corpus.
///
/// Each group has a base waveform: a baseline level, a daily sinusoid, a
/// slow drying/wetting sinusoid and an irrigation sawtooth whose period is
/// distinct per group. Each sensor draws a time shift and amplitude scale and
/// adds white noise whose sigma is `noise_sigma` times the group waveform's
/// half range (times the sensor's scale).
struct SyntheticSpec {
    std::size_t groups = 3;
    std::size_t sensors_per_group = 10;
    std::size_t length = 336;
    std::int64_t step_minutes = 60;
    double noise_sigma = 0.0;
    std::int64_t max_shift_slots = 0;
    double scale_lo = 1.0;
    double scale_hi = 1.0;
    std::uint64_t seed = 0;
    Timestamp start = 1680307200;  // 2023-04-01T00:00:00Z
};

struct SyntheticCorpus {
    SensorNetwork network;
    /// Ground-truth group index per sensor, in network order.
    std::vector<std::size_t> labels;
};

namespace detail {

struct GroupWaveform {
    double level;
    double daily_amp, daily_phase;
    double slow_amp, slow_period_h, slow_phase;
    double pulse_height, pulse_period_h, pulse_phase_h;

    double operator()(double t_hours) const {
        using std::numbers::pi;
        const double daily = daily_amp * std::sin(2.0 * pi * t_hours / 24.0 + daily_phase);
        const double slow = slow_amp * std::sin(2.0 * pi * t_hours / slow_period_h + slow_phase);
        double frac = std::fmod(t_hours - pulse_phase_h, pulse_period_h) / pulse_period_h;
        if (frac < 0) frac += 1.0;
        const double pulse = pulse_height * (1.0 - frac);
        return level + daily + slow + pulse;
    }
};

}  // namespace detail

inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.groups < 1) throw Error("generate_synthetic: groups must be >= 1");
    if (spec.sensors_per_group < 1) throw Error("generate_synthetic: sensors_per_group must be >= 1");
    if (spec.length < 2) throw Error("generate_synthetic: length must be >= 2");
    if (spec.step_minutes <= 0) throw Error("generate_synthetic: step_minutes must be positive");
    if (spec.noise_sigma < 0) throw Error("generate_synthetic: noise_sigma must be >= 0");
    if (spec.max_shift_slots < 0) throw Error("generate_synthetic: max_shift_slots must be >= 0");
    if (!(spec.scale_lo > 0) || spec.scale_hi < spec.scale_lo) {
        throw Error("generate_synthetic: scale range must satisfy 0 < lo <= hi");
    }

    Rng rng(seed);
    const double step_h = static_cast<double>(spec.step_minutes) / 60.0;
    const TimeGrid grid{spec.start, spec.step_minutes, spec.length};

    std::vector<detail::GroupWaveform> waves;
    std::vector<double> half_range;
    for (std::size_t g = 0; g < spec.groups; ++g) {
        detail::GroupWaveform w{};
        w.level = rng.uniform(20.0, 30.0);
        w.daily_amp = rng.uniform(0.5, 1.5);
        w.daily_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        w.slow_amp = rng.uniform(0.5, 2.0);
        w.slow_period_h = rng.uniform(72.0, 240.0);
        w.slow_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        w.pulse_height = rng.uniform(3.0, 6.0);
        w.pulse_period_h = 36.0 + 18.0 * static_cast<double>(g);
        w.pulse_phase_h = rng.uniform(0.0, w.pulse_period_h);
        double lo = w(0.0), hi = lo;
        for (std::size_t i = 0; i < spec.length; ++i) {
            const double v = w(static_cast<double>(i) * step_h);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        waves.push_back(w);
        half_range.push_back(0.5 * (hi - lo));
    }

    std::vector<SensorSeries> series;
    std::vector<std::size_t> labels;
    std::size_t index = 0;
    for (std::size_t g = 0; g < spec.groups; ++g) {
        for (std::size_t s = 0; s < spec.sensors_per_group; ++s, ++index) {
            const auto shift = rng.between(-spec.max_shift_slots, spec.max_shift_slots);
            const double scale = spec.scale_lo == spec.scale_hi ? spec.scale_lo : rng.uniform(spec.scale_lo, spec.scale_hi);
            const double sigma = spec.noise_sigma * half_range[g] * scale;
            std::vector<double> values(spec.length);
            for (std::size_t i = 0; i < spec.length; ++i) {
                const double t = (static_cast<double>(i) - static_cast<double>(shift)) * step_h;
                values[i] = scale * waves[g](t) + (sigma > 0 ? rng.normal(0.0, sigma) : 0.0);
            }
            char id[32];
            std::snprintf(id, sizeof id, "SENS%04zu-SM-SYN", index + 1);
            series.emplace_back(SensorId{id}, grid, std::move(values));
            labels.push_back(g);
        }
    }
    return {SensorNetwork(std::move(series)), std::move(labels)};
}

inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) { return generate_synthetic(spec, spec.seed); }

}  // namespace soilnet
