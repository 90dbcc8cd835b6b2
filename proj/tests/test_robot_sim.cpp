#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <soilnet/evaluation.hpp>
#include <soilnet/robot_sim.hpp>

#include "oracles.hpp"

using namespace soilnet;

using Vec = std::vector<double>;

namespace {

std::vector<SensorId> ids(std::size_t n) {
    std::vector<SensorId> out;
    for (std::size_t i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "S%03zu", i);
        out.push_back(SensorId{id});
    }
    return out;
}

SensorNetwork sinusoid_network(std::size_t sensors, std::size_t length, std::int64_t step) {
    std::vector<Vec> rows;
    for (std::size_t s = 0; s < sensors; ++s) {
        Vec v(length);
        for (std::size_t t = 0; t < length; ++t) {
            const double hours = static_cast<double>(t) * static_cast<double>(step) / 60.0;
            v[t] = 25 + 3 * std::sin(2 * std::numbers::pi * hours / 24.0 + 0.7 * static_cast<double>(s));
        }
        rows.push_back(v);
    }
    return fixture::network(rows, step);
}

SampledSeries samples_at(const TimeGrid& g, std::vector<std::size_t> slots, Vec values) {
    SampledSeries s;
    s.sensor = SensorId{"X"};
    for (auto slot : slots) s.visit_times.push_back(g.time_at(slot));
    s.samples = std::move(values);
    return s;
}

}  // namespace

TEST(Schedule, RoundTime) {
    EXPECT_EQ(build_schedule(ids(6), PathKind::linear, 120).round_minutes, 720);
    EXPECT_EQ(build_schedule(ids(6), PathKind::circular, 120).n_s, 6u);
    EXPECT_EQ(build_schedule(ids(1), PathKind::circular, 15).round_minutes, 15);
    for (std::size_t n = 1; n <= 12; ++n)
        for (std::int64_t ts : {1, 15, 60, 120, 240})
            EXPECT_EQ(build_schedule(ids(n), PathKind::circular, ts).round_minutes, static_cast<std::int64_t>(n) * ts);
}

TEST(Schedule, Errors) {
    auto dup = ids(3);
    dup.push_back(dup[1]);
    EXPECT_THROW(build_schedule(dup, PathKind::linear, 120), Error);
    EXPECT_THROW(build_schedule({}, PathKind::linear, 120), Error);
    EXPECT_THROW(build_schedule(ids(2), PathKind::linear, 0), Error);
    EXPECT_EQ(parse_path_kind("linear"), PathKind::linear);
    EXPECT_THROW(parse_path_kind("spiral"), Error);
}

TEST(Simulate, GridStepSamplingIsIdentity) {
    const auto net = sinusoid_network(1, 96, 15);
    const auto sched = build_schedule(ids(1), PathKind::circular, 15);
    const auto sampled = simulate_collection(sched, net, SlotRange::whole(net.grid()));
    ASSERT_EQ(sampled.size(), 1u);
    EXPECT_EQ(sampled[0].samples, net[0].values());
    for (auto method : {Reconstruction::hold, Reconstruction::linear}) {
        const auto rec = reconstruct(sampled[0], net.grid(), method);
        EXPECT_EQ(rec.values(), net[0].values());
    }
}

TEST(Simulate, SingleSensorDecimates) {
    const auto net = sinusoid_network(1, 96, 15);
    const auto sampled = simulate_collection(build_schedule(ids(1), PathKind::circular, 60), net, {0, 96});
    ASSERT_EQ(sampled[0].samples.size(), 24u);
    for (std::size_t k = 0; k < 24; ++k) {
        EXPECT_EQ(sampled[0].samples[k], net[0].values()[4 * k]);
        EXPECT_EQ(sampled[0].visit_times[k], net.grid().time_at(4 * k));
    }
}

TEST(Simulate, SynchronizedDecimationByDefault) {
    const auto net = sinusoid_network(3, 48, 60);
    const auto sampled = simulate_collection(build_schedule(ids(3), PathKind::linear, 120), net, {0, 48});
    for (const auto& s : sampled) EXPECT_EQ(s.visit_times, sampled[0].visit_times);
}

TEST(Simulate, StaggeredCircularSpacingIsRoundTime) {
    const auto net = sinusoid_network(6, 24 * 14, 60);
    const auto sched = build_schedule(ids(6), PathKind::circular, 120, 0, true);
    const auto sampled = simulate_collection(sched, net, SlotRange::whole(net.grid()));
    std::vector<Timestamp> all;
    for (std::size_t p = 0; p < sampled.size(); ++p) {
        const auto& v = sampled[p].visit_times;
        ASSERT_GE(v.size(), 2u);
        EXPECT_EQ(v[0], net.grid().time_at(2 * p));
        for (std::size_t k = 1; k < v.size(); ++k) EXPECT_EQ(v[k] - v[k - 1], sched.round_minutes * 60);
        all.insert(all.end(), v.begin(), v.end());
    }
    std::sort(all.begin(), all.end());
    EXPECT_TRUE(std::adjacent_find(all.begin(), all.end()) == all.end()) << "robot is in one place at a time";
}

TEST(Simulate, StaggeredLinearVisitsEachSensorOncePerRound) {
    const auto net = sinusoid_network(4, 24 * 4, 60);
    const auto sched = build_schedule(ids(4), PathKind::linear, 60, 0, true);
    const auto sampled = simulate_collection(sched, net, SlotRange::whole(net.grid()));
    const std::int64_t round = sched.round_minutes * 60;
    for (const auto& s : sampled) {
        EXPECT_TRUE(std::is_sorted(s.visit_times.begin(), s.visit_times.end()));
        for (std::size_t k = 0; k < s.visit_times.size(); ++k) {
            EXPECT_EQ((s.visit_times[k] - net.grid().start) / round, static_cast<std::int64_t>(k));
        }
    }
    // Turnaround: the last sensor of round 0 is the first of round 1.
    EXPECT_EQ(sampled[3].visit_times[1] - sampled[3].visit_times[0], 60 * 60);
}

TEST(Simulate, ShortHorizonLeavesSensorsUnsampled) {
    const auto net = sinusoid_network(6, 48, 60);
    const auto sched = build_schedule(ids(6), PathKind::circular, 120, 0, true);
    const auto sampled = simulate_collection(sched, net, {0, 5});
    EXPECT_EQ(unsampled_sensors(sampled), (std::vector<std::string>{"S003", "S004", "S005"}));
    EXPECT_THROW(reconstruct(sampled[5], net.grid()), Error);
}

TEST(Simulate, TruncatedHorizonIsPrefix) {
    const auto net = sinusoid_network(4, 96, 60);
    for (bool stagger : {false, true}) {
        const auto sched = build_schedule(ids(4), PathKind::linear, 180, 60, stagger);
        const auto full = simulate_collection(sched, net, {0, 96});
        const auto part = simulate_collection(sched, net, {0, 50});
        for (std::size_t p = 0; p < 4; ++p) {
            ASSERT_LE(part[p].samples.size(), full[p].samples.size());
            for (std::size_t k = 0; k < part[p].samples.size(); ++k) {
                EXPECT_EQ(part[p].samples[k], full[p].samples[k]);
                EXPECT_EQ(part[p].visit_times[k], full[p].visit_times[k]);
            }
        }
    }
}

TEST(Simulate, Errors) {
    const auto net = sinusoid_network(2, 24, 60);
    EXPECT_THROW(simulate_collection(build_schedule(ids(2), PathKind::linear, 90), net, {0, 24}), Error);
    EXPECT_THROW(simulate_collection(build_schedule(ids(2), PathKind::linear, 120, 30), net, {0, 24}), Error);
    EXPECT_THROW(simulate_collection(build_schedule(ids(3), PathKind::linear, 120), net, {0, 24}), Error);
    EXPECT_THROW(simulate_collection(build_schedule(ids(2), PathKind::linear, 120), net, {0, 25}), Error);
}

TEST(Reconstruct, HoldAndLinear) {
    const auto g = fixture::grid(13);
    const auto s = samples_at(g, {0, 12}, {1.0, 3.0});
    const auto hold = reconstruct(s, g, Reconstruction::hold);
    for (std::size_t t = 1; t < 12; ++t) EXPECT_EQ(hold.values()[t], 1.0);
    EXPECT_EQ(hold.values()[12], 3.0);
    const auto lin = reconstruct(s, g, Reconstruction::linear);
    EXPECT_DOUBLE_EQ(lin.values()[6], 2.0);
    EXPECT_TRUE(lin.imputed());
}

TEST(Reconstruct, EdgesAbsentBeforeFirstHeldAfterLast) {
    const auto g = fixture::grid(10);
    const auto rec = reconstruct(samples_at(g, {3, 6}, {5.0, 7.0}), g, Reconstruction::linear);
    for (std::size_t t = 0; t < 3; ++t) EXPECT_FALSE(rec.present()[t]);
    for (std::size_t t = 6; t < 10; ++t) EXPECT_EQ(rec.values()[t], 7.0);
}

TEST(Reconstruct, ZeroSamplesIsAnError) {
    SampledSeries s;
    s.sensor = SensorId{"X"};
    EXPECT_THROW(reconstruct(s, fixture::grid(4)), Error);
}

TEST(Reconstruct, MaeShrinksWithShorterInterval) {
    const auto net = sinusoid_network(1, 24 * 4 * 7, 15);
    double previous = INFINITY;
    for (std::int64_t ts : {240, 120, 60, 30, 15}) {
        const auto sampled = simulate_collection(build_schedule(ids(1), PathKind::circular, ts), net,
                                                 SlotRange::whole(net.grid()));
        for (auto method : {Reconstruction::hold}) {
            const auto rec = reconstruct(sampled[0], net.grid(), method);
            const double m = mean_of(mae(net[0], rec));
            EXPECT_LE(m, previous) << "t_s=" << ts;
            previous = m;
        }
    }
    EXPECT_EQ(previous, 0.0);
}
