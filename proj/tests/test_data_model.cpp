#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include <soilnet/data_model.hpp>
#include <soilnet/synthetic.hpp>
#include <soilnet/time.hpp>

#include "oracles.hpp"

using namespace soilnet;

namespace {

SensorNetwork ingest_string(const std::string& csv, const TimeGrid& grid) {
    std::istringstream in(csv);
    return build_network(parse_readings(in, "mem.csv"), grid);
}

SensorSeries with_gaps(std::vector<double> v, std::vector<bool> present) {
    const auto n = v.size();
    return {SensorId{"G"}, fixture::grid(n), std::move(v), std::move(present)};
}

}  // namespace

TEST(Time, ParsesIsoVariants) {
    EXPECT_EQ(parse_timestamp("1970-01-01T00:00:00Z"), 0);
    EXPECT_EQ(parse_timestamp("1970-01-02"), 86400);
    EXPECT_EQ(parse_timestamp("2023-04-01 00:07"), 1680307620);
    EXPECT_EQ(parse_timestamp("2023-04-01T02:00:00+02:00"), 1680307200);
    EXPECT_EQ(parse_timestamp("2023-04-01T00:00:00.500Z"), 1680307200);
    EXPECT_FALSE(parse_timestamp("2023-13-01"));
    EXPECT_FALSE(parse_timestamp("yesterday"));
    EXPECT_EQ(format_timestamp(1680307200), "2023-04-01T00:00:00Z");
}

TEST(Ingest, CompleteInput) {
    const std::string csv =
        "timestamp,sensor_id,value\n"
        "2023-04-01T00:00:00Z,B,1\n2023-04-01T01:00:00Z,B,2\n2023-04-01T02:00:00Z,B,3\n2023-04-01T03:00:00Z,B,4\n"
        "2023-04-01T00:00:00Z,A,5\n2023-04-01T01:00:00Z,A,6\n2023-04-01T02:00:00Z,A,7\n2023-04-01T03:00:00Z,A,8\n";
    const auto net = ingest_string(csv, fixture::grid(4));
    ASSERT_EQ(net.n_p(), 2u);
    EXPECT_EQ(net[0].sensor().id, "A");
    EXPECT_TRUE(net[0].complete());
    EXPECT_TRUE(net[1].complete());
    EXPECT_EQ(net.at("B").values(), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Ingest, SnapsToNearestSlotTiesDown) {
    const auto net = ingest_string(
        "timestamp,sensor_id,value\n"
        "2023-04-01T00:07:00Z,A,1\n"
        "2023-04-01T00:22:30Z,A,2\n"
        "2023-04-01T00:36:00Z,A,3\n",
        fixture::grid(4, 15));
    const auto& s = net[0];
    EXPECT_EQ(s.values()[0], 1.0);
    EXPECT_EQ(s.values()[1], 2.0);
    EXPECT_EQ(s.values()[2], 3.0);
    EXPECT_FALSE(s.present()[3]);
}

TEST(Ingest, GapMarkedAbsent) {
    const auto net = ingest_string(
        "timestamp,sensor_id,value\n"
        "2023-04-01T00:00:00Z,A,1\n2023-04-01T01:00:00Z,A,2\n2023-04-01T02:00:00Z,A,3\n",
        fixture::grid(4));
    EXPECT_EQ(net[0].present(), (std::vector<bool>{true, true, true, false}));
    EXPECT_TRUE(std::isnan(net[0].values()[3]));
}

TEST(Ingest, DuplicatesAveraged) {
    const auto net = ingest_string(
        "sensor_id,value,timestamp\nA,1,2023-04-01T00:00:00Z\nA,3,2023-04-01T00:10:00Z\nA,9,2023-04-01T01:00:00Z\n",
        fixture::grid(2));
    EXPECT_EQ(net[0].values()[0], 2.0);
    EXPECT_EQ(net[0].values()[1], 9.0);
}

TEST(Ingest, ErrorsCarryLineNumber) {
    std::istringstream in("timestamp,sensor_id,value\n2023-04-01T00:00:00Z,A,1\nnot-a-time,A,2\n");
    try {
        parse_readings(in, "bad.csv");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("bad.csv:3"), std::string::npos) << e.what();
    }
}

TEST(Ingest, ZeroUsableRows) {
    EXPECT_THROW(ingest_string("timestamp,sensor_id,value\n2030-01-01T00:00:00Z,A,1\n", fixture::grid(4)), Error);
    std::istringstream empty("timestamp,sensor_id,value\n");
    EXPECT_THROW(build_network(parse_readings(empty), fixture::grid(4)), Error);
}

TEST(Ingest, MissingTokensSkipped) {
    const auto net = ingest_string("timestamp,sensor_id,value\n2023-04-01T00:00:00Z,A,NaN\n2023-04-01T01:00:00Z,A,4\n",
                                   fixture::grid(2));
    EXPECT_FALSE(net[0].present()[0]);
    EXPECT_TRUE(net[0].present()[1]);
}

TEST(Network, RejectsDuplicateIdsAndMismatchedGrids) {
    EXPECT_THROW(SensorNetwork({fixture::series("A", {1, 2}), fixture::series("A", {1, 2})}), Error);
    EXPECT_THROW(SensorNetwork({fixture::series("A", {1, 2}), fixture::series("B", {1, 2, 3})}), Error);
    EXPECT_THROW(SensorNetwork({fixture::series("", {1, 2})}), Error);
}

TEST(Series, AbsentSlotsHoldSentinel) {
    const auto s = with_gaps({1, 99, 3}, {true, false, true});
    EXPECT_TRUE(std::isnan(s.values()[1]));
    EXPECT_THROW(with_gaps({1, NAN, 3}, {true, true, true}), Error);
    EXPECT_THROW(s.complete_values(), Error);
}

TEST(Resample, Examples) {
    EXPECT_EQ(resample(fixture::series("A", {1, 1, 1, 1}, 15), 60).values(), (std::vector<double>{1}));
    EXPECT_EQ(resample(fixture::series("A", {1, 2, 3, 4}, 15), 60).values(), (std::vector<double>{2.5}));
    SensorSeries gappy{SensorId{"A"}, fixture::grid(8, 15), {1, 2, 3, 4, 0, 0, 0, 0},
                       {true, true, true, true, false, false, false, false}};
    const auto r = resample(gappy, 60);
    EXPECT_EQ(r.present(), (std::vector<bool>{true, false}));
    EXPECT_EQ(r.grid().step_minutes, 60);
    EXPECT_THROW(resample(fixture::series("A", {1, 2, 3, 4}, 15), 50), Error);
}

TEST(Resample, MeanOverPresentOnly) {
    SensorSeries s{SensorId{"A"}, fixture::grid(4, 15), {1, 0, 3, 0}, {true, false, true, false}};
    EXPECT_EQ(resample(s, 60).values()[0], 2.0);
}

TEST(FillGaps, Examples) {
    auto r = fill_gaps(with_gaps({1, 0, 3}, {true, false, true}), 1);
    EXPECT_EQ(r.series.values(), (std::vector<double>{1, 2, 3}));
    EXPECT_TRUE(r.unfilled.empty());

    r = fill_gaps(with_gaps({0, 5, 5}, {false, true, true}));
    EXPECT_EQ(r.series.values(), (std::vector<double>{5, 5, 5}));

    r = fill_gaps(with_gaps({1, 0, 0, 0, 5}, {true, false, false, false, true}), 2);
    EXPECT_FALSE(r.series.complete());
    ASSERT_EQ(r.unfilled.size(), 1u);
    EXPECT_EQ(r.unfilled[0], (SlotRange{1, 4}));

    EXPECT_THROW(fill_gaps(with_gaps({0, 0}, {false, false})), Error);
}

TEST(ZNormalize, Examples) {
    EXPECT_EQ(znormalize(std::vector<double>{2, 2, 2}), (std::vector<double>{0, 0, 0}));
    EXPECT_EQ(znormalize(std::vector<double>{0, 2}), (std::vector<double>{-1, 1}));
    const std::vector<double> x{3, 1, 4, 1, 5, 9, 2, 6};
    const auto z = znormalize(x);
    const auto zz = znormalize(z);
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(z[i], zz[i], 1e-12);
    EXPECT_THROW(znormalize(with_gaps({1, 0}, {true, false})), Error);
}

TEST(ConcatPeriods, Examples) {
    std::vector<double> april(720, 1.0), sept(720, 2.0);
    const auto c = concat_periods(fixture::series("A", april), fixture::series("A", sept));
    EXPECT_EQ(c.size(), 1440u);
    EXPECT_EQ(c.grid().start, fixture::grid(1).start);
    EXPECT_EQ(c.values()[720], 2.0);

    const auto x = fixture::series("A", {1, 2, 3});
    const SensorSeries empty{SensorId{"A"}, fixture::grid(0), {}};
    EXPECT_EQ(concat_periods(x, empty).values(), x.values());

    EXPECT_THROW(concat_periods(fixture::series("A", {1, 2}, 15), fixture::series("A", {1, 2}, 60)), Error);
    EXPECT_THROW(concat_periods(fixture::series("A", {1, 2}), fixture::series("B", {1, 2})), Error);
}

TEST(Synthetic, NoiselessGroupsIdenticalUpToShiftAndScale) {
    SyntheticSpec spec;
    spec.max_shift_slots = 4;
    spec.scale_lo = 0.5;
    spec.scale_hi = 2.0;
    const auto c = generate_synthetic(spec, 11);
    ASSERT_EQ(c.network.size(), 30u);
    ASSERT_EQ(c.labels.size(), 30u);
    for (std::size_t g = 0; g < 3; ++g) EXPECT_EQ(std::count(c.labels.begin(), c.labels.end(), g), 10);
    // Each member equals scale * reference shifted by some lag.
    for (std::size_t g = 0; g < 3; ++g) {
        const auto& ref = c.network[g * 10].values();
        for (std::size_t i = g * 10 + 1; i < g * 10 + 10; ++i) {
            const auto& v = c.network[i].values();
            bool matched = false;
            for (int d = -8; d <= 8 && !matched; ++d) {
                const double ratio = v[20] / ref[static_cast<std::size_t>(20 + d)];
                bool all = true;
                for (int t = 10; t < 320 && all; ++t)
                    all = std::abs(v[static_cast<std::size_t>(t)] - ratio * ref[static_cast<std::size_t>(t + d)]) <
                          1e-9 * std::abs(v[static_cast<std::size_t>(t)]);
                matched = all;
            }
            EXPECT_TRUE(matched) << "sensor " << i;
        }
    }
}

TEST(Synthetic, SameSeedBitIdentical) {
    SyntheticSpec spec;
    spec.noise_sigma = 0.1;
    spec.max_shift_slots = 5;
    const auto a = generate_synthetic(spec, 42);
    const auto b = generate_synthetic(spec, 42);
    const auto c = generate_synthetic(spec, 43);
    for (std::size_t i = 0; i < a.network.size(); ++i) EXPECT_EQ(a.network[i].values(), b.network[i].values());
    EXPECT_NE(a.network[0].values(), c.network[0].values());
}

TEST(Synthetic, SingleGroupAllIdentical) {
    SyntheticSpec spec;
    spec.groups = 1;
    const auto c = generate_synthetic(spec, 5);
    for (std::size_t i = 1; i < c.network.size(); ++i) EXPECT_EQ(c.network[i].values(), c.network[0].values());
    spec.groups = 0;
    EXPECT_THROW(generate_synthetic(spec, 5), Error);
}
