#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"
#include "time.hpp"

namespace soilnet {

enum class SensorKind { moisture, temperature, humidity };

struct SensorId {
    std::string id;
    SensorKind kind = SensorKind::moisture;

    friend bool operator==(const SensorId& a, const SensorId& b) { return a.id == b.id; }
    friend auto operator<=>(const SensorId& a, const SensorId& b) { return a.id <=> b.id; }
};

/// Uniform sampling grid: slot i is at start + i * step.
struct TimeGrid {
    Timestamp start = 0;
    std::int64_t step_minutes = 60;
    std::size_t length = 0;

    std::int64_t step_seconds() const { return step_minutes * kSecondsPerMinute; }
    Timestamp time_at(std::size_t slot) const {
        return start + static_cast<Timestamp>(slot) * step_seconds();
    }
    Timestamp end() const { return time_at(length); }

    void validate() const {
        if (step_minutes <= 0) throw Error("time grid step must be positive");
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Half-open range of grid slots [begin, end).
struct SlotRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end > begin ? end - begin : 0; }
    bool contains(std::size_t slot) const { return slot >= begin && slot < end; }

    static SlotRange whole(const TimeGrid& grid) { return {0, grid.length}; }

    friend bool operator==(const SlotRange&, const SlotRange&) = default;
};

inline constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

/// One sensor's readings on a uniform grid. Absent slots hold NaN.
class SensorSeries {
public:
    SensorSeries() = default;

    SensorSeries(SensorId sensor, TimeGrid grid, std::vector<double> values, std::vector<bool> present,
                 bool imputed = false)
        : sensor_(std::move(sensor)),
          grid_(grid),
          values_(std::move(values)),
          present_(std::move(present)),
          imputed_(imputed) {
        grid_.validate();
        if (values_.size() != grid_.length || present_.size() != grid_.length) {
            throw Error("series '" + sensor_.id + "': values/mask length does not match grid length");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!present_[i]) {
                values_[i] = kAbsent;
            } else if (!std::isfinite(values_[i])) {
                throw Error("series '" + sensor_.id + "': non-finite value at slot " + std::to_string(i));
            }
        }
    }

    /// Complete series: every slot present.
    SensorSeries(SensorId sensor, TimeGrid grid, std::vector<double> values, bool imputed = false)
        : SensorSeries(std::move(sensor), grid, values, std::vector<bool>(values.size(), true), imputed) {}

    const SensorId& sensor() const { return sensor_; }
    const TimeGrid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<bool>& present() const { return present_; }
    bool imputed() const { return imputed_; }
    std::size_t size() const { return values_.size(); }

    bool complete() const { return std::all_of(present_.begin(), present_.end(), [](bool p) { return p; }); }
    std::size_t present_count() const {
        return static_cast<std::size_t>(std::count(present_.begin(), present_.end(), true));
    }

    /// Values of a complete range; throws if any slot in it is absent.
    std::vector<double> complete_values(SlotRange range) const {
        if (range.end > size()) throw Error("series '" + sensor_.id + "': range exceeds series length");
        std::vector<double> out;
        out.reserve(range.size());
        for (std::size_t i = range.begin; i < range.end; ++i) {
            if (!present_[i]) {
                throw Error("series '" + sensor_.id + "' has a gap at slot " + std::to_string(i));
            }
            out.push_back(values_[i]);
        }
        return out;
    }
    std::vector<double> complete_values() const { return complete_values(SlotRange::whole(grid_)); }

    /// Sub-series over `range`, re-gridded to start at the range's first slot.
    SensorSeries slice(SlotRange range) const {
        if (range.end > size() || range.begin > range.end) {
            throw Error("series '" + sensor_.id + "': slice out of range");
        }
        TimeGrid g{grid_.time_at(range.begin), grid_.step_minutes, range.size()};
        std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(range.begin),
                              values_.begin() + static_cast<std::ptrdiff_t>(range.end));
        std::vector<bool> p(present_.begin() + static_cast<std::ptrdiff_t>(range.begin),
                            present_.begin() + static_cast<std::ptrdiff_t>(range.end));
        return {sensor_, g, std::move(v), std::move(p), imputed_};
    }

private:
    SensorId sensor_;
    TimeGrid grid_;
    std::vector<double> values_;
    std::vector<bool> present_;
    bool imputed_ = false;
};

/// Sensors sharing one grid. Ids are unique.
class SensorNetwork {
public:
    SensorNetwork() = default;

    explicit SensorNetwork(std::vector<SensorSeries> series) : series_(std::move(series)) {
        if (series_.empty()) throw Error("sensor network must contain at least one series");
        grid_ = series_.front().grid();
        std::vector<std::string> ids;
        ids.reserve(series_.size());
        for (const auto& s : series_) {
            if (s.sensor().id.empty()) throw Error("sensor id must be non-empty");
            if (!(s.grid() == grid_)) throw Error("series '" + s.sensor().id + "' is on a different time grid");
            ids.push_back(s.sensor().id);
        }
        std::sort(ids.begin(), ids.end());
        if (auto dup = std::adjacent_find(ids.begin(), ids.end()); dup != ids.end()) {
            throw Error("duplicate sensor id '" + *dup + "'");
        }
    }

    const std::vector<SensorSeries>& series() const { return series_; }
    const SensorSeries& operator[](std::size_t i) const { return series_[i]; }
    const TimeGrid& grid() const { return grid_; }
    std::size_t n_p() const { return series_.size(); }
    std::size_t size() const { return series_.size(); }

    std::optional<std::size_t> index_of(std::string_view id) const {
        for (std::size_t i = 0; i < series_.size(); ++i) {
            if (series_[i].sensor().id == id) return i;
        }
        return std::nullopt;
    }

    const SensorSeries& at(std::string_view id) const {
        auto i = index_of(id);
        if (!i) throw Error("sensor '" + std::string(id) + "' not found in network");
        return series_[*i];
    }

    std::vector<SensorId> ids() const {
        std::vector<SensorId> out;
        out.reserve(series_.size());
        for (const auto& s : series_) out.push_back(s.sensor());
        return out;
    }

private:
    std::vector<SensorSeries> series_;
    TimeGrid grid_;
};

// ---------------------------------------------------------------------------
// CSV ingest

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    for (;;) {
        const auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
        if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline bool is_missing_token(std::string_view s) {
    return s.empty() || s == "NaN" || s == "nan" || s == "NA" || s == "null";
}

}  // namespace detail

/// A single parsed CSV reading.
struct Reading {
    Timestamp time;
    std::string sensor_id;
    double value;
};

/// Parses `timestamp,sensor_id,value[,...]` rows. Extra columns are ignored;
/// empty/NaN values are treated as missing readings and skipped.
inline std::vector<Reading> parse_readings(std::istream& in, const std::string& source = "<stream>") {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw Error(source + ": empty input");
    ++line_no;
    const auto header = detail::split_csv_line(line);
    std::optional<std::size_t> ts_col, id_col, val_col;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "timestamp") ts_col = c;
        if (header[c] == "sensor_id") id_col = c;
        if (header[c] == "value") val_col = c;
    }
    if (!ts_col || !id_col || !val_col) {
        throw Error(source + ":1: header must contain timestamp,sensor_id,value");
    }
    const std::size_t needed = std::max({*ts_col, *id_col, *val_col}) + 1;

    std::vector<Reading> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        const auto where = source + ":" + std::to_string(line_no);
        if (fields.size() < needed) throw Error(where + ": expected at least " + std::to_string(needed) + " fields");
        const auto ts = parse_timestamp(fields[*ts_col]);
        if (!ts) throw Error(where + ": unparseable timestamp '" + std::string(fields[*ts_col]) + "'");
        if (fields[*id_col].empty()) throw Error(where + ": empty sensor_id");
        if (detail::is_missing_token(fields[*val_col])) continue;
        const auto v = detail::parse_double(fields[*val_col]);
        if (!v) throw Error(where + ": unparseable value '" + std::string(fields[*val_col]) + "'");
        rows.push_back({*ts, std::string(fields[*id_col]), *v});
    }
    return rows;
}

/// Snaps readings onto `grid`: nearest slot, ties to the earlier slot; readings
/// sharing a slot are averaged. Readings outside the grid are dropped.
/// Sensors are ordered by id.
inline SensorNetwork build_network(const std::vector<Reading>& rows, const TimeGrid& grid) {
    grid.validate();
    if (grid.length < 2) throw Error("time grid must have at least 2 slots");
    const std::int64_t step = grid.step_seconds();

    struct Acc {
        std::vector<double> sum;
        std::vector<std::size_t> count;
    };
    std::map<std::string, Acc> acc;
    std::size_t usable = 0;
    for (const auto& r : rows) {
        const std::int64_t offset = r.time - grid.start;
        // Floor division, then round to nearest with ties down.
        std::int64_t q = offset / step;
        std::int64_t rem = offset % step;
        if (rem < 0) {
            rem += step;
            --q;
        }
        if (2 * rem > step) ++q;
        if (q < 0 || q >= static_cast<std::int64_t>(grid.length)) continue;
        auto& a = acc[r.sensor_id];
        if (a.sum.empty()) {
            a.sum.assign(grid.length, 0.0);
            a.count.assign(grid.length, 0);
        }
        a.sum[static_cast<std::size_t>(q)] += r.value;
        a.count[static_cast<std::size_t>(q)] += 1;
        ++usable;
    }
    if (usable == 0) throw Error("no usable readings on the requested time grid");

    std::vector<SensorSeries> series;
    series.reserve(acc.size());
    for (auto& [id, a] : acc) {
        std::vector<double> values(grid.length, kAbsent);
        std::vector<bool> present(grid.length, false);
        for (std::size_t i = 0; i < grid.length; ++i) {
            if (a.count[i] > 0) {
                values[i] = a.sum[i] / static_cast<double>(a.count[i]);
                present[i] = true;
            }
        }
        series.emplace_back(SensorId{id}, grid, std::move(values), std::move(present));
    }
    return SensorNetwork(std::move(series));
}

/// Grid spanning all readings: starts at the earliest timestamp.
inline TimeGrid infer_grid(const std::vector<Reading>& rows, std::int64_t step_minutes) {
    if (rows.empty()) throw Error("no usable readings");
    if (step_minutes <= 0) throw Error("time grid step must be positive");
    auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(),
                                        [](const Reading& a, const Reading& b) { return a.time < b.time; });
    const std::int64_t step = step_minutes * kSecondsPerMinute;
    const std::int64_t span = hi->time - lo->time;
    // Last reading snaps to slot round(span/step), ties down.
    std::int64_t last = span / step;
    if (2 * (span % step) > step) ++last;
    return {lo->time, step_minutes, static_cast<std::size_t>(std::max<std::int64_t>(last + 1, 2))};
}

inline SensorNetwork ingest_csv(const std::string& path, const TimeGrid& grid) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open input file '" + path + "'");
    return build_network(parse_readings(in, path), grid);
}

/// Ingest with the grid inferred from the file's time span.
inline SensorNetwork ingest_csv(const std::string& path, std::int64_t step_minutes) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open input file '" + path + "'");
    const auto rows = parse_readings(in, path);
    return build_network(rows, infer_grid(rows, step_minutes));
}

// ---------------------------------------------------------------------------
// Series transforms

/// Window mean onto a coarser grid. The last window may be partial.
inline SensorSeries resample(const SensorSeries& series, std::int64_t target_step_minutes) {
    const auto& g = series.grid();
    if (target_step_minutes <= 0 || target_step_minutes % g.step_minutes != 0) {
        throw Error("resample: target step " + std::to_string(target_step_minutes) +
                    " min is not a multiple of source step " + std::to_string(g.step_minutes) + " min");
    }
    const auto ratio = static_cast<std::size_t>(target_step_minutes / g.step_minutes);
    const std::size_t out_len = (g.length + ratio - 1) / ratio;
    std::vector<double> values(out_len, kAbsent);
    std::vector<bool> present(out_len, false);
    for (std::size_t o = 0; o < out_len; ++o) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = o * ratio; i < std::min(g.length, (o + 1) * ratio); ++i) {
            if (series.present()[i]) {
                sum += series.values()[i];
                ++n;
            }
        }
        if (n > 0) {
            values[o] = sum / static_cast<double>(n);
            present[o] = true;
        }
    }
    return {series.sensor(), TimeGrid{g.start, target_step_minutes, out_len}, std::move(values),
            std::move(present), series.imputed()};
}

inline SensorNetwork resample(const SensorNetwork& network, std::int64_t target_step_minutes) {
    std::vector<SensorSeries> out;
    out.reserve(network.size());
    for (const auto& s : network.series()) out.push_back(resample(s, target_step_minutes));
    return SensorNetwork(std::move(out));
}

inline constexpr std::size_t kDefaultMaxGap = 4;

struct FillResult {
    SensorSeries series;
    /// Gap runs longer than max_gap, left absent.
    std::vector<SlotRange> unfilled;
};

/// Linear interpolation across interior gap runs of length <= max_gap and
/// nearest-value extension across leading/trailing runs of length <= max_gap.
/// Present values are never modified.
inline FillResult fill_gaps(const SensorSeries& series, std::size_t max_gap = kDefaultMaxGap) {
    const std::size_t n = series.size();
    if (series.present_count() == 0) throw Error("fill_gaps: series '" + series.sensor().id + "' has no present values");
    std::vector<double> values = series.values();
    std::vector<bool> present = series.present();
    std::vector<SlotRange> unfilled;

    std::size_t i = 0;
    while (i < n) {
        if (present[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !series.present()[j]) ++j;
        const SlotRange run{i, j};
        if (run.size() > max_gap) {
            unfilled.push_back(run);
        } else if (i == 0) {
            for (std::size_t k = i; k < j; ++k) values[k] = series.values()[j];
        } else if (j == n) {
            for (std::size_t k = i; k < j; ++k) values[k] = series.values()[i - 1];
        } else {
            const double lo = series.values()[i - 1];
            const double hi = series.values()[j];
            const double span = static_cast<double>(j - (i - 1));
            for (std::size_t k = i; k < j; ++k) {
                values[k] = lo + (hi - lo) * static_cast<double>(k - (i - 1)) / span;
            }
        }
        if (run.size() <= max_gap) {
            for (std::size_t k = i; k < j; ++k) present[k] = true;
        }
        i = j;
    }
    return {SensorSeries(series.sensor(), series.grid(), std::move(values), std::move(present), series.imputed()),
            std::move(unfilled)};
}

/// Mean 0, population std 1. Constant input maps to all zeros.
inline std::vector<double> znormalize(std::span<const double> x) {
    std::vector<double> out(x.size(), 0.0);
    if (x.empty()) return out;
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);
    const double scale = std::max(std::abs(mean), 1.0);
    if (!(sd > 1e-12 * scale)) return out;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / sd;
    return out;
}

inline SensorSeries znormalize(const SensorSeries& series) {
    if (!series.complete()) throw Error("znormalize: series '" + series.sensor().id + "' has gaps");
    return {series.sensor(), series.grid(), znormalize(std::span<const double>(series.values())), series.imputed()};
}

/// Appends b after a on a synthetic contiguous grid starting at a's start.
inline SensorSeries concat_periods(const SensorSeries& a, const SensorSeries& b) {
    if (!(a.sensor() == b.sensor())) {
        throw Error("concat_periods: sensor mismatch '" + a.sensor().id + "' vs '" + b.sensor().id + "'");
    }
    if (a.grid().step_minutes != b.grid().step_minutes) {
        throw Error("concat_periods: step mismatch (" + std::to_string(a.grid().step_minutes) + " vs " +
                    std::to_string(b.grid().step_minutes) + " min)");
    }
    std::vector<double> values = a.values();
    std::vector<bool> present = a.present();
    values.insert(values.end(), b.values().begin(), b.values().end());
    present.insert(present.end(), b.present().begin(), b.present().end());
    TimeGrid g{a.grid().start, a.grid().step_minutes, values.size()};
    return {a.sensor(), g, std::move(values), std::move(present), a.imputed() || b.imputed()};
}

/// Per-sensor concat of two networks with identical sensor sets.
inline SensorNetwork concat_periods(const SensorNetwork& a, const SensorNetwork& b) {
    std::vector<SensorSeries> out;
    out.reserve(a.size());
    for (const auto& s : a.series()) out.push_back(concat_periods(s, b.at(s.sensor().id)));
    if (a.size() != b.size()) throw Error("concat_periods: networks have different sensor sets");
    return SensorNetwork(std::move(out));
}

/// Complete value vectors, optionally z-normalized, in network order.
inline std::vector<std::vector<double>> prepared_values(const SensorNetwork& network, bool normalize) {
    std::vector<std::vector<double>> out;
    out.reserve(network.size());
    for (const auto& s : network.series()) {
        auto v = s.complete_values();
        out.push_back(normalize ? znormalize(std::span<const double>(v)) : std::move(v));
    }
    return out;
}

}  // namespace soilnet
