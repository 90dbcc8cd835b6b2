#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "data_model.hpp"
#include "error.hpp"

namespace soilnet {

/// Per-slot |truth - estimate| over `window`. Both series must share the
/// grid and be present on every slot of the window.
inline std::vector<double> mae(const SensorSeries& truth, const SensorSeries& estimate, SlotRange window) {
    if (truth.grid().start != estimate.grid().start || truth.grid().step_minutes != estimate.grid().step_minutes) {
        throw Error("mae: truth and estimate are on different grids");
    }
    if (window.end > truth.size() || window.end > estimate.size() || window.size() == 0) {
        throw Error("mae: window out of range");
    }
    std::vector<double> errors;
    errors.reserve(window.size());
    std::vector<std::size_t> absent;
    for (std::size_t s = window.begin; s < window.end; ++s) {
        if (!truth.present()[s] || !estimate.present()[s]) {
            absent.push_back(s);
            continue;
        }
        errors.push_back(std::abs(truth.values()[s] - estimate.values()[s]));
    }
    if (!absent.empty()) {
        std::string list;
        for (std::size_t i = 0; i < absent.size() && i < 20; ++i) list += (i ? "," : "") + std::to_string(absent[i]);
        if (absent.size() > 20) list += ",...";
        throw Error("mae: " + std::to_string(absent.size()) + " absent slot(s) in window: " + list);
    }
    return errors;
}

inline std::vector<double> mae(const SensorSeries& truth, const SensorSeries& estimate) {
    if (truth.size() != estimate.size()) {
        throw Error("mae: length mismatch (" + std::to_string(truth.size()) + " vs " + std::to_string(estimate.size()) +
                    ")");
    }
    return mae(truth, estimate, SlotRange::whole(truth.grid()));
}

/// Like mae() but skips slots where either series is absent.
inline std::vector<double> paired_errors(const SensorSeries& truth, const SensorSeries& estimate, SlotRange window) {
    if (truth.grid().start != estimate.grid().start || truth.grid().step_minutes != estimate.grid().step_minutes) {
        throw Error("paired_errors: truth and estimate are on different grids");
    }
    std::vector<double> errors;
    const std::size_t end = std::min({window.end, truth.size(), estimate.size()});
    for (std::size_t s = window.begin; s < end; ++s) {
        if (truth.present()[s] && estimate.present()[s]) errors.push_back(std::abs(truth.values()[s] - estimate.values()[s]));
    }
    return errors;
}

inline double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Box-plot summary. Quartiles interpolate linearly between closest ranks
/// (position q * (n - 1)); std is the population std; whiskers sit at
/// 1.5 IQR beyond the quartiles, clipped to the data range.
struct MaeSummary {
    double mean = 0.0;
    double std = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    std::size_t n = 0;
};

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

inline MaeSummary summarize(std::vector<double> errors) {
    if (errors.empty()) throw Error("summarize: no values");
    std::sort(errors.begin(), errors.end());
    MaeSummary s;
    s.n = errors.size();
    // Summing in sorted order keeps the result independent of input order.
    s.mean = mean_of(errors);
    double ss = 0.0;
    for (double e : errors) ss += (e - s.mean) * (e - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n));
    s.q1 = quantile_sorted(errors, 0.25);
    s.median = quantile_sorted(errors, 0.5);
    s.q3 = quantile_sorted(errors, 0.75);
    const double iqr = s.q3 - s.q1;
    s.whisker_low = std::max(s.q1 - 1.5 * iqr, errors.front());
    s.whisker_high = std::min(s.q3 + 1.5 * iqr, errors.back());
    return s;
}

/// Summary of a mean-only figure (e.g. a published mean ± std pair).
inline MaeSummary summary_from_moments(double mean, double std = 0.0) {
    MaeSummary s;
    s.mean = s.median = s.q1 = s.q3 = s.whisker_low = s.whisker_high = mean;
    s.std = std;
    s.n = 1;
    return s;
}

struct ComparisonRow {
    std::string method;
    std::string label;
    MaeSummary base;
    MaeSummary variant;
    /// 100 * (variant.mean - base.mean) / base.mean; negative is an improvement.
    double percent_change = 0.0;
};

inline ComparisonRow compare(const MaeSummary& base, const MaeSummary& variant, std::string label,
                             std::string method = "") {
    if (!(base.mean > 0.0)) throw Error("compare: base mean MAE must be > 0 for a relative change");
    return {std::move(method), std::move(label), base, variant, 100.0 * (variant.mean - base.mean) / base.mean};
}

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    // Values that round to zero print without a sign.
    if (s.front() == '-' && s.find_first_not_of("0.", 1) == std::string::npos) s.erase(0, 1);
    return s;
}

/// Signed percentage with one decimal, e.g. "+64.9%".
inline std::string render_percent(const ComparisonRow& row) {
    const std::string v = format_fixed(row.percent_change, 1);
    if (v == "0.0") return "0.0%";
    return (row.percent_change > 0 ? "+" : "") + v + "%";
}

inline std::string direction(const ComparisonRow& row) {
    const std::string v = format_fixed(row.percent_change, 1);
    if (v == "0.0") return "no change";
    return row.percent_change < 0 ? "decrease" : "increase";
}

/// "mean ± std" with two decimals.
inline std::string render_mae(const MaeSummary& s) {
    return format_fixed(s.mean, 2) + " ± " + format_fixed(s.std, 2);
}

/// Arrow and magnitude, e.g. "↑ 64.9%".
inline std::string render_change(const ComparisonRow& row) {
    const std::string mag = format_fixed(std::abs(row.percent_change), 1) + "%";
    const auto dir = direction(row);
    if (dir == "no change") return "0.0%";
    return (dir == "decrease" ? "↓ " : "↑ ") + mag;
}

inline constexpr const char* kComparisonCsvHeader =
    "method,condition,base_mae_mean,base_mae_std,variant_mae_mean,variant_mae_std,percent_change";

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    os << kComparisonCsvHeader << "\n";
    for (const auto& r : rows) {
        os << r.method << "," << r.label << "," << format_fixed(r.base.mean, 6) << "," << format_fixed(r.base.std, 6)
           << "," << format_fixed(r.variant.mean, 6) << "," << format_fixed(r.variant.std, 6) << ","
           << format_fixed(r.percent_change, 1) << "\n";
    }
    return os.str();
}

/// Plain-text table in the published layout.
inline std::string comparison_table(const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    os << "Method | Condition | Base MAE | MAE | Change\n";
    for (const auto& r : rows) {
        os << r.method << " | " << r.label << " | " << render_mae(r.base) << " | " << render_mae(r.variant) << " | "
           << render_change(r) << "\n";
    }
    return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

struct BoxplotFiles {
    std::filesystem::path csv;
    std::filesystem::path svg;
};

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Box plot of every row's base and variant summaries, in input order.
inline std::string boxplot_svg(const std::vector<ComparisonRow>& rows) {
    struct Box {
        std::string label;
        const MaeSummary* s;
    };
    std::vector<Box> boxes;
    for (const auto& r : rows) {
        boxes.push_back({r.label + " base", &r.base});
        boxes.push_back({r.label + " variant", &r.variant});
    }
    double lo = boxes.front().s->whisker_low, hi = boxes.front().s->whisker_high;
    for (const auto& b : boxes) {
        lo = std::min({lo, b.s->whisker_low, b.s->mean});
        hi = std::max({hi, b.s->whisker_high, b.s->mean});
    }
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    const double left = 60, top = 20, plot_h = 280, slot_w = 90;
    const double width = left + slot_w * static_cast<double>(boxes.size()) + 20;
    const double height = top + plot_h + 80;
    auto y = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };
    auto f = [](double v) { return format_fixed(v, 2); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f(width) << "\" height=\"" << f(height)
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << f(width) << "\" height=\"" << f(height) << "\" fill=\"white\"/>\n";
    os << "<line x1=\"" << f(left) << "\" y1=\"" << f(top) << "\" x2=\"" << f(left) << "\" y2=\"" << f(top + plot_h)
       << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        os << "<text x=\"" << f(left - 6) << "\" y=\"" << f(y(v) + 4) << "\" text-anchor=\"end\">"
           << format_fixed(v, 3) << "</text>\n";
        os << "<line x1=\"" << f(left - 3) << "\" y1=\"" << f(y(v)) << "\" x2=\"" << f(left) << "\" y2=\"" << f(y(v))
           << "\" stroke=\"black\"/>\n";
    }
    os << "<text x=\"14\" y=\"" << f(top + plot_h / 2) << "\" transform=\"rotate(-90 14 " << f(top + plot_h / 2)
       << ")\" text-anchor=\"middle\">MAE</text>\n";
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& s = *boxes[i].s;
        const double cx = left + slot_w * (static_cast<double>(i) + 0.5);
        const double bw = 36;
        const char* fill = i % 2 == 0 ? "#9ecae1" : "#fdae6b";
        os << "<g class=\"box\">\n";
        os << "<line x1=\"" << f(cx) << "\" y1=\"" << f(y(s.whisker_high)) << "\" x2=\"" << f(cx) << "\" y2=\""
           << f(y(s.q3)) << "\" stroke=\"black\"/>\n";
        os << "<line x1=\"" << f(cx) << "\" y1=\"" << f(y(s.q1)) << "\" x2=\"" << f(cx) << "\" y2=\""
           << f(y(s.whisker_low)) << "\" stroke=\"black\"/>\n";
        for (double w : {s.whisker_low, s.whisker_high}) {
            os << "<line x1=\"" << f(cx - bw / 4) << "\" y1=\"" << f(y(w)) << "\" x2=\"" << f(cx + bw / 4)
               << "\" y2=\"" << f(y(w)) << "\" stroke=\"black\"/>\n";
        }
        os << "<rect x=\"" << f(cx - bw / 2) << "\" y=\"" << f(y(s.q3)) << "\" width=\"" << f(bw) << "\" height=\""
           << f(std::max(y(s.q1) - y(s.q3), 0.5)) << "\" fill=\"" << fill << "\" stroke=\"black\"/>\n";
        os << "<line x1=\"" << f(cx - bw / 2) << "\" y1=\"" << f(y(s.median)) << "\" x2=\"" << f(cx + bw / 2)
           << "\" y2=\"" << f(y(s.median)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        os << "<circle cx=\"" << f(cx) << "\" cy=\"" << f(y(s.mean)) << "\" r=\"2.5\" fill=\"black\"/>\n";
        os << "<text x=\"" << f(cx) << "\" y=\"" << f(top + plot_h + 16) << "\" text-anchor=\"middle\">"
           << xml_escape(boxes[i].label) << "</text>\n";
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

inline std::string boxplot_csv(const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    os << "label,series,n,mean,std,median,q1,q3,whisker_low,whisker_high\n";
    auto line = [&](const std::string& label, const char* which, const MaeSummary& s) {
        os << label << "," << which << "," << s.n << "," << format_fixed(s.mean, 6) << "," << format_fixed(s.std, 6)
           << "," << format_fixed(s.median, 6) << "," << format_fixed(s.q1, 6) << "," << format_fixed(s.q3, 6) << ","
           << format_fixed(s.whisker_low, 6) << "," << format_fixed(s.whisker_high, 6) << "\n";
    };
    for (const auto& r : rows) {
        line(r.label, "base", r.base);
        line(r.label, "variant", r.variant);
    }
    return os.str();
}

/// Writes `svg_path` and a sibling .csv with the summary statistics.
inline BoxplotFiles emit_boxplot_data(const std::vector<ComparisonRow>& rows, const std::filesystem::path& svg_path) {
    if (rows.empty()) throw Error("emit_boxplot_data: no rows");
    BoxplotFiles files{svg_path, svg_path};
    files.csv.replace_extension(".csv");
    if (files.svg.extension() != ".svg") files.svg.replace_extension(".svg");
    if (files.svg.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(files.svg.parent_path(), ec);
    }
    write_text(files.svg, boxplot_svg(rows));
    write_text(files.csv, boxplot_csv(rows));
    return files;
}

/// Persistence estimate: the value observed `lag` slots earlier. The first
/// `lag` slots are absent. Used as a stand-in consumer when comparing a
/// base series with a degraded one.
inline SensorSeries persistence_forecast(const SensorSeries& series, std::size_t lag = 1) {
    const std::size_t n = series.size();
    std::vector<double> values(n, kAbsent);
    std::vector<bool> present(n, false);
    for (std::size_t s = lag; s < n; ++s) {
        if (series.present()[s - lag]) {
            values[s] = series.values()[s - lag];
            present[s] = true;
        }
    }
    return {series.sensor(), series.grid(), std::move(values), std::move(present), series.imputed()};
}

}  // namespace soilnet
