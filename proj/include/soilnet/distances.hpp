#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "data_model.hpp"
#include "error.hpp"
#include "parallel.hpp"

namespace soilnet {

enum class Measure { dtw, sbd };

inline std::string_view to_string(Measure m) { return m == Measure::dtw ? "dtw" : "sbd"; }

inline Measure parse_measure(std::string_view s) {
    if (s == "dtw") return Measure::dtw;
    if (s == "sbd") return Measure::sbd;
    throw Error("unknown distance measure '" + std::string(s) + "' (expected dtw or sbd)");
}

// ---------------------------------------------------------------------------
// Dynamic time warping

struct PathStep {
    std::size_t i;
    std::size_t j;
    friend bool operator==(const PathStep&, const PathStep&) = default;
};

/// Monotone alignment from (0,0) to (len(x)-1, len(y)-1).
using WarpingPath = std::vector<PathStep>;

struct DtwResult {
    double distance = 0.0;
    WarpingPath path;
};

namespace detail {

inline void check_dtw_inputs(std::span<const double> x, std::span<const double> y, std::optional<std::size_t> band) {
    if (x.empty() || y.empty()) throw Error("dtw: input sequences must be non-empty");
    const std::size_t diff = x.size() > y.size() ? x.size() - y.size() : y.size() - x.size();
    if (band && *band < diff) {
        throw Error("dtw: band radius " + std::to_string(*band) + " is narrower than the length difference " +
                    std::to_string(diff) + "; no warping path exists");
    }
}

inline std::size_t band_lo(std::size_t i, std::optional<std::size_t> band) {
    return band && i > *band ? i - *band : 0;
}

inline std::size_t band_hi(std::size_t i, std::size_t m, std::optional<std::size_t> band) {
    return band ? std::min(m - 1, i + *band) : m - 1;
}

}  // namespace detail

/// DTW distance sqrt(min over paths of sum (x_i - y_j)^2) with the optimal path.
///
/// Steps are {(1,0),(0,1),(1,1)} with unit weights. `band` is a Sakoe-Chiba
/// radius on |i - j|. Backtracking prefers the diagonal, then the
/// i-decrement, then the j-decrement.
inline DtwResult dtw(std::span<const double> x, std::span<const double> y,
                     std::optional<std::size_t> band = std::nullopt) {
    detail::check_dtw_inputs(x, y, band);
    const std::size_t n = x.size(), m = y.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> acc(n * m, inf);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return acc[i * m + j]; };

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = detail::band_lo(i, band), hi = detail::band_hi(i, m, band);
        for (std::size_t j = lo; j <= hi; ++j) {
            const double d = x[i] - y[j];
            const double c = d * d;
            if (i == 0 && j == 0) {
                at(i, j) = c;
                continue;
            }
            double best = inf;
            if (i > 0 && j > 0) best = at(i - 1, j - 1);
            if (i > 0) best = std::min(best, at(i - 1, j));
            if (j > 0) best = std::min(best, at(i, j - 1));
            at(i, j) = best + c;
        }
    }

    DtwResult result;
    result.distance = std::sqrt(at(n - 1, m - 1));
    std::size_t i = n - 1, j = m - 1;
    result.path.push_back({i, j});
    while (i > 0 || j > 0) {
        if (i == 0) {
            --j;
        } else if (j == 0) {
            --i;
        } else {
            const double diag = at(i - 1, j - 1), up = at(i - 1, j), left = at(i, j - 1);
            if (diag <= up && diag <= left) {
                --i;
                --j;
            } else if (up <= left) {
                --i;
            } else {
                --j;
            }
        }
        result.path.push_back({i, j});
    }
    std::reverse(result.path.begin(), result.path.end());
    return result;
}

/// DTW distance only, O(len(y)) memory. Bit-identical to dtw().distance.
inline double dtw_distance(std::span<const double> x, std::span<const double> y,
                           std::optional<std::size_t> band = std::nullopt) {
    detail::check_dtw_inputs(x, y, band);
    const std::size_t n = x.size(), m = y.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m, inf), cur(m, inf);

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = detail::band_lo(i, band), hi = detail::band_hi(i, m, band);
        const double xi = x[i];
        for (std::size_t j = lo; j <= hi; ++j) {
            const double d = xi - y[j];
            const double c = d * d;
            if (i == 0 && j == 0) {
                cur[j] = c;
                continue;
            }
            double best = inf;
            if (i > 0) {
                if (j > 0) best = prev[j - 1];
                best = std::min(best, prev[j]);
            }
            if (j > lo) best = std::min(best, cur[j - 1]);
            cur[j] = best + c;
        }
        if (i + 1 < n) {
            // Cells outside this row's band must read as infinity from the next row.
            for (std::size_t j = 0; j < lo; ++j) cur[j] = inf;
            for (std::size_t j = hi + 1; j < m; ++j) cur[j] = inf;
            std::swap(prev, cur);
        }
    }
    return std::sqrt(cur[m - 1]);
}

// ---------------------------------------------------------------------------
// Shape-based distance

struct SbdResult {
    double distance = 0.0;
    /// y lags x by `shift` slots: x[i] is best aligned with y[i + shift].
    std::int64_t shift = 0;
    double ncc_max = 1.0;
};

enum class CorrelationMethod { automatic, direct, fft };

/// Lengths at or above this use the FFT route under CorrelationMethod::automatic.
inline constexpr std::size_t kFftMinLength = 64;

/// Cross-correlation cc[w + m - 1] = sum_i x[i] * y[i + w] for w in (-m, m),
/// out-of-range terms treated as zero.
inline std::vector<double> cross_correlation(std::span<const double> x, std::span<const double> y,
                                             CorrelationMethod method = CorrelationMethod::automatic) {
    if (x.size() != y.size()) {
        throw Error("cross_correlation: length mismatch (" + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()) + ")");
    }
    const std::size_t m = x.size();
    if (m == 0) return {};
    std::vector<double> cc(2 * m - 1, 0.0);
    if (method == CorrelationMethod::automatic) {
        method = m >= kFftMinLength ? CorrelationMethod::fft : CorrelationMethod::direct;
    }

    if (method == CorrelationMethod::direct) {
        for (std::size_t k = 0; k < 2 * m - 1; ++k) {
            const auto w = static_cast<std::int64_t>(k) - static_cast<std::int64_t>(m - 1);
            const std::size_t i0 = w < 0 ? static_cast<std::size_t>(-w) : 0;
            const std::size_t i1 = w < 0 ? m : m - static_cast<std::size_t>(w);
            double s = 0.0;
            for (std::size_t i = i0; i < i1; ++i) s += x[i] * y[static_cast<std::size_t>(static_cast<std::int64_t>(i) + w)];
            cc[k] = s;
        }
        return cc;
    }

    // Real kissfft transforms need at least 4 points.
    std::size_t nfft = 4;
    while (nfft < 2 * m - 1) nfft <<= 1;
    std::vector<double> xp(nfft, 0.0), yp(nfft, 0.0);
    std::copy(x.begin(), x.end(), xp.begin());
    std::copy(y.begin(), y.end(), yp.begin());
    thread_local Eigen::FFT<double> fft;
    std::vector<std::complex<double>> fx, fy;
    fft.fwd(fx, xp);
    fft.fwd(fy, yp);
    for (std::size_t k = 0; k < fx.size(); ++k) fx[k] = std::conj(fx[k]) * fy[k];
    std::vector<double> r;
    fft.inv(r, fx);
    for (std::size_t k = 0; k < 2 * m - 1; ++k) {
        const auto w = static_cast<std::int64_t>(k) - static_cast<std::int64_t>(m - 1);
        cc[k] = r[static_cast<std::size_t>(w >= 0 ? w : static_cast<std::int64_t>(nfft) + w)];
    }
    return cc;
}

/// 1 - max over shifts of the coefficient-normalized cross-correlation.
/// Norms are taken over the full sequences. Ties pick the most negative shift.
inline SbdResult sbd(std::span<const double> x, std::span<const double> y,
                     CorrelationMethod method = CorrelationMethod::automatic) {
    if (x.size() != y.size()) {
        throw Error("sbd: length mismatch (" + std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
    }
    if (x.empty()) throw Error("sbd: input sequences must be non-empty");
    double nx = 0.0, ny = 0.0;
    for (double v : x) nx += v * v;
    for (double v : y) ny += v * v;
    if (!(nx > 0.0) || !(ny > 0.0)) throw Error("sbd: zero-norm input (constant-zero series)");
    const double denom = std::sqrt(nx) * std::sqrt(ny);

    const auto cc = cross_correlation(x, y, method);
    std::size_t best = 0;
    for (std::size_t k = 1; k < cc.size(); ++k) {
        if (cc[k] > cc[best]) best = k;
    }
    SbdResult r;
    r.ncc_max = std::clamp(cc[best] / denom, -1.0, 1.0);
    r.distance = 1.0 - r.ncc_max;
    r.shift = static_cast<std::int64_t>(best) - static_cast<std::int64_t>(x.size() - 1);
    return r;
}

/// y realigned onto x's index frame by `shift` (see SbdResult), zero padded.
inline std::vector<double> align_to(std::span<const double> y, std::int64_t shift) {
    const auto m = static_cast<std::int64_t>(y.size());
    std::vector<double> out(y.size(), 0.0);
    for (std::int64_t i = 0; i < m; ++i) {
        const std::int64_t src = i + shift;
        if (src >= 0 && src < m) out[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(src)];
    }
    return out;
}

/// x delayed by `shift` slots (negative = advanced), zero padded.
inline std::vector<double> shifted(std::span<const double> x, std::int64_t shift) { return align_to(x, -shift); }

// ---------------------------------------------------------------------------
// Pairwise matrices

struct DistanceOptions {
    Measure measure = Measure::dtw;
    std::optional<std::size_t> band;
    /// Z-normalize series before measuring.
    bool normalize = true;
    unsigned threads = 1;
};

inline double distance(std::span<const double> x, std::span<const double> y, Measure measure,
                       std::optional<std::size_t> band = std::nullopt) {
    return measure == Measure::dtw ? dtw_distance(x, y, band) : sbd(x, y).distance;
}

/// Symmetric matrix of distances between prepared series. Only the upper
/// triangle is computed; each entry depends only on its own pair, so the
/// result does not depend on `threads`.
inline Eigen::MatrixXd pairwise_matrix(const std::vector<std::vector<double>>& series, Measure measure,
                                       std::optional<std::size_t> band = std::nullopt, unsigned threads = 1,
                                       const std::vector<std::string>* names = nullptr) {
    const std::size_t n = series.size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const std::size_t pairs = n * (n - (n > 0 ? 1 : 0)) / 2;
    std::vector<std::pair<std::size_t, std::size_t>> index;
    index.reserve(pairs);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) index.emplace_back(i, j);

    parallel_for(index.size(), threads, [&](std::size_t p) {
        const auto [i, j] = index[p];
        double d = 0.0;
        try {
            d = distance(series[i], series[j], measure, band);
        } catch (const Error& e) {
            const std::string a = names ? (*names)[i] : std::to_string(i);
            const std::string b = names ? (*names)[j] : std::to_string(j);
            throw Error("pair (" + a + ", " + b + "): " + e.what());
        }
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
        out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d;
    });
    return out;
}

inline Eigen::MatrixXd pairwise_matrix(const SensorNetwork& network, const DistanceOptions& opts) {
    const auto prepared = prepared_values(network, opts.normalize);
    std::vector<std::string> names;
    for (const auto& s : network.series()) names.push_back(s.sensor().id);
    return pairwise_matrix(prepared, opts.measure, opts.band, opts.threads, &names);
}

}  // namespace soilnet
