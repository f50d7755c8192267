#include "rhythm/kernels.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rhythm {
namespace {

double inverse_two_sigma_sq(const KernelConfig& cfg) {
    cfg.validate();
    return 1.0 / (2.0 * cfg.sigma * cfg.sigma);
}

// Index range [lo, hi) of sorted `onsets` lying in [from, to].
std::pair<std::size_t, std::size_t> band(std::span<const Millis> onsets, Millis from, Millis to) {
    auto lo = std::lower_bound(onsets.begin(), onsets.end(), from);
    auto hi = std::upper_bound(lo, onsets.end(), to);
    return {static_cast<std::size_t>(lo - onsets.begin()),
            static_cast<std::size_t>(hi - onsets.begin())};
}

}  // namespace

std::size_t LagGrid::size() const {
    if (!(step > 0.0) || last < first) {
        return 0;
    }
    // Small slack so that integer-valued grids include their last point.
    return static_cast<std::size_t>(std::floor((last - first) / step + 1e-9)) + 1;
}

double gaussify_eval(const NoteEventSet& events, Millis t, const KernelConfig& cfg) {
    const double k = inverse_two_sigma_sq(cfg);
    const double reach = kCutoffSigmas * cfg.sigma;
    const auto onsets = events.onsets();
    const auto velocities = events.velocities();
    const auto [lo, hi] = band(onsets, t - reach, t + reach);

    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        const double x = t - onsets[i];
        sum += velocities[i] * std::exp(-x * x * k);
    }
    return sum;
}

double correlation(const NoteEventSet& a, const NoteEventSet& b, Millis t, const KernelConfig& cfg) {
    const double k = inverse_two_sigma_sq(cfg);
    const double reach = kCutoffSigmas * cfg.sigma;
    const auto ta = a.onsets();
    const auto va = a.velocities();
    const auto tb = b.onsets();
    const auto vb = b.velocities();

    double sum = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        // Term (i, j) is centred where t == ta[i] - tb[j].
        const Millis centre = ta[i] - t;
        const auto [lo, hi] = band(tb, centre - reach, centre + reach);
        for (std::size_t j = lo; j < hi; ++j) {
            const double x = t - (ta[i] - tb[j]);
            sum += va[i] * vb[j] * std::exp(-x * x * k);
        }
    }
    return sum;
}

double autocorrelation(const NoteEventSet& events, Millis t, const KernelConfig& cfg) {
    return correlation(events, events, t, cfg);
}

double parncutt_salience(Millis t, const KernelConfig& cfg) {
    cfg.validate();
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw std::domain_error("pulse-period salience needs a positive period");
    }
    const double octaves = std::log2(t / cfg.spontaneous_tempo);
    return std::exp(-2.0 * octaves * octaves);
}

std::vector<double> correlation_curve(const NoteEventSet& a, const NoteEventSet& b,
                                      const LagGrid& grid, const KernelConfig& cfg) {
    const double k = inverse_two_sigma_sq(cfg);
    const double reach = kCutoffSigmas * cfg.sigma;
    const std::size_t n = grid.size();
    std::vector<double> curve(n, 0.0);
    if (n == 0) {
        return curve;
    }
    const auto ta = a.onsets();
    const auto va = a.velocities();
    const auto tb = b.onsets();
    const auto vb = b.velocities();
    const double last_lag = grid.at(n - 1);
    const auto max_index = static_cast<double>(n - 1);

    for (std::size_t i = 0; i < ta.size(); ++i) {
        // Pairs whose difference ta[i] - tb[j] lies within reach of the grid.
        const auto [lo, hi] = band(tb, ta[i] - last_lag - reach, ta[i] - grid.first + reach);
        for (std::size_t j = lo; j < hi; ++j) {
            const double diff = ta[i] - tb[j];
            const double weight = va[i] * vb[j];
            const double k_lo = std::max(0.0, std::ceil((diff - reach - grid.first) / grid.step));
            const double k_hi = std::min(max_index, std::floor((diff + reach - grid.first) / grid.step));
            for (double kk = k_lo; kk <= k_hi; kk += 1.0) {
                const auto idx = static_cast<std::size_t>(kk);
                const double x = grid.at(idx) - diff;
                curve[idx] += weight * std::exp(-x * x * k);
            }
        }
    }
    return curve;
}

std::vector<double> autocorrelation_curve(const NoteEventSet& events, const LagGrid& grid,
                                          const KernelConfig& cfg) {
    return correlation_curve(events, events, grid, cfg);
}

}  // namespace rhythm
