#pragma once

// Gaussian-smoothed rhythm kernels.
//
// A rhythm (onsets t_i, velocities v_i) is smoothed into
//     G(t) = sum_i v_i * exp(-(t - t_i)^2 / (2 sigma^2))
// whose peaks equal the note velocities (the kernel is not a normalized
// density). Correlations between two such curves have the closed form
//     CG(t) = sum_i sum_j v_i w_j * exp(-(t - (t_i - s_j))^2 / (2 sigma^2))
// and are evaluated pairwise. Terms whose exponent falls below -50 are
// skipped, which on sorted onsets turns every sum into a band computation.

#include <cstddef>
#include <vector>

#include "rhythm/events.h"

namespace rhythm {

/// Pair terms farther than this many sigmas from the evaluation point are skipped
/// (exponent < -50, contribution < 2e-22 per unit weight).
inline constexpr double kCutoffSigmas = 10.0;

/// Inclusive, evenly spaced evaluation grid: first, first + step, ..., <= last.
struct LagGrid {
    Millis first = 0.0;
    Millis last = 0.0;
    Millis step = 1.0;

    std::size_t size() const;
    Millis at(std::size_t k) const { return first + static_cast<double>(k) * step; }
};

/// Gaussification of `events` evaluated at time `t`.
double gaussify_eval(const NoteEventSet& events, Millis t, const KernelConfig& cfg);

/// Cross-correlation of the Gaussifications of `a` and `b` at lag `t`.
double correlation(const NoteEventSet& a, const NoteEventSet& b, Millis t, const KernelConfig& cfg);

/// Autocorrelation; identical to correlation(events, events, t, cfg).
double autocorrelation(const NoteEventSet& events, Millis t, const KernelConfig& cfg);

/// Pulse-period salience exp(-2 log2^2(t / t_s)); 1 at the spontaneous tempo.
/// Throws std::domain_error for non-positive `t`.
double parncutt_salience(Millis t, const KernelConfig& cfg);

/// correlation(a, b, grid.at(k)) for every grid point, computed by scattering
/// each contributing pair onto the lags within its band.
std::vector<double> correlation_curve(const NoteEventSet& a, const NoteEventSet& b,
                                      const LagGrid& grid, const KernelConfig& cfg);

std::vector<double> autocorrelation_curve(const NoteEventSet& events, const LagGrid& grid,
                                          const KernelConfig& cfg);

}  // namespace rhythm
