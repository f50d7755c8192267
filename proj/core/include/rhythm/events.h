#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rhythm {

/// Time in milliseconds. Integer inputs are widened; everything internal is real-valued.
using Millis = double;

class InsufficientData : public std::runtime_error {
public:
    explicit InsufficientData(const std::string& what) : std::runtime_error(what) {}
};

class UnsupportedMeter : public std::invalid_argument {
public:
    explicit UnsupportedMeter(int meter)
        : std::invalid_argument("unsupported meter " + std::to_string(meter) + " (expected 3 or 4)"),
          meter_(meter) {}
    int meter() const noexcept { return meter_; }

private:
    int meter_;
};

/// Velocity assigned to non-positive inputs when clamping into (0, 1].
inline constexpr double kMinVelocity = 1e-3;

/// Clamp a velocity into (0, 1]. Returns true when the value had to change.
bool clamp_velocity(double& v) noexcept;

/// Paired note onsets and velocities, kept sorted by onset.
///
/// Construction sorts events by onset (stable, velocities travel with their
/// onsets) and clamps velocities into (0, 1]. Non-finite values are rejected.
class NoteEventSet {
public:
    NoteEventSet() = default;
    NoteEventSet(std::vector<Millis> onsets, std::vector<double> velocities);

    std::size_t size() const noexcept { return onsets_.size(); }
    bool empty() const noexcept { return onsets_.empty(); }

    std::span<const Millis> onsets() const noexcept { return onsets_; }
    std::span<const double> velocities() const noexcept { return velocities_; }

    Millis onset(std::size_t i) const { return onsets_[i]; }
    double velocity(std::size_t i) const { return velocities_[i]; }

    /// Number of velocities that were clamped on construction.
    std::size_t clamped_count() const noexcept { return clamped_; }

    /// Returns a copy with every velocity multiplied by `factor` (re-clamped).
    NoteEventSet scaled(double factor) const;
    /// Returns a copy with every onset shifted by `delta`.
    NoteEventSet shifted(Millis delta) const;

    bool operator==(const NoteEventSet& other) const {
        return onsets_ == other.onsets_ && velocities_ == other.velocities_;
    }

private:
    std::vector<Millis> onsets_;
    std::vector<double> velocities_;
    std::size_t clamped_ = 0;
};

/// Gaussian kernel width and the spontaneous tempo used by the salience weighting.
struct KernelConfig {
    Millis sigma = 25.0;
    Millis spontaneous_tempo = 500.0;

    /// Throws std::invalid_argument when a field is non-positive.
    void validate() const;
};

}  // namespace rhythm
