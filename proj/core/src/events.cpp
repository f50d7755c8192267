#include "rhythm/events.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rhythm {

bool clamp_velocity(double& v) noexcept {
    if (v > 1.0) {
        v = 1.0;
        return true;
    }
    if (!(v > 0.0)) {
        v = kMinVelocity;
        return true;
    }
    return false;
}

NoteEventSet::NoteEventSet(std::vector<Millis> onsets, std::vector<double> velocities) {
    if (onsets.size() != velocities.size()) {
        throw std::invalid_argument("onsets and velocities differ in length");
    }
    for (std::size_t i = 0; i < onsets.size(); ++i) {
        if (!std::isfinite(onsets[i]) || !std::isfinite(velocities[i])) {
            throw std::invalid_argument("non-finite onset or velocity at index " + std::to_string(i));
        }
        if (clamp_velocity(velocities[i])) {
            ++clamped_;
        }
    }

    if (std::is_sorted(onsets.begin(), onsets.end())) {
        onsets_ = std::move(onsets);
        velocities_ = std::move(velocities);
        return;
    }

    std::vector<std::size_t> order(onsets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return onsets[a] < onsets[b]; });
    onsets_.reserve(order.size());
    velocities_.reserve(order.size());
    for (std::size_t idx : order) {
        onsets_.push_back(onsets[idx]);
        velocities_.push_back(velocities[idx]);
    }
}

NoteEventSet NoteEventSet::scaled(double factor) const {
    std::vector<double> v(velocities_);
    for (double& x : v) {
        x *= factor;
    }
    return NoteEventSet(onsets_, std::move(v));
}

NoteEventSet NoteEventSet::shifted(Millis delta) const {
    std::vector<Millis> t(onsets_);
    for (Millis& x : t) {
        x += delta;
    }
    return NoteEventSet(std::move(t), velocities_);
}

void KernelConfig::validate() const {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("sigma must be positive");
    }
    if (!(spontaneous_tempo > 0.0)) {
        throw std::invalid_argument("spontaneous tempo must be positive");
    }
}

}  // namespace rhythm
