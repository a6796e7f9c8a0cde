#pragma once

// Merged, time-ordered list of everything that interrupts free harmonic
// motion: field sign changes, spin flips and output samples.

#include <vector>

#include "sgdrop/model.hpp"
#include "sgdrop/schedule.hpp"

namespace sgdrop::detail {

struct Boundary {
    double t = 0.0;
    bool fieldChange = false;
    int spinFlips = 0;
    bool cadence = false;
    bool pulse = false;
    bool crossing = false;
    bool isEvent() const noexcept { return pulse || crossing; }
};

struct Timeline {
    double start = 0.0;
    int initialSigma = +1; // 0 while still above the teeth
    double midpointTime = 0.0;
    std::vector<Boundary> boundaries; // strictly increasing t, all > start
};

/// `crossings` are the field sign-change times (increasing).
Timeline build_timeline(const Scenario& scenario, const PulseSchedule& schedule, const std::vector<double>& crossings);

/// Same, with crossings from the closed-form kinematics of the scenario geometry.
Timeline build_timeline(const Scenario& scenario, const PulseSchedule& schedule);

} // namespace sgdrop::detail
