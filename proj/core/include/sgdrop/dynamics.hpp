#pragma once

// Transverse (x) motion of the two superposition branches through the teeth
// region. The force is piecewise linear in x, so each stretch between events
// (tooth crossings, pulses, output samples) is an exact harmonic solution.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgdrop/model.hpp"
#include "sgdrop/schedule.hpp"

namespace sgdrop {

/// "Crashed into the magnets" and similar runtime failures.
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SpinLabel : std::uint8_t { Zero, MinusOne };

/// S_z' eigenvalue: 0 or -1.
constexpr int spin_projection(SpinLabel s) noexcept { return s == SpinLabel::Zero ? 0 : -1; }
constexpr SpinLabel flipped(SpinLabel s) noexcept {
    return s == SpinLabel::Zero ? SpinLabel::MinusOne : SpinLabel::Zero;
}

struct BranchState {
    double x = 0.0;  // m
    double vx = 0.0; // m/s
    SpinLabel spin = SpinLabel::Zero;
    double t = 0.0;  // s
};

/// Branches leave the beam splitter at x = 0 at rest; A carries |-1>, B |0>.
inline constexpr SpinLabel kInitialSpinA = SpinLabel::MinusOne;
inline constexpr SpinLabel kInitialSpinB = SpinLabel::Zero;

/// |x| above this means the diamond has hit the magnet faces.
inline constexpr double kCrashBound = 1e-3;

struct SegmentPiece {
    double tStart = 0.0;
    double tEnd = 0.0;
    int sigma = +1; // gradient sign; 0 before the teeth region
    SpinLabel spinA = kInitialSpinA;
    SpinLabel spinB = kInitialSpinB;
    double xEqA = 0.0;
    double xEqB = 0.0;
    double omega = 0.0;
};

/// Force-balance position for one spin state under gradient sign `sigma`,
/// including the tilt and bias-field terms.
double segment_equilibrium(SpinLabel spin, int sigma, const Scenario& scenario);

/// Exact harmonic step about xEq. Spin is carried through untouched.
BranchState propagate_segment(const BranchState& state, double xEq, double omega, double dt);

/// Integral of x(t) over the same step, in closed form.
double segment_position_integral(const BranchState& state, double xEq, double omega, double dt);

/// Inertia that makes the diamagnetic spring reproduce the closed-form trap
/// frequency (density * volume).
double inertial_mass(const Scenario& scenario);

struct TrajectorySample {
    double t = 0.0;
    double xA = 0.0, vA = 0.0;
    double xB = 0.0, vB = 0.0;
    SpinLabel spinA = kInitialSpinA;
    SpinLabel spinB = kInitialSpinB;
    int sigma = +1;      // field sign on the interval that starts here
    bool atEvent = false; // sample placed on a crossing or pulse rather than the cadence grid
    // Exact integrals of x over [t, t_next]; zero on the last sample.
    double xIntegralA = 0.0;
    double xIntegralB = 0.0;
    double separationIntegral = 0.0; // of xB - xA, taken before rounding the two above

    double separation() const noexcept { return xB - xA; }
    double common_mode() const noexcept { return 0.5 * (xA + xB); }
};

struct RecombinationReport {
    double t = 0.0;
    double separation = 0.0;         // |dx|, m
    double relativeVelocity = 0.0;   // |dvx|, m/s
};

inline constexpr double kRecombinationSeparation = 2e-9; // m
inline constexpr double kRecombinationVelocity = 1e-7;   // m/s

struct SimulationResult {
    std::vector<TrajectorySample> samples;
    RecombinationReport atMidpoint; // first recombination (T)
    RecombinationReport atClose;    // second recombination (2T)
    double period = 0.0;
    std::size_t segments = 0;
    bool exactIntegrals = true;

    bool recombined() const noexcept {
        return atMidpoint.separation < kRecombinationSeparation && atClose.separation < kRecombinationSeparation &&
               atMidpoint.relativeVelocity < kRecombinationVelocity &&
               atClose.relativeVelocity < kRecombinationVelocity;
    }
};

/// Event-driven propagation of both branches over the schedule. The field
/// timeline comes from the scenario geometry, the spin flips from the
/// schedule, so mistimed schedules (jitter, drift) are simulated faithfully.
/// Throws SimulationError if a branch leaves |x| < 1 mm.
SimulationResult simulate_branches(const Scenario& scenario, const PulseSchedule& schedule);

/// The segment decomposition simulate_branches walks, for inspection.
std::vector<SegmentPiece> segment_plan(const Scenario& scenario, const PulseSchedule& schedule);

struct TrajectorySummary {
    double maxSeparation = 0.0; // max |dx|
    double timeOfMaxSeparation = 0.0;
    double commonModePeak = 0.0; // max |(xA + xB)/2|
    double analyticDeviation = 0.0; // max ||dx| - dx_eq (1 - cos w t)|
};

TrajectorySummary summarize(const SimulationResult& result, const AnalyticDerived& derived);

/// Largest |dx_1 - dx_2| over cadence samples present in both results.
double max_separation_difference(const SimulationResult& a, const SimulationResult& b);

/// Accumulated time each branch spends in |-1> over the run.
struct SpinOccupancy {
    double minusOneA = 0.0;
    double minusOneB = 0.0;
    double total = 0.0;
};
SpinOccupancy spin_occupancy(const SimulationResult& result);

/// Trajectory CSV: t_s,xA_m,vA_ms,spinA,xB_m,vB_ms,spinB,dx_m,common_m.
std::string trajectory_to_csv(const SimulationResult& result, bool cadenceOnly = false);

} // namespace sgdrop
