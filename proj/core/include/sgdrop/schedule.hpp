#pragma once

// Vertical free-fall kinematics through the teeth region, tooth-crossing times
// and the microwave pulse schedule compiled from them.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sgdrop/model.hpp"

namespace sgdrop {

class ScheduleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// z(t) = v0 t + g t^2 / 2, with t = 0 and z = 0 at the teeth entry.
struct DropKinematics {
    double entryVelocity = 0.0; // m/s
    double gVertical = 9.81;    // m/s^2
    double teethRegionLength = 0.0;

    double distance_at(double t) const noexcept { return t * (entryVelocity + 0.5 * gVertical * t); }
    double velocity_at(double t) const noexcept { return entryVelocity + gVertical * t; }
    /// Positive root of distance_at(t) = z, in the cancellation-free form.
    double time_at(double z) const noexcept;
};

/// v0 = sqrt(2 g L) gained over the homogeneous pre-drop.
double entry_velocity(double homogeneousLength, double g);

DropKinematics kinematics_for(const Scenario& scenario);

/// Times at which the diamond crosses each tooth breakpoint, in increasing
/// order, truncated at the end of the teeth region and (optionally) at
/// `horizon` seconds.
std::vector<double> crossing_times(const DropKinematics& kinematics, const MagnetGeometry& geometry,
                                   std::optional<double> horizon = std::nullopt);

enum class PulseKind : std::uint8_t { PiHalfOpen, Pi, PiMidpoint, PiMidpointMerged, PiHalfClose };
enum class PulseAxis : std::uint8_t { X, Y };

std::string_view to_string(PulseKind kind);
std::string_view to_string(PulseAxis axis);

struct PulseEvent {
    double time = 0.0; // s from teeth entry
    PulseKind kind = PulseKind::Pi;
    PulseAxis axis = PulseAxis::X;
    std::size_t index = 0;

    bool is_pi() const noexcept {
        return kind == PulseKind::Pi || kind == PulseKind::PiMidpoint || kind == PulseKind::PiMidpointMerged;
    }
    /// Number of pi rotations the event applies to the spin. A midpoint pulse
    /// that coincides with a crossing pulse carries both.
    int spin_flips() const noexcept {
        switch (kind) {
        case PulseKind::Pi:
        case PulseKind::PiMidpoint: return 1;
        case PulseKind::PiMidpointMerged: return 2;
        default: return 0;
        }
    }
};

struct PulseSchedule {
    std::vector<PulseEvent> events;
    DropKinematics kinematics;
    double period = 0.0; // T; the scheme spans [0, 2T]
    std::size_t crossingCount = 0;

    double open_time() const { return events.front().time; }
    double close_time() const { return events.back().time; }
    std::size_t pi_count() const;
};

/// Pulses merge into one event when a crossing lies this close to T.
inline constexpr double kMidpointMergeTolerance = 1e-9;

/// Opening pi/2 at 0, a pi pulse at every crossing in (0, 2T), the extra
/// midpoint pi at T and the closing pi/2 at 2T. Axis labels follow
/// X,Y,X,Y,Y,X,Y,X over the pi pulses. Throws ScheduleError if the teeth
/// region ends before 2T.
PulseSchedule build_schedule(const DropKinematics& kinematics, const MagnetGeometry& geometry, double period);

/// Convenience: kinematics and T taken from the scenario.
PulseSchedule build_schedule(const Scenario& scenario);

/// Checks ordering and the open/close framing. Throws ScheduleError.
void validate_schedule(const PulseSchedule& schedule);

struct GateCalibration {
    std::vector<double> gateZ;
    std::vector<double> gateTimes;
    double fittedV0 = 0.0;
    double fittedTimeOffset = 0.0;
    double residual = 0.0; // rms timing residual, s
};

/// Least-squares fit of z(t) = v0 (t - t0) + g (t - t0)^2 / 2 to photogate
/// passages. Exact with two gates.
GateCalibration calibrate_from_gates(const std::vector<double>& gateZ, const std::vector<double>& gateTimes,
                                     double g);

/// Adds independent N(0, sigma^2) offsets to every event time. Throws
/// ScheduleError if the perturbation reorders events.
PulseSchedule apply_jitter(const PulseSchedule& schedule, double sigma, std::uint64_t seed);

/// CSV with columns index,time_s,kind,axis.
std::string schedule_to_csv(const PulseSchedule& schedule);
void write_schedule_csv(const PulseSchedule& schedule, const std::filesystem::path& path);
PulseSchedule read_schedule_csv(const std::filesystem::path& path, const DropKinematics& kinematics,
                                double period);

} // namespace sgdrop
