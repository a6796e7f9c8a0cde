#pragma once

// Physical parameter sets, scenario validation and the closed-form quantities
// (separation scale, trap frequency, period) every other module builds on.
// Everything in here is SI.

#include <stdexcept>
#include <string>
#include <vector>

namespace sgdrop {

struct PhysicalConstants {
    double bohrMagneton = 9.2740100783e-24;       // J/T
    double vacuumPermeability = 1.25663706212e-6; // T m / A
    double hbar = 1.054571817e-34;                // J s
    double gSurface = 9.81;                       // m/s^2
    double earthRadius = 6.371e6;                 // m
};

struct DiamondParams {
    double mass = 2.9e-17;             // kg
    double volume = 8.2e-21;           // m^3
    double susceptibility = -2.2e-5;   // volume susceptibility, negative (diamagnet)
    double density = 3510.0;           // kg/m^3
    double gFactorParallel = 2.0029;
    double zfs = 2.87e9;               // zero-field splitting, Hz
};

struct MagnetGeometry {
    double homogeneousLength = 1.27;   // m, pre-drop before the teeth
    double toothWidth = 115e-6;        // m
    double firstToothFraction = 0.5;   // width of the first tooth relative to the rest
    double gradientMagnitude = 940.0;  // T/m, average |dBx/dx|
    double biasField = 0.42;           // T, Bx at x = 0
    double teethRegionLength = 1.13;   // m
};

/// Tilt of the magnet z axis away from the gravitational vertical.
struct TiltedFrame {
    double phi = 0.0; // rad
};

struct Scenario {
    PhysicalConstants constants;
    DiamondParams diamond;
    MagnetGeometry geometry;
    TiltedFrame frame;
    double samplingInterval = 1e-4;     // s, trajectory output cadence
    bool gravityGradientEnabled = true; // g grows as the diamond approaches Earth's centre
    bool gravityDatumIncludesPreDrop = true;
};

/// Name of the built-in preset the defaults above reproduce.
inline constexpr const char* kPaperPresetName = "paper-2022";

Scenario paper_preset();

struct AnalyticDerived {
    double equilibriumOffset = 0.0; // m, separation of the two spin equilibria
    double maxSeparation = 0.0;     // m, = 2 * equilibriumOffset
    double angularFrequency = 0.0;  // rad/s, diamagnetic trap frequency
    double period = 0.0;            // s, = 2 pi / angularFrequency
    double commonModeAccel = 0.0;   // m/s^2, spin-independent bias-field force / m
    double spinAccel = 0.0;         // m/s^2, Stern-Gerlach force / m
};

struct ValidationIssue {
    std::string field;
    std::string message;
    bool fatal = true;
};

/// Thrown when a scenario fails one or more invariants. Carries every violation.
class InvalidScenario : public std::runtime_error {
public:
    explicit InvalidScenario(std::vector<ValidationIssue> issues);
    const std::vector<ValidationIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<ValidationIssue> issues_;
};

/// Checks every invariant and returns all violations. Non-fatal entries are
/// warnings (e.g. the mass/density*volume consistency check).
std::vector<ValidationIssue> validate_scenario(const Scenario& scenario);

/// Throws InvalidScenario if any fatal issue is present; returns the warnings.
std::vector<ValidationIssue> require_valid(const Scenario& scenario);

/// Closed forms for the separation scale and trap frequency. Throws
/// InvalidScenario on a zero susceptibility, volume or gradient.
AnalyticDerived derive_quantities(const Scenario& scenario);

/// Diamagnetic spring constant |chi| V B'^2 / mu0 (N/m).
double diamagnetic_stiffness(const Scenario& scenario);

} // namespace sgdrop
