#pragma once

// Relative phase between the two branches and the resulting spin-readout
// fringe P_A = cos^2(dphi / 2).

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgdrop/dynamics.hpp"
#include "sgdrop/model.hpp"

namespace sgdrop {

/// Thrown when the branches have not recombined, so the spin and spatial
/// states are still entangled and a readout would carry which-path information.
class NotSeparableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GravityModel {
    double g0 = 9.81;
    double earthRadius = 6.371e6;
    bool gradientEnabled = true;
};

GravityModel gravity_model_for(const Scenario& scenario);

/// g0 (1 + 2 z / R) with the gradient on, g0 otherwise. z >= 0.
double gravity_at(const GravityModel& model, double zFallen);

/// Distance fallen (for the gravity model) at region-local time t.
double fallen_distance(const Scenario& scenario, double t);

struct AnalyticPhases {
    double phi1 = 0.0;     // first oscillation, g evaluated at T/2
    double phi2 = 0.0;     // second oscillation, g evaluated at 3T/2
    double deltaPhi = 0.0; // phi2 - phi1
    double gFirst = 0.0;
    double gSecond = 0.0;
};

AnalyticPhases analytic_phases(const Scenario& scenario, double period);

/// Tilt span over which dphi advances by 2 pi (one full fringe).
struct FringePeriods {
    double twoOscillation = 0.0;
    double singleOscillation = 0.0;
};
FringePeriods fringe_periods(const Scenario& scenario);

struct PhaseTerms {
    double gravity = 0.0;
    double zeemanBias = 0.0;
    double zeemanGradient = 0.0;
    double zfs = 0.0;
    double total() const noexcept { return gravity + zeemanBias + zeemanGradient + zfs; }
};

/// Per-branch accumulated phase (E / hbar integrated over time) and the B - A
/// difference. The difference is accumulated interval by interval from the
/// branch-difference integrand, never by subtracting the large per-branch totals.
struct PhaseLedger {
    PhaseTerms branchA;
    PhaseTerms branchB;
    PhaseTerms difference;
};

struct NumericPhase {
    PhaseLedger ledger;
    double deltaPhi = 0.0;        // difference.total()
    double gravityDeltaPhi = 0.0; // difference.gravity: the tilt-dependent signal
    bool coarseSampling = false;  // largest sample interval exceeds T / 1000
};

/// Integrates the phase functional over the samples of `result` inside
/// [tBegin, tEnd] (defaults: the whole run).
NumericPhase numeric_phase(const SimulationResult& result, const Scenario& scenario, const GravityModel& model,
                           std::optional<double> tBegin = std::nullopt, std::optional<double> tEnd = std::nullopt);

enum class PhaseMode { Analytic, Numeric };
enum class InterferometerVariant { TwoOscillation, SingleOscillation };

struct FringeResult {
    std::vector<double> phi;
    std::vector<double> deltaPhi;
    std::vector<double> probabilityA;
};

double readout_probability(double deltaPhi);

/// Throws NotSeparableError unless both recombination checks passed.
void require_separable(const SimulationResult& result);

/// Evaluates dphi and P_A on an evenly spaced tilt grid. Points run in
/// parallel on `workers` threads (0 = hardware concurrency). In numeric mode
/// every point is a full simulation, and a failed recombination raises
/// NotSeparableError.
FringeResult fringe_scan(const Scenario& scenario, double phiMin, double phiMax, std::size_t points,
                         PhaseMode mode = PhaseMode::Analytic,
                         InterferometerVariant variant = InterferometerVariant::TwoOscillation,
                         std::size_t workers = 0);

/// CSV with columns phi_rad,dphi_rad,pA.
std::string fringe_to_csv(const FringeResult& fringe);

} // namespace sgdrop
