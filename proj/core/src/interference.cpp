#include "sgdrop/interference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sgdrop/compensated.hpp"
#include "sgdrop/csv.hpp"
#include "sgdrop/parallel.hpp"
#include "sgdrop/schedule.hpp"

namespace sgdrop {

GravityModel gravity_model_for(const Scenario& scenario) {
    return {scenario.constants.gSurface, scenario.constants.earthRadius, scenario.gravityGradientEnabled};
}

double gravity_at(const GravityModel& model, double zFallen) {
    if (!(zFallen >= 0.0)) throw std::domain_error("fallen distance must be non-negative");
    if (!model.gradientEnabled) return model.g0;
    return model.g0 * (1.0 + 2.0 * zFallen / model.earthRadius);
}

double fallen_distance(const Scenario& scenario, double t) {
    const double datum = scenario.gravityDatumIncludesPreDrop ? scenario.geometry.homogeneousLength : 0.0;
    return std::max(0.0, datum + kinematics_for(scenario).distance_at(t));
}

AnalyticPhases analytic_phases(const Scenario& scenario, double period) {
    if (!(period > 0.0)) throw std::invalid_argument("period must be positive");
    const auto derived = derive_quantities(scenario);
    const auto model = gravity_model_for(scenario);
    const double coefficient = scenario.diamond.mass * period * derived.equilibriumOffset *
                               std::sin(scenario.frame.phi) / scenario.constants.hbar;
    AnalyticPhases out;
    const double zFirst = fallen_distance(scenario, 0.5 * period);
    const double zSecond = fallen_distance(scenario, 1.5 * period);
    out.gFirst = gravity_at(model, zFirst);
    out.gSecond = gravity_at(model, zSecond);
    out.phi1 = coefficient * out.gFirst;
    out.phi2 = coefficient * out.gSecond;
    // Take the g difference directly rather than subtracting two ~9.8 values.
    const double gDifference =
        model.gradientEnabled ? model.g0 * 2.0 * (zSecond - zFirst) / model.earthRadius : 0.0;
    out.deltaPhi = coefficient * gDifference;
    return out;
}

FringePeriods fringe_periods(const Scenario& scenario) {
    // dphi is linear in sin(phi); the period is the tilt at which it reaches 2 pi.
    Scenario unit = scenario;
    unit.frame.phi = std::numbers::pi / 2;
    const auto derived = derive_quantities(unit);
    const auto phases = analytic_phases(unit, derived.period);
    auto span = [](double fullScale) {
        const double ratio = 2.0 * std::numbers::pi / std::abs(fullScale);
        return ratio >= 1.0 ? std::numeric_limits<double>::infinity() : std::asin(ratio);
    };
    return {span(phases.deltaPhi), span(phases.phi1)};
}

NumericPhase numeric_phase(const SimulationResult& result, const Scenario& scenario, const GravityModel& model,
                           std::optional<double> tBegin, std::optional<double> tEnd) {
    const auto& samples = result.samples;
    if (samples.size() < 2) throw std::invalid_argument("trajectory has fewer than two samples");
    const double begin = tBegin.value_or(samples.front().t);
    const double end = tEnd.value_or(samples.back().t);

    const auto& c = scenario.constants;
    const double hbar = c.hbar;
    const double gravityRate = scenario.diamond.mass * std::sin(scenario.frame.phi) / hbar;
    const double spinCoupling = scenario.diamond.gFactorParallel * c.bohrMagneton;
    const double biasRate = spinCoupling * scenario.geometry.biasField / hbar;
    const double gradientRate = spinCoupling * scenario.geometry.gradientMagnitude / hbar;
    const double zfsRate = 2.0 * std::numbers::pi * scenario.diamond.zfs;
    const auto kin = kinematics_for(scenario);
    const double datum = scenario.gravityDatumIncludesPreDrop ? scenario.geometry.homogeneousLength : 0.0;

    // Sums are kept in units of the integrand (m s, s) and scaled once at the end.
    struct Sums {
        CompensatedSum<double> gravity, bias, gradient, zfs;
    } a, b, d;

    NumericPhase out;
    double largestStep = 0.0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const auto& s = samples[i];
        const double t1 = samples[i + 1].t;
        if (s.t < begin || t1 > end) continue;
        const double dt = t1 - s.t;
        if (dt <= 0.0) continue;
        largestStep = std::max(largestStep, dt);

        double intA = s.xIntegralA, intB = s.xIntegralB, intD = s.separationIntegral;
        if (!result.exactIntegrals) {
            intA = 0.5 * (s.xA + samples[i + 1].xA) * dt;
            intB = 0.5 * (s.xB + samples[i + 1].xB) * dt;
            intD = 0.5 * (samples[i].separation() + samples[i + 1].separation()) * dt;
        }
        const double g = gravity_at(model, std::max(0.0, datum + kin.distance_at(0.5 * (s.t + t1))));
        const int spinA = spin_projection(s.spinA);
        const int spinB = spin_projection(s.spinB);
        const double sigma = s.sigma;

        a.gravity += g * intA;
        b.gravity += g * intB;
        d.gravity += g * intD;
        a.bias += spinA * dt;
        b.bias += spinB * dt;
        d.bias += (spinB - spinA) * dt;
        a.gradient += sigma * spinA * intA;
        b.gradient += sigma * spinB * intB;
        d.gradient += sigma * (spinB * intB - spinA * intA);
        a.zfs += spinA * spinA * dt;
        b.zfs += spinB * spinB * dt;
        d.zfs += (spinB * spinB - spinA * spinA) * dt;
    }

    auto scale = [&](const Sums& s) {
        PhaseTerms t;
        t.gravity = gravityRate * s.gravity.value();
        t.zeemanBias = biasRate * s.bias.value();
        t.zeemanGradient = gradientRate * s.gradient.value();
        t.zfs = zfsRate * s.zfs.value();
        return t;
    };
    out.ledger.branchA = scale(a);
    out.ledger.branchB = scale(b);
    out.ledger.difference = scale(d);
    out.deltaPhi = out.ledger.difference.total();
    out.gravityDeltaPhi = out.ledger.difference.gravity;
    out.coarseSampling = result.period > 0.0 && largestStep > result.period / 1000.0;
    return out;
}

double readout_probability(double deltaPhi) {
    const double c = std::cos(0.5 * deltaPhi);
    return c * c;
}

void require_separable(const SimulationResult& result) {
    if (result.recombined()) return;
    std::ostringstream msg;
    msg << "branches not separable: |dx| = " << result.atMidpoint.separation << " m at T, "
        << result.atClose.separation << " m at 2T";
    throw NotSeparableError(msg.str());
}

FringeResult fringe_scan(const Scenario& scenario, double phiMin, double phiMax, std::size_t points, PhaseMode mode,
                         InterferometerVariant variant, std::size_t workers) {
    if (points == 0) throw std::invalid_argument("fringe scan needs at least one point");
    if (points == 1 && phiMin != phiMax) throw std::invalid_argument("a single-point scan needs phiMin == phiMax");
    if (!(phiMax >= phiMin)) throw std::invalid_argument("phiMax must not be below phiMin");

    FringeResult out;
    out.phi.resize(points);
    out.deltaPhi.resize(points);
    out.probabilityA.resize(points);
    for (std::size_t i = 0; i < points; ++i)
        out.phi[i] = points == 1 ? phiMin : phiMin + (phiMax - phiMin) * static_cast<double>(i) / (points - 1);

    const double period = derive_quantities(scenario).period;
    // The crossing pattern does not depend on tilt, so one schedule serves every point.
    std::optional<PulseSchedule> schedule;
    if (mode == PhaseMode::Numeric) schedule = build_schedule(scenario);
    const auto model = gravity_model_for(scenario);

    parallel_for(points, workers, [&](std::size_t i) {
        Scenario local = scenario;
        local.frame.phi = out.phi[i];
        double dphi = 0.0;
        if (mode == PhaseMode::Analytic) {
            const auto phases = analytic_phases(local, period);
            dphi = variant == InterferometerVariant::TwoOscillation ? phases.deltaPhi : phases.phi1;
        } else {
            require_valid(local);
            const auto result = simulate_branches(local, *schedule);
            require_separable(result);
            if (variant == InterferometerVariant::TwoOscillation) {
                dphi = numeric_phase(result, local, model).gravityDeltaPhi;
            } else {
                dphi = -numeric_phase(result, local, model, std::nullopt, result.atMidpoint.t).gravityDeltaPhi;
            }
        }
        out.deltaPhi[i] = dphi;
        out.probabilityA[i] = readout_probability(dphi);
    });
    return out;
}

std::string fringe_to_csv(const FringeResult& fringe) {
    std::ostringstream out;
    out << "phi_rad,dphi_rad,pA\n";
    for (std::size_t i = 0; i < fringe.phi.size(); ++i)
        out << csv::format_double(fringe.phi[i]) << ',' << csv::format_double(fringe.deltaPhi[i]) << ','
            << csv::format_double(fringe.probabilityA[i]) << '\n';
    return out.str();
}

} // namespace sgdrop
