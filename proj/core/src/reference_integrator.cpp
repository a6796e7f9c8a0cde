#include "sgdrop/reference_integrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sgdrop/field.hpp"
#include "timeline.hpp"

namespace sgdrop {
namespace {

// First representable time at which z(t) >= zTarget, by bisection on the
// forward kinematics.
double bisect_crossing(const DropKinematics& kin, double zTarget, double lo, double hi) {
    while (true) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) return hi;
        (kin.distance_at(mid) >= zTarget ? hi : lo) = mid;
    }
}

std::vector<double> locate_crossings(const DropKinematics& kin, const MagnetGeometry& geometry, double horizon,
                                     std::size_t& located) {
    const IdealToothField field(geometry);
    std::vector<double> times;
    double lo = 0.0;
    for (std::size_t k = 0;; ++k) {
        const double z = field.breakpoint(k);
        if (z >= kin.teethRegionLength || kin.distance_at(horizon) < z) break;
        double step = geometry.toothWidth / std::max(kin.velocity_at(lo), 1e-3);
        double hi = lo + step;
        while (kin.distance_at(hi) < z) {
            lo = hi;
            step *= 2.0;
            hi = lo + step;
        }
        const double t = bisect_crossing(kin, z, lo, hi);
        if (t >= horizon) break;
        times.push_back(t);
        lo = t;
    }
    located = times.size();
    return times;
}

using State = std::array<double, 4>; // xA, vA, xB, vB

} // namespace

SimulationResult integrate_reference(const Scenario& scenario, const PulseSchedule& schedule, double relTol,
                                     ReferenceStats* stats) {
    if (!(relTol >= 1e-12 && relTol <= 1e-6)) throw IntegrationError("relTol must lie in [1e-12, 1e-6]");
    validate_schedule(schedule);
    const auto derived = derive_quantities(scenario);

    ReferenceStats local;
    const auto kin = kinematics_for(scenario);
    const auto crossings = locate_crossings(kin, scenario.geometry, schedule.close_time(), local.crossingsLocated);
    const auto timeline = detail::build_timeline(scenario, schedule, crossings);

    const auto& c = scenario.constants;
    const double coupling = std::abs(scenario.diamond.susceptibility) * scenario.diamond.volume / c.vacuumPermeability;
    const double spinCoupling = scenario.diamond.gFactorParallel * c.bohrMagneton;
    const double tiltForce = scenario.diamond.mass * c.gSurface * std::sin(scenario.frame.phi);
    const double mass = coupling * scenario.geometry.gradientMagnitude * scenario.geometry.gradientMagnitude /
                        (derived.angularFrequency * derived.angularFrequency);

    int sigma = timeline.initialSigma;
    SpinLabel spinA = kInitialSpinA, spinB = kInitialSpinB;

    // Force from the x-derivative of the full Hamiltonian.
    auto accel = [&](double x, SpinLabel spin) {
        const double gradient = sigma * scenario.geometry.gradientMagnitude;
        const double field = gradient * x + (sigma == 0 ? 0.0 : scenario.geometry.biasField);
        const double force = -spinCoupling * spin_projection(spin) * gradient - coupling * field * gradient - tiltForce;
        return force / mass;
    };
    auto rhs = [&](double, const State& y) -> State { return {y[1], accel(y[0], spinA), y[3], accel(y[2], spinB)}; };

    const double xScale = derived.equilibriumOffset;
    const State atol = {relTol * xScale, relTol * xScale * derived.angularFrequency, relTol * xScale,
                        relTol * xScale * derived.angularFrequency};

    SimulationResult result;
    result.period = schedule.period;
    result.exactIntegrals = false;
    State y = {0.0, 0.0, 0.0, 0.0};
    double t = timeline.start;

    auto record = [&](bool atEvent) {
        TrajectorySample s;
        s.t = t;
        s.xA = y[0];
        s.vA = y[1];
        s.xB = y[2];
        s.vB = y[3];
        s.spinA = spinA;
        s.spinB = spinB;
        s.sigma = sigma;
        s.atEvent = atEvent;
        result.samples.push_back(s);
    };
    record(true);

    double h = 1e-6;
    for (const auto& boundary : timeline.boundaries) {
        while (t < boundary.t) {
            const double remaining = boundary.t - t;
            const bool last = h >= remaining;
            const double step = last ? remaining : h;
            if (step < 1e-14 * std::max(1.0, std::abs(t)) && !last) {
                std::ostringstream msg;
                msg << "step size underflow at t = " << t << " s (h = " << step << ")";
                throw IntegrationError(msg.str());
            }
            const auto trial = dormand_prince_step<4>(rhs, t, y, step);
            double errNorm = 0.0;
            for (std::size_t i = 0; i < 4; ++i) {
                const double scale = atol[i] + relTol * std::max(std::abs(y[i]), std::abs(trial.y[i]));
                errNorm = std::max(errNorm, std::abs(trial.error[i]) / scale);
            }
            if (errNorm <= 1.0) {
                y = trial.y;
                t = last ? boundary.t : t + step;
                ++local.acceptedSteps;
            } else {
                ++local.rejectedSteps;
            }
            const double factor = errNorm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(errNorm, -0.2), 0.2, 5.0);
            if (errNorm <= 1.0 && last) h = std::max(h, step); // keep the pre-boundary size
            else h = step * factor;
            if (errNorm > 1.0 && step * factor < 1e-14 * std::max(1.0, std::abs(t))) {
                std::ostringstream msg;
                msg << "step size underflow at t = " << t << " s";
                throw IntegrationError(msg.str());
            }
        }
        ++result.segments;
        if (std::abs(y[0]) > kCrashBound || std::abs(y[2]) > kCrashBound) {
            std::ostringstream msg;
            msg << "crashed into magnets at t = " << t << " s";
            throw SimulationError(msg.str());
        }
        if (boundary.fieldChange) sigma = sigma == 0 ? +1 : -sigma;
        if (boundary.spinFlips % 2 != 0) {
            spinA = flipped(spinA);
            spinB = flipped(spinB);
        }
        record(boundary.isEvent());
    }

    for (const auto& s : result.samples)
        if (s.t == timeline.midpointTime)
            result.atMidpoint = {s.t, std::abs(s.xB - s.xA), std::abs(s.vB - s.vA)};
    const auto& back = result.samples.back();
    result.atClose = {back.t, std::abs(back.xB - back.xA), std::abs(back.vB - back.vA)};
    if (stats) *stats = local;
    return result;
}

} // namespace sgdrop
