#include "sgdrop/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sgdrop/csv.hpp"
#include "timeline.hpp"

namespace sgdrop {

double inertial_mass(const Scenario& scenario) { return scenario.diamond.density * scenario.diamond.volume; }

double segment_equilibrium(SpinLabel spin, int sigma, const Scenario& s) {
    const auto& c = s.constants;
    const double gradient = sigma * s.geometry.gradientMagnitude;
    const double spinForce = s.diamond.gFactorParallel * c.bohrMagneton * spin_projection(spin) * gradient;
    const double tiltForce = s.diamond.mass * c.gSurface * std::sin(s.frame.phi);
    const double coupling = std::abs(s.diamond.susceptibility) * s.diamond.volume / c.vacuumPermeability;
    const double biasForce = coupling * s.geometry.biasField * gradient;
    const double b = s.geometry.gradientMagnitude;
    return -(spinForce + tiltForce + biasForce) / (coupling * b * b);
}

namespace {

// The propagation runs in extended precision: over ~2e4 segments double
// round-off in x alone biases the gravity phase at the 1e-5 rad level.
using Wide = long double;

struct WideState {
    Wide x = 0.0L;
    Wide vx = 0.0L;
};

WideState propagate_wide(const WideState& s, Wide xEq, Wide omega, Wide dt) {
    const Wide c = std::cos(omega * dt);
    const Wide sn = std::sin(omega * dt);
    const Wide offset = s.x - xEq;
    return {xEq + offset * c + (s.vx / omega) * sn, -omega * offset * sn + s.vx * c};
}

Wide position_integral_wide(const WideState& s, Wide xEq, Wide omega, Wide dt) {
    const Wide sinHalf = std::sin(0.5L * omega * dt);
    // (1 - cos) written as 2 sin^2(half) to stay accurate for small steps.
    return xEq * dt + (s.x - xEq) * std::sin(omega * dt) / omega + s.vx * 2.0L * sinHalf * sinHalf / (omega * omega);
}

} // namespace

BranchState propagate_segment(const BranchState& state, double xEq, double omega, double dt) {
    if (dt == 0.0) return state;
    const auto w = propagate_wide({state.x, state.vx}, xEq, omega, dt);
    BranchState out = state;
    out.x = static_cast<double>(w.x);
    out.vx = static_cast<double>(w.vx);
    out.t = state.t + dt;
    return out;
}

double segment_position_integral(const BranchState& state, double xEq, double omega, double dt) {
    return static_cast<double>(position_integral_wide({state.x, state.vx}, xEq, omega, dt));
}

namespace {

struct Equilibria {
    double plus[2];  // [spin index]
    double minus[2];
    double at(int sigma, SpinLabel spin) const {
        const auto i = static_cast<std::size_t>(spin == SpinLabel::MinusOne);
        return sigma > 0 ? plus[i] : minus[i];
    }
};

Equilibria equilibria(const Scenario& s) {
    Equilibria e{};
    e.plus[0] = segment_equilibrium(SpinLabel::Zero, +1, s);
    e.plus[1] = segment_equilibrium(SpinLabel::MinusOne, +1, s);
    e.minus[0] = segment_equilibrium(SpinLabel::Zero, -1, s);
    e.minus[1] = segment_equilibrium(SpinLabel::MinusOne, -1, s);
    return e;
}

// Field-free stretch before the teeth (only reachable with a jittered opening
// pulse): constant tilt acceleration. Returns the integral of x.
Wide free_flight(WideState& s, Wide accel, Wide dt) {
    const Wide integral = s.x * dt + 0.5L * s.vx * dt * dt + accel * dt * dt * dt / 6.0L;
    s.x += s.vx * dt + 0.5L * accel * dt * dt;
    s.vx += accel * dt;
    return integral;
}

RecombinationReport report_at(const TrajectorySample& s) {
    return {s.t, std::abs(s.xB - s.xA), std::abs(s.vB - s.vA)};
}

} // namespace

std::vector<SegmentPiece> segment_plan(const Scenario& scenario, const PulseSchedule& schedule) {
    validate_schedule(schedule);
    const auto derived = derive_quantities(scenario);
    const auto eq = equilibria(scenario);
    const auto timeline = detail::build_timeline(scenario, schedule);

    std::vector<SegmentPiece> pieces;
    int sigma = timeline.initialSigma;
    SpinLabel a = kInitialSpinA, b = kInitialSpinB;
    double t = timeline.start;
    for (const auto& boundary : timeline.boundaries) {
        if (boundary.t > t) {
            SegmentPiece p{t, boundary.t, sigma, a, b, 0.0, 0.0, sigma == 0 ? 0.0 : derived.angularFrequency};
            if (sigma != 0) {
                p.xEqA = eq.at(sigma, a);
                p.xEqB = eq.at(sigma, b);
            }
            pieces.push_back(p);
        }
        t = boundary.t;
        if (boundary.fieldChange) sigma = sigma == 0 ? +1 : -sigma;
        if (boundary.spinFlips % 2 != 0) {
            a = flipped(a);
            b = flipped(b);
        }
    }
    return pieces;
}

SimulationResult simulate_branches(const Scenario& scenario, const PulseSchedule& schedule) {
    validate_schedule(schedule);
    const auto derived = derive_quantities(scenario);
    const double omega = derived.angularFrequency;
    const auto eq = equilibria(scenario);
    const double freeAccel = -scenario.diamond.mass * scenario.constants.gSurface * std::sin(scenario.frame.phi) /
                             inertial_mass(scenario);
    const auto timeline = detail::build_timeline(scenario, schedule);

    SimulationResult result;
    result.period = schedule.period;
    result.samples.reserve(timeline.boundaries.size() + 1);

    BranchState a{0.0, 0.0, kInitialSpinA, timeline.start};
    BranchState b{0.0, 0.0, kInitialSpinB, timeline.start};
    WideState wa, wb;
    int sigma = timeline.initialSigma;

    auto record = [&](bool atEvent) {
        TrajectorySample s;
        s.t = a.t;
        s.xA = static_cast<double>(wa.x);
        s.vA = static_cast<double>(wa.vx);
        s.xB = static_cast<double>(wb.x);
        s.vB = static_cast<double>(wb.vx);
        s.spinA = a.spin;
        s.spinB = b.spin;
        s.sigma = sigma;
        s.atEvent = atEvent;
        result.samples.push_back(s);
    };
    record(true);

    for (const auto& boundary : timeline.boundaries) {
        const double dt = boundary.t - a.t;
        if (dt > 0.0) {
            auto& last = result.samples.back();
            if (sigma == 0) {
                const Wide ia = free_flight(wa, freeAccel, dt);
                const Wide ib = free_flight(wb, freeAccel, dt);
                last.xIntegralA += static_cast<double>(ia);
                last.xIntegralB += static_cast<double>(ib);
                last.separationIntegral += static_cast<double>(ib - ia);
            } else {
                const Wide eqA = eq.at(sigma, a.spin);
                const Wide eqB = eq.at(sigma, b.spin);
                const Wide ia = position_integral_wide(wa, eqA, omega, dt);
                const Wide ib = position_integral_wide(wb, eqB, omega, dt);
                last.xIntegralA += static_cast<double>(ia);
                last.xIntegralB += static_cast<double>(ib);
                last.separationIntegral += static_cast<double>(ib - ia);
                wa = propagate_wide(wa, eqA, omega, dt);
                wb = propagate_wide(wb, eqB, omega, dt);
            }
            // Pin the clock to the boundary so samples land exactly on event times.
            a.t = b.t = boundary.t;
            ++result.segments;
            if (std::abs(wa.x) > kCrashBound || std::abs(wb.x) > kCrashBound) {
                std::ostringstream msg;
                msg << "crashed into magnets at t = " << boundary.t << " s (xA = " << static_cast<double>(wa.x)
                    << " m, xB = " << static_cast<double>(wb.x) << " m)";
                throw SimulationError(msg.str());
            }
        }
        if (boundary.fieldChange) sigma = sigma == 0 ? +1 : -sigma;
        if (boundary.spinFlips % 2 != 0) {
            a.spin = flipped(a.spin);
            b.spin = flipped(b.spin);
        }
        if (dt > 0.0) {
            record(boundary.isEvent());
        } else {
            // Coincides with the previous sample (only possible at the start).
            auto& last = result.samples.back();
            last.spinA = a.spin;
            last.spinB = b.spin;
            last.sigma = sigma;
        }
    }

    for (const auto& s : result.samples) {
        if (s.t == timeline.midpointTime) result.atMidpoint = report_at(s);
    }
    result.atClose = report_at(result.samples.back());
    return result;
}

TrajectorySummary summarize(const SimulationResult& result, const AnalyticDerived& derived) {
    TrajectorySummary out;
    for (const auto& s : result.samples) {
        const double dx = std::abs(s.separation());
        if (dx > out.maxSeparation) {
            out.maxSeparation = dx;
            out.timeOfMaxSeparation = s.t;
        }
        out.commonModePeak = std::max(out.commonModePeak, std::abs(s.common_mode()));
        const double analytic = derived.equilibriumOffset * (1.0 - std::cos(derived.angularFrequency * s.t));
        out.analyticDeviation = std::max(out.analyticDeviation, std::abs(dx - analytic));
    }
    return out;
}

double max_separation_difference(const SimulationResult& a, const SimulationResult& b) {
    double worst = 0.0;
    std::size_t j = 0;
    for (const auto& sa : a.samples) {
        if (sa.atEvent) continue;
        while (j < b.samples.size() && (b.samples[j].t < sa.t || b.samples[j].atEvent)) ++j;
        if (j == b.samples.size()) break;
        if (b.samples[j].t != sa.t) continue;
        worst = std::max(worst, std::abs(sa.separation() - b.samples[j].separation()));
    }
    return worst;
}

SpinOccupancy spin_occupancy(const SimulationResult& result) {
    SpinOccupancy occ;
    const auto& s = result.samples;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const double dt = s[i + 1].t - s[i].t;
        occ.total += dt;
        if (s[i].spinA == SpinLabel::MinusOne) occ.minusOneA += dt;
        if (s[i].spinB == SpinLabel::MinusOne) occ.minusOneB += dt;
    }
    return occ;
}

std::string trajectory_to_csv(const SimulationResult& result, bool cadenceOnly) {
    std::ostringstream out;
    out << "t_s,xA_m,vA_ms,spinA,xB_m,vB_ms,spinB,dx_m,common_m\n";
    for (const auto& s : result.samples) {
        if (cadenceOnly && s.atEvent) continue;
        out << csv::format_double(s.t) << ',' << csv::format_double(s.xA) << ',' << csv::format_double(s.vA) << ','
            << spin_projection(s.spinA) << ',' << csv::format_double(s.xB) << ',' << csv::format_double(s.vB) << ','
            << spin_projection(s.spinB) << ',' << csv::format_double(s.separation()) << ','
            << csv::format_double(s.common_mode()) << '\n';
    }
    return out.str();
}

} // namespace sgdrop
