#pragma once

#include <algorithm>
#include <cmath>

#include "sgdrop/dynamics.hpp"

// Exact position of one branch at an arbitrary time, by harmonic propagation
// from the last sample at or before t.
inline double branch_position_at(const sgdrop::SimulationResult& r, const sgdrop::Scenario& s, bool branchA,
                                 double t) {
    const auto it = std::upper_bound(r.samples.begin(), r.samples.end(), t,
                                     [](double v, const sgdrop::TrajectorySample& x) { return v < x.t; });
    const auto& smp = *(it == r.samples.begin() ? it : it - 1);
    const auto spin = branchA ? smp.spinA : smp.spinB;
    const double x = branchA ? smp.xA : smp.xB;
    const double v = branchA ? smp.vA : smp.vB;
    const double xEq = sgdrop::segment_equilibrium(spin, smp.sigma, s);
    const double w = sgdrop::derive_quantities(s).angularFrequency;
    const double dt = t - smp.t;
    return xEq + (x - xEq) * std::cos(w * dt) + v / w * std::sin(w * dt);
}
