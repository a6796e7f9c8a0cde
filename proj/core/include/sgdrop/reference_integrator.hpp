#pragma once

// Independent cross-check for simulate_branches: adaptive Dormand-Prince 5(4)
// integration of the raw force expression, with tooth crossings located by
// bisection on z(t) instead of the closed-form root.

#include <array>
#include <cstddef>
#include <stdexcept>

#include "sgdrop/dynamics.hpp"

namespace sgdrop {

class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One explicit Dormand-Prince 5(4) step. `error` is the difference between
/// the embedded 5th and 4th order solutions.
template <std::size_t N>
struct DormandPrinceStep {
    std::array<double, N> y;
    std::array<double, N> error;
};

template <std::size_t N, typename Rhs>
DormandPrinceStep<N> dormand_prince_step(const Rhs& f, double t, const std::array<double, N>& y, double h) {
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    auto combine = [&](std::initializer_list<std::pair<double, const std::array<double, N>*>> terms) {
        std::array<double, N> out = y;
        for (std::size_t i = 0; i < N; ++i) {
            double acc = 0.0;
            for (const auto& [w, k] : terms) acc += w * (*k)[i];
            out[i] += h * acc;
        }
        return out;
    };

    const auto k1 = f(t, y);
    const auto k2 = f(t + c2 * h, combine({{a21, &k1}}));
    const auto k3 = f(t + c3 * h, combine({{a31, &k1}, {a32, &k2}}));
    const auto k4 = f(t + c4 * h, combine({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const auto k5 = f(t + c5 * h, combine({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const auto k6 = f(t + h, combine({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    DormandPrinceStep<N> step;
    step.y = combine({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const auto k7 = f(t + h, step.y);
    for (std::size_t i = 0; i < N; ++i)
        step.error[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    return step;
}

struct ReferenceStats {
    std::size_t acceptedSteps = 0;
    std::size_t rejectedSteps = 0;
    std::size_t crossingsLocated = 0;
};

/// Same output contract as simulate_branches (cadence + event samples), but
/// xIntegral fields are not populated. relTol must lie in [1e-12, 1e-6].
SimulationResult integrate_reference(const Scenario& scenario, const PulseSchedule& schedule, double relTol,
                                     ReferenceStats* stats = nullptr);

} // namespace sgdrop
