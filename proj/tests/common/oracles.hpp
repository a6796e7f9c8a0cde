#pragma once

// Independent reference values computed straight from the physical
// definitions, without going through the library's own closed forms.

#include <cmath>
#include <numbers>

namespace oracle {

inline constexpr double muB = 9.2740100783e-24;
inline constexpr double mu0 = 1.25663706212e-6;
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double g0 = 9.81;
inline constexpr double earthR = 6.371e6;
inline constexpr double mass = 2.9e-17;
inline constexpr double volume = 8.2e-21;
inline constexpr double chiAbs = 2.2e-5;
inline constexpr double rho = 3510.0;
inline constexpr double gPar = 2.0029;
inline constexpr double gradient = 940.0;
inline constexpr double bias = 0.42;

// Force balance: spin force g mu_B B' equals spring force (|chi| V / mu0) B'^2 dx.
inline double equilibrium_offset(double b = gradient) { return gPar * muB * mu0 / (volume * chiAbs * b); }
inline double omega(double b = gradient) { return std::sqrt(chiAbs / (rho * mu0)) * b; }
inline double period(double b = gradient) { return 2.0 * std::numbers::pi / omega(b); }
// Energy conservation over the pre-drop.
inline double entry_velocity(double length = 1.27) { return std::sqrt(2.0 * g0 * length); }

} // namespace oracle
