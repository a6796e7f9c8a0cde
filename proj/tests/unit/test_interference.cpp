#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "sgdrop/interference.hpp"
#include "sgdrop/schedule.hpp"

using namespace sgdrop;

namespace {

Scenario tilted(double phi) {
    auto s = paper_preset();
    s.frame.phi = phi;
    return s;
}

SimulationResult run(const Scenario& s) { return simulate_branches(s, build_schedule(s)); }

// Two-oscillation phase from first principles: m T dx_eq sin(phi) / hbar times
// the change in g between the two oscillation midpoints (inverse-square law,
// linearised), with z measured from the release point.
double oracle_delta_phi(double phi) {
    const double T = oracle::period();
    const double v0 = oracle::entry_velocity();
    const double z1 = 1.27 + v0 * 0.5 * T + 0.5 * oracle::g0 * 0.25 * T * T;
    const double z2 = 1.27 + v0 * 1.5 * T + 0.5 * oracle::g0 * 2.25 * T * T;
    const double dg = oracle::g0 * 2.0 * (z2 - z1) / oracle::earthR;
    return oracle::mass * T * oracle::equilibrium_offset() * std::sin(phi) * dg / oracle::hbar;
}

} // namespace

TEST_CASE("gravity model") {
    const GravityModel on{};
    CHECK(gravity_at(on, 0.0) == 9.81);
    for (double z : {1.0, 2.4, 100.0}) {
        const double inverseSquare = oracle::g0 * oracle::earthR * oracle::earthR /
                                     ((oracle::earthR - z) * (oracle::earthR - z));
        CHECK(gravity_at(on, z) == doctest::Approx(inverseSquare).epsilon(4.0 * (z / oracle::earthR) * (z / oracle::earthR) + 1e-15));
    }
    const GravityModel off{9.81, 6.371e6, false};
    CHECK(gravity_at(off, 2.4) == 9.81);
    CHECK_THROWS_AS(gravity_at(on, -1e-9), std::domain_error);
    CHECK(fallen_distance(paper_preset(), 0.0) == 1.27);
    auto noDatum = paper_preset();
    noDatum.gravityDatumIncludesPreDrop = false;
    CHECK(fallen_distance(noDatum, 0.0) == 0.0);
}

TEST_CASE("analytic phases") {
    const auto level = analytic_phases(paper_preset(), oracle::period());
    CHECK(level.phi1 == 0.0);
    CHECK(level.phi2 == 0.0);
    CHECK(level.deltaPhi == 0.0);

    for (double phi : {1e-5, 2.5e-4, 5e-4}) {
        const auto p = analytic_phases(tilted(phi), derive_quantities(tilted(phi)).period);
        CHECK(p.deltaPhi == doctest::Approx(oracle_delta_phi(phi)).epsilon(1e-6));
        const auto m = analytic_phases(tilted(-phi), derive_quantities(tilted(-phi)).period);
        CHECK(m.deltaPhi == -p.deltaPhi);
        CHECK(m.phi1 == -p.phi1);
    }
    const auto half = analytic_phases(tilted(500e-6), oracle::period());
    CHECK(half.deltaPhi == doctest::Approx(3.0909).epsilon(1e-4));
    CHECK(half.gSecond > half.gFirst);

    auto flat = tilted(500e-6);
    flat.gravityGradientEnabled = false;
    CHECK(analytic_phases(flat, oracle::period()).deltaPhi == 0.0);
    CHECK_THROWS_AS(analytic_phases(flat, 0.0), std::invalid_argument);
}

TEST_CASE("fringe periods") {
    const auto p = fringe_periods(paper_preset());
    CHECK(std::abs(p.twoOscillation - 1e-3) <= 0.2e-3);
    const double singleOracle = std::asin(2.0 * std::numbers::pi * oracle::hbar /
                                          (oracle::mass * oracle::g0 * oracle::period() * oracle::equilibrium_offset()));
    CHECK(p.singleOscillation < 1e-9);
    CHECK(p.singleOscillation == doctest::Approx(singleOracle).epsilon(1e-4));
    CHECK(p.twoOscillation == doctest::Approx(std::asin(2.0 * std::numbers::pi / std::abs(oracle_delta_phi(std::numbers::pi / 2)))).epsilon(1e-6));
}

TEST_CASE("numeric gravity phase") {
    const auto model = gravity_model_for(paper_preset());
    SUBCASE("no tilt, no signal") {
        const auto s = paper_preset();
        CHECK(numeric_phase(run(s), s, model).gravityDeltaPhi == 0.0);
    }
    SUBCASE("constant g gives no two-oscillation phase") {
        auto s = tilted(500e-6);
        s.gravityGradientEnabled = false;
        const auto r = run(s);
        const auto n = numeric_phase(r, s, gravity_model_for(s));
        CHECK(std::abs(n.gravityDeltaPhi) < 1e-6);
        // Each oscillation alone carries a large phase.
        CHECK(std::abs(numeric_phase(r, s, gravity_model_for(s), std::nullopt, r.atMidpoint.t).gravityDeltaPhi) > 1e6);
    }
    SUBCASE("matches the analytic two-oscillation phase") {
        for (double phi : {-5e-4, 1e-4, 5e-4}) {
            const auto s = tilted(phi);
            const double numeric = numeric_phase(run(s), s, model).gravityDeltaPhi;
            const double analytic = analytic_phases(s, derive_quantities(s).period).deltaPhi;
            CHECK(numeric == doctest::Approx(analytic).epsilon(0.01));
        }
    }
    SUBCASE("odd in tilt") {
        const auto p = tilted(3e-4), m = tilted(-3e-4);
        const double a = numeric_phase(run(p), p, model).gravityDeltaPhi;
        const double b = numeric_phase(run(m), m, model).gravityDeltaPhi;
        CHECK(a == doctest::Approx(-b).epsilon(1e-6));
    }
    SUBCASE("additive over the two oscillations") {
        const auto s = tilted(5e-4);
        const auto r = run(s);
        const double T = r.atMidpoint.t;
        const double whole = numeric_phase(r, s, model).gravityDeltaPhi;
        const double first = numeric_phase(r, s, model, std::nullopt, T).gravityDeltaPhi;
        const double second = numeric_phase(r, s, model, T, std::nullopt).gravityDeltaPhi;
        CHECK(whole == doctest::Approx(first + second).epsilon(1e-9));
        // Single oscillation: branch A is the upper path, so phi1 = -(B - A) over [0, T].
        const auto p = analytic_phases(s, derive_quantities(s).period);
        CHECK(-first == doctest::Approx(p.phi1).epsilon(1e-4));
    }
    SUBCASE("trapezoid fallback stays close") {
        const auto s = tilted(5e-4);
        auto r = run(s);
        const double exact = numeric_phase(r, s, model).gravityDeltaPhi;
        r.exactIntegrals = false;
        CHECK(numeric_phase(r, s, model).gravityDeltaPhi == doctest::Approx(exact).epsilon(0.01));
    }
}

TEST_CASE("coarse sampling flag") {
    CHECK_FALSE(numeric_phase(run(paper_preset()), paper_preset(), GravityModel{}).coarseSampling);
    auto s = paper_preset();
    s.geometry.toothWidth = 10.0;
    s.geometry.biasField = 0.0;
    s.samplingInterval = 1e-3;
    CHECK(numeric_phase(run(s), s, GravityModel{}).coarseSampling);
}

TEST_CASE("spin-energy terms cancel for equal time in each state") {
    // Durations are dyadic so interval boundaries are exact in binary. Each
    // duration is spent once in |-1> by each branch, in shuffled order.
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> ticks(1, 4000);
    // Around 2000 s in total, so each branch carries ~1e13 rad of zero-field phase.
    std::vector<std::pair<double, bool>> intervals; // duration, A in |-1>
    for (int i = 0; i < 500; ++i) {
        const double d = std::ldexp(static_cast<double>(ticks(rng)), -10);
        intervals.emplace_back(d, true);
        intervals.emplace_back(d, false);
    }
    std::shuffle(intervals.begin(), intervals.end(), rng);

    SimulationResult r;
    double t = 0.0;
    for (const auto& [d, aDown] : intervals) {
        TrajectorySample smp;
        smp.t = t;
        smp.spinA = aDown ? SpinLabel::MinusOne : SpinLabel::Zero;
        smp.spinB = aDown ? SpinLabel::Zero : SpinLabel::MinusOne;
        r.samples.push_back(smp);
        t += d;
    }
    TrajectorySample last;
    last.t = t;
    r.samples.push_back(last);
    r.period = t / 2;

    const auto s = paper_preset();
    const auto n = numeric_phase(r, s, GravityModel{});
    CHECK(std::abs(n.ledger.branchA.zfs) > 1e13);
    CHECK(std::abs(n.ledger.branchA.zeemanBias) > 1e13);
    CHECK(std::abs(n.ledger.difference.zeemanBias) < 1e-9);
    CHECK(std::abs(n.ledger.difference.zfs) < 1e-9);
    CHECK(n.ledger.branchA.zfs == n.ledger.branchB.zfs);
}

TEST_CASE("phase ledger agrees with spin occupancy") {
    const auto s = paper_preset();
    const auto r = run(s);
    const auto occ = spin_occupancy(r);
    const auto n = numeric_phase(r, s, GravityModel{});
    const double biasRate = oracle::gPar * oracle::muB * oracle::bias / oracle::hbar;
    const double zfsRate = 2.0 * std::numbers::pi * 2.87e9;
    CHECK(n.ledger.branchA.zeemanBias == doctest::Approx(-biasRate * occ.minusOneA).epsilon(1e-12));
    CHECK(n.ledger.branchB.zfs == doctest::Approx(zfsRate * occ.minusOneB).epsilon(1e-12));
    CHECK(n.ledger.difference.zeemanBias ==
          doctest::Approx(biasRate * (occ.minusOneA - occ.minusOneB)).epsilon(1e-6));
    CHECK(n.ledger.difference.zfs == doctest::Approx(zfsRate * (occ.minusOneB - occ.minusOneA)).epsilon(1e-6));
    CHECK(n.deltaPhi == doctest::Approx(n.ledger.difference.total()));
}

TEST_CASE("readout probability") {
    CHECK(readout_probability(0.0) == 1.0);
    CHECK(readout_probability(std::numbers::pi) == doctest::Approx(0.0));
    for (double d = -10.0; d <= 10.0; d += 0.37) {
        const double pA = readout_probability(d);
        CHECK(pA >= 0.0);
        CHECK(pA <= 1.0);
        CHECK(pA + std::pow(std::sin(0.5 * d), 2) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("fringe scan") {
    const auto s = paper_preset();
    const auto f = fringe_scan(s, -500e-6, 500e-6, 201);
    REQUIRE(f.phi.size() == 201);
    CHECK(f.phi.front() == -500e-6);
    CHECK(f.phi.back() == 500e-6);
    CHECK(f.probabilityA[100] == 1.0);
    const auto [lo, hi] = std::minmax_element(f.probabilityA.begin(), f.probabilityA.end());
    CHECK(*lo < 0.01);
    CHECK(*hi == 1.0);

    const auto single = fringe_scan(s, 0.0, 0.0, 1);
    CHECK(single.deltaPhi.size() == 1);
    CHECK_THROWS_AS(fringe_scan(s, 0.0, 1e-4, 1), std::invalid_argument);
    CHECK_THROWS_AS(fringe_scan(s, 0.0, 1e-4, 0), std::invalid_argument);
    CHECK_THROWS_AS(fringe_scan(s, 1e-4, 0.0, 5), std::invalid_argument);

    const auto csv = fringe_to_csv(single);
    CHECK(csv.rfind("phi_rad,dphi_rad,pA\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("numeric and analytic fringes agree") {
    const auto s = paper_preset();
    const auto a = fringe_scan(s, -500e-6, 500e-6, 21, PhaseMode::Analytic);
    const auto n = fringe_scan(s, -500e-6, 500e-6, 21, PhaseMode::Numeric, InterferometerVariant::TwoOscillation, 4);
    for (std::size_t i = 0; i < a.phi.size(); ++i)
        CHECK(std::abs(a.probabilityA[i] - n.probabilityA[i]) < 0.01);
    const auto as = fringe_scan(s, 0.0, 2e-10, 3, PhaseMode::Analytic, InterferometerVariant::SingleOscillation);
    const auto ns = fringe_scan(s, 0.0, 2e-10, 3, PhaseMode::Numeric, InterferometerVariant::SingleOscillation, 2);
    for (std::size_t i = 0; i < 3; ++i) CHECK(ns.deltaPhi[i] == doctest::Approx(as.deltaPhi[i]).epsilon(1e-3));
}

TEST_CASE("unseparated branches are rejected") {
    const auto nominal = paper_preset();
    auto drifted = nominal;
    drifted.geometry.gradientMagnitude *= 1.05;
    const auto r = simulate_branches(drifted, build_schedule(nominal));
    CHECK_FALSE(r.recombined());
    CHECK_THROWS_AS(require_separable(r), NotSeparableError);
    CHECK_NOTHROW(require_separable(run(nominal)));
}
