#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "sgdrop/field.hpp"
#include "sgdrop/schedule.hpp"

using namespace sgdrop;

namespace {

// Brute-force oracle: step time finely and count sign changes of the field
// seen at z(t). Steps are far shorter than the smallest crossing gap.
std::size_t brute_force_crossings(const Scenario& s, double dt) {
    const IdealToothField field(s.geometry);
    const double v0 = oracle::entry_velocity(s.geometry.homogeneousLength);
    std::size_t count = 0;
    int prev = field.sign_at(0.0);
    for (std::size_t i = 1;; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double z = v0 * t + 0.5 * oracle::g0 * t * t;
        if (z >= s.geometry.teethRegionLength) break;
        const int sign = field.sign_at(z);
        if (sign != prev) ++count;
        prev = sign;
    }
    return count;
}

} // namespace

TEST_CASE("entry velocity") {
    CHECK(entry_velocity(1.27, 9.81) == doctest::Approx(oracle::entry_velocity()).epsilon(1e-15));
    CHECK(entry_velocity(1.27, 9.81) == doctest::Approx(4.992).epsilon(1e-3 / 4.992));
    CHECK(entry_velocity(0.0, 9.81) == 0.0);
    CHECK(entry_velocity(5.08, 9.81) == doctest::Approx(2.0 * entry_velocity(1.27, 9.81)).epsilon(1e-15));
    CHECK_THROWS_AS(entry_velocity(-1.0, 9.81), ScheduleError);
}

TEST_CASE("time_at inverts distance_at") {
    const DropKinematics kin{4.99, 9.81, 1.13};
    for (double z : {0.0, 1e-9, 57.5e-6, 0.1, 0.5, 1.129}) {
        CHECK(kin.distance_at(kin.time_at(z)) == doctest::Approx(z).epsilon(1e-14));
    }
}

TEST_CASE("crossing from rest after half a g-second") {
    MagnetGeometry geom;
    geom.toothWidth = 9.81;
    geom.firstToothFraction = 0.5;
    geom.teethRegionLength = 5.0;
    const DropKinematics kin{0.0, 9.81, 5.0};
    const auto t = crossing_times(kin, geom);
    REQUIRE(t.size() == 1);
    CHECK(t[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("crossings of the default teeth region") {
    const auto s = paper_preset();
    const auto t = crossing_times(kinematics_for(s), s.geometry);
    CHECK(std::abs(static_cast<double>(t.size()) - 9800.0) <= 0.02 * 9800.0);
    CHECK(t.size() == brute_force_crossings(s, 1e-6));
    CHECK(std::abs(t.back() - 0.190) <= 0.01 * 0.190);
    for (std::size_t i = 2; i < t.size(); ++i) CHECK(t[i] - t[i - 1] < t[i - 1] - t[i - 2]);
}

TEST_CASE("pulse times map back to breakpoints") {
    const auto s = paper_preset();
    const auto sched = build_schedule(s);
    const IdealToothField field(s.geometry);
    std::size_t k = 0;
    for (const auto& e : sched.events) {
        if (e.kind != PulseKind::Pi && e.kind != PulseKind::PiMidpointMerged) continue;
        const double z = sched.kinematics.distance_at(e.time);
        CHECK(std::abs(z - field.breakpoint(k)) < 1e-12);
        ++k;
    }
    CHECK(k == sched.crossingCount);
}

TEST_CASE("schedule structure") {
    const auto s = paper_preset();
    const auto sched = build_schedule(s);
    const double T = oracle::period();
    REQUIRE_NOTHROW(validate_schedule(sched));
    CHECK(sched.events.front().kind == PulseKind::PiHalfOpen);
    CHECK(sched.events.front().time == 0.0);
    CHECK(sched.events.back().kind == PulseKind::PiHalfClose);
    CHECK(sched.events.back().time == doctest::Approx(2.0 * T).epsilon(1e-12));
    const bool merged = std::any_of(sched.events.begin(), sched.events.end(),
                                    [](const PulseEvent& e) { return e.kind == PulseKind::PiMidpointMerged; });
    CHECK(sched.pi_count() == sched.crossingCount + (merged ? 0 : 1));
    CHECK(std::abs(static_cast<double>(sched.pi_count()) - 9801.0) <= 0.02 * 9801.0);
    for (std::size_t i = 1; i < sched.events.size(); ++i) CHECK(sched.events[i].time > sched.events[i - 1].time);

    SUBCASE("XY8 cycle over pi pulses") {
        const PulseAxis expected[] = {PulseAxis::X, PulseAxis::Y, PulseAxis::X, PulseAxis::Y,
                                      PulseAxis::Y, PulseAxis::X, PulseAxis::Y, PulseAxis::X};
        std::size_t n = 0;
        for (const auto& e : sched.events) {
            if (!e.is_pi()) {
                CHECK(e.axis == PulseAxis::X);
                continue;
            }
            CHECK(e.axis == expected[n % 8]);
            ++n;
        }
    }
    SUBCASE("midpoint pulse at T") {
        const auto mid = std::find_if(sched.events.begin(), sched.events.end(), [](const PulseEvent& e) {
            return e.kind == PulseKind::PiMidpoint || e.kind == PulseKind::PiMidpointMerged;
        });
        REQUIRE(mid != sched.events.end());
        CHECK(std::abs(mid->time - T) <= kMidpointMergeTolerance);
    }
}

TEST_CASE("tooth-free schedule") {
    auto s = paper_preset();
    s.geometry.toothWidth = 10.0;
    const auto sched = build_schedule(s);
    REQUIRE(sched.events.size() == 3);
    CHECK(sched.events[0].kind == PulseKind::PiHalfOpen);
    CHECK(sched.events[1].kind == PulseKind::PiMidpoint);
    CHECK(sched.events[2].kind == PulseKind::PiHalfClose);
    CHECK(sched.crossingCount == 0);
}

TEST_CASE("midpoint merges with a coincident crossing") {
    const auto s = paper_preset();
    const auto kin = kinematics_for(s);
    const IdealToothField field(s.geometry);
    // Pick T so that it lands exactly on the 4000th crossing.
    const double T = kin.time_at(field.breakpoint(3999));
    const auto sched = build_schedule(kin, s.geometry, T);
    std::size_t merged = 0;
    for (const auto& e : sched.events) {
        if (e.kind == PulseKind::PiMidpointMerged) {
            ++merged;
            CHECK(e.spin_flips() == 2);
        }
        CHECK(e.kind != PulseKind::PiMidpoint);
    }
    CHECK(merged == 1);
    CHECK(sched.pi_count() == sched.crossingCount);
}

TEST_CASE("truncated teeth region") {
    auto s = paper_preset();
    s.geometry.teethRegionLength = 0.5;
    try {
        build_schedule(s);
        FAIL("expected ScheduleError");
    } catch (const ScheduleError& e) {
        CHECK(std::string(e.what()).find("shortfall") != std::string::npos);
    }
}

TEST_CASE("first-tooth fraction shifts the first crossing") {
    auto s = paper_preset();
    const double half = build_schedule(s).events[1].time;
    s.geometry.firstToothFraction = 1.0;
    const double full = build_schedule(s).events[1].time;
    const double v0 = oracle::entry_velocity();
    // Extra 57.5 um of fall at ~v0.
    CHECK(full - half == doctest::Approx(57.5e-6 / v0).epsilon(1e-4));
}

TEST_CASE("gate calibration") {
    const double g = 9.81;
    auto arrival = [&](double z, double v0, double t0) { return t0 + 2.0 * z / (v0 + std::sqrt(v0 * v0 + 2 * g * z)); };
    SUBCASE("two exact gates") {
        const auto cal = calibrate_from_gates({0.5, 1.0}, {arrival(0.5, 3.0, 0.0), arrival(1.0, 3.0, 0.0)}, g);
        CHECK(cal.fittedV0 == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(std::abs(cal.fittedTimeOffset) < 1e-12);
        CHECK(cal.residual < 1e-15);
    }
    SUBCASE("noiseless gates recover v0 and offset") {
        const std::vector<double> z{0.1, 0.3, 0.6, 0.9, 1.2};
        std::vector<double> t;
        for (double zi : z) t.push_back(arrival(zi, 4.99, 0.0125));
        const auto cal = calibrate_from_gates(z, t, g);
        CHECK(cal.fittedV0 == doctest::Approx(4.99).epsilon(1e-12));
        CHECK(cal.fittedTimeOffset == doctest::Approx(0.0125).epsilon(1e-10));
    }
    SUBCASE("1 ns timing noise") {
        const std::vector<double> z{0.1, 0.3, 0.6, 0.9, 1.2};
        std::vector<double> t;
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> noise(-1e-9, 1e-9);
        for (double zi : z) t.push_back(arrival(zi, 4.99, 0.0) + noise(rng));
        const auto cal = calibrate_from_gates(z, t, g);
        CHECK(std::abs(cal.fittedV0 - 4.99) < 1e-5);
    }
    SUBCASE("degenerate gates") {
        CHECK_THROWS_AS(calibrate_from_gates({0.5, 0.5}, {0.1, 0.2}, g), ScheduleError);
        CHECK_THROWS_AS(calibrate_from_gates({0.5}, {0.1}, g), ScheduleError);
    }
}

TEST_CASE("jitter") {
    const auto sched = build_schedule(paper_preset());
    SUBCASE("sigma zero is the identity") {
        const auto same = apply_jitter(sched, 0.0, 99);
        REQUIRE(same.events.size() == sched.events.size());
        for (std::size_t i = 0; i < sched.events.size(); ++i) CHECK(same.events[i].time == sched.events[i].time);
    }
    SUBCASE("seeded determinism") {
        const auto a = apply_jitter(sched, 1e-9, 7);
        const auto b = apply_jitter(sched, 1e-9, 7);
        const auto c = apply_jitter(sched, 1e-9, 8);
        CHECK(schedule_to_csv(a) == schedule_to_csv(b));
        CHECK(schedule_to_csv(a) != schedule_to_csv(c));
    }
    SUBCASE("1 ns keeps every gap positive") {
        const auto j = apply_jitter(sched, 1e-9, 3);
        double minGap = 1.0;
        for (std::size_t i = 1; i < j.events.size(); ++i) {
            CHECK(j.events[i].time > j.events[i - 1].time);
            if (sched.events[i - 1].kind == PulseKind::Pi && sched.events[i].kind == PulseKind::Pi)
                minGap = std::min(minGap, j.events[i].time - j.events[i - 1].time);
        }
        // w / v_max with v_max = v0 + g 2T.
        const double vMax = oracle::entry_velocity() + oracle::g0 * 2.0 * oracle::period();
        CHECK(minGap == doctest::Approx(115e-6 / vMax).epsilon(1e-3));
    }
    SUBCASE("extreme sigma reorders") { CHECK_THROWS_AS(apply_jitter(sched, 1e-3, 1), ScheduleError); }
    SUBCASE("negative sigma") { CHECK_THROWS_AS(apply_jitter(sched, -1.0, 1), ScheduleError); }
}

TEST_CASE("schedule CSV round trip") {
    const auto s = paper_preset();
    const auto sched = build_schedule(s);
    const auto path = std::filesystem::temp_directory_path() / "sgdrop_schedule.csv";
    write_schedule_csv(sched, path);
    const auto back = read_schedule_csv(path, sched.kinematics, sched.period);
    REQUIRE(back.events.size() == sched.events.size());
    for (std::size_t i = 0; i < sched.events.size(); ++i) {
        CHECK(back.events[i].time == sched.events[i].time);
        CHECK(back.events[i].kind == sched.events[i].kind);
        CHECK(back.events[i].axis == sched.events[i].axis);
    }
    CHECK(back.crossingCount == sched.crossingCount);
}

TEST_CASE("schedule validation") {
    auto sched = build_schedule(paper_preset());
    std::swap(sched.events[3], sched.events[4]);
    CHECK_THROWS_AS(validate_schedule(sched), ScheduleError);
    auto open = build_schedule(paper_preset());
    open.events.erase(open.events.begin());
    CHECK_THROWS_AS(validate_schedule(open), ScheduleError);
}
