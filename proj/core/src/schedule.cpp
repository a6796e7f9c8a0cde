#include "sgdrop/schedule.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include "sgdrop/csv.hpp"
#include "sgdrop/field.hpp"

namespace sgdrop {

double DropKinematics::time_at(double z) const noexcept {
    if (z <= 0.0) return 0.0;
    return 2.0 * z / (entryVelocity + std::sqrt(entryVelocity * entryVelocity + 2.0 * gVertical * z));
}

double entry_velocity(double homogeneousLength, double g) {
    if (homogeneousLength < 0.0 || !(g > 0.0))
        throw ScheduleError("entry_velocity: length must be >= 0 and g > 0");
    return std::sqrt(2.0 * g * homogeneousLength);
}

DropKinematics kinematics_for(const Scenario& scenario) {
    DropKinematics k;
    k.gVertical = scenario.constants.gSurface;
    k.entryVelocity = entry_velocity(scenario.geometry.homogeneousLength, k.gVertical);
    k.teethRegionLength = scenario.geometry.teethRegionLength;
    return k;
}

std::vector<double> crossing_times(const DropKinematics& kinematics, const MagnetGeometry& geometry,
                                   std::optional<double> horizon) {
    const IdealToothField field(geometry);
    std::vector<double> times;
    for (std::size_t k = 0;; ++k) {
        const double z = field.breakpoint(k);
        if (z >= kinematics.teethRegionLength) break;
        const double t = kinematics.time_at(z);
        if (horizon && t >= *horizon) break;
        times.push_back(t);
    }
    return times;
}

std::string_view to_string(PulseKind kind) {
    switch (kind) {
    case PulseKind::PiHalfOpen: return "PI_HALF_OPEN";
    case PulseKind::Pi: return "PI";
    case PulseKind::PiMidpoint: return "PI_MIDPOINT";
    case PulseKind::PiMidpointMerged: return "PI_MIDPOINT_MERGED";
    case PulseKind::PiHalfClose: return "PI_HALF_CLOSE";
    }
    return "?";
}

std::string_view to_string(PulseAxis axis) { return axis == PulseAxis::X ? "X" : "Y"; }

std::size_t PulseSchedule::pi_count() const {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const auto& e) { return e.is_pi(); }));
}

namespace {

constexpr std::array<PulseAxis, 8> kXy8 = {PulseAxis::X, PulseAxis::Y, PulseAxis::X, PulseAxis::Y,
                                           PulseAxis::Y, PulseAxis::X, PulseAxis::Y, PulseAxis::X};

void relabel(std::vector<PulseEvent>& events) {
    std::size_t piOrdinal = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        events[i].index = i;
        events[i].axis = events[i].is_pi() ? kXy8[piOrdinal++ % kXy8.size()] : PulseAxis::X;
    }
}

} // namespace

PulseSchedule build_schedule(const DropKinematics& kinematics, const MagnetGeometry& geometry, double period) {
    if (!(period > 0.0)) throw ScheduleError("build_schedule: period must be positive");
    const double close = 2.0 * period;
    const double fallen = kinematics.distance_at(close);
    if (fallen > kinematics.teethRegionLength) {
        std::ostringstream msg;
        msg << "schedule truncated: the diamond falls " << fallen << " m in 2T but the teeth region is only "
            << kinematics.teethRegionLength << " m (shortfall " << fallen - kinematics.teethRegionLength << " m)";
        throw ScheduleError(msg.str());
    }

    const auto crossings = crossing_times(kinematics, geometry, close);
    PulseSchedule schedule;
    schedule.kinematics = kinematics;
    schedule.period = period;
    schedule.crossingCount = crossings.size();

    auto& ev = schedule.events;
    ev.reserve(crossings.size() + 3);
    ev.push_back({0.0, PulseKind::PiHalfOpen});
    bool midpointPlaced = false;
    for (double t : crossings) {
        if (t <= 0.0) continue;
        if (!midpointPlaced && std::abs(t - period) <= kMidpointMergeTolerance) {
            ev.push_back({t, PulseKind::PiMidpointMerged});
            midpointPlaced = true;
            continue;
        }
        if (!midpointPlaced && t > period) {
            ev.push_back({period, PulseKind::PiMidpoint});
            midpointPlaced = true;
        }
        ev.push_back({t, PulseKind::Pi});
    }
    if (!midpointPlaced) ev.push_back({period, PulseKind::PiMidpoint});
    ev.push_back({close, PulseKind::PiHalfClose});
    relabel(ev);
    return schedule;
}

PulseSchedule build_schedule(const Scenario& scenario) {
    return build_schedule(kinematics_for(scenario), scenario.geometry, derive_quantities(scenario).period);
}

void validate_schedule(const PulseSchedule& schedule) {
    const auto& ev = schedule.events;
    if (ev.size() < 2) throw ScheduleError("schedule needs at least the opening and closing pulses");
    if (ev.front().kind != PulseKind::PiHalfOpen) throw ScheduleError("schedule must start with PI_HALF_OPEN");
    if (ev.back().kind != PulseKind::PiHalfClose) throw ScheduleError("schedule must end with PI_HALF_CLOSE");
    for (std::size_t i = 1; i < ev.size(); ++i) {
        if (!(ev[i].time > ev[i - 1].time)) {
            std::ostringstream msg;
            msg << "event times not strictly increasing at index " << i << " (" << ev[i - 1].time << " -> "
                << ev[i].time << ")";
            throw ScheduleError(msg.str());
        }
        if (ev[i].kind == PulseKind::PiHalfOpen || (ev[i].kind == PulseKind::PiHalfClose && i + 1 != ev.size()))
            throw ScheduleError("pi/2 pulses may only open and close the schedule");
    }
}

namespace {

// Time to fall from the reference point to z given speed v0 there.
double transit(double z, double v0, double g) { return 2.0 * z / (v0 + std::sqrt(v0 * v0 + 2.0 * g * z)); }

} // namespace

GateCalibration calibrate_from_gates(const std::vector<double>& gateZ, const std::vector<double>& gateTimes,
                                     double g) {
    if (gateZ.size() != gateTimes.size()) throw ScheduleError("gate position and time lists differ in length");
    if (gateZ.size() < 2) throw ScheduleError("need at least 2 timing gates");
    if (!(g > 0.0)) throw ScheduleError("g must be positive");

    const auto [lo, hi] = std::minmax_element(gateZ.begin(), gateZ.end());
    if (*lo == *hi) throw ScheduleError("degenerate gate placement: all gates at the same z");
    const auto iLo = static_cast<std::size_t>(lo - gateZ.begin());
    const auto iHi = static_cast<std::size_t>(hi - gateZ.begin());
    if (*lo < 0.0) throw ScheduleError("gate positions must be >= 0 (measured from the reference point)");

    // Two-gate inversion on the outermost pair: the transit time between them
    // decreases monotonically with v0, so bisect.
    const double dt = gateTimes[iHi] - gateTimes[iLo];
    auto gap = [&](double v0) { return transit(*hi, v0, g) - transit(*lo, v0, g); };
    if (!(dt > 0.0) || dt > gap(0.0))
        throw ScheduleError("gate times are inconsistent with a forward fall from rest or faster");
    double a = 0.0, b = 1.0;
    while (gap(b) > dt) b *= 2.0;
    for (int i = 0; i < 200 && b - a > 0.0; ++i) {
        const double mid = 0.5 * (a + b);
        if (mid == a || mid == b) break;
        (gap(mid) > dt ? a : b) = mid;
    }
    double v0 = 0.5 * (a + b);
    double t0 = gateTimes[iLo] - transit(*lo, v0, g);

    // Gauss-Newton on timing residuals for the over-determined case.
    const std::size_t n = gateZ.size();
    if (n > 2) {
        for (int iter = 0; iter < 50; ++iter) {
            double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double tau = transit(gateZ[i], v0, g);
                const double r = gateTimes[i] - (t0 + tau);
                const double dTauDv = -tau / (v0 + g * tau);
                jtj00 += dTauDv * dTauDv;
                jtj01 += dTauDv;
                jtj11 += 1.0;
                jtr0 += dTauDv * r;
                jtr1 += r;
            }
            const double det = jtj00 * jtj11 - jtj01 * jtj01;
            if (det == 0.0) break;
            const double dv = (jtr0 * jtj11 - jtj01 * jtr1) / det;
            const double dt0 = (jtj00 * jtr1 - jtj01 * jtr0) / det;
            v0 += dv;
            t0 += dt0;
            if (std::abs(dv) <= 1e-15 * std::abs(v0) && std::abs(dt0) <= 1e-18) break;
        }
    }
    if (!(v0 > 0.0)) throw ScheduleError("gate fit produced a non-positive entry velocity");

    GateCalibration cal{gateZ, gateTimes, v0, t0, 0.0};
    double sumSq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = gateTimes[i] - (t0 + transit(gateZ[i], v0, g));
        sumSq += r * r;
    }
    cal.residual = std::sqrt(sumSq / static_cast<double>(n));
    return cal;
}

PulseSchedule apply_jitter(const PulseSchedule& schedule, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw ScheduleError("jitter sigma must be >= 0");
    PulseSchedule out = schedule;
    if (sigma == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& e : out.events) e.time += noise(rng);
    for (std::size_t i = 1; i < out.events.size(); ++i) {
        if (!(out.events[i].time > out.events[i - 1].time)) {
            std::ostringstream msg;
            msg << "jitter sigma " << sigma << " s reorders events " << i - 1 << " and " << i;
            throw ScheduleError(msg.str());
        }
    }
    return out;
}

std::string schedule_to_csv(const PulseSchedule& schedule) {
    std::ostringstream out;
    out << "index,time_s,kind,axis\n";
    for (const auto& e : schedule.events)
        out << e.index << ',' << csv::format_double(e.time) << ',' << to_string(e.kind) << ',' << to_string(e.axis)
            << '\n';
    return out.str();
}

void write_schedule_csv(const PulseSchedule& schedule, const std::filesystem::path& path) {
    csv::write_text(path, schedule_to_csv(schedule));
}

PulseSchedule read_schedule_csv(const std::filesystem::path& path, const DropKinematics& kinematics,
                                double period) {
    std::vector<std::string> lines;
    try {
        lines = csv::read_lines(path);
    } catch (const std::runtime_error& e) {
        throw ScheduleError(e.what());
    }
    if (lines.empty() || csv::split_line(lines.front()) != std::vector<std::string>{"index", "time_s", "kind", "axis"})
        throw ScheduleError(path.string() + ": expected header index,time_s,kind,axis");

    PulseSchedule schedule;
    schedule.kinematics = kinematics;
    schedule.period = period;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto f = csv::split_line(lines[li]);
        auto fail = [&](const std::string& why) {
            return ScheduleError(path.string() + ":" + std::to_string(li + 1) + ": " + why);
        };
        if (f.size() != 4) throw fail("expected 4 columns");
        PulseEvent e;
        auto [p1, ec1] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), e.index);
        auto [p2, ec2] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), e.time);
        if (ec1 != std::errc{} || ec2 != std::errc{} || p2 != f[1].data() + f[1].size())
            throw fail("bad index or time");
        bool known = false;
        for (auto kind : {PulseKind::PiHalfOpen, PulseKind::Pi, PulseKind::PiMidpoint, PulseKind::PiMidpointMerged,
                          PulseKind::PiHalfClose}) {
            if (f[2] == to_string(kind)) {
                e.kind = kind;
                known = true;
            }
        }
        if (!known) throw fail("unknown pulse kind '" + f[2] + "'");
        if (f[3] == "X") e.axis = PulseAxis::X;
        else if (f[3] == "Y") e.axis = PulseAxis::Y;
        else throw fail("unknown axis '" + f[3] + "'");
        if (e.kind == PulseKind::Pi) ++schedule.crossingCount;
        if (e.kind == PulseKind::PiMidpointMerged) ++schedule.crossingCount;
        schedule.events.push_back(e);
    }
    validate_schedule(schedule);
    return schedule;
}

} // namespace sgdrop
