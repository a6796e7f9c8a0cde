#include "timeline.hpp"

#include <algorithm>
#include <cmath>

namespace sgdrop::detail {

Timeline build_timeline(const Scenario& scenario, const PulseSchedule& schedule, const std::vector<double>& crossings) {
    Timeline tl;
    tl.start = schedule.open_time();
    const double close = schedule.close_time();

    std::vector<Boundary> raw;
    raw.reserve(crossings.size() + schedule.events.size() + static_cast<std::size_t>(close / scenario.samplingInterval) + 2);

    std::size_t crossedBeforeStart = 0;
    for (double t : crossings) {
        if (t <= tl.start) {
            ++crossedBeforeStart;
            continue;
        }
        if (t >= close) break;
        raw.push_back({t, true, 0, false, false, true});
    }
    if (tl.start < 0.0) {
        tl.initialSigma = 0;
        raw.push_back({0.0, true, 0, false, false, false});
    } else {
        tl.initialSigma = crossedBeforeStart % 2 == 0 ? +1 : -1;
    }

    for (const auto& e : schedule.events) {
        if (e.kind == PulseKind::PiMidpoint || e.kind == PulseKind::PiMidpointMerged) tl.midpointTime = e.time;
        if (e.time <= tl.start) continue;
        raw.push_back({e.time, false, e.spin_flips(), false, true, false});
    }

    const double h = scenario.samplingInterval;
    for (long long k = std::max(0LL, static_cast<long long>(std::ceil(tl.start / h)));; ++k) {
        const double t = static_cast<double>(k) * h;
        if (t >= close) break;
        if (t <= tl.start) continue;
        raw.push_back({t, false, 0, true, false, false});
    }

    std::stable_sort(raw.begin(), raw.end(), [](const Boundary& a, const Boundary& b) { return a.t < b.t; });
    for (const auto& b : raw) {
        if (!tl.boundaries.empty() && tl.boundaries.back().t == b.t) {
            auto& m = tl.boundaries.back();
            m.fieldChange = m.fieldChange != b.fieldChange;
            m.spinFlips += b.spinFlips;
            m.cadence = m.cadence || b.cadence;
            m.pulse = m.pulse || b.pulse;
            m.crossing = m.crossing || b.crossing;
        } else {
            tl.boundaries.push_back(b);
        }
    }
    return tl;
}

Timeline build_timeline(const Scenario& scenario, const PulseSchedule& schedule) {
    const auto kin = kinematics_for(scenario);
    return build_timeline(scenario, schedule, crossing_times(kin, scenario.geometry, schedule.close_time()));
}

} // namespace sgdrop::detail
