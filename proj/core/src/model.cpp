#include "sgdrop/model.hpp"

#include <cmath>
#include <numbers>

namespace sgdrop {
namespace {

std::string join_messages(const std::vector<ValidationIssue>& issues) {
    std::string out = "invalid scenario:";
    for (const auto& issue : issues) {
        if (!issue.fatal) continue;
        out += " [" + issue.field + "] " + issue.message + ";";
    }
    return out;
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

} // namespace

InvalidScenario::InvalidScenario(std::vector<ValidationIssue> issues)
    : std::runtime_error(join_messages(issues)), issues_(std::move(issues)) {}

Scenario paper_preset() { return Scenario{}; }

std::vector<ValidationIssue> validate_scenario(const Scenario& s) {
    std::vector<ValidationIssue> issues;
    auto require_positive = [&](const char* field, double v) {
        if (!finite_positive(v)) issues.push_back({field, "must be finite and strictly positive"});
    };

    require_positive("constants.bohrMagneton", s.constants.bohrMagneton);
    require_positive("constants.vacuumPermeability", s.constants.vacuumPermeability);
    require_positive("constants.hbar", s.constants.hbar);
    require_positive("constants.gSurface", s.constants.gSurface);
    require_positive("constants.earthRadius", s.constants.earthRadius);

    const auto& d = s.diamond;
    require_positive("diamond.mass", d.mass);
    require_positive("diamond.volume", d.volume);
    require_positive("diamond.density", d.density);
    if (!std::isfinite(d.susceptibility) || d.susceptibility >= 0.0)
        issues.push_back({"diamond.susceptibility", "susceptibility must be negative"});
    if (!(d.gFactorParallel > 1.9 && d.gFactorParallel < 2.1))
        issues.push_back({"diamond.gFactorParallel", "must lie in (1.9, 2.1)"});
    if (!std::isfinite(d.zfs) || d.zfs < 0.0)
        issues.push_back({"diamond.zfs", "must be finite and non-negative"});
    if (finite_positive(d.mass) && finite_positive(d.volume) && finite_positive(d.density)) {
        const double implied = d.density * d.volume;
        if (std::abs(d.mass - implied) > 0.02 * implied)
            issues.push_back({"diamond.mass", "differs from density*volume by more than 2%", false});
    }

    const auto& g = s.geometry;
    require_positive("geometry.homogeneousLength", g.homogeneousLength);
    require_positive("geometry.toothWidth", g.toothWidth);
    require_positive("geometry.gradientMagnitude", g.gradientMagnitude);
    require_positive("geometry.teethRegionLength", g.teethRegionLength);
    if (!(g.firstToothFraction > 0.0 && g.firstToothFraction <= 1.0))
        issues.push_back({"geometry.firstToothFraction", "must lie in (0, 1]"});
    if (!std::isfinite(g.biasField))
        issues.push_back({"geometry.biasField", "must be finite"});

    if (!std::isfinite(s.frame.phi) || std::abs(s.frame.phi) >= 1e-3)
        issues.push_back({"frame.phi", "tilt outside small-angle regime (|phi| < 1e-3 rad)"});

    if (!finite_positive(s.samplingInterval)) {
        issues.push_back({"samplingInterval", "must be finite and strictly positive"});
    } else if (finite_positive(d.density) && std::isfinite(d.susceptibility) && d.susceptibility < 0.0 &&
               finite_positive(g.gradientMagnitude) && finite_positive(s.constants.vacuumPermeability)) {
        const double omega = std::sqrt(std::abs(d.susceptibility) / (d.density * s.constants.vacuumPermeability)) *
                             g.gradientMagnitude;
        if (s.samplingInterval >= 2.0 * std::numbers::pi / omega)
            issues.push_back({"samplingInterval", "must be shorter than the oscillation period"});
    }
    return issues;
}

std::vector<ValidationIssue> require_valid(const Scenario& scenario) {
    auto issues = validate_scenario(scenario);
    std::vector<ValidationIssue> warnings;
    bool fatal = false;
    for (const auto& issue : issues) {
        if (issue.fatal) fatal = true;
        else warnings.push_back(issue);
    }
    if (fatal) throw InvalidScenario(std::move(issues));
    return warnings;
}

double diamagnetic_stiffness(const Scenario& s) {
    const double b = s.geometry.gradientMagnitude;
    return std::abs(s.diamond.susceptibility) * s.diamond.volume * b * b / s.constants.vacuumPermeability;
}

AnalyticDerived derive_quantities(const Scenario& s) {
    const double chi = std::abs(s.diamond.susceptibility);
    const double volume = s.diamond.volume;
    const double gradient = s.geometry.gradientMagnitude;
    if (chi == 0.0 || volume == 0.0 || gradient == 0.0) {
        throw InvalidScenario(std::vector<ValidationIssue>{{"diamond.susceptibility|diamond.volume|geometry.gradientMagnitude",
                                "zero susceptibility, volume or gradient makes the closed forms singular", true}});
    }
    const auto& c = s.constants;
    const double g = s.diamond.gFactorParallel;

    AnalyticDerived out;
    out.equilibriumOffset = g * c.bohrMagneton * c.vacuumPermeability / (volume * chi * gradient);
    out.maxSeparation = 2.0 * out.equilibriumOffset;
    out.angularFrequency = std::sqrt(chi / (s.diamond.density * c.vacuumPermeability)) * gradient;
    out.period = 2.0 * std::numbers::pi / out.angularFrequency;
    out.commonModeAccel =
        chi * volume * gradient * s.geometry.biasField / (s.diamond.mass * c.vacuumPermeability);
    out.spinAccel = g * c.bohrMagneton * gradient / s.diamond.mass;
    return out;
}

} // namespace sgdrop
