#include "sgdrop/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sgdrop/compensated.hpp"
#include "sgdrop/csv.hpp"
#include "sgdrop/dynamics.hpp"
#include "sgdrop/parallel.hpp"
#include "sgdrop/reference_integrator.hpp"
#include "sgdrop/scenario_io.hpp"
#include "sgdrop/schedule.hpp"

#ifndef SGDROP_VERSION_STRING
#define SGDROP_VERSION_STRING "0.0.0"
#endif

namespace sgdrop {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ExperimentReport make_report(std::string name, std::vector<std::string> columns, const Scenario& scenario) {
    ExperimentReport r;
    r.name = std::move(name);
    r.columns = std::move(columns);
    r.scenarioHash = scenario_hash(scenario);
    r.version = version_string();
    return r;
}

// Signed separation and relative velocity at the last sample.
struct CloseState {
    double separation = 0.0;
    double velocity = 0.0;
};
CloseState close_state(const SimulationResult& result) {
    const auto& s = result.samples.back();
    return {s.xB - s.xA, s.vB - s.vA};
}

double mean(const std::vector<double>& v) {
    CompensatedSum<double> acc;
    for (double x : v) acc += x;
    return v.empty() ? kNaN : acc.value() / static_cast<double>(v.size());
}

double max_of(const std::vector<double>& v) {
    return v.empty() ? kNaN : *std::max_element(v.begin(), v.end());
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t stream) {
    // splitmix64 step: decorrelates neighbouring trial indices.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(stream) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// RFC 4180 quoting for free-text fields.
std::string quote_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

std::string point_filename(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "point_%04zu.csv", index);
    return buf;
}

} // namespace

std::string version_string() { return SGDROP_VERSION_STRING; }

void validate_config(const ExperimentConfig& config) {
    require_valid(config.scenario);
    if (!config.axis) return;
    const auto& axis = *config.axis;
    if (axis.values.empty()) throw std::invalid_argument("sweep axis '" + axis.parameter + "' has no values");
    for (double v : axis.values)
        if (!std::isfinite(v)) throw std::invalid_argument("sweep axis '" + axis.parameter + "' has a non-finite value");
    (void)get_parameter(config.scenario, axis.parameter); // throws ConfigError on unknown keys
}

std::optional<double> ExperimentReport::headline_value(const std::string& key) const {
    for (const auto& [k, v] : headline)
        if (k == key) return v;
    return std::nullopt;
}

std::optional<double> ExperimentReport::value(std::size_t row, const std::string& column) const {
    if (row >= rows.size()) return std::nullopt;
    const auto it = std::find(columns.begin(), columns.end(), column);
    if (it == columns.end()) return std::nullopt;
    const auto i = static_cast<std::size_t>(it - columns.begin());
    if (i >= rows[row].values.size()) return std::nullopt;
    return rows[row].values[i];
}

std::string report_to_json(const ExperimentReport& report) {
    nlohmann::ordered_json j;
    j["experiment"] = report.name;
    nlohmann::ordered_json headline = nlohmann::ordered_json::object();
    for (const auto& [k, v] : report.headline) headline[k] = v;
    j["headline"] = headline;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : report.rows) {
        nlohmann::ordered_json r;
        r["index"] = row.index;
        if (!row.label.empty()) r["label"] = row.label;
        for (std::size_t i = 0; i < report.columns.size() && i < row.values.size(); ++i)
            r[report.columns[i]] = row.values[i];
        if (!row.error.empty()) r["error"] = row.error;
        rows.push_back(r);
    }
    j["rows"] = rows;
    j["failures"] = report.failures;
    char hash[19];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(report.scenarioHash));
    j["provenance"] = {{"scenarioHash", hash}, {"version", report.version}};
    return j.dump(2) + "\n";
}

std::string report_rows_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "index,label";
    for (const auto& c : report.columns) out << ',' << c;
    out << ",error\n";
    for (const auto& row : report.rows) {
        out << row.index << ',' << row.label;
        for (double v : row.values) out << ',' << csv::format_double(v);
        out << ',' << quote_field(row.error) << '\n';
    }
    return out.str();
}

void write_report(const ExperimentReport& report, const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    csv::write_text(directory / (report.name + "_summary.json"), report_to_json(report));
    csv::write_text(directory / (report.name + "_rows.csv"), report_rows_csv(report));
}

ExperimentReport run_paper_replication(const Scenario& scenario, std::size_t workers) {
    require_valid(scenario);
    const auto derived = derive_quantities(scenario);
    const auto kin = kinematics_for(scenario);
    const auto regionCrossings = crossing_times(kin, scenario.geometry);
    if (regionCrossings.empty()) throw ScheduleError("no tooth crossings inside the teeth region");

    auto report = make_report("replication",
                              {"firstToothFraction", "crossings", "piPulses", "maxSeparation", "timeOfMaxSeparation",
                               "residualT", "velocityResidualT", "residual2T", "velocityResidual2T",
                               "commonModePeak", "analyticDeviation"},
                              scenario);

    const std::vector<double> fractions{0.5, 1.0};
    std::vector<ReportRow> rows(fractions.size());
    std::vector<PulseSchedule> schedules(fractions.size());
    std::vector<TrajectorySummary> summaries(fractions.size());
    std::vector<SimulationResult> results(fractions.size());
    parallel_for(fractions.size(), workers, [&](std::size_t i) {
        Scenario local = scenario;
        local.geometry.firstToothFraction = fractions[i];
        try {
            schedules[i] = build_schedule(local);
            results[i] = simulate_branches(local, schedules[i]);
        } catch (const std::exception& e) {
            throw std::runtime_error("replication run with first-tooth fraction " + csv::format_double(fractions[i]) +
                                     " failed: " + e.what());
        }
        summaries[i] = summarize(results[i], derived);
        const auto& r = results[i];
        rows[i] = {i,
                   "",
                   {fractions[i], static_cast<double>(schedules[i].crossingCount),
                    static_cast<double>(schedules[i].pi_count()), summaries[i].maxSeparation,
                    summaries[i].timeOfMaxSeparation, r.atMidpoint.separation, r.atMidpoint.relativeVelocity,
                    r.atClose.separation, r.atClose.relativeVelocity, summaries[i].commonModePeak,
                    summaries[i].analyticDeviation},
                   ""};
    });
    report.rows = std::move(rows);

    // Headline numbers come from the scenario's own first-tooth fraction.
    Scenario own = scenario;
    const auto ownSchedule = build_schedule(own);
    const auto ownResult = simulate_branches(own, ownSchedule);
    const auto ownSummary = summarize(ownResult, derived);

    auto& h = report.headline;
    h.emplace_back("separationScale", derived.maxSeparation);
    h.emplace_back("equilibriumOffset", derived.equilibriumOffset);
    h.emplace_back("angularFrequency", derived.angularFrequency);
    h.emplace_back("frequencyHz", derived.angularFrequency / (2.0 * std::acos(-1.0)));
    h.emplace_back("period", derived.period);
    h.emplace_back("entryVelocity", kin.entryVelocity);
    h.emplace_back("crossingsInRegion", static_cast<double>(regionCrossings.size()));
    h.emplace_back("lastCrossingTime", regionCrossings.back());
    h.emplace_back("crossingsInScheme", static_cast<double>(ownSchedule.crossingCount));
    h.emplace_back("piPulses", static_cast<double>(ownSchedule.pi_count()));
    h.emplace_back("maxSeparation", ownSummary.maxSeparation);
    h.emplace_back("timeOfMaxSeparation", ownSummary.timeOfMaxSeparation);
    h.emplace_back("residualT", ownResult.atMidpoint.separation);
    h.emplace_back("velocityResidualT", ownResult.atMidpoint.relativeVelocity);
    h.emplace_back("residual2T", ownResult.atClose.separation);
    h.emplace_back("velocityResidual2T", ownResult.atClose.relativeVelocity);
    h.emplace_back("analyticDeviation", ownSummary.analyticDeviation);
    h.emplace_back("commonModePeakHalfTooth", summaries[0].commonModePeak);
    h.emplace_back("commonModePeakFullTooth", summaries[1].commonModePeak);
    h.emplace_back("commonModeRatio", summaries[0].commonModePeak / summaries[1].commonModePeak);
    return report;
}

ExperimentReport run_jitter_sensitivity(const Scenario& scenario, const JitterOptions& options) {
    for (double s : options.sigmas)
        if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("jitter sigmas must be finite and >= 0");
    if (options.trials == 0) throw std::invalid_argument("jitter needs at least one trial");

    Scenario probe = scenario;
    probe.frame.phi = options.probeTilt;
    require_valid(probe);
    const auto model = gravity_model_for(probe);
    const auto schedule = build_schedule(probe);
    const auto baseline = simulate_branches(probe, schedule);
    const double baselinePhase = numeric_phase(baseline, probe, model).gravityDeltaPhi;

    auto report = make_report("jitter",
                              {"sigma", "meanResidual2T", "maxResidual2T", "meanVelocityResidual2T",
                               "maxVelocityResidual2T", "meanPhaseError", "maxPhaseError"},
                              probe);

    const std::size_t n = options.sigmas.size() * options.trials;
    std::vector<double> residual(n), velocity(n), phaseError(n);
    std::vector<std::string> errors(n);
    parallel_for(n, options.workers, [&](std::size_t k) {
        const std::size_t s = k / options.trials;
        try {
            const auto jittered = apply_jitter(schedule, options.sigmas[s], trial_seed(options.seed, k));
            const auto r = simulate_branches(probe, jittered);
            const auto close = close_state(r);
            residual[k] = std::abs(close.separation);
            velocity[k] = std::abs(close.velocity);
            phaseError[k] = std::abs(numeric_phase(r, probe, model).gravityDeltaPhi - baselinePhase);
        } catch (const std::exception& e) {
            residual[k] = velocity[k] = phaseError[k] = kNaN;
            errors[k] = e.what();
        }
    });

    bool monotone = true;
    double previous = -1.0;
    for (std::size_t s = 0; s < options.sigmas.size(); ++s) {
        auto slice = [&](const std::vector<double>& v) {
            std::vector<double> out;
            for (std::size_t t = 0; t < options.trials; ++t) {
                const double x = v[s * options.trials + t];
                if (std::isfinite(x)) out.push_back(x);
            }
            return out;
        };
        ReportRow row;
        row.index = s;
        const auto res = slice(residual);
        row.values = {options.sigmas[s], mean(res), max_of(res), mean(slice(velocity)), max_of(slice(velocity)),
                      mean(slice(phaseError)), max_of(slice(phaseError))};
        for (std::size_t t = 0; t < options.trials; ++t) {
            const auto& e = errors[s * options.trials + t];
            if (!e.empty() && row.error.empty()) row.error = e;
            if (!e.empty()) ++report.failures;
        }
        report.rows.push_back(std::move(row));
        const double m = mean(res);
        if (std::isfinite(m)) {
            if (m < previous) monotone = false;
            previous = m;
        }
    }
    report.headline.emplace_back("trials", static_cast<double>(options.trials));
    report.headline.emplace_back("probeTilt", options.probeTilt);
    report.headline.emplace_back("baselineResidual2T", baseline.atClose.separation);
    report.headline.emplace_back("baselineGravityPhase", baselinePhase);
    report.headline.emplace_back("residualMonotone", monotone ? 1.0 : 0.0);
    return report;
}

ExperimentReport run_drift_sensitivity(const Scenario& scenario, const DriftOptions& options) {
    Scenario probe = scenario;
    probe.frame.phi = options.probeTilt;
    require_valid(probe);
    const auto model = gravity_model_for(probe);
    const auto schedule = build_schedule(probe);
    const auto baseline = simulate_branches(probe, schedule);
    const double baselinePhase = numeric_phase(baseline, probe, model).gravityDeltaPhi;
    const auto baselineClose = close_state(baseline);

    struct Point {
        std::string label;
        double value;
    };
    std::vector<Point> points;
    for (double s : options.gradientScales) points.push_back({"gradientScale", s});
    for (double o : options.lengthOffsets) points.push_back({"lengthOffset", o});

    auto report = make_report("drift",
                              {"value", "residual2T", "velocityResidual2T", "signedSeparation2T",
                               "separationChange2T", "phaseError", "maxSeparation"},
                              probe);
    report.rows.resize(points.size());
    const double length = probe.geometry.teethRegionLength;
    parallel_for(points.size(), options.workers, [&](std::size_t i) {
        const auto& p = points[i];
        ReportRow& row = report.rows[i];
        row.index = i;
        row.label = p.label;
        try {
            Scenario perturbed = probe;
            if (p.label == "gradientScale") {
                perturbed.geometry.gradientMagnitude *= p.value;
            } else {
                // Uniform thermal expansion: every tooth scales with the stack.
                perturbed.geometry.toothWidth *= 1.0 + p.value / length;
                perturbed.geometry.teethRegionLength += p.value;
            }
            require_valid(perturbed);
            const auto r = simulate_branches(perturbed, schedule);
            const auto close = close_state(r);
            const auto summary = summarize(r, derive_quantities(perturbed));
            row.values = {p.value,
                          std::abs(close.separation),
                          std::abs(close.velocity),
                          close.separation,
                          close.separation - baselineClose.separation,
                          numeric_phase(r, perturbed, model).gravityDeltaPhi - baselinePhase,
                          summary.maxSeparation};
        } catch (const std::exception& e) {
            row.values.assign(report.columns.size(), kNaN);
            row.values[0] = p.value;
            row.error = e.what();
        }
    });
    for (const auto& row : report.rows)
        if (!row.error.empty()) ++report.failures;
    report.headline.emplace_back("probeTilt", options.probeTilt);
    report.headline.emplace_back("baselineResidual2T", baseline.atClose.separation);
    report.headline.emplace_back("baselineGravityPhase", baselinePhase);
    return report;
}

ExperimentReport run_sweep(const ExperimentConfig& config) {
    validate_config(config);
    const bool hasAxis = config.axis.has_value();
    const std::vector<double> values = hasAxis ? config.axis->values : std::vector<double>{kNaN};
    std::vector<std::string> columns{"value",      "crossings",          "maxSeparation", "timeOfMaxSeparation",
                                     "residual2T", "velocityResidual2T", "commonModePeak", "deltaPhi",
                                     "pA"};
    if (config.oracle) columns.push_back("oracleDeviation");
    auto report = make_report("sweep", columns, config.scenario);
    if (hasAxis) report.headline.emplace_back("points", static_cast<double>(values.size()));
    report.rows.resize(values.size());

    if (!config.outputDirectory.empty()) std::filesystem::create_directories(config.outputDirectory);

    parallel_for(values.size(), config.workers, [&](std::size_t i) {
        ReportRow& row = report.rows[i];
        row.index = i;
        if (hasAxis) row.label = config.axis->parameter;
        try {
            Scenario local = config.scenario;
            if (hasAxis) set_parameter(local, config.axis->parameter, values[i]);
            require_valid(local);
            const auto derived = derive_quantities(local);
            const auto schedule = build_schedule(local);
            const auto result = simulate_branches(local, schedule);
            const auto summary = summarize(result, derived);
            const auto crossings = crossing_times(kinematics_for(local), local.geometry).size();
            double dphi = 0.0;
            if (config.phaseMode == PhaseMode::Analytic) {
                dphi = analytic_phases(local, derived.period).deltaPhi;
            } else {
                require_separable(result);
                dphi = numeric_phase(result, local, gravity_model_for(local)).gravityDeltaPhi;
            }
            row.values = {hasAxis ? values[i] : kNaN,
                          static_cast<double>(crossings),
                          summary.maxSeparation,
                          summary.timeOfMaxSeparation,
                          result.atClose.separation,
                          result.atClose.relativeVelocity,
                          summary.commonModePeak,
                          dphi,
                          readout_probability(dphi)};
            if (config.oracle) {
                const auto reference = integrate_reference(local, schedule, 1e-10);
                row.values.push_back(max_separation_difference(result, reference));
            }
            if (!config.outputDirectory.empty())
                csv::write_text(config.outputDirectory / point_filename(i), trajectory_to_csv(result, true));
        } catch (const std::exception& e) {
            row.values.assign(columns.size(), kNaN);
            if (hasAxis) row.values[0] = values[i];
            row.error = e.what();
        }
    });
    for (const auto& row : report.rows)
        if (!row.error.empty()) ++report.failures;
    report.headline.emplace_back("failures", static_cast<double>(report.failures));
    return report;
}

std::vector<std::string> experiment_names() { return {"replication", "jitter", "drift", "sweep"}; }

} // namespace sgdrop
