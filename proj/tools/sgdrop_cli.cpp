// sgdrop: command-line front end for the falling-nanodiamond interferometer
// simulator. Exit codes: 0 success, 1 runtime failure, 2 usage or validation.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgdrop/csv.hpp"
#include "sgdrop/dynamics.hpp"
#include "sgdrop/experiments.hpp"
#include "sgdrop/field.hpp"
#include "sgdrop/interference.hpp"
#include "sgdrop/model.hpp"
#include "sgdrop/reference_integrator.hpp"
#include "sgdrop/scenario_io.hpp"
#include "sgdrop/schedule.hpp"
#include "sgdrop/svg.hpp"

namespace fs = std::filesystem;
using namespace sgdrop;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Validation failures that should map to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GlobalOptions {
    std::string config;
    std::vector<std::string> overrides;
    std::string format = "csv";
    std::string out;
    int verbosity = 0;
};

Scenario load(const GlobalOptions& g, std::optional<double> firstToothFraction = std::nullopt) {
    Scenario s = g.config.empty() ? paper_preset() : load_scenario(g.config);
    for (const auto& o : g.overrides) apply_override(s, o);
    if (firstToothFraction) s.geometry.firstToothFraction = *firstToothFraction;
    for (const auto& w : require_valid(s))
        if (g.verbosity >= 0) std::cerr << "warning: " << w.field << ": " << w.message << '\n';
    return s;
}

void emit(const GlobalOptions& g, const std::string& text) {
    if (g.out.empty() || g.out == "-") {
        std::cout << text;
    } else {
        csv::write_text(g.out, text);
        if (g.verbosity > 0) std::cerr << "wrote " << g.out << '\n';
    }
}

fs::path output_directory(const GlobalOptions& g) {
    if (!g.out.empty()) return g.out;
    if (const char* env = std::getenv("SGDROP_OUTPUT_DIR"); env && *env) return env;
    return {};
}

std::string fmt(double v) { return csv::format_double(v); }

int cmd_params(const GlobalOptions& g) {
    const auto s = load(g);
    const auto d = derive_quantities(s);
    const auto kin = kinematics_for(s);
    const auto crossings = crossing_times(kin, s.geometry);
    if (g.format == "json") {
        nlohmann::ordered_json j;
        j["separationScale_m"] = d.maxSeparation;
        j["equilibriumOffset_m"] = d.equilibriumOffset;
        j["angularFrequency_rad_s"] = d.angularFrequency;
        j["frequency_Hz"] = d.angularFrequency / (2.0 * std::acos(-1.0));
        j["period_s"] = d.period;
        j["commonModeAccel_m_s2"] = d.commonModeAccel;
        j["spinAccel_m_s2"] = d.spinAccel;
        j["entryVelocity_m_s"] = kin.entryVelocity;
        j["crossingsInRegion"] = crossings.size();
        emit(g, j.dump(2) + "\n");
        return 0;
    }
    std::ostringstream out;
    out << std::left;
    auto row = [&](const std::string& name, double value, const std::string& unit) {
        out << std::setw(28) << name << std::setw(24) << fmt(value) << ' ' << unit << '\n';
    };
    row("s (max separation)", d.maxSeparation, "m");
    row("dx_eq (equilibrium offset)", d.equilibriumOffset, "m");
    row("omega", d.angularFrequency, "rad/s");
    row("f = omega / 2pi", d.angularFrequency / (2.0 * std::acos(-1.0)), "Hz");
    row("T", d.period, "s");
    row("common-mode accel", d.commonModeAccel, "m/s^2");
    row("spin accel", d.spinAccel, "m/s^2");
    row("entry velocity v0", kin.entryVelocity, "m/s");
    row("crossings in teeth region", static_cast<double>(crossings.size()), "");
    if (!crossings.empty()) row("last crossing", crossings.back(), "s");
    emit(g, out.str());
    return 0;
}

int cmd_schedule(const GlobalOptions& g, std::optional<double> fraction, double jitter, std::uint64_t seed) {
    const auto s = load(g, fraction);
    auto schedule = build_schedule(s);
    if (jitter > 0.0) schedule = apply_jitter(schedule, jitter, seed);
    if (g.verbosity > 0)
        std::cerr << "crossings in (0, 2T): " << schedule.crossingCount << ", pi pulses: " << schedule.pi_count()
                  << ", events: " << schedule.events.size() << '\n';
    emit(g, schedule_to_csv(schedule));
    return 0;
}

int cmd_simulate(const GlobalOptions& g, std::optional<double> fraction, bool oracle, double relTol,
                 bool cadenceOnly) {
    const auto s = load(g, fraction);
    const auto derived = derive_quantities(s);
    const auto schedule = build_schedule(s);
    const auto result = simulate_branches(s, schedule);
    const auto summary = summarize(result, derived);

    nlohmann::ordered_json j;
    j["maxSeparation_m"] = summary.maxSeparation;
    j["timeOfMaxSeparation_s"] = summary.timeOfMaxSeparation;
    j["commonModePeak_m"] = summary.commonModePeak;
    j["analyticDeviation_m"] = summary.analyticDeviation;
    j["residualT_m"] = result.atMidpoint.separation;
    j["velocityResidualT_m_s"] = result.atMidpoint.relativeVelocity;
    j["residual2T_m"] = result.atClose.separation;
    j["velocityResidual2T_m_s"] = result.atClose.relativeVelocity;
    j["recombined"] = result.recombined();
    if (oracle) {
        ReferenceStats stats;
        const auto reference = integrate_reference(s, schedule, relTol, &stats);
        j["oracleDeviation_m"] = max_separation_difference(result, reference);
        j["oracleRelTol"] = relTol;
        j["oracleSteps"] = stats.acceptedSteps;
    }

    if (g.format == "json") {
        emit(g, j.dump(2) + "\n");
    } else {
        emit(g, trajectory_to_csv(result, cadenceOnly));
        std::cerr << j.dump(2) << '\n';
    }
    return 0;
}

int cmd_fringe(const GlobalOptions& g, double phiMin, double phiMax, std::size_t points, const std::string& mode,
               const std::string& variant, const std::string& svg, std::size_t workers) {
    const auto s = load(g);
    const auto result = fringe_scan(s, phiMin, phiMax, points,
                                    mode == "numeric" ? PhaseMode::Numeric : PhaseMode::Analytic,
                                    variant == "single" ? InterferometerVariant::SingleOscillation
                                                        : InterferometerVariant::TwoOscillation,
                                    workers);
    if (g.format == "json") {
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < result.phi.size(); ++i)
            j.push_back({{"phi_rad", result.phi[i]}, {"dphi_rad", result.deltaPhi[i]}, {"pA", result.probabilityA[i]}});
        emit(g, j.dump(2) + "\n");
    } else {
        emit(g, fringe_to_csv(result));
    }
    if (!svg.empty()) {
        PlotSpec plot;
        plot.title = "Spin readout fringe";
        plot.xLabel = "tilt phi [rad]";
        plot.yLabel = "P_A";
        plot.series.push_back({mode, result.phi, result.probabilityA});
        csv::write_text(svg, svg_line_plot(plot));
    }
    if (g.verbosity > 0) {
        const auto periods = fringe_periods(s);
        std::cerr << "fringe period (two-oscillation): " << fmt(periods.twoOscillation) << " rad\n"
                  << "fringe period (single-oscillation): " << fmt(periods.singleOscillation) << " rad\n";
    }
    return 0;
}

struct ExperimentOptions {
    std::string name;
    std::vector<double> sigmas;
    std::size_t trials = 32;
    std::uint64_t seed = 1;
    std::vector<double> scales;
    std::vector<double> offsets;
    std::string parameter;
    std::vector<double> values;
    std::string mode = "analytic";
    bool oracle = false;
    std::size_t workers = 0;
};

int cmd_experiment(const GlobalOptions& g, const ExperimentOptions& e) {
    const auto names = experiment_names();
    if (std::find(names.begin(), names.end(), e.name) == names.end()) {
        std::ostringstream msg;
        msg << "unknown experiment '" << e.name << "'; available:";
        for (const auto& n : names) msg << ' ' << n;
        throw UsageError(msg.str());
    }
    const auto s = load(g);
    const fs::path dir = output_directory(g);

    ExperimentReport report;
    if (e.name == "replication") {
        report = run_paper_replication(s, e.workers);
    } else if (e.name == "jitter") {
        JitterOptions o;
        if (!e.sigmas.empty()) o.sigmas = e.sigmas;
        o.trials = e.trials;
        o.seed = e.seed;
        o.workers = e.workers;
        report = run_jitter_sensitivity(s, o);
    } else if (e.name == "drift") {
        DriftOptions o;
        if (!e.scales.empty()) o.gradientScales = e.scales;
        if (!e.offsets.empty()) o.lengthOffsets = e.offsets;
        o.workers = e.workers;
        report = run_drift_sensitivity(s, o);
    } else {
        ExperimentConfig c;
        c.scenario = s;
        if (!e.parameter.empty()) {
            if (e.values.empty()) throw UsageError("--param needs --values");
            c.axis = SweepAxis{e.parameter, e.values};
        }
        c.outputDirectory = dir;
        c.seed = e.seed;
        c.phaseMode = e.mode == "numeric" ? PhaseMode::Numeric : PhaseMode::Analytic;
        c.oracle = e.oracle;
        c.workers = e.workers;
        try {
            validate_config(c);
        } catch (const std::invalid_argument& ex) {
            throw UsageError(ex.what());
        }
        report = run_sweep(c);
    }

    if (dir.empty()) {
        std::cout << (g.format == "csv" && e.name == "sweep" ? report_rows_csv(report) : report_to_json(report));
    } else {
        write_report(report, dir);
        if (g.verbosity >= 0) std::cerr << "wrote " << (dir / (report.name + "_summary.json")).string() << '\n';
    }
    if (report.failures > 0) {
        std::cerr << report.failures << " point(s) failed\n";
        return kExitRuntime;
    }
    return 0;
}

struct FieldMapOptions {
    std::string path;
    ColumnSpec columns;
    std::optional<double> zMin, zMax;
    std::string synth;
    double peak = 940.0;
    double pitch = 115e-6;
    double length = 20 * 115e-6;
    std::size_t samplesPerTooth = 50;
    std::optional<double> bias;
    std::string exportPath;
};

int cmd_fieldmap(const GlobalOptions& g, const FieldMapOptions& o) {
    FieldMap map;
    if (!o.synth.empty()) {
        if (o.synth == "square") map = synthesize_square_wave(o.peak, o.pitch, o.length, o.samplesPerTooth, o.bias);
        else if (o.synth == "sinusoid") map = synthesize_sinusoid(o.peak, o.pitch, o.length, o.samplesPerTooth);
        else throw UsageError("--synth must be 'square' or 'sinusoid'");
    } else {
        if (o.path.empty()) throw UsageError("fieldmap needs a map file or --synth");
        try {
            map = ingest_field_map(o.path, o.columns);
        } catch (const FieldMapError& ex) {
            throw UsageError(ex.what());
        }
    }
    if (!o.exportPath.empty()) write_field_map(map, o.exportPath);

    const double zMin = o.zMin.value_or(map.samples.front().z);
    const double zMax = o.zMax.value_or(map.samples.back().z);
    const auto fit = fit_square_wave(map, zMin, zMax);
    nlohmann::ordered_json j;
    j["samples"] = map.samples.size();
    j["droppedRows"] = map.droppedRows;
    j["mergedDuplicates"] = map.mergedDuplicates;
    j["zMin_m"] = zMin;
    j["zMax_m"] = zMax;
    j["avgGradientMagnitude_T_m"] = fit.avgGradientMagnitude;
    j["fittedPitch_m"] = fit.fittedPitch ? nlohmann::ordered_json(*fit.fittedPitch) : nlohmann::ordered_json(nullptr);
    j["pitchUnset"] = fit.pitchUnset();
    j["fittedBias_T"] = fit.fittedBias ? nlohmann::ordered_json(*fit.fittedBias) : nlohmann::ordered_json(nullptr);
    j["residualRms_T_m"] = fit.residualRms;
    j["signChanges"] = fit.signChanges;
    if (g.format == "json") {
        emit(g, j.dump(2) + "\n");
    } else {
        std::ostringstream out;
        out << "key,value\n";
        for (const auto& [k, v] : j.items()) out << k << ',' << (v.is_null() ? "" : v.dump()) << '\n';
        emit(g, out.str());
    }
    if (fit.pitchUnset()) std::cerr << "warning: fewer than two sign changes in range; pitch unset\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Falling-nanodiamond Stern-Gerlach interferometer simulator"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("-c,--config", g.config, "Scenario JSON file (defaults to the built-in preset)")
        ->check(CLI::ExistingFile);
    app.add_option("--set", g.overrides, "Override a scenario field, e.g. --set geometry.toothWidth=115e-6")
        ->take_all();
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("-o,--out", g.out, "Output file (directory for 'experiment'); '-' or empty = stdout");
    app.add_flag("-v,--verbose", g.verbosity, "More diagnostics on stderr (repeatable)");
    app.add_flag_callback("-q,--quiet", [&] { g.verbosity = -1; }, "Suppress warnings");

    auto* params = app.add_subcommand("params", "Print the closed-form derived quantities");

    std::optional<double> fraction;
    double jitter = 0.0;
    std::uint64_t seed = 1;
    auto* schedule = app.add_subcommand("schedule", "Compile the pulse schedule to CSV");
    schedule->add_option("--first-tooth-fraction", fraction, "Override geometry.firstToothFraction");
    schedule->add_option("--jitter", jitter, "Gaussian timing jitter sigma [s]")->check(CLI::NonNegativeNumber);
    schedule->add_option("--seed", seed, "Jitter RNG seed");

    bool oracle = false;
    double relTol = 1e-10;
    bool cadenceOnly = false;
    auto* simulate = app.add_subcommand("simulate", "Simulate both branches and write the trajectory CSV");
    simulate->add_option("--first-tooth-fraction", fraction, "Override geometry.firstToothFraction");
    simulate->add_flag("--oracle", oracle, "Cross-check against the adaptive Runge-Kutta integrator");
    simulate->add_option("--rel-tol", relTol, "Oracle relative tolerance")->check(CLI::Range(1e-12, 1e-6));
    simulate->add_flag("--cadence-only", cadenceOnly, "Omit samples placed on crossings and pulses");

    double phiMin = -500e-6, phiMax = 500e-6;
    std::size_t points = 201;
    std::string mode = "analytic", variant = "two", svg;
    std::size_t workers = 0;
    auto* fringe = app.add_subcommand("fringe", "Scan the tilt angle and write P_A(phi)");
    fringe->add_option("--phi-min", phiMin, "Lowest tilt [rad]");
    fringe->add_option("--phi-max", phiMax, "Highest tilt [rad]");
    fringe->add_option("--points", points, "Grid points")->check(CLI::PositiveNumber);
    fringe->add_option("--mode", mode, "Phase evaluation")->check(CLI::IsMember({"analytic", "numeric"}));
    fringe->add_option("--variant", variant, "Interferometer variant")->check(CLI::IsMember({"two", "single"}));
    fringe->add_option("--svg", svg, "Also write an SVG plot of P_A");
    fringe->add_option("--workers", workers, "Worker threads (0 = all cores)");

    ExperimentOptions e;
    auto* experiment = app.add_subcommand("experiment", "Run a named experiment recipe");
    experiment->add_option("name", e.name, "replication | jitter | drift | sweep")->required();
    experiment->add_option("--sigmas", e.sigmas, "Jitter sigmas [s]")->delimiter(',');
    experiment->add_option("--trials", e.trials, "Jitter trials per sigma")->check(CLI::PositiveNumber);
    experiment->add_option("--seed", e.seed, "RNG seed");
    experiment->add_option("--scales", e.scales, "Drift gradient scales")->delimiter(',');
    experiment->add_option("--offsets", e.offsets, "Drift teeth-length offsets [m]")->delimiter(',');
    experiment->add_option("--param", e.parameter, "Sweep parameter (dotted scenario key)");
    experiment->add_option("--values", e.values, "Sweep values")->delimiter(',');
    experiment->add_option("--mode", e.mode, "Sweep phase evaluation")->check(CLI::IsMember({"analytic", "numeric"}));
    experiment->add_flag("--oracle", e.oracle, "Add the integrator cross-check to every sweep point");
    experiment->add_option("--workers", e.workers, "Worker threads (0 = all cores)");

    FieldMapOptions f;
    auto* fieldmap = app.add_subcommand("fieldmap", "Ingest a field-map export and fit the square-wave model");
    fieldmap->add_option("path", f.path, "CSV/TSV field map");
    fieldmap->add_option("--z-col", f.columns.z, "Header of the position column");
    fieldmap->add_option("--gradient-col", f.columns.dbx_dx, "Header of the dBx/dx column");
    fieldmap->add_option("--bx-col", f.columns.bx, "Header of the optional Bx column");
    fieldmap->add_option("--z-scale", f.columns.zScale, "Force the z unit scale to metres");
    fieldmap->add_option("--gradient-scale", f.columns.gradientScale, "Force the gradient unit scale to T/m");
    fieldmap->add_option("--z-min", f.zMin, "Fit range start [m]");
    fieldmap->add_option("--z-max", f.zMax, "Fit range end [m]");
    fieldmap->add_option("--synth", f.synth, "Generate a synthetic map instead: square | sinusoid");
    fieldmap->add_option("--peak", f.peak, "Synthetic peak gradient [T/m]");
    fieldmap->add_option("--pitch", f.pitch, "Synthetic tooth pitch [m]");
    fieldmap->add_option("--length", f.length, "Synthetic map length [m]");
    fieldmap->add_option("--samples-per-tooth", f.samplesPerTooth, "Synthetic resolution");
    fieldmap->add_option("--bias", f.bias, "Synthetic Bx column value [T]");
    fieldmap->add_option("--export", f.exportPath, "Write the (ingested or synthetic) map to this CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*params) return cmd_params(g);
        if (*schedule) return cmd_schedule(g, fraction, jitter, seed);
        if (*simulate) return cmd_simulate(g, fraction, oracle, relTol, cadenceOnly);
        if (*fringe) return cmd_fringe(g, phiMin, phiMax, points, mode, variant, svg, workers);
        if (*experiment) return cmd_experiment(g, e);
        if (*fieldmap) return cmd_fieldmap(g, f);
    } catch (const InvalidScenario& ex) {
        std::cerr << "invalid scenario:\n";
        for (const auto& issue : ex.issues())
            std::cerr << "  " << (issue.fatal ? "error" : "warning") << ": " << issue.field << ": " << issue.message
                      << '\n';
        return kExitUsage;
    } catch (const ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const UsageError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
