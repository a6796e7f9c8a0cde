#pragma once

// Named, reproducible experiment recipes and a parallel parameter sweep.
// Reports carry no wall-clock data, so identical inputs give identical bytes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sgdrop/interference.hpp"
#include "sgdrop/model.hpp"

namespace sgdrop {

std::string version_string();

struct SweepAxis {
    std::string parameter; // dotted scenario key, e.g. "geometry.toothWidth"
    std::vector<double> values;
};

struct ExperimentConfig {
    Scenario scenario = paper_preset(); // overrides already applied
    std::optional<SweepAxis> axis;
    std::filesystem::path outputDirectory; // empty: nothing written
    std::uint64_t seed = 1;
    PhaseMode phaseMode = PhaseMode::Analytic;
    bool oracle = false;
    std::size_t workers = 0; // 0 = hardware concurrency
};

/// Throws std::invalid_argument on an empty or non-finite sweep axis or an
/// unknown parameter.
void validate_config(const ExperimentConfig& config);

struct ReportRow {
    std::size_t index = 0;
    std::string label;
    std::vector<double> values; // aligned with ExperimentReport::columns
    std::string error;          // non-empty when the point failed
};

struct ExperimentReport {
    std::string name;
    std::vector<std::string> columns;
    std::vector<ReportRow> rows; // ordered by index
    std::vector<std::pair<std::string, double>> headline;
    std::uint64_t scenarioHash = 0;
    std::string version;
    std::size_t failures = 0;

    std::optional<double> headline_value(const std::string& key) const;
    std::optional<double> value(std::size_t row, const std::string& column) const;
};

std::string report_to_json(const ExperimentReport& report);
std::string report_rows_csv(const ExperimentReport& report);

/// Writes <name>_summary.json and <name>_rows.csv into `directory`.
void write_report(const ExperimentReport& report, const std::filesystem::path& directory);

/// Closed forms, schedule counts and the headline dynamics
/// numbers, with common-mode peaks for first-tooth fractions 0.5 and 1.0.
ExperimentReport run_paper_replication(const Scenario& scenario = paper_preset(), std::size_t workers = 0);

struct JitterOptions {
    std::vector<double> sigmas{1e-10, 1e-9, 1e-8};
    std::size_t trials = 32;
    std::uint64_t seed = 1;
    double probeTilt = 500e-6; // tilt at which the gravity-phase error is evaluated
    std::size_t workers = 0;
};

/// Pulse times perturbed by N(0, sigma^2); reports recombination residuals at
/// 2T and the gravity-phase error against the unjittered run.
ExperimentReport run_jitter_sensitivity(const Scenario& scenario, const JitterOptions& options);

struct DriftOptions {
    std::vector<double> gradientScales{0.9999, 1.0, 1.0001};
    std::vector<double> lengthOffsets{-10e-9, 0.0, 10e-9}; // m on the teeth-region length
    double probeTilt = 500e-6;
    std::size_t workers = 0;
};

/// Pulses fire at the nominal times while B' or the tooth positions move.
ExperimentReport run_drift_sensitivity(const Scenario& scenario, const DriftOptions& options);

/// One simulation per sweep value (or one point if no axis). Per-point
/// trajectory CSVs go to point_NNNN.csv when an output directory is set.
/// Point failures are recorded in the row and counted, the sweep continues.
ExperimentReport run_sweep(const ExperimentConfig& config);

/// Experiment recipe names the command line dispatches on.
std::vector<std::string> experiment_names();

} // namespace sgdrop
