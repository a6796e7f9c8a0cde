#pragma once

// Magnetic field models: the ideal alternating-gradient tooth structure used by
// the dynamics, and ingestion/fitting of exported finite-element field maps.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgdrop/model.hpp"

namespace sgdrop {

class FieldMapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Square-wave gradient sign(z) * B' with a bias B0 at x = 0. z is measured
/// from the entry into the teeth region. Breakpoints sit at
/// w * firstToothFraction + k * w; the sign is +1 on the first segment and is
/// right-continuous at each breakpoint.
class IdealToothField {
public:
    explicit IdealToothField(MagnetGeometry geometry);

    const MagnetGeometry& geometry() const noexcept { return geometry_; }

    /// z of the k-th sign change (k = 0, 1, ...).
    double breakpoint(std::size_t k) const noexcept;

    /// Number of breakpoints at or below z. Throws std::domain_error for z < 0.
    std::size_t segment_index(double z) const;

    int sign_at(double z) const;

    struct Value {
        double bx;     // T
        double dbx_dx; // T/m
    };
    Value evaluate(double x, double z) const;

private:
    MagnetGeometry geometry_;
};

struct FieldSample {
    double z = 0.0;      // m
    double dbx_dx = 0.0; // T/m
    std::optional<double> dby_dx;
    std::optional<double> dbz_dx;
    std::optional<double> bx;
};

struct FieldMap {
    std::vector<FieldSample> samples; // strictly increasing z, size >= 2
    std::size_t droppedRows = 0;      // rows with NaN/unparseable required values
    std::size_t mergedDuplicates = 0; // rows folded into an equal-z neighbour
};

/// Header names to look up for each field. Units may be declared in the header
/// ("dBx_dx [T/mm]", "z (mm)") or forced here; forced scales win.
struct ColumnSpec {
    std::string z = "z";
    std::string dbx_dx = "dBx_dx";
    std::string dby_dx = "dBy_dx"; // optional column
    std::string dbz_dx = "dBz_dx"; // optional column
    std::string bx = "Bx";         // optional column
    std::optional<double> zScale;        // multiply z by this to get metres
    std::optional<double> gradientScale; // multiply gradients by this to get T/m
};

FieldMap ingest_field_map(const std::filesystem::path& path, const ColumnSpec& spec = {});

/// Writes the map in the layout ingest_field_map reads with a default ColumnSpec.
void write_field_map(const FieldMap& map, const std::filesystem::path& path);

struct SquareWaveFit {
    double avgGradientMagnitude = 0.0; // T/m, trapezoid mean of |dBx/dx|
    std::optional<double> fittedPitch; // m, unset when fewer than two sign changes
    std::optional<double> fittedBias;  // T, mean Bx when the map carries it
    double residualRms = 0.0;          // T/m, rms of |dBx/dx| about its mean
    std::size_t signChanges = 0;
    bool pitchUnset() const { return !fittedPitch.has_value(); }
};

/// Fits the ideal square-wave model over [zMin, zMax] (must lie inside the map).
SquareWaveFit fit_square_wave(const FieldMap& map, double zMin, double zMax);

/// Synthetic maps for testing and demonstration. Samples sit at cell centres
/// so sign changes fall midway between neighbours.
FieldMap synthesize_square_wave(double peak, double pitch, double length, std::size_t samplesPerTooth,
                                std::optional<double> bias = std::nullopt);
FieldMap synthesize_sinusoid(double peak, double pitch, double length, std::size_t samplesPerTooth);

} // namespace sgdrop
