#include "sgdrop/field.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sgdrop/csv.hpp"

namespace sgdrop {

IdealToothField::IdealToothField(MagnetGeometry geometry) : geometry_(geometry) {}

double IdealToothField::breakpoint(std::size_t k) const noexcept {
    return geometry_.toothWidth * geometry_.firstToothFraction + static_cast<double>(k) * geometry_.toothWidth;
}

std::size_t IdealToothField::segment_index(double z) const {
    if (!(z >= 0.0)) throw std::domain_error("field position z must be >= 0 (measured from teeth entry)");
    const double first = breakpoint(0);
    if (z < first) return 0;
    // Initial guess from division, then snap so that the answer agrees exactly
    // with breakpoint(k) as computed above.
    auto k = static_cast<std::size_t>(std::floor((z - first) / geometry_.toothWidth));
    while (k > 0 && z < breakpoint(k)) --k;
    while (z >= breakpoint(k + 1)) ++k;
    return k + 1;
}

int IdealToothField::sign_at(double z) const { return segment_index(z) % 2 == 0 ? +1 : -1; }

IdealToothField::Value IdealToothField::evaluate(double x, double z) const {
    const double gradient = sign_at(z) * geometry_.gradientMagnitude;
    return {gradient * x + geometry_.biasField, gradient};
}

namespace {

struct UnitAwareHeader {
    std::string base;
    std::string unit;
};

UnitAwareHeader parse_header(const std::string& raw) {
    UnitAwareHeader h;
    auto open = raw.find_first_of("[(");
    if (open == std::string::npos) {
        h.base = raw;
    } else {
        h.base = raw.substr(0, open);
        auto close = raw.find_first_of("])", open);
        h.unit = raw.substr(open + 1, close == std::string::npos ? std::string::npos : close - open - 1);
    }
    auto trim = [](std::string& s) {
        while (!s.empty() && s.back() == ' ') s.pop_back();
        while (!s.empty() && s.front() == ' ') s.erase(s.begin());
    };
    trim(h.base);
    trim(h.unit);
    return h;
}

double length_scale(const std::string& unit) {
    if (unit.empty() || unit == "m") return 1.0;
    if (unit == "mm") return 1e-3;
    if (unit == "um" || unit == "µm") return 1e-6;
    throw FieldMapError("unsupported length unit '" + unit + "'");
}

double gradient_scale(const std::string& unit) {
    if (unit.empty() || unit == "T/m" || unit == "mT/mm") return 1.0;
    if (unit == "T/mm") return 1e3;
    if (unit == "mT/m") return 1e-3;
    throw FieldMapError("unsupported gradient unit '" + unit + "'");
}

double field_scale(const std::string& unit) {
    if (unit.empty() || unit == "T") return 1.0;
    if (unit == "mT") return 1e-3;
    throw FieldMapError("unsupported field unit '" + unit + "'");
}

double parse_number(const std::string& text) {
    double value = std::numeric_limits<double>::quiet_NaN();
    if (text.empty()) return value;
    const char* first = text.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::numeric_limits<double>::quiet_NaN();
    return value;
}

} // namespace

FieldMap ingest_field_map(const std::filesystem::path& path, const ColumnSpec& spec) {
    std::vector<std::string> lines;
    try {
        lines = csv::read_lines(path);
    } catch (const std::runtime_error& e) {
        throw FieldMapError(e.what());
    }
    // '#' lines are comments (exporters like to prepend metadata).
    std::erase_if(lines, [](const std::string& l) { return l.front() == '#' || l.front() == '%'; });
    if (lines.empty()) throw FieldMapError(path.string() + ": empty file");

    const auto header = csv::split_line(lines.front());
    std::vector<UnitAwareHeader> columns;
    for (const auto& h : header) columns.push_back(parse_header(h));

    auto locate = [&](const std::string& name) -> std::optional<std::size_t> {
        if (name.empty()) return std::nullopt;
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i].base == name) return i;
        return std::nullopt;
    };

    const auto zCol = locate(spec.z);
    const auto gxCol = locate(spec.dbx_dx);
    if (!zCol) throw FieldMapError(path.string() + ": missing required column '" + spec.z + "'");
    if (!gxCol) throw FieldMapError(path.string() + ": missing required column '" + spec.dbx_dx + "'");
    const auto gyCol = locate(spec.dby_dx);
    const auto gzCol = locate(spec.dbz_dx);
    const auto bxCol = locate(spec.bx);

    const double zScale = spec.zScale.value_or(length_scale(columns[*zCol].unit));
    auto gradScale = [&](std::size_t col) { return spec.gradientScale.value_or(gradient_scale(columns[col].unit)); };
    const double bScale = bxCol ? field_scale(columns[*bxCol].unit) : 1.0;

    FieldMap map;
    std::vector<FieldSample> rows;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto fields = csv::split_line(lines[li]);
        auto cell = [&](std::size_t col) {
            return col < fields.size() ? parse_number(fields[col]) : std::numeric_limits<double>::quiet_NaN();
        };
        FieldSample s;
        s.z = cell(*zCol) * zScale;
        s.dbx_dx = cell(*gxCol) * gradScale(*gxCol);
        if (!std::isfinite(s.z) || !std::isfinite(s.dbx_dx)) {
            ++map.droppedRows;
            continue;
        }
        auto optional_cell = [&](std::optional<std::size_t> col, double scale) -> std::optional<double> {
            if (!col) return std::nullopt;
            const double v = cell(*col) * scale;
            return std::isfinite(v) ? std::optional<double>(v) : std::nullopt;
        };
        s.dby_dx = gyCol ? optional_cell(gyCol, gradScale(*gyCol)) : std::nullopt;
        s.dbz_dx = gzCol ? optional_cell(gzCol, gradScale(*gzCol)) : std::nullopt;
        s.bx = optional_cell(bxCol, bScale);
        rows.push_back(s);
    }

    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.z < b.z; });

    // Fold equal-z rows into their mean.
    auto mean_optional = [](std::optional<double>& acc, const std::optional<double>& v, std::size_t& n) {
        if (!v) return;
        acc = acc.value_or(0.0) + *v;
        ++n;
    };
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i + 1;
        while (j < rows.size() && rows[j].z == rows[i].z) ++j;
        FieldSample merged{rows[i].z, 0.0, {}, {}, {}};
        std::size_t ny = 0, nz = 0, nb = 0;
        for (std::size_t k = i; k < j; ++k) {
            merged.dbx_dx += rows[k].dbx_dx;
            mean_optional(merged.dby_dx, rows[k].dby_dx, ny);
            mean_optional(merged.dbz_dx, rows[k].dbz_dx, nz);
            mean_optional(merged.bx, rows[k].bx, nb);
        }
        const auto count = static_cast<double>(j - i);
        merged.dbx_dx /= count;
        if (merged.dby_dx) *merged.dby_dx /= static_cast<double>(ny);
        if (merged.dbz_dx) *merged.dbz_dx /= static_cast<double>(nz);
        if (merged.bx) *merged.bx /= static_cast<double>(nb);
        map.mergedDuplicates += j - i - 1;
        map.samples.push_back(merged);
        i = j;
    }

    if (map.samples.size() < 2)
        throw FieldMapError(path.string() + ": fewer than 2 usable rows (" + std::to_string(map.droppedRows) +
                            " dropped)");
    return map;
}

void write_field_map(const FieldMap& map, const std::filesystem::path& path) {
    auto any = [&](auto member) {
        return std::any_of(map.samples.begin(), map.samples.end(), [&](const auto& s) { return (s.*member).has_value(); });
    };
    const bool hasY = any(&FieldSample::dby_dx);
    const bool hasZ = any(&FieldSample::dbz_dx);
    const bool hasB = any(&FieldSample::bx);

    std::ostringstream out;
    out << "z [m],dBx_dx [T/m]";
    if (hasY) out << ",dBy_dx [T/m]";
    if (hasZ) out << ",dBz_dx [T/m]";
    if (hasB) out << ",Bx [T]";
    out << '\n';
    auto opt = [](const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string("nan"); };
    for (const auto& s : map.samples) {
        out << csv::format_double(s.z) << ',' << csv::format_double(s.dbx_dx);
        if (hasY) out << ',' << opt(s.dby_dx);
        if (hasZ) out << ',' << opt(s.dbz_dx);
        if (hasB) out << ',' << opt(s.bx);
        out << '\n';
    }
    csv::write_text(path, out.str());
}

SquareWaveFit fit_square_wave(const FieldMap& map, double zMin, double zMax) {
    const auto& all = map.samples;
    if (all.size() < 2) throw FieldMapError("field map needs at least 2 samples");
    if (!(zMin < zMax) || zMin < all.front().z || zMax > all.back().z)
        throw FieldMapError("fit range must be non-empty and inside the sampled domain");

    std::vector<const FieldSample*> in;
    for (const auto& s : all)
        if (s.z >= zMin && s.z <= zMax) in.push_back(&s);
    if (in.size() < 2) throw FieldMapError("fit range contains fewer than 2 samples");

    SquareWaveFit fit;
    const double span = in.back()->z - in.front()->z;
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < in.size(); ++i)
        integral += 0.5 * (std::abs(in[i]->dbx_dx) + std::abs(in[i + 1]->dbx_dx)) * (in[i + 1]->z - in[i]->z);
    fit.avgGradientMagnitude = integral / span;

    double variance = 0.0;
    for (std::size_t i = 0; i + 1 < in.size(); ++i) {
        const double a = std::abs(in[i]->dbx_dx) - fit.avgGradientMagnitude;
        const double b = std::abs(in[i + 1]->dbx_dx) - fit.avgGradientMagnitude;
        variance += 0.5 * (a * a + b * b) * (in[i + 1]->z - in[i]->z);
    }
    fit.residualRms = std::sqrt(variance / span);

    // Zero crossings by linear interpolation between nonzero neighbours.
    std::vector<double> crossings;
    const FieldSample* previous = nullptr;
    for (const auto* s : in) {
        if (s->dbx_dx == 0.0) continue;
        if (previous != nullptr && (previous->dbx_dx > 0.0) != (s->dbx_dx > 0.0)) {
            const double t = previous->dbx_dx / (previous->dbx_dx - s->dbx_dx);
            crossings.push_back(previous->z + t * (s->z - previous->z));
        }
        previous = s;
    }
    fit.signChanges = crossings.size();
    if (crossings.size() >= 2)
        fit.fittedPitch = (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);

    double biasSum = 0.0;
    std::size_t biasCount = 0;
    for (const auto* s : in) {
        if (s->bx) {
            biasSum += *s->bx;
            ++biasCount;
        }
    }
    if (biasCount > 0) fit.fittedBias = biasSum / static_cast<double>(biasCount);
    return fit;
}

namespace {

template <typename Shape>
FieldMap synthesize(double pitch, double length, std::size_t samplesPerTooth, Shape shape) {
    if (!(pitch > 0.0) || !(length > 0.0) || samplesPerTooth < 1)
        throw FieldMapError("synthetic map needs positive pitch, length and sampling");
    FieldMap map;
    const double dz = pitch / static_cast<double>(samplesPerTooth);
    const auto n = static_cast<std::size_t>(std::floor(length / dz));
    for (std::size_t i = 0; i < n; ++i) {
        const double z = (static_cast<double>(i) + 0.5) * dz;
        map.samples.push_back(shape(z));
    }
    if (map.samples.size() < 2) throw FieldMapError("synthetic map too short");
    return map;
}

} // namespace

FieldMap synthesize_square_wave(double peak, double pitch, double length, std::size_t samplesPerTooth,
                                std::optional<double> bias) {
    return synthesize(pitch, length, samplesPerTooth, [&](double z) {
        const auto tooth = static_cast<long long>(std::floor(z / pitch));
        FieldSample s;
        s.z = z;
        s.dbx_dx = (tooth % 2 == 0) ? peak : -peak;
        s.bx = bias;
        return s;
    });
}

FieldMap synthesize_sinusoid(double peak, double pitch, double length, std::size_t samplesPerTooth) {
    return synthesize(pitch, length, samplesPerTooth, [&](double z) {
        FieldSample s;
        s.z = z;
        s.dbx_dx = peak * std::sin(std::numbers::pi * z / pitch);
        return s;
    });
}

} // namespace sgdrop
