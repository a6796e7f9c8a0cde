#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "sgdrop/field.hpp"
#include "sgdrop/model.hpp"

using namespace sgdrop;

namespace {
std::filesystem::path temp_file(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path;
}
} // namespace

TEST_CASE("tooth sign convention") {
    const IdealToothField field(paper_preset().geometry);
    CHECK(field.sign_at(0.0) == +1);
    CHECK(field.sign_at(57.5e-6) == -1);
    CHECK(field.sign_at(57.5e-6 + 115e-6) == +1);
    CHECK(field.sign_at(30e-6) == +1);
    CHECK_THROWS_AS(field.sign_at(-1e-9), std::domain_error);
}

TEST_CASE("sign changes exactly at breakpoints") {
    const IdealToothField field(paper_preset().geometry);
    for (std::size_t k = 0; k < 2000; ++k) {
        const double z = field.breakpoint(k);
        const int after = field.sign_at(z);
        const int before = field.sign_at(std::nextafter(z, 0.0));
        CHECK(after == -before);
        // No change anywhere on a dense grid strictly inside the segment.
        const double next = field.breakpoint(k + 1);
        for (int j = 1; j < 16; ++j) {
            const double zi = z + (next - z) * j / 16.0;
            if (field.sign_at(zi) != after) {
                FAIL("sign changed inside segment " << k);
            }
        }
    }
}

TEST_CASE("linear field model") {
    const IdealToothField field(paper_preset().geometry);
    CHECK(field.evaluate(0.0, 0.3).bx == doctest::Approx(0.42).epsilon(1e-15));
    CHECK(field.evaluate(100e-9, 10e-6).bx == doctest::Approx(0.420094).epsilon(1e-12));
    CHECK(field.evaluate(100e-9, 100e-6).bx == doctest::Approx(0.419906).epsilon(1e-12));
    CHECK(field.evaluate(100e-9, 100e-6).dbx_dx == -940.0);
    for (double z : {0.0, 1e-5, 2e-4, 0.5, 1.1}) {
        for (double x : {1e-9, 3e-7, 1e-4}) {
            CHECK(field.evaluate(x, z).bx + field.evaluate(-x, z).bx == doctest::Approx(0.84).epsilon(1e-15));
        }
    }
}

TEST_CASE("field-map ingestion") {
    SUBCASE("units in headers") {
        const auto path = temp_file("sgdrop_fm_units.csv",
                                    "z (mm),dBx_dx [T/mm]\n0,1.45\n0.1,-1.45\n0.2,1.45\n");
        const auto map = ingest_field_map(path);
        REQUIRE(map.samples.size() == 3);
        CHECK(map.samples[1].z == doctest::Approx(1e-4));
        CHECK(map.samples[1].dbx_dx == doctest::Approx(-1450.0));
        CHECK(map.samples[2].dbx_dx == doctest::Approx(1450.0));
    }
    SUBCASE("shuffled rows sort to the same map") {
        const auto sorted = ingest_field_map(temp_file("sgdrop_fm_sorted.csv", "z,dBx_dx\n0,1\n1,2\n2,3\n3,4\n"));
        const auto shuffled = ingest_field_map(temp_file("sgdrop_fm_shuf.csv", "z,dBx_dx\n2,3\n0,1\n3,4\n1,2\n"));
        REQUIRE(sorted.samples.size() == shuffled.samples.size());
        for (std::size_t i = 0; i < sorted.samples.size(); ++i) {
            CHECK(sorted.samples[i].z == shuffled.samples[i].z);
            CHECK(sorted.samples[i].dbx_dx == shuffled.samples[i].dbx_dx);
        }
    }
    SUBCASE("tab separated with comments, NaN rows and duplicates") {
        const auto map = ingest_field_map(
            temp_file("sgdrop_fm_tsv.txt", "% exported\nz\tdBx_dx\tBx\n0\t10\t0.4\n1\tNaN\t0.4\n1\t20\t0.4\n1\t30\t0.4\n2\t5\t0.4\n"));
        CHECK(map.samples.size() == 3);
        CHECK(map.droppedRows == 1);
        CHECK(map.mergedDuplicates == 1);
        CHECK(map.samples[1].dbx_dx == doctest::Approx(25.0));
        REQUIRE(map.samples[0].bx.has_value());
    }
    SUBCASE("missing gradient column") {
        CHECK_THROWS_AS(ingest_field_map(temp_file("sgdrop_fm_missing.csv", "z,Bx\n0,1\n1,2\n")), FieldMapError);
    }
    SUBCASE("too few rows") {
        CHECK_THROWS_AS(ingest_field_map(temp_file("sgdrop_fm_short.csv", "z,dBx_dx\n0,1\n")), FieldMapError);
    }
    SUBCASE("export then ingest is the identity") {
        const auto map = synthesize_square_wave(940.0, 115e-6, 10 * 115e-6, 7, 0.42);
        const auto path = std::filesystem::temp_directory_path() / "sgdrop_fm_roundtrip.csv";
        write_field_map(map, path);
        const auto back = ingest_field_map(path);
        REQUIRE(back.samples.size() == map.samples.size());
        for (std::size_t i = 0; i < map.samples.size(); ++i) {
            CHECK(back.samples[i].z == map.samples[i].z);
            CHECK(back.samples[i].dbx_dx == map.samples[i].dbx_dx);
            CHECK(back.samples[i].bx == map.samples[i].bx);
        }
    }
}

TEST_CASE("square-wave fit") {
    SUBCASE("perfect square wave") {
        const auto map = synthesize_square_wave(1450.0, 115e-6, 40 * 115e-6, 20);
        const auto fit = fit_square_wave(map, map.samples.front().z, map.samples.back().z);
        REQUIRE(fit.fittedPitch.has_value());
        CHECK(*fit.fittedPitch == doctest::Approx(115e-6).epsilon(1e-9));
        CHECK(fit.avgGradientMagnitude == doctest::Approx(1450.0).epsilon(1e-12));
        CHECK(fit.residualRms < 1e-9);
        CHECK_FALSE(fit.fittedBias.has_value());
    }
    SUBCASE("sinusoid averages to 2/pi of the peak") {
        // Mean of |sin| over whole periods is 2/pi; 1477 T/m maps to 940 T/m.
        const auto map = synthesize_sinusoid(1477.0, 115e-6, 200 * 115e-6, 64);
        const auto fit = fit_square_wave(map, map.samples.front().z, map.samples.back().z);
        CHECK(fit.avgGradientMagnitude == doctest::Approx(2.0 / std::numbers::pi * 1477.0).epsilon(1e-3));
        CHECK(fit.avgGradientMagnitude == doctest::Approx(940.0).epsilon(2e-3));
        REQUIRE(fit.fittedPitch.has_value());
        CHECK(*fit.fittedPitch == doctest::Approx(115e-6).epsilon(1e-6));
    }
    SUBCASE("constant gradient leaves the pitch unset") {
        const auto path = temp_file("sgdrop_fm_const.csv", "z,dBx_dx\n0,940\n1e-4,940\n2e-4,940\n");
        const auto fit = fit_square_wave(ingest_field_map(path), 0.0, 2e-4);
        CHECK(fit.pitchUnset());
        CHECK(fit.signChanges == 0);
        CHECK(fit.avgGradientMagnitude == doctest::Approx(940.0));
    }
    SUBCASE("bias is averaged when present") {
        const auto map = synthesize_square_wave(940.0, 115e-6, 10 * 115e-6, 8, 0.42);
        const auto fit = fit_square_wave(map, map.samples.front().z, map.samples.back().z);
        REQUIRE(fit.fittedBias.has_value());
        CHECK(*fit.fittedBias == doctest::Approx(0.42));
    }
    SUBCASE("range outside the map") {
        const auto map = synthesize_square_wave(940.0, 115e-6, 10 * 115e-6, 8);
        CHECK_THROWS_AS(fit_square_wave(map, -1.0, 1.0), FieldMapError);
    }
}
