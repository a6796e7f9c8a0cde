#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sgdrop/model.hpp"

namespace sgdrop {

/// Malformed configuration text, unknown keys or bad override syntax.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dotted names of every configurable scenario field ("geometry.toothWidth", ...).
std::vector<std::string> scenario_keys();

/// Parses a JSON scenario document. Fields may be given as nested objects
/// ({"geometry": {"toothWidth": 1e-4}}) or as flat dotted keys
/// ({"geometry.toothWidth": 1e-4}); anything missing takes the preset default.
/// `source` only labels error messages.
Scenario parse_scenario(std::string_view json_text, std::string_view source = "<string>");

Scenario load_scenario(const std::filesystem::path& path);

/// Applies one "dotted.key=value" override in place.
void apply_override(Scenario& scenario, std::string_view assignment);

/// Sets a single field by dotted key; throws ConfigError on unknown keys.
void set_parameter(Scenario& scenario, std::string_view key, double value);
double get_parameter(const Scenario& scenario, std::string_view key);

/// Canonical JSON (sorted keys, round-trip precision).
std::string scenario_to_json(const Scenario& scenario);

/// FNV-1a over the canonical JSON; used as a provenance tag in reports.
std::uint64_t scenario_hash(const Scenario& scenario);

} // namespace sgdrop
