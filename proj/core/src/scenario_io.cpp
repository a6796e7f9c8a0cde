#include "sgdrop/scenario_io.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace sgdrop {
namespace {

using nlohmann::json;

struct Binding {
    const char* key;
    std::function<double&(Scenario&)> number;
    std::function<bool&(Scenario&)> flag;
};

const std::vector<Binding>& bindings() {
    static const std::vector<Binding> table = [] {
        std::vector<Binding> b;
        auto num = [&](const char* key, auto accessor) {
            b.push_back({key, accessor, nullptr});
        };
        auto flag = [&](const char* key, auto accessor) {
            b.push_back({key, nullptr, accessor});
        };
        num("constants.bohrMagneton", [](Scenario& s) -> double& { return s.constants.bohrMagneton; });
        num("constants.vacuumPermeability", [](Scenario& s) -> double& { return s.constants.vacuumPermeability; });
        num("constants.hbar", [](Scenario& s) -> double& { return s.constants.hbar; });
        num("constants.gSurface", [](Scenario& s) -> double& { return s.constants.gSurface; });
        num("constants.earthRadius", [](Scenario& s) -> double& { return s.constants.earthRadius; });
        num("diamond.mass", [](Scenario& s) -> double& { return s.diamond.mass; });
        num("diamond.volume", [](Scenario& s) -> double& { return s.diamond.volume; });
        num("diamond.susceptibility", [](Scenario& s) -> double& { return s.diamond.susceptibility; });
        num("diamond.density", [](Scenario& s) -> double& { return s.diamond.density; });
        num("diamond.gFactorParallel", [](Scenario& s) -> double& { return s.diamond.gFactorParallel; });
        num("diamond.zfs", [](Scenario& s) -> double& { return s.diamond.zfs; });
        num("geometry.homogeneousLength", [](Scenario& s) -> double& { return s.geometry.homogeneousLength; });
        num("geometry.toothWidth", [](Scenario& s) -> double& { return s.geometry.toothWidth; });
        num("geometry.firstToothFraction", [](Scenario& s) -> double& { return s.geometry.firstToothFraction; });
        num("geometry.gradientMagnitude", [](Scenario& s) -> double& { return s.geometry.gradientMagnitude; });
        num("geometry.biasField", [](Scenario& s) -> double& { return s.geometry.biasField; });
        num("geometry.teethRegionLength", [](Scenario& s) -> double& { return s.geometry.teethRegionLength; });
        num("frame.phi", [](Scenario& s) -> double& { return s.frame.phi; });
        num("samplingInterval", [](Scenario& s) -> double& { return s.samplingInterval; });
        flag("gravityGradientEnabled", [](Scenario& s) -> bool& { return s.gravityGradientEnabled; });
        flag("gravityDatumIncludesPreDrop", [](Scenario& s) -> bool& { return s.gravityDatumIncludesPreDrop; });
        return b;
    }();
    return table;
}

const Binding* find_binding(std::string_view key) {
    for (const auto& b : bindings())
        if (key == b.key) return &b;
    return nullptr;
}

std::string known_keys_hint() {
    std::string out;
    for (const auto& b : bindings()) {
        if (!out.empty()) out += ", ";
        out += b.key;
    }
    return out;
}

void flatten(const json& node, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
    for (auto it = node.begin(); it != node.end(); ++it) {
        std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it->is_object()) flatten(*it, key, out);
        else out.emplace_back(std::move(key), *it);
    }
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

double parse_double(std::string_view text, std::string_view key) {
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ConfigError("override '" + std::string(key) + "': cannot parse '" + std::string(text) + "' as a number");
    return value;
}

} // namespace

std::vector<std::string> scenario_keys() {
    std::vector<std::string> keys;
    for (const auto& b : bindings()) keys.emplace_back(b.key);
    return keys;
}

Scenario parse_scenario(std::string_view json_text, std::string_view source) {
    json doc;
    try {
        doc = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        auto [line, col] = line_column(json_text, e.byte);
        std::ostringstream msg;
        msg << source << ":" << line << ":" << col << ": parse error: " << e.what();
        throw ConfigError(msg.str());
    }
    if (!doc.is_object()) throw ConfigError(std::string(source) + ": top level must be a JSON object");

    Scenario s = paper_preset();
    std::vector<std::pair<std::string, json>> entries;
    flatten(doc, "", entries);
    for (const auto& [key, value] : entries) {
        if (key == "preset") {
            if (!value.is_string() || value.get<std::string>() != kPaperPresetName)
                throw ConfigError(std::string(source) + ": unknown preset (available: " + kPaperPresetName + ")");
            continue;
        }
        const Binding* b = find_binding(key);
        if (b == nullptr)
            throw ConfigError(std::string(source) + ": unknown key '" + key + "' (known: " + known_keys_hint() + ")");
        if (b->number) {
            if (!value.is_number())
                throw ConfigError(std::string(source) + ": field '" + key + "' must be a number");
            b->number(s) = value.get<double>();
        } else {
            if (!value.is_boolean())
                throw ConfigError(std::string(source) + ": field '" + key + "' must be true or false");
            b->flag(s) = value.get<bool>();
        }
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str(), path.string());
}

void set_parameter(Scenario& scenario, std::string_view key, double value) {
    const Binding* b = find_binding(key);
    if (b == nullptr) throw ConfigError("unknown key '" + std::string(key) + "'");
    if (b->number) b->number(scenario) = value;
    else b->flag(scenario) = value != 0.0;
}

double get_parameter(const Scenario& scenario, std::string_view key) {
    const Binding* b = find_binding(key);
    if (b == nullptr) throw ConfigError("unknown key '" + std::string(key) + "'");
    Scenario copy = scenario;
    return b->number ? b->number(copy) : (b->flag(copy) ? 1.0 : 0.0);
}

void apply_override(Scenario& scenario, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
    const auto key = assignment.substr(0, eq);
    const auto text = assignment.substr(eq + 1);
    const Binding* b = find_binding(key);
    if (b == nullptr)
        throw ConfigError("unknown key '" + std::string(key) + "' (known: " + known_keys_hint() + ")");
    if (b->number) {
        b->number(scenario) = parse_double(text, key);
    } else if (text == "true" || text == "1") {
        b->flag(scenario) = true;
    } else if (text == "false" || text == "0") {
        b->flag(scenario) = false;
    } else {
        throw ConfigError("override '" + std::string(key) + "' expects true or false");
    }
}

std::string scenario_to_json(const Scenario& scenario) {
    json doc = json::object();
    Scenario copy = scenario;
    for (const auto& b : bindings()) {
        const std::string key = b.key;
        const auto dot = key.find('.');
        json& slot = dot == std::string::npos ? doc[key] : doc[key.substr(0, dot)][key.substr(dot + 1)];
        if (b.number) slot = b.number(copy);
        else slot = b.flag(copy);
    }
    return doc.dump(2);
}

std::uint64_t scenario_hash(const Scenario& scenario) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : scenario_to_json(scenario)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace sgdrop
