#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ivselect/errors.hpp"
#include "ivselect/simulation.hpp"

namespace ivselect::simulation {
namespace {

using nlohmann::json;

std::string label(std::size_t i) { return "scenario " + std::to_string(i + 1); }

template <class T>
T checked(const json& j, const char* key, T fallback, std::size_t i) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(label(i) + ": field '" + key + "' must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(label(i) + ": field '" + key + "' must be finite");
        return x;
    } else {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            throw ConfigError(label(i) + ": field '" + key + "' must be a non-negative integer");
        }
        return static_cast<T>(v.get<unsigned long long>());
    }
}

}  // namespace

std::vector<Scenario> parse_scenarios(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario file: ") + e.what());
    }
    const json* list = &doc;
    if (doc.is_object()) {
        if (!doc.contains("scenarios")) throw ConfigError("scenario file: missing 'scenarios' array");
        list = &doc.at("scenarios");
    }
    if (!list->is_array()) throw ConfigError("scenario file: expected an array of scenarios");
    if (list->empty()) throw ConfigError("scenario file: empty scenario list");
    static const char* known[] = {"name", "n", "delta", "gamma", "reps", "seed"};
    std::vector<Scenario> out;
    for (std::size_t i = 0; i < list->size(); ++i) {
        const json& j = (*list)[i];
        if (!j.is_object()) throw ConfigError(label(i) + ": expected an object");
        for (const auto& [key, value] : j.items()) {
            if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
                throw ConfigError(label(i) + ": unknown field '" + key + "'");
            }
        }
        if (!j.contains("n")) throw ConfigError(label(i) + ": missing field 'n'");
        Scenario s;
        s.n = checked<std::size_t>(j, "n", 0, i);
        s.delta = checked<double>(j, "delta", 0.0, i);
        s.gamma = checked<double>(j, "gamma", 0.0, i);
        s.reps = checked<std::size_t>(j, "reps", 100, i);
        s.seed = checked<std::uint64_t>(j, "seed", 1, i);
        if (j.contains("name")) {
            if (!j.at("name").is_string()) throw ConfigError(label(i) + ": field 'name' must be a string");
            s.name = j.at("name").get<std::string>();
        }
        if (s.n < 20) throw ConfigError(label(i) + ": n must be at least 20");
        if (s.reps < 1) throw ConfigError(label(i) + ": reps must be at least 1");
        if (s.name.empty()) {
            std::ostringstream name;
            name << "delta=" << s.delta << ",gamma=" << s.gamma << ",n=" << s.n;
            s.name = name.str();
        }
        out.push_back(s);
    }
    return out;
}

std::vector<Scenario> load_scenarios(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenarios(ss.str());
}

std::vector<Scenario> default_scenarios(std::size_t reps, std::uint64_t seed) {
    std::vector<Scenario> out;
    const std::pair<double, double> blocks[] = {{0.0, 0.0}, {2.0, 0.0}, {0.0, 0.5}};
    for (const auto& [delta, gamma] : blocks) {
        for (std::size_t n : {1000u, 4000u, 16000u}) {
            std::ostringstream name;
            name << "delta=" << delta << ",gamma=" << gamma << ",n=" << n;
            out.push_back({name.str(), n, delta, gamma, reps, seed});
        }
    }
    return out;
}

}  // namespace ivselect::simulation
