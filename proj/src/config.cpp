#include "rtf/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace rtf {

using nlohmann::json;

void RunConfig::validate() const
{
    if (prime < 3 || prime % 2 == 0) throw config_error("prime must be odd");
    for (long mu : mu_list)
        if (mu < 0) throw config_error("mu values must be nonnegative");
    if (max_shells <= 0 || max_cosets <= 0 || max_cells <= 0)
        throw config_error("budgets must be positive");
    if (count <= 0) throw config_error("count must be positive");
    if (function_source.rfind("builtin:", 0) != 0 && function_source.rfind("file:", 0) != 0)
        throw config_error("function must be builtin:NAME or file:PATH");
}

Budgets RunConfig::budgets() const
{
    Budgets b;
    b.max_shells = max_shells;
    b.max_cosets = max_cosets;
    b.max_cells = max_cells;
    b.k_level_override = k_level_override;
    return b;
}

int RunConfig::derived_precision(long s, long m, long mu_max) const
{
    if (precision > 0) return precision;
    return static_cast<int>(2 * (s + m + mu_max + 4));
}

std::vector<long> parse_mu_spec(const std::string& spec)
{
    std::vector<long> out;
    auto dots = spec.find("..");
    try {
        if (dots != std::string::npos) {
            long lo = std::stol(spec.substr(0, dots));
            long hi = std::stol(spec.substr(dots + 2));
            for (long v = lo; v <= hi; ++v) out.push_back(v);
        } else {
            std::stringstream ss(spec);
            std::string item;
            while (std::getline(ss, item, ',')) out.push_back(std::stol(item));
        }
    } catch (const std::exception&) {
        throw config_error("cannot parse mu list: " + spec);
    }
    if (out.empty()) throw config_error("empty mu list: " + spec);
    return out;
}

namespace {

const char* kKnownKeys[] = {"prime",   "precision", "character_depth", "mu",
                            "epsilon", "function",  "random",          "seed",
                            "count",   "out",       "max_shells",      "max_cosets",
                            "max_cells", "k_level_override"};

RunConfig config_from_json(const json& j)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : kKnownKeys)
            if (it.key() == k) known = true;
        if (!known) throw config_error("unknown config key: " + it.key());
    }
    RunConfig c;
    if (j.contains("prime")) c.prime = j.at("prime").get<long>();
    if (j.contains("precision")) c.precision = j.at("precision").get<int>();
    if (j.contains("character_depth")) c.character_depth = j.at("character_depth").get<int>();
    if (j.contains("mu")) {
        if (j.at("mu").is_string())
            c.mu_list = parse_mu_spec(j.at("mu").get<std::string>());
        else
            c.mu_list = j.at("mu").get<std::vector<long>>();
    } // absent mu: the derived default grid 0..max(4, 4D+2) per function
    if (j.contains("epsilon")) c.epsilon_valuation = j.at("epsilon").get<long>();
    if (j.contains("function")) c.function_source = j.at("function").get<std::string>();
    if (j.contains("random")) c.random = j.at("random").get<bool>();
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
    if (j.contains("count")) c.count = j.at("count").get<long>();
    if (j.contains("out")) c.out_path = j.at("out").get<std::string>();
    if (j.contains("max_shells")) c.max_shells = j.at("max_shells").get<long>();
    if (j.contains("max_cosets")) c.max_cosets = j.at("max_cosets").get<long>();
    if (j.contains("max_cells")) c.max_cells = j.at("max_cells").get<long>();
    if (j.contains("k_level_override")) c.k_level_override = j.at("k_level_override").get<int>();
    c.validate();
    return c;
}

json config_to_json(const RunConfig& c)
{
    json j;
    j["prime"] = c.prime;
    j["precision"] = c.precision;
    j["character_depth"] = c.character_depth;
    j["mu"] = c.mu_list;
    if (c.epsilon_valuation) j["epsilon"] = *c.epsilon_valuation;
    j["function"] = c.function_source;
    j["random"] = c.random;
    j["seed"] = c.seed;
    j["count"] = c.count;
    j["out"] = c.out_path;
    j["max_shells"] = c.max_shells;
    j["max_cosets"] = c.max_cosets;
    j["max_cells"] = c.max_cells;
    j["k_level_override"] = c.k_level_override;
    return j;
}

} // namespace

RunConfig parse_config_string(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    return config_from_json(j);
}

RunConfig parse_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str());
}

std::string serialize_config(const RunConfig& config)
{
    return config_to_json(config).dump(2);
}

std::string serialize_step_function(const StepFunction& f)
{
    json out = json::array();
    for (const auto& t : f.terms()) {
        json rec;
        json centers = json::array();
        for (const auto& c : t.center) centers.push_back(c.to_string());
        rec["center"] = centers;
        rec["level"] = t.level;
        if (!t.coeff.is_rational())
            throw arithmetic_error("step function files hold rational coefficients");
        rec["coeff"] = rat_to_string(t.coeff.as_rational());
        out.push_back(rec);
    }
    return out.dump(2);
}

StepFunction parse_step_function(const FieldContext& ctx, const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("function parse error: ") + e.what());
    }
    if (!j.is_array()) throw config_error("function file must be a list of records");
    StepFunction f(&ctx, 3);
    for (const auto& rec : j) {
        std::vector<PAdic> center;
        for (const auto& c : rec.at("center"))
            center.push_back(PAdic::parse_exact(&ctx, c.get<std::string>()));
        if (center.size() != 3) throw config_error("centers must have 3 coordinates");
        long level = rec.at("level").get<long>();
        Rational coeff = parse_rational(rec.at("coeff").get<std::string>());
        f.add_term(std::move(center), level, ExactValue(coeff));
    }
    return f;
}

StepFunction load_step_function(const FieldContext& ctx, const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw config_error("cannot open function file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_step_function(ctx, ss.str());
}

} // namespace rtf
