#pragma once

#include "rtf/step_function.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rtf {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Run configuration; the file format mirrors the CLI flags.
struct RunConfig {
    long prime = 3;
    int precision = 0;        // 0 = derived default
    int character_depth = 0;  // 0 = derived default
    std::vector<long> mu_list; // empty = derived default 0..max(4, 4D+2)
    std::optional<long> epsilon_valuation;
    std::string function_source = "builtin:unit-lattice"; // builtin:NAME or file:PATH
    bool random = false;
    uint64_t seed = 1;
    long count = 1;
    std::string out_path;
    long max_shells = 64;
    long max_cosets = 1000000;
    long max_cells = 200000;
    int k_level_override = -1;

    void validate() const;
    Budgets budgets() const;
    // derived defaults given a function's support/level data
    int derived_precision(long s, long m, long mu_max) const;
};

RunConfig parse_config_file(const std::string& path);
std::string serialize_config(const RunConfig& config);
RunConfig parse_config_string(const std::string& text);

std::vector<long> parse_mu_spec(const std::string& spec); // "0..4" or "0,1,2"

// StepFunction file format: JSON list of {center: [...], level, coeff}
StepFunction load_step_function(const FieldContext& ctx, const std::string& path);
std::string serialize_step_function(const StepFunction& f);
StepFunction parse_step_function(const FieldContext& ctx, const std::string& text);

} // namespace rtf
