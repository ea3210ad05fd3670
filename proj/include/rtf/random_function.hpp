#pragma once

#include "rtf/step_function.hpp"

#include <cstdint>

namespace rtf {

// Deterministic generator (splitmix64) so reports reproduce exactly.
struct Rng {
    uint64_t state;
    explicit Rng(uint64_t seed) : state(seed) {}
    uint64_t next()
    {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    long below(long n) { return static_cast<long>(next() % static_cast<uint64_t>(n)); }
};

// Random test function on sl2 coordinates: at most 8 terms, levels in
// [-2, 3], centers in p^{-2} L0, integer coefficients in [-3, 3].  Draws
// whose derived grids or K-enumerations would blow the budgets are
// redrawn (the budgets cap the reachable level/support combinations).
StepFunction random_step_function(const FieldContext& ctx, uint64_t seed,
                                  const Budgets& budgets);

// builtin functions used by the CLI and the acceptance suite
StepFunction builtin_function(const FieldContext& ctx, const std::string& name);

} // namespace rtf
