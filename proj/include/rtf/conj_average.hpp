#pragma once

#include "rtf/step_function.hpp"

namespace rtf {

// Orbits of the adjoint action of SL2(Z/p^n) on (Z/p^n)^3 in sl2
// coordinates (h, b, c); the action is generated by the two unipotent
// generators.  Cell index is h + p^n b + p^{2n} c.
struct OrbitTable {
    long p = 0;
    int n = 0;
    long cells = 1;
    std::vector<int32_t> orbit_of;       // cell -> orbit id
    std::vector<std::vector<int32_t>> members; // orbit id -> cells
};

// Cached per (p, n); cells = p^{3n} must fit the budget.
const OrbitTable& orbit_table(long p, int n, const Budgets& budgets);

// f_avg(X) = integral over K of f(k^{-1} X k) dk, vol(K) = 1, computed by
// tabulating f on the grid p^{-s}L0 / p^{m}L0 and averaging over adjoint
// orbits; exact because the integrand is constant on K_{s+m}-cosets.
// level (when >= 0) overrides the grid depth n = s + m with a finer one;
// results agree for any admissible level.
StepFunction conjugation_average(const StepFunction& f, int level = -1,
                                 const Budgets& budgets = Budgets{});

} // namespace rtf
