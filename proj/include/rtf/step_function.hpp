#pragma once

#include "rtf/exact_value.hpp"
#include "rtf/field.hpp"

#include <string>
#include <vector>

namespace rtf {

class Mat2;

struct Budgets {
    long max_shells = 64;
    long max_cosets = 1000000;
    long max_cells = 200000;
    int k_level_override = -1;
};

// One term: coeff times the indicator of center + p^level L0, L0 = Z_p^dim.
struct StepTerm {
    std::vector<PAdic> center;
    long level = 0;
    ExactValue coeff;
};

// Finite linear combination of indicators of lattice cosets on F^dim.
// Canonical form is the unique disjoint, maximally merged, sorted term list.
class StepFunction {
public:
    StepFunction() : ctx_(nullptr), dim_(0) {}
    StepFunction(const FieldContext* ctx, int dim) : ctx_(ctx), dim_(dim) {}

    const FieldContext* ctx() const { return ctx_; }
    int dim() const { return dim_; }
    bool empty() const { return terms_.empty(); }
    const std::vector<StepTerm>& terms() const { return terms_; }

    void add_term(std::vector<PAdic> center, long level, ExactValue coeff);

    // support contained in p^{-s} L0 (s >= 0)
    long support_exponent() const;
    // invariant under translation by p^m L0
    long level() const;

    ExactValue evaluate(const std::vector<PAdic>& X) const;

    StepFunction canonical(const Budgets& budgets = Budgets{}) const;
    bool is_canonical() const { return canonical_; }

    StepFunction operator+(const StepFunction& o) const;
    StepFunction scaled(const ExactValue& c) const;
    StepFunction negated_argument() const; // X -> f(-X)

    // Restrict one coordinate to an exact value; returns a StepFunction in
    // the remaining coordinates (order preserved).
    StepFunction restrict_coordinate(int coord, const PAdic& value) const;

    // integral over all of F^dim with vol(Z_p^dim) = 1
    ExactValue integral() const;

    bool equal_as_functions(const StepFunction& o, const Budgets& budgets = Budgets{}) const;

private:
    const FieldContext* ctx_;
    int dim_;
    bool canonical_ = false;
    std::vector<StepTerm> terms_;
    friend StepFunction canonicalize_impl(const StepFunction&, const Budgets&);
};

// f(k^{-1} X k) for a 3-dimensional step function on sl2 coordinates
// (h, b, c) and k integral with unit determinant (preserves L0).
StepFunction conjugate_pullback(const StepFunction& f, const Mat2& k);

// X -> f(u^{-1} X u) for the base change u = (1 1; 1 -1): expresses a
// function of standard coordinates in u-frame coordinates.
StepFunction u_frame_pullback(const StepFunction& f);

} // namespace rtf
