#pragma once

#include "rtf/matrix.hpp"

namespace rtf {

// Weight factor for gamma in K': the A-measure of {a : Cartan tau(r_gamma
// a g) <= mu}, with vol(A cap K) = 1.  The value is an integer count except
// on shells where the indicator depends on the unit digits of a; there the
// exact unit measure (a rational) is added instead.  For gamma outside K'
// the weight is just omega-bar(g, mu).
Rational weight_factor_direct(const FieldContext& ctx, int square_class_index,
                              const Mat2& g, long mu);

// (|mu4|/2)(1 + 2mu - 2 H_B(g) + 2 H_Bbar(g)); requires mu > 4 d(g).
Rational weight_factor_closed_form(const FieldContext& ctx, const Mat2& g, long mu);

// One pointwise Lemma comparison: does Cartan tau(r_gamma a g) <= mu (exact
// matrix route, a = diag-torus element with value t in u-coordinates) agree
// with -2 H_Bbar(g) - mu <= v(sqrt gamma) + 2 v(t) <= mu - 2 H_B(g)?
struct LemmaCheck {
    bool indicator;   // matrix route
    bool inequality;  // height route
};
LemmaCheck lemma_pointwise(const FieldContext& ctx, int square_class_index,
                           const Mat2& g, long nu_a, const PAdic& a_unit, long mu);

// Scan window half-width used by weight_factor_direct for element g.
long weight_scan_window(const Mat2& g, long mu);

// Weight factor along the unipotent slice g = n(x) k in u-coordinates
// (H_B(g) = 0), where the whole theta-split expansion lives.  The exact
// variant uses the unit digits of x for the boundary shells; the shell
// variant averages over the units of the shell v(x) = v.  Pass v = kValInf
// for x = 0.
Rational wfd_nx_exact(const FieldContext& ctx, int square_class_index,
                      const PAdic& x, long mu);
Rational wfd_nx_shell_avg(const FieldContext& ctx, int square_class_index,
                          long v, long mu);

} // namespace rtf
