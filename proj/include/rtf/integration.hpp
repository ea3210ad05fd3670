#pragma once

#include "rtf/matrix.hpp"
#include "rtf/step_function.hpp"

#include <functional>
#include <optional>

namespace rtf {

// Measure conventions used throughout: additive vol(Z_p) = 1 on every
// coordinate line, vol(K) = 1, vol(A cap K) = vol(H cap K) = vol(N cap K)
// = 1, and dg = dt dn dk through any Iwasawa factorization G = T N K.
struct MeasureContext {
    const FieldContext* ctx;
    Rational q_pow(long e) const { return rat_pow(ctx->q(), e); }
    Rational shell_vol(long v) const
    {
        return (Rational(1) - rat_pow(ctx->q(), -1)) * rat_pow(ctx->q(), -v);
    }
};

// sum_{v >= n0} r^v (|r| < 1)
Rational geom_sum(const Rational& r, long n0);
// sum_{v >= n0} v r^v
Rational geom_sum_linear(const Rational& r, long n0);
// sum_{i >= B} sum_{j >= Y} min(0, j - i) r^{i+j}
Rational tail2_min(const Rational& r, long B, long Y);

// center + p^rexp Z_p
struct Ball {
    PAdic center;
    long rexp;
};
bool ball_contains(const Ball& B, const PAdic& x);
bool ball_contains_zero(const Ball& B);
std::optional<Ball> ball_intersect(const Ball& A, const Ball& B);
Rational ball_vol(const FieldContext& ctx, const Ball& B);
// vol of {x in B : v(x) = v}
Rational ball_shell_vol(const FieldContext& ctx, const Ball& B, long v);
// vol of {x in B : v(x) >= v}
Rational ball_vol_above(const FieldContext& ctx, const Ball& B, long v);

// vol{x in B : x / beta lies in a non-square class}, exact.
Rational nonsquare_ratio_vol(const FieldContext& ctx, const Ball& B, const PAdic& beta);

struct LineHints {
    long v_min = -8;     // integrand vanishes below this shell (certified)
    long v_max = 8;      // direct summation up to here, then tail detection
    int cell_level = 1;  // digit cells per shell
};

// Exact integral over F of a shell-structured integrand: finite shells
// summed directly, the inner tail (v -> +infinity) certified affine in v
// and summed in closed form, outer shells certified zero.
ExactValue integrate_line(const FieldContext& ctx,
                          const std::function<ExactValue(const PAdic&)>& phi,
                          const LineHints& hints, const Budgets& budgets = Budgets{});

// Average of Phi over SL2(Z/p^level) lifts; Phi must be right
// K_level-invariant.  vol(K) = 1.
ExactValue integrate_K(const FieldContext& ctx,
                       const std::function<ExactValue(const Mat2&)>& phi,
                       int level, const Budgets& budgets = Budgets{});

struct GIntegralHints {
    long t_lo = -6, t_hi = 6;   // torus shells (certified at the edges)
    long n_lo = -6, n_hi = 6;   // unipotent shells
    int cell_level = 1;
    int k_level = 1;
};

// Iterated exact integral over G = T N K in the given frame's coordinates,
// dt dn dk with the normalizations above.
ExactValue integrate_G(const FieldContext& ctx,
                       const std::function<ExactValue(const Mat2&)>& phi,
                       Frame frame, const GIntegralHints& hints,
                       const Budgets& budgets = Budgets{});

enum class OrbitalWeight { None, Truncation, ClosedForm, WeightFactor };

struct TorusDescriptor {
    bool is_h_torus = false;  // the diagonal torus line (h, 0; 0, -h)
    int class_index = 0;      // index into FourthPowerClasses::reps otherwise
    int weight_class = 0;     // index into square_reps for WeightFactor
};

// Orbital integral of f at a regular element X of the given torus:
//   h-torus:       int_{H\G} f(g^{-1} X g) w(g) dg
//   split t_1:     int_{A\G}  f(g^{-1} X g) w(g) dg
//   elliptic t_g:  int_G      f(g^{-1} X g) w(g) dg
// with w = 1, the truncation indicator, the closed-form weight
// (1 + 2 mu - 2H_B + 2H_Bbar), or the weight factor of the class
// weight_class (split torus only).
ExactValue orbital_integral(const StepFunction& f, const LieVec& X,
                            const TorusDescriptor& torus, OrbitalWeight w,
                            long mu, const Budgets& budgets = Budgets{});

// int_{t_gamma} |gamma b| inner(b) db: finite shells plus a certified tail.
// Shell values are fitted to (a + b v) q^{-v} + (c + d v) q^{-2v} once they
// stabilize; the fit is verified on extra shells and re-checked on a
// widened window before the closed-form tail is accepted.
struct TorusFamilyHints {
    long v_min = -8;
    int cell_level = 1;
    long fit_start = 4; // first shell allowed to enter the tail fit
};
ExactValue torus_family_integral(const FieldContext& ctx, long gamma_valuation,
                                 const std::function<ExactValue(const PAdic&)>& inner,
                                 const TorusFamilyHints& hints,
                                 const Budgets& budgets = Budgets{});

} // namespace rtf
