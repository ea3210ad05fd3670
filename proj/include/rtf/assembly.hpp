#pragma once

#include "rtf/integration.hpp"
#include "rtf/weights.hpp"

#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace rtf {

// Everything derived from one test function: the K-averages, the Fourier
// transform, the Borel slices the trace formula terms live on, and the
// epsilon certificate.
class Pipeline {
public:
    Pipeline(const FieldContext& ctx, const StepFunction& f, const Budgets& budgets,
             std::optional<long> epsilon_override = std::nullopt);
    ~Pipeline();

    const FieldContext& ctx() const { return *ctx_; }
    const Budgets& budgets() const { return budgets_; }
    const StepFunction& f() const { return f_; }
    const StepFunction& f_bar() const { return f_bar_; }      // Ad(K)-average of f
    const StepFunction& f_hat() const { return f_hat_; }      // Fourier transform
    const StepFunction& f_tilde() const { return f_tilde_; }  // Ad(K)-average of f_hat
    long epsilon_valuation() const { return eps_val_; }

    // theta-split side, direct Iwasawa route over H\G x h-perp
    ExactValue theta_split_direct(long mu) const;
    // theta-split side, Weyl expansion: split classes with their weight
    // factors plus the elliptic classes with the truncation indicator
    ExactValue theta_split_weyl(long mu) const;
    // the two pieces of the expansion (split-class part, elliptic part)
    std::pair<ExactValue, ExactValue> theta_split_weyl_parts(long mu) const;
    // theta-fixed side (exact; equals theta_split_direct by Plancherel)
    ExactValue theta_fixed(long mu) const;
    ExactValue j_minus(long mu) const;
    ExactValue j_plus(long mu) const;

    ExactValue f_hat_bprime(const PAdic& x) const;
    ExactValue plancherel_lhs() const; // int_h f_hat
    ExactValue plancherel_rhs() const; // int_{h-perp} f

    struct Identities {
        ExactValue mu1_lhs, mu1_rhs, mu1_rhs_bprime;
        ExactValue mu0_lhs, mu0_rhs;
        bool mu1_ok = false, mu0_ok = false;
    };
    Identities coefficient_identities() const;

    // support bound D: the engine certifies exact agreement of the
    // truncated sides with J-/J+ for mu > 4D
    long support_bound() const;

    // epsilon-split consistency of the theta-fixed side (certificate)
    bool theta_fixed_epsilon_split_consistent(long mu) const;

private:
    ExactValue elliptic_plane_integral(std::optional<long> mu_trunc) const;
    ExactValue split_weyl_sum(long mu) const;
    ExactValue split_closed_sum(long mu) const; // weight 1+2mu+2min(0, vy-vb)
    ExactValue nilpotent_integral(long mu_coeff_shift) const;
    Rational wfd_avg(int idx, long v, long mu) const; // memoized shell average
    void build_eplane_leaves() const;
    struct SplitShellCache;
    const std::vector<SplitShellCache>& split_shells() const;

    const FieldContext* ctx_;
    Budgets budgets_;
    StepFunction f_, f_bar_, f_bar_u_, f_hat_, f_tilde_;
    StepFunction sliceA_; // f_bar_u restricted to c = 0: 2-d (b, y)
    StepFunction sliceT_; // f_tilde restricted to c = 0: 2-d (h, y)
    StepFunction nilp_;   // sliceT at h = 0: 1-d (y)
    long eps_val_ = 0;
    // elliptic plane integral: mu-independent leaf accumulators for the
    // zero-free beta cells (keyed by the truncation threshold), plus the
    // zero-chain beta terms evaluated per mu
    mutable bool eplane_built_ = false;
    mutable std::map<long, ExactValue> eplane_free_;      // threshold -> mass
    mutable std::map<long, ExactValue> eplane_zero_full_; // rexp -> density q^{-rexp}
    mutable std::map<long, ExactValue> eplane_zero_cnt_;  // rexp -> density
    mutable std::map<long, ExactValue> eplane_chain_cache_; // by mu (-1 = none)
    mutable std::shared_ptr<void> eplane_chain_buckets_;    // per (term, shell) leaves
    mutable std::map<long, ExactValue> eplane_cache_;       // totals by mu
    mutable std::map<long, Rational> wfd_cache_;
    mutable std::unique_ptr<std::vector<SplitShellCache>> split_cache_;
};

// Section 4.1 check data for one (f, g) pair: the integral of
// f(g^{-1} X g) over h-perp, against its expansion over the fourth-power
// classes.
struct WeylCheck {
    ExactValue lhs;
    std::vector<ExactValue> per_class; // indexed like FourthPowerClasses::reps
    ExactValue rhs;
    bool ok = false;
};
WeylCheck weyl_integration_check(const StepFunction& f, const Mat2& g,
                                 const Budgets& budgets);

// Same right-hand side computed by the literal H-orbit route (torus shells
// and unit cells); slow, used as a cross-check on small functions.
ExactValue weyl_rhs_orbit_route(const StepFunction& f, const Mat2& g, int class_index,
                                const Budgets& budgets);

// Lemma certification over a grid of g with d(g) <= dmax and
// 4 d(g) < mu <= mu_max: every scan point must agree.
struct LemmaCertification {
    long points_checked = 0;
    long mismatches = 0;
    bool ok() const { return mismatches == 0 && points_checked > 0; }
};
LemmaCertification certify_lemma(const FieldContext& ctx, long dmax, long mu_max,
                                 const Budgets& budgets);

struct TraceFormulaRequest {
    StepFunction f;
    std::vector<long> mu_list;
    std::optional<long> epsilon_valuation;
    Budgets budgets;
    std::string label;
};

struct MuRow {
    long mu;
    ExactValue theta_split_direct, theta_split_weyl, theta_fixed, j_minus, j_plus;
    ExactValue split_minus_jminus, fixed_minus_jplus;
};

struct FunctionVerdict {
    std::string label;
    std::vector<MuRow> rows;
    Pipeline::Identities identities;
    long epsilon_valuation = 0;
    long support_bound = 0;
    bool flag_direct_eq_weyl = false;
    bool flag_split_eq_fixed = false;
    bool flag_jminus_eq_jplus = false;
    bool flag_affine = false;
    bool flag_identities = false;
    bool flag_convergence = false;
    bool flag_epsilon_split = false;
    bool all_ok() const
    {
        return flag_direct_eq_weyl && flag_split_eq_fixed && flag_jminus_eq_jplus &&
               flag_affine && flag_identities && flag_convergence && flag_epsilon_split;
    }
};

FunctionVerdict verify_function(const FieldContext& ctx, const TraceFormulaRequest& request);

} // namespace rtf
