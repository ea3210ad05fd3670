#include "rtf/assembly.hpp"

#include "rtf/conj_average.hpp"
#include "rtf/fourier.hpp"

#include <algorithm>

namespace rtf {

namespace {

long pow_long(long p, long e)
{
    long r = 1;
    while (e-- > 0) r *= p;
    return r;
}

bool zero_free(const PAdic& center, long m)
{
    return center.value() != 0 && center.valuation() < m;
}

// Sum of fn(v) for v >= v_from, where fn satisfies fn(v + period) = r fn(v)
// from some shell on.  The ratio is certified gap-free over five periods and
// re-checked on a widened window; fit_from forces the fit past any known
// regime boundary (shells below it are summed directly).
Rational certified_geometric_sum(const FieldContext& ctx,
                                 const std::function<Rational(long)>& fn,
                                 long v_from, long period, const Budgets& budgets,
                                 long fit_from)
{
    std::map<long, Rational> memo;
    auto val = [&](long v) {
        auto it = memo.find(v);
        if (it != memo.end()) return it->second;
        Rational r = fn(v);
        memo.emplace(v, r);
        return r;
    };
    long P = period;
    for (long V = std::max(v_from, fit_from); V <= v_from + budgets.max_shells; ++V) {
        // candidate ratio over every consecutive pair in [V, V + 5P)
        bool all_zero = true;
        Rational r(0);
        bool have_r = false, consistent = true;
        for (long i = 0; i < 4 * P && consistent; ++i) {
            Rational lo = val(V + i), hi = val(V + P + i);
            if (lo != 0) {
                all_zero = false;
                Rational cand = hi / lo;
                if (!have_r) {
                    r = cand;
                    have_r = true;
                } else if (cand != r) {
                    consistent = false;
                }
            } else if (hi != 0) {
                consistent = false;
            }
        }
        if (!consistent) continue;
        if (all_zero) {
            bool widened_ok = true;
            for (long i = 0; i < 3 * P && widened_ok; ++i)
                if (val(V + 5 * P + i) != 0) widened_ok = false;
            if (!widened_ok) continue;
            Rational direct(0);
            for (long v = v_from; v < V; ++v) direct += val(v);
            return direct;
        }
        if (!have_r) continue;
        if (!(abs(r.get_num()) < r.get_den())) continue; // need |r| < 1
        bool widened_ok = true;
        for (long i = 0; i < 2 * P && widened_ok; ++i)
            if (val(V + 6 * P + i) != r * val(V + 5 * P + i)) widened_ok = false;
        if (!widened_ok) continue;
        Rational direct(0);
        for (long v = v_from; v < V; ++v) direct += val(v);
        Rational block(0);
        for (long i = 0; i < P; ++i) block += val(V + i);
        return direct + block / (Rational(1) - r);
    }
    throw certification_error("geometric tail not stabilized (raise max_shells)");
}

// vol{delta in B : delta / beta in the class of reps[class_index]}
Rational class_ratio_vol(const FieldContext& ctx, const Ball& B, const PAdic& beta,
                         int class_index)
{
    const auto& cls = ctx.fourth_power_classes();
    long q = ctx.q();
    if (!ball_contains_zero(B)) {
        PAdic r = B.center / beta;
        return cls.class_of(r) == class_index ? ball_vol(ctx, B) : Rational(0);
    }
    long target = cls.reps[static_cast<size_t>(class_index)].valuation() % 4;
    long vb = beta.valuation();
    // shells v with v - vb = target mod 4 carry unit-class density 1/mu4
    long v0 = B.rexp;
    long first = v0 + ((((target + vb - v0) % 4) + 4) % 4);
    Rational dens(1, ctx.mu4_order());
    Rational one_m_qinv = Rational(1) - rat_pow(q, -1);
    return dens * one_m_qinv * rat_pow(q, -first) / (Rational(1) - rat_pow(q, -4));
}

} // namespace

// ---------------------------------------------------------------------------
// Pipeline construction
// ---------------------------------------------------------------------------

Pipeline::~Pipeline() = default;

Pipeline::Pipeline(const FieldContext& ctx, const StepFunction& f, const Budgets& budgets,
                   std::optional<long> epsilon_override)
    : ctx_(&ctx), budgets_(budgets), f_(f)
{
    f_bar_ = conjugation_average(f_, budgets_.k_level_override, budgets_);
    f_bar_u_ = u_frame_pullback(f_bar_);
    sliceA_ = f_bar_u_.restrict_coordinate(2, ctx.zero());
    f_hat_ = fourier_transform(f_, PairingForm::sl2_trace_form(), budgets_);
    f_tilde_ = conjugation_average(f_hat_, budgets_.k_level_override, budgets_);
    sliceT_ = f_tilde_.restrict_coordinate(2, ctx.zero());
    nilp_ = sliceT_.restrict_coordinate(0, ctx.zero());

    // epsilon: f_tilde(h, y, 0) = f_tilde(0, y, 0) whenever v(h) >= v(eps);
    // certified on boundary-shell samples.
    long eps = epsilon_override.value_or(std::max(f_tilde_.level(), 0L));
    auto certify = [&](long e) {
        std::vector<PAdic> hs;
        for (long d = 1; d <= std::min(ctx.q() - 1, 3L); ++d)
            hs.push_back(ctx.scalar(Rational(d) * rat_pow(ctx.q(), e)));
        hs.push_back(ctx.uniformizer(e + 1));
        std::vector<PAdic> ys;
        ys.push_back(ctx.zero());
        ys.push_back(ctx.one());
        ys.push_back(ctx.uniformizer(-f_tilde_.support_exponent()));
        for (const auto& t : sliceT_.terms()) ys.push_back(t.center[1]);
        for (const auto& h : hs)
            for (const auto& y : ys) {
                ExactValue a = f_tilde_.evaluate({h, y, ctx.zero()});
                ExactValue b = f_tilde_.evaluate({ctx.zero(), y, ctx.zero()});
                if (!(a == b)) return false;
            }
        return true;
    };
    if (epsilon_override) {
        if (!certify(eps))
            throw certification_error("epsilon override fails its certificate");
    } else {
        int tries = 0;
        while (!certify(eps)) {
            ++eps;
            if (++tries > 8) throw certification_error("epsilon certification failed");
        }
    }
    eps_val_ = eps;
}

// ---------------------------------------------------------------------------
// theta-split side, direct route:
//   S(mu) = sum over terms of f_bar of  a q^{-m} int_{v(x) >= -mu} V(x) dx,
//   V(x) = vol( Ball(uc, m) cap Ball(-uh/x, m - v(x)) ).
// Shell data is mu-independent and cached; only the truncation boundary
// moves with mu.
// ---------------------------------------------------------------------------

struct Pipeline::SplitShellCache {
    ExactValue coeff;       // term coefficient times q^{-m}
    bool c_in = false;      // closed low shells carry (1-1/q) q^{-m} each
    bool h_in = false;      // nonzero high tail
    long m = 0;
    long V_LO = 0, V_HI = 0;
    std::vector<Rational> shell; // explicit shell integrals on [V_LO+1, V_HI]
};

const std::vector<Pipeline::SplitShellCache>& Pipeline::split_shells() const
{
    if (split_cache_) return *split_cache_;
    long q = ctx_->q();
    Rational one_m_qinv = Rational(1) - rat_pow(q, -1);
    auto cache = std::make_unique<std::vector<SplitShellCache>>();
    for (const auto& t : f_bar_.terms()) {
        const PAdic& uh = t.center[0];
        const PAdic& uc = t.center[2];
        long m = t.level;
        Ball Bc{uc, m};
        SplitShellCache sc;
        sc.coeff = t.coeff * ExactValue(rat_pow(q, -m));
        sc.m = m;
        sc.h_in = ball_contains_zero(Ball{uh, m});
        sc.c_in = ball_contains_zero(Bc);
        long vh = (uh.value() == 0) ? kValInf : uh.valuation();
        long vc = (uc.value() == 0) ? kValInf : uc.valuation();
        long vc_min = sc.c_in ? m : vc;

        sc.V_LO = sc.h_in ? 0 : std::min(0L, vh - m);
        sc.V_HI = std::max({sc.V_LO, 0L, m - vc_min}) + 2;
        if (!sc.h_in) sc.V_HI = std::max({sc.V_HI, vh - vc_min + 2, vh - m + 2});
        if (uh.value() != 0 && uc.value() != 0)
            sc.V_HI = std::max(sc.V_HI, vh - vc + 1);

        auto shell_int = [&](long v) {
            // the intersection decision depends on the digits of x only on
            // the cancellation shell v(uh/x) = v(uc)
            bool sensitive =
                uh.value() != 0 && uc.value() != 0 && v == vh - vc;
            long lam = sensitive ? std::max(1L, m - vh) : 0;
            Rational sum(0);
            if (lam == 0) {
                PAdic x = ctx_->scalar(rat_pow(q, v));
                Ball B2{(uh.value() == 0) ? ctx_->zero() : -uh / x, m - v};
                auto inter = ball_intersect(Bc, B2);
                if (inter) sum = one_m_qinv * rat_pow(q, -v) * ball_vol(*ctx_, *inter);
            } else {
                long plam = pow_long(q, lam);
                Rational cellvol = rat_pow(q, -v - lam);
                for (long d = 1; d < plam; ++d) {
                    if (d % q == 0) continue;
                    PAdic x = ctx_->scalar(Rational(d) * rat_pow(q, v));
                    Ball B2{-uh / x, m - v};
                    auto inter = ball_intersect(Bc, B2);
                    if (inter) sum += cellvol * ball_vol(*ctx_, *inter);
                }
            }
            return sum;
        };

        for (long v = sc.V_LO + 1; v <= sc.V_HI; ++v) sc.shell.push_back(shell_int(v));
        // certify the closed forms on both sides of the explicit window
        Rational lo_expect = sc.c_in ? one_m_qinv * rat_pow(q, -m) : Rational(0);
        if (shell_int(sc.V_LO) != lo_expect || shell_int(sc.V_LO - 1) != lo_expect)
            throw certification_error("theta-split low shell prediction failed");
        for (long v = sc.V_HI + 1; v <= sc.V_HI + 2; ++v) {
            Rational expect =
                sc.h_in ? one_m_qinv * rat_pow(q, -v) * rat_pow(q, -m) : Rational(0);
            if (shell_int(v) != expect)
                throw certification_error("theta-split tail prediction failed");
        }
        cache->push_back(std::move(sc));
    }
    split_cache_ = std::move(cache);
    return *split_cache_;
}

ExactValue Pipeline::theta_split_direct(long mu) const
{
    long q = ctx_->q();
    Rational one_m_qinv = Rational(1) - rat_pow(q, -1);
    ExactValue total;
    for (const auto& sc : split_shells()) {
        Rational xint(0);
        long lo_count = sc.V_LO + mu + 1;
        if (lo_count > 0 && sc.c_in)
            xint += Rational(lo_count) * one_m_qinv * rat_pow(q, -sc.m);
        for (long v = std::max(-mu, sc.V_LO + 1); v <= sc.V_HI; ++v)
            xint += sc.shell[static_cast<size_t>(v - sc.V_LO - 1)];
        if (sc.h_in) xint += rat_pow(q, -sc.m) * rat_pow(q, -std::max(sc.V_HI + 1, -mu));
        total += sc.coeff * ExactValue(xint);
    }
    return total;
}

// ---------------------------------------------------------------------------
// split-torus sums over the slice of f_bar_u at c = 0 (coordinates (b, y))
// ---------------------------------------------------------------------------

ExactValue Pipeline::split_closed_sum(long mu) const
{
    long q = ctx_->q();
    Rational one_m_qinv = Rational(1) - rat_pow(q, -1);
    Rational qinv = rat_pow(q, -1);
    ExactValue total;
    for (const auto& t : sliceA_.terms()) {
        const PAdic& ub = t.center[0];
        const PAdic& uy = t.center[1];
        long m = t.level;
        bool b_in = ball_contains_zero(Ball{ub, m});
        bool y_in = ball_contains_zero(Ball{uy, m});
        Rational val(0);
        if (!b_in && !y_in) {
            long d = uy.valuation() - ub.valuation();
            val = rat_pow(q, -2 * m) * Rational(1 + 2 * mu + 2 * std::min(0L, d));
        } else if (!b_in && y_in) {
            // all shells of y sit above v(b): the weight is constant 1+2mu
            val = rat_pow(q, -2 * m) * Rational(1 + 2 * mu);
        } else if (b_in && !y_in) {
            long vy = uy.valuation();
            val = rat_pow(q, -m) * one_m_qinv *
                  (Rational(1 + 2 * mu + 2 * vy) * geom_sum(qinv, m) -
                   Rational(2) * geom_sum_linear(qinv, m));
        } else {
            Rational S0 = geom_sum(qinv, m);
            val = one_m_qinv * one_m_qinv *
                  (Rational(1 + 2 * mu) * S0 * S0 + Rational(2) * tail2_min(qinv, m, m));
        }
        total += t.coeff * ExactValue(val);
    }
    return total;
}

Rational Pipeline::wfd_avg(int idx, long v, long mu) const
{
    long key = ((static_cast<long>(idx) * 41 + mu) << 24) ^ (v + (1L << 20));
    auto it = wfd_cache_.find(key);
    if (it != wfd_cache_.end()) return it->second;
    Rational r = wfd_nx_shell_avg(*ctx_, idx, v, mu);
    wfd_cache_.emplace(key, r);
    return r;
}

ExactValue Pipeline::split_weyl_sum(long mu) const
{
    long q = ctx_->q();
    const auto& cls = ctx_->fourth_power_classes();
    Rational one_m_qinv = Rational(1) - rat_pow(q, -1);
    Rational dens = (ctx_->p() % 4 == 3) ? Rational(1) : Rational(1, 2);
    Rational C = one_m_qinv * one_m_qinv / (Rational(1) - rat_pow(q, -2));
    ExactValue total;

    for (size_t gi = 0; gi < cls.square_roots.size(); ++gi) {
        int gidx = static_cast<int>(gi);
        long vsig = cls.square_roots[gi].valuation();
        Rational Winf = wfd_avg(gidx, 1, mu);
        // deep tail coefficient: avg(v) = [v = vsig mod 2] dens mu4 q^{v+mu}/(1-1/q)
        Rational deep_coeff = dens * Rational(ctx_->mu4_order()) / one_m_qinv;

        for (const auto& t : sliceA_.terms()) {
            const PAdic& ub = t.center[0];
            const PAdic& uy = t.center[1];
            long m = t.level;
            bool b_in = ball_contains_zero(Ball{ub, m});
            bool y_in = ball_contains_zero(Ball{uy, m});
            Rational val(0);
            if (!b_in && !y_in) {
                PAdic x = uy / (ctx_->scalar(2) * ub);
                val = rat_pow(q, -2 * m) * wfd_nx_exact(*ctx_, gidx, x, mu);
            } else if (!b_in && y_in) {
                val = rat_pow(q, -2 * m) * Winf;
            } else if (b_in && !y_in) {
                long vy = uy.valuation();
                long i2 = std::max(m, vy + mu + 1);
                for (long i = m; i < i2; ++i)
                    val += one_m_qinv * rat_pow(q, -i) * rat_pow(q, -m) *
                           wfd_avg(gidx, vy - i, mu);
                // tail over i >= i2 with vy - i = vsig mod 2
                long i0 = i2 + ((((vy - vsig - i2) % 2) + 2) % 2);
                // check the analytic deep form on two shells
                for (long i : {i0, i0 + 2}) {
                    Rational expect = deep_coeff * rat_pow(q, (vy - i) + mu);
                    if (wfd_avg(gidx, vy - i, mu) != expect)
                        throw certification_error("weyl deep shell form failed");
                }
                val += one_m_qinv * rat_pow(q, -m) * deep_coeff * rat_pow(q, vy + mu) *
                       rat_pow(q, -2 * i0) / (Rational(1) - rat_pow(q, -4));
            } else {
                // sum over d = vy - vb with kernel G(d) = C q^{-2m-|d|}
                Rational base = C * rat_pow(q, -2 * m);
                // d >= 0
                val += base * Winf / one_m_qinv;
                // explicit d in [-mu, -1]
                for (long d = -mu; d <= -1; ++d)
                    val += base * rat_pow(q, d) * wfd_avg(gidx, d, mu);
                // d <= -mu-1 with parity d = vsig mod 2
                long d0 = -mu - 1;
                while ((((d0 - vsig) % 2) + 2) % 2 != 0) --d0;
                for (long d : {d0, d0 - 2}) {
                    Rational expect = deep_coeff * rat_pow(q, d + mu);
                    if (wfd_avg(gidx, d, mu) != expect)
                        throw certification_error("weyl deep shell form failed");
                }
                val += base * deep_coeff * rat_pow(q, mu) * rat_pow(q, 2 * d0) /
                       (Rational(1) - rat_pow(q, -4));
            }
            total += t.coeff * ExactValue(val);
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// elliptic plane integral over { class(delta/beta) not a square } of
//   int_x f_bar(-beta x, delta - beta x^2, beta) dx,
// optionally truncated to v(x) >= -mu.
// ---------------------------------------------------------------------------

namespace {

struct EPlaneTermContext {
    const FieldContext* ctx;
    PAdic uh, ub, uc;
    long m;
};

// Leaves of the x-recursion over one beta cell: zero-free balls (a single
// valuation t, mass counted when mu >= -t) and balls around zero (density
// against vol(ball cap {v >= -mu})).
struct LeafBucket {
    std::map<long, Rational> free_mass; // x-valuation t -> mass
    std::map<long, Rational> zero_dens; // rexp -> density
    void add_scaled(const LeafBucket& o, const Rational& s)
    {
        for (auto& [t, v] : o.free_mass) free_mass[t] += v * s;
        for (auto& [r, v] : o.zero_dens) zero_dens[r] += v * s;
    }
    Rational eval(const FieldContext& ctx, std::optional<long> mu) const
    {
        Rational total(0);
        for (auto& [t, v] : free_mass)
            if (!mu || t >= -*mu) total += v;
        for (auto& [r, v] : zero_dens)
            total += v * rat_pow(ctx.q(), -(mu ? std::max(r, -*mu) : r));
        return total;
    }
};

// x-recursion for beta known to absolute precision bprec; returns false if
// the beta digits cannot decide the D0-ball data (the caller then refines
// the beta cell).
bool eplane_x_rec(const EPlaneTermContext& tc, const PAdic& beta, long bprec,
                  const Ball& node, int depth, LeafBucket& out)
{
    const FieldContext& ctx = *tc.ctx;
    long q = ctx.q();
    if (depth > 72) throw budget_error("eplane recursion too deep");
    long vb = beta.valuation();
    const PAdic& x0 = node.center;
    long rho = node.rexp;
    bool node_zero = ball_contains_zero(node);

    long min_vx = node_zero ? rho : x0.valuation();
    long shift_x = node_zero ? vb + 2 * rho : vb + std::min(min_vx + rho, 2 * rho);
    long shift_b = bprec + 2 * min_vx;
    long shift = std::min(shift_x, shift_b);
    PAdic D0 = tc.ub + beta * x0 * x0;

    if (shift >= tc.m) {
        Rational density = nonsquare_ratio_vol(ctx, Ball{D0, tc.m}, beta);
        if (density != 0) {
            if (node_zero)
                out.zero_dens[rho] += density;
            else
                out.free_mass[min_vx] += density * ball_vol(ctx, node);
        }
        return true;
    }
    if (D0.value() != 0 && D0.valuation() < std::min(tc.m, shift)) {
        PAdic r = D0 / beta;
        bool square = (((r.valuation() % 2) + 2) % 2 == 0) &&
                      is_square_unit(ctx, r.unit_mod(1));
        if (!square) {
            if (node_zero)
                out.zero_dens[rho] += rat_pow(q, -tc.m);
            else
                out.free_mass[min_vx] += rat_pow(q, -tc.m) * ball_vol(ctx, node);
        }
        return true;
    }
    if (shift_x >= tc.m) return false; // only finer beta digits can decide
    for (long d = 0; d < q; ++d) {
        PAdic c = x0 + ctx.scalar(d) * ctx.uniformizer(rho);
        if (!eplane_x_rec(tc, beta, bprec, Ball{c, rho + 1}, depth + 1, out))
            return false;
    }
    return true;
}

// adaptive beta integral over a zero-free beta cell
void eplane_beta_rec(const EPlaneTermContext& tc, const Ball& cell, int depth,
                     LeafBucket& out)
{
    const FieldContext& ctx = *tc.ctx;
    long q = ctx.q();
    if (depth > 48) throw budget_error("eplane beta recursion too deep");
    const PAdic& beta = cell.center;
    long vb = beta.valuation();
    // the root x-ball center -uh/beta must be stable across the cell
    bool root_stable = tc.uh.value() == 0 ||
                       cell.rexp >= tc.m - tc.uh.valuation() + vb;
    if (root_stable) {
        Ball Bx{(tc.uh.value() == 0) ? ctx.zero() : -tc.uh / beta, tc.m - vb};
        LeafBucket trial;
        if (eplane_x_rec(tc, beta, cell.rexp, Bx, 0, trial)) {
            out.add_scaled(trial, ball_vol(ctx, cell));
            return;
        }
    }
    for (long d = 0; d < q; ++d) {
        PAdic c = beta + ctx.scalar(d) * ctx.uniformizer(cell.rexp);
        eplane_beta_rec(tc, Ball{c, cell.rexp + 1}, depth + 1, out);
    }
}

using ChainBuckets = std::map<std::pair<size_t, long>, LeafBucket>;

} // namespace

void Pipeline::build_eplane_leaves() const
{
    if (eplane_built_) return;
    long q = ctx_->q();
    for (const auto& t : f_bar_.terms()) {
        EPlaneTermContext tc{ctx_, t.center[0], t.center[1], t.center[2], t.level};
        const PAdic& uc = t.center[2];
        long m = t.level;
        if (ball_contains_zero(Ball{uc, m})) continue; // handled per mu below
        LeafBucket bucket;
        eplane_beta_rec(tc, Ball{uc, m}, 0, bucket);
        const ExactValue& coeff = t.coeff;
        for (auto& [tt, mass] : bucket.free_mass)
            eplane_free_[-tt] += coeff * ExactValue(mass);
        for (auto& [rexp, density] : bucket.zero_dens) {
            eplane_zero_cnt_[rexp] += coeff * ExactValue(density);
            eplane_zero_full_[rexp] += coeff * ExactValue(density * rat_pow(q, -rexp));
        }
    }
    eplane_chain_buckets_ = std::make_shared<ChainBuckets>();
    eplane_built_ = true;
}

ExactValue Pipeline::elliptic_plane_integral(std::optional<long> mu_trunc) const
{
    long key = mu_trunc ? *mu_trunc : -1;
    auto it = eplane_cache_.find(key);
    if (it != eplane_cache_.end()) return it->second;
    build_eplane_leaves();

    long q = ctx_->q();
    ExactValue total;
    for (const auto& [thresh, mass] : eplane_free_)
        if (!mu_trunc || thresh <= *mu_trunc) total += mass;
    for (const auto& [rexp, full] : eplane_zero_full_) {
        if (!mu_trunc || -rexp <= *mu_trunc)
            total += full;
        else
            total += eplane_zero_cnt_.at(rexp) * ExactValue(rat_pow(q, *mu_trunc));
    }

    // beta cosets containing zero: per-mu certified shell sums over cached
    // per-shell leaf buckets
    auto chain = eplane_chain_cache_.find(key);
    if (chain == eplane_chain_cache_.end()) {
        auto& buckets = *std::static_pointer_cast<ChainBuckets>(eplane_chain_buckets_);
        ExactValue csum;
        for (size_t ti = 0; ti < f_bar_.terms().size(); ++ti) {
            const auto& t = f_bar_.terms()[ti];
            EPlaneTermContext tc{ctx_, t.center[0], t.center[1], t.center[2], t.level};
            const PAdic& uc = t.center[2];
            long m = t.level;
            if (!ball_contains_zero(Ball{uc, m})) continue;
            auto shell_val = [&](long vbeta) {
                auto bit = buckets.find({ti, vbeta});
                if (bit == buckets.end()) {
                    LeafBucket bucket;
                    for (long d = 1; d < q; ++d) {
                        PAdic beta = ctx_->scalar(Rational(d) * rat_pow(q, vbeta));
                        eplane_beta_rec(tc, Ball{beta, vbeta + 1}, 0, bucket);
                    }
                    bit = buckets.emplace(std::make_pair(ti, vbeta), std::move(bucket)).first;
                }
                return bit->second.eval(*ctx_, mu_trunc);
            };
            long fit_from = mu_trunc ? m + *mu_trunc + 2 : m;
            csum += t.coeff * ExactValue(certified_geometric_sum(*ctx_, shell_val, m, 2,
                                                                 budgets_, fit_from));
        }
        chain = eplane_chain_cache_.emplace(key, csum).first;
    }
    total += chain->second;
    eplane_cache_.emplace(key, total);
    return total;
}

// ---------------------------------------------------------------------------
// assembled sides
// ---------------------------------------------------------------------------

std::pair<ExactValue, ExactValue> Pipeline::theta_split_weyl_parts(long mu) const
{
    Rational pref = (Rational(1) - rat_pow(ctx_->q(), -1)) / Rational(ctx_->mu4_order());
    return {split_weyl_sum(mu) * ExactValue(pref), elliptic_plane_integral(mu)};
}

ExactValue Pipeline::theta_split_weyl(long mu) const
{
    auto [split, ell] = theta_split_weyl_parts(mu);
    return split + ell;
}

ExactValue Pipeline::j_minus(long mu) const
{
    Rational pref = (Rational(1) - rat_pow(ctx_->q(), -1)) / Rational(2);
    return split_closed_sum(mu) * ExactValue(pref) + elliptic_plane_integral(std::nullopt);
}

ExactValue Pipeline::theta_fixed(long mu) const
{
    long q = ctx_->q();
    Rational one_m_qinv = Rational(1) - rat_pow(q, -1);
    ExactValue total;
    for (const auto& t : sliceT_.terms()) {
        const PAdic& uh = t.center[0];
        const PAdic& uy = t.center[1];
        long m = t.level;
        Ball Hy{uy, m};
        Rational val(0);
        if (zero_free(uh, m)) {
            long vh = uh.valuation();
            val = rat_pow(q, vh) * rat_pow(q, -m) * ball_vol_above(*ctx_, Hy, vh - mu);
        } else if (zero_free(uy, m)) {
            val = one_m_qinv * rat_pow(q, -m) *
                  Rational(std::max(0L, uy.valuation() + mu - m + 1));
        } else {
            val = one_m_qinv * Rational(mu + 1) * rat_pow(q, -m) + rat_pow(q, -m - 1);
        }
        total += t.coeff * ExactValue(val);
    }
    return total;
}

ExactValue Pipeline::nilpotent_integral(long shift) const
{
    long q = ctx_->q();
    Rational one_m_qinv = Rational(1) - rat_pow(q, -1);
    Rational qinv = rat_pow(q, -1);
    ExactValue total;
    for (const auto& t : nilp_.terms()) {
        const PAdic& uy = t.center[0];
        long m = t.level;
        Rational val(0);
        if (zero_free(uy, m)) {
            val = rat_pow(q, -m) * Rational(uy.valuation() + shift);
        } else {
            val = one_m_qinv * (geom_sum_linear(qinv, m) + Rational(shift) * geom_sum(qinv, m));
        }
        total += t.coeff * ExactValue(val);
    }
    return total;
}

ExactValue Pipeline::j_plus(long mu) const
{
    long q = ctx_->q();
    Rational one_m_qinv = Rational(1) - rat_pow(q, -1);
    ExactValue nil = nilpotent_integral(mu - eps_val_ + 1) * ExactValue(one_m_qinv);

    ExactValue hepsc;
    for (const auto& t : sliceT_.terms()) {
        const PAdic& uh = t.center[0];
        long m = t.level;
        Rational val(0);
        if (zero_free(uh, m)) {
            long vh = uh.valuation();
            if (vh < eps_val_) val = rat_pow(q, vh) * rat_pow(q, -2 * m);
        } else {
            val = one_m_qinv * rat_pow(q, -m) * Rational(std::max(0L, eps_val_ - m));
        }
        hepsc += t.coeff * ExactValue(val);
    }
    return nil + hepsc;
}

bool Pipeline::theta_fixed_epsilon_split_consistent(long mu) const
{
    long q = ctx_->q();
    Rational one_m_qinv = Rational(1) - rat_pow(q, -1);
    Rational qinv = rat_pow(q, -1);
    long shift = mu - eps_val_ + 1;

    // h_eps part via the nilpotent slice with the truncated weight
    ExactValue heps;
    for (const auto& t : nilp_.terms()) {
        const PAdic& uy = t.center[0];
        long m = t.level;
        Rational val(0);
        if (zero_free(uy, m)) {
            val = rat_pow(q, -m) * Rational(std::max(0L, uy.valuation() + shift));
        } else {
            long v0 = std::max(m, eps_val_ - mu);
            val = one_m_qinv *
                  (geom_sum_linear(qinv, v0) + Rational(shift) * geom_sum(qinv, v0));
        }
        heps += t.coeff * ExactValue(one_m_qinv * val);
    }

    // h_eps^c part with the truncation indicator
    ExactValue hepsc;
    for (const auto& t : sliceT_.terms()) {
        const PAdic& uh = t.center[0];
        const PAdic& uy = t.center[1];
        long m = t.level;
        Ball Hy{uy, m};
        Rational val(0);
        if (zero_free(uh, m)) {
            long vh = uh.valuation();
            if (vh < eps_val_)
                val = rat_pow(q, vh) * rat_pow(q, -m) * ball_vol_above(*ctx_, Hy, vh - mu);
        } else {
            for (long w = m; w < eps_val_; ++w)
                val += one_m_qinv * ball_vol_above(*ctx_, Hy, w - mu);
        }
        hepsc += t.coeff * ExactValue(val);
    }
    return theta_fixed(mu) == heps + hepsc;
}

ExactValue Pipeline::f_hat_bprime(const PAdic& x) const
{
    long s = f_tilde_.support_exponent();
    long m = std::max(f_tilde_.level(), 0L);
    LineHints hints;
    hints.v_min = -s - 1;
    hints.v_max = m + s + 1;
    hints.cell_level = static_cast<int>(std::max(1L, m + s + 1));
    auto phi = [&](const PAdic& y) {
        return f_tilde_.evaluate({x, y, ctx_->zero()});
    };
    return integrate_line(*ctx_, phi, hints, budgets_);
}

ExactValue Pipeline::plancherel_lhs() const
{
    return f_hat_.restrict_coordinate(2, ctx_->zero())
        .restrict_coordinate(1, ctx_->zero())
        .integral();
}

ExactValue Pipeline::plancherel_rhs() const
{
    return f_.restrict_coordinate(0, ctx_->zero()).integral();
}

Pipeline::Identities Pipeline::coefficient_identities() const
{
    Identities out;
    Rational one_m_qinv = Rational(1) - rat_pow(ctx_->q(), -1);
    out.mu1_lhs = sliceA_.integral();
    out.mu1_rhs = nilp_.integral();
    out.mu1_rhs_bprime = f_hat_bprime(ctx_->zero());
    out.mu0_lhs = split_closed_sum(0) * ExactValue(Rational(1, 2)) +
                  elliptic_plane_integral(std::nullopt) * ExactValue(Rational(1) / one_m_qinv);
    // right side of the mu^0 identity: nilpotent term with weight
    // (1 + v(n) - v(eps)) plus the h_eps^c term divided by (1 - |pi|)
    ExactValue nil = nilpotent_integral(1 - eps_val_);
    ExactValue hepsc = j_plus(0) - nilpotent_integral(0 - eps_val_ + 1) * ExactValue(one_m_qinv);
    out.mu0_rhs = nil + hepsc * ExactValue(Rational(1) / one_m_qinv);
    out.mu1_ok = (out.mu1_lhs == out.mu1_rhs) && (out.mu1_rhs == out.mu1_rhs_bprime);
    out.mu0_ok = (out.mu0_lhs == out.mu0_rhs);
    return out;
}

long Pipeline::support_bound() const
{
    return sliceA_.support_exponent() + std::max(0L, sliceA_.level());
}

// ---------------------------------------------------------------------------
// Weyl integration formula check for one (f, g) pair
// ---------------------------------------------------------------------------

WeylCheck weyl_integration_check(const StepFunction& f, const Mat2& g, const Budgets& budgets)
{
    const FieldContext& ctx = *f.ctx();
    long q = ctx.q();
    const auto& cls = ctx.fourth_power_classes();
    IwasawaData iw = iwasawa(g, Frame::Bprime);
    PAdic x = iw.n.b;
    StepFunction fk = conjugate_pullback(f, iw.k);

    WeylCheck out;
    // lhs: int_{h-perp} f(g^{-1} X g) dX = int int fk(-x c, b, c) db dc
    for (const auto& t : fk.terms()) {
        const PAdic& uh = t.center[0];
        const PAdic& uc = t.center[2];
        long m = t.level;
        Ball Bc{uc, m};
        Rational v(0);
        if (x.value() == 0) {
            if (ball_contains_zero(Ball{uh, m})) v = ball_vol(ctx, Bc);
        } else {
            auto inter = ball_intersect(Bc, Ball{-uh / x, m - x.valuation()});
            if (inter) v = ball_vol(ctx, *inter);
        }
        out.lhs += t.coeff * ExactValue(rat_pow(q, -m) * v);
    }

    // rhs per class: int int over { class(delta/beta) = gamma } of
    // fk(-x beta, delta - beta x^2, beta) d beta d delta
    out.per_class.assign(cls.reps.size(), ExactValue());
    for (size_t ci = 0; ci < cls.reps.size(); ++ci) {
        ExactValue acc;
        for (const auto& t : fk.terms()) {
            const PAdic& uh = t.center[0];
            const PAdic& ub = t.center[1];
            const PAdic& uc = t.center[2];
            long m = t.level;
            // beta domain
            std::optional<Ball> Bbeta = Ball{uc, m};
            if (x.value() == 0) {
                if (!ball_contains_zero(Ball{uh, m})) continue;
            } else {
                Bbeta = ball_intersect(*Bbeta, Ball{-uh / x, m - x.valuation()});
                if (!Bbeta) continue;
            }
            // recursive beta integral (over zero-free balls) of
            // class_ratio_vol(Ball(ub + x^2 beta, m), beta)
            std::function<Rational(const Ball&, int)> rec = [&](const Ball& node,
                                                                int depth) -> Rational {
                if (depth > 72) throw budget_error("weyl beta recursion too deep");
                const PAdic& b0 = node.center;
                long rho = node.rexp;
                long vb0 = b0.valuation();
                long shift_d0 = (x.value() == 0) ? kValInf : 2 * x.valuation() + rho;
                bool beta_digits_fixed = rho >= vb0 + 1;
                PAdic D0 = (x.value() == 0) ? ub : ub + x * x * b0;
                bool d0_ball_stable = shift_d0 >= t.level;
                bool d0_class_stable =
                    D0.value() != 0 && D0.valuation() < std::min(t.level, shift_d0);
                if (beta_digits_fixed && (d0_ball_stable || d0_class_stable)) {
                    Rational inner =
                        class_ratio_vol(ctx, Ball{D0, t.level}, b0, static_cast<int>(ci));
                    return ball_vol(ctx, node) * inner;
                }
                Rational total(0);
                for (long d = 0; d < q; ++d) {
                    PAdic c = b0 + ctx.scalar(d) * ctx.uniformizer(rho);
                    total += rec(Ball{c, rho + 1}, depth + 1);
                }
                return total;
            };
            auto beta_integral = [&](const Ball& B) -> Rational {
                if (!ball_contains_zero(B)) return rec(B, 0);
                auto shell = [&](long v) {
                    Rational sum(0);
                    for (long d = 1; d < q; ++d) {
                        PAdic beta = ctx.scalar(Rational(d) * rat_pow(q, v));
                        sum += rec(Ball{beta, v + 1}, 0);
                    }
                    return sum;
                };
                return certified_geometric_sum(ctx, shell, B.rexp, 4, budgets, B.rexp);
            };
            acc += t.coeff * ExactValue(beta_integral(*Bbeta));
        }
        out.per_class[ci] = acc;
        out.rhs += acc;
    }
    out.ok = (out.lhs == out.rhs);
    return out;
}

ExactValue weyl_rhs_orbit_route(const StepFunction& f, const Mat2& g, int class_index,
                                const Budgets& budgets)
{
    const FieldContext& ctx = *f.ctx();
    long q = ctx.q();
    const auto& cls = ctx.fourth_power_classes();
    const PAdic& gamma = cls.reps.at(static_cast<size_t>(class_index));
    IwasawaData iw = iwasawa(g, Frame::Bprime);
    PAdic x = iw.n.b;
    PAdic tg = iw.t.a;
    StepFunction fk = conjugate_pullback(f, iw.k);
    long s = fk.support_exponent();
    long m = std::max(fk.level(), 0L);
    long spread = std::labs(tg.valuation()) + std::max(0L, x.value() == 0 ? 0 : -x.valuation());
    int lam = static_cast<int>(std::min<long>(m + s + 2 * spread + 2, 12));
    long plam = pow_long(q, lam);

    auto inner = [&](const PAdic& b) {
        // int_H fk( n(x)^{-1} (0, b gamma / a^2; b a^2, 0) n(x) ) dh with the
        // torus variable a = tg * p^j * unit
        ExactValue sum;
        long jlo = -((s + spread + b.valuation() + 4) / 2) - 2;
        long jhi = ((s + spread + b.valuation() + gamma.valuation()) / 2) + 2;
        for (long j = jlo; j <= jhi; ++j) {
            ExactValue usum;
            long ucount = 0;
            for (long du = 1; du < plam; ++du) {
                if (du % q == 0) continue;
                ++ucount;
                PAdic alpha = tg * ctx.scalar(Rational(du) * rat_pow(q, j));
                PAdic beta = b * alpha * alpha;
                PAdic delta = b * gamma / (alpha * alpha);
                // n(x)^{-1} (0, delta; beta, 0) n(x) = (-x beta, delta - beta x^2, beta)
                std::vector<PAdic> X{-x * beta, delta - beta * x * x, beta};
                usum += fk.evaluate(X);
            }
            sum += usum * ExactValue(Rational(1, ucount));
        }
        return sum;
    };

    TorusFamilyHints hints;
    hints.v_min = -(s + spread + 6);
    hints.cell_level = lam;
    hints.fit_start = m + s + spread + 2;
    ExactValue tfi = torus_family_integral(ctx, gamma.valuation(), inner, hints, budgets);
    Rational pref = (Rational(1) - rat_pow(q, -1)) / Rational(ctx.mu4_order());
    return tfi * ExactValue(pref);
}

// ---------------------------------------------------------------------------
// Lemma certification
// ---------------------------------------------------------------------------

LemmaCertification certify_lemma(const FieldContext& ctx, long dmax, long mu_max,
                                 const Budgets& budgets)
{
    (void)budgets;
    LemmaCertification out;
    const auto& cls = ctx.fourth_power_classes();
    std::vector<PAdic> xs{ctx.zero(), ctx.one(), ctx.scalar(2), ctx.uniformizer(1),
                          ctx.uniformizer(2), ctx.uniformizer(-1), ctx.uniformizer(-2),
                          ctx.scalar(Rational(1) + rat_pow(ctx.p(), 1))};
    std::vector<PAdic> units{ctx.one(), ctx.scalar(ctx.unit_generator()),
                             ctx.scalar(1 + ctx.p())};

    std::vector<Mat2> grid;
    for (long e = -dmax; e <= dmax; ++e) {
        for (const auto& x : xs) {
            Mat2 gt = Mat2::diag(ctx.uniformizer(e), ctx.uniformizer(-e)) *
                      Mat2::upper_unipotent(x);
            Mat2 g = from_u_frame(gt);
            Heights h = iwasawa_heights(g, Frame::B);
            if (h.d <= dmax) grid.push_back(g);
        }
    }
    for (const auto& x : xs) {
        Mat2 gt = Mat2::upper_unipotent(x) * Mat2::lower_unipotent(ctx.uniformizer(1));
        Mat2 g = from_u_frame(gt);
        Heights h = iwasawa_heights(g, Frame::B);
        if (h.d <= dmax) grid.push_back(g);
    }

    for (const auto& g : grid) {
        Heights h = iwasawa_heights(g, Frame::B);
        for (size_t gi = 0; gi < cls.square_roots.size(); ++gi) {
            for (long mu = 4 * h.d + 1; mu <= mu_max; ++mu) {
                long W = mu + 2 * h.d + 2;
                for (long nu = -W; nu <= W; ++nu) {
                    for (const auto& u : units) {
                        LemmaCheck lc =
                            lemma_pointwise(ctx, static_cast<int>(gi), g, nu, u, mu);
                        ++out.points_checked;
                        if (lc.indicator != lc.inequality) ++out.mismatches;
                    }
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// verification driver
// ---------------------------------------------------------------------------

FunctionVerdict verify_function(const FieldContext& ctx, const TraceFormulaRequest& request)
{
    FunctionVerdict out;
    out.label = request.label;
    Pipeline pipe(ctx, request.f, request.budgets, request.epsilon_valuation);
    out.epsilon_valuation = pipe.epsilon_valuation();
    out.support_bound = pipe.support_bound();

    std::vector<long> mus = request.mu_list;
    if (mus.empty()) {
        // default grid: 0..max(4, 4D + 2), which crosses the certified
        // agreement threshold of the truncated sides
        long mu_max = std::max(4L, 4 * pipe.support_bound() + 2);
        for (long mu = 0; mu <= mu_max; ++mu) mus.push_back(mu);
    }
    std::sort(mus.begin(), mus.end());
    mus.erase(std::unique(mus.begin(), mus.end()), mus.end());

    out.flag_direct_eq_weyl = true;
    out.flag_split_eq_fixed = true;
    out.flag_jminus_eq_jplus = true;
    out.flag_epsilon_split = true;
    for (long mu : mus) {
        MuRow row;
        row.mu = mu;
        row.theta_split_direct = pipe.theta_split_direct(mu);
        row.theta_split_weyl = pipe.theta_split_weyl(mu);
        row.theta_fixed = pipe.theta_fixed(mu);
        row.j_minus = pipe.j_minus(mu);
        row.j_plus = pipe.j_plus(mu);
        row.split_minus_jminus = row.theta_split_direct - row.j_minus;
        row.fixed_minus_jplus = row.theta_fixed - row.j_plus;
        if (!(row.theta_split_direct == row.theta_split_weyl)) out.flag_direct_eq_weyl = false;
        if (!(row.theta_split_direct == row.theta_fixed)) out.flag_split_eq_fixed = false;
        if (!(row.j_minus == row.j_plus)) out.flag_jminus_eq_jplus = false;
        if (!pipe.theta_fixed_epsilon_split_consistent(mu)) out.flag_epsilon_split = false;
        out.rows.push_back(std::move(row));
    }

    // affineness: vanishing second differences of J- and J+
    out.flag_affine = true;
    for (size_t i = 0; i + 2 < out.rows.size(); ++i) {
        if (out.rows[i].mu + 1 != out.rows[i + 1].mu ||
            out.rows[i + 1].mu + 1 != out.rows[i + 2].mu)
            continue;
        ExactValue d2m = out.rows[i + 2].j_minus - out.rows[i + 1].j_minus -
                         (out.rows[i + 1].j_minus - out.rows[i].j_minus);
        ExactValue d2p = out.rows[i + 2].j_plus - out.rows[i + 1].j_plus -
                         (out.rows[i + 1].j_plus - out.rows[i].j_plus);
        if (!d2m.is_zero() || !d2p.is_zero()) out.flag_affine = false;
    }

    out.identities = pipe.coefficient_identities();
    out.flag_identities = out.identities.mu1_ok && out.identities.mu0_ok;

    // convergence: |S - J-| and |T - J+| non-increasing, exactly 0 past 4D
    out.flag_convergence = true;
    auto absr = [](const ExactValue& v) {
        Rational r = v.as_rational();
        return r < 0 ? Rational(-r) : r;
    };
    for (size_t i = 0; i + 1 < out.rows.size(); ++i) {
        if (absr(out.rows[i + 1].split_minus_jminus) > absr(out.rows[i].split_minus_jminus))
            out.flag_convergence = false;
        if (absr(out.rows[i + 1].fixed_minus_jplus) > absr(out.rows[i].fixed_minus_jplus))
            out.flag_convergence = false;
    }
    for (const auto& row : out.rows) {
        if (row.mu > 4 * out.support_bound) {
            if (!row.split_minus_jminus.is_zero() || !row.fixed_minus_jplus.is_zero())
                out.flag_convergence = false;
        }
    }
    return out;
}

} // namespace rtf
