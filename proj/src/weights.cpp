#include "rtf/weights.hpp"

namespace rtf {

namespace {

// A-element in standard coordinates with u-frame image diag(t, 1/t).
Mat2 a_element(const FieldContext& ctx, const PAdic& t)
{
    PAdic two = ctx.scalar(2);
    PAdic ti = ctx.one() / t;
    return from_u_frame(Mat2::diag(t, ti));
}

// Per-shell contribution to the weight factor at nu_a, as an exact A-shell
// measure in [0, 1].  Normal form: Cartan tau(r a g) =
// Cartan( nbar(-x) diag(M, 1/M) n(x) ), entries (M, Mx; -Mx, 1/M - M x^2),
// with M = t^2 t_g^2 / sigma for g = t_g n(x) k in u-coordinates.  The
// indicator depends on the unit digits of a only when v(Mx) = 0, through
// delta = v(1 - M^2 x^2); there the unit measure is
// |mu4| q^{-e} / (1 - 1/q) for e = v(M) - mu when c0^{-1} = (M x)^{-2} is a
// fourth power, 0 otherwise.
Rational shell_measure(const FieldContext& ctx, const PAdic& sigma,
                       const PAdic& tg_entry, const PAdic& x, long nu_a, long mu)
{
    long q = ctx.q();
    PAdic trep = ctx.uniformizer(nu_a);
    PAdic M = trep * trep * tg_entry * tg_entry / sigma;
    long j = M.valuation();
    bool x_zero = x.value() == 0;
    long v = x_zero ? kValInf : x.valuation();

    if (!x_zero && j + v == 0) {
        if (-j > mu) return Rational(0);
        long e = j - mu;
        if (e <= 0) return Rational(1);
        PAdic c0 = M * M * x * x; // unit
        PAdic c0inv = ctx.one() / c0;
        if (!is_fourth_power_unit(ctx, c0inv.unit_mod(1))) return Rational(0);
        Rational meas = Rational(ctx.mu4_order()) * rat_pow(q, -e);
        return meas / (Rational(1) - rat_pow(q, -1));
    }

    long cart;
    if (x_zero) {
        cart = std::labs(j);
    } else {
        // no cancellation in 1 - M^2 x^2 since v(M^2 x^2) = 2(j+v) != 0
        PAdic e3 = ctx.one() / M - M * x * x;
        long v3 = e3.value() == 0 ? kValInf : e3.valuation();
        cart = -std::min({j, j + v, v3});
    }
    return cart <= mu ? Rational(1) : Rational(0);
}

} // namespace

long weight_scan_window(const Mat2& g, long mu)
{
    Heights h = iwasawa_heights(g, Frame::B);
    return mu + 2 * h.d + 4;
}

Rational weight_factor_direct(const FieldContext& ctx, int idx, const Mat2& g, long mu)
{
    const auto& cls = ctx.fourth_power_classes();
    PAdic sigma = cls.square_roots.at(static_cast<size_t>(idx));
    IwasawaData iw = iwasawa(g, Frame::B);
    PAdic x = iw.n.b;
    PAdic tg = iw.t.a;

    long W = weight_scan_window(g, mu);
    Rational total(0);
    for (long nu = -W; nu <= W; ++nu)
        total += shell_measure(ctx, sigma, tg, x, nu, mu);
    // the two shells beyond each edge must vanish
    for (long nu : {-W - 2, -W - 1, W + 1, W + 2}) {
        if (shell_measure(ctx, sigma, tg, x, nu, mu) != 0)
            throw certification_error("weight factor scan window too small");
    }
    return total;
}

Rational weight_factor_closed_form(const FieldContext& ctx, const Mat2& g, long mu)
{
    Heights h = iwasawa_heights(g, Frame::B);
    if (mu <= 4 * h.d)
        throw certification_error("mu below Lemma threshold (need mu > 4 d(g))");
    Rational val = Rational(1 + 2 * mu - 2 * h.H_B + 2 * h.H_Bbar);
    return rat(ctx.mu4_order(), 2) * val;
}

namespace {

// One ν_a shell of the A-integral along g = n(x), with x either exact or
// represented by its shell (digits averaged).  M = p^{2 nu_a} / sigma.
Rational nx_shell_contribution(const FieldContext& ctx, const PAdic& sigma,
                               const PAdic* x_exact, long v, long nu_a, long mu)
{
    long q = ctx.q();
    long j = 2 * nu_a - sigma.valuation();
    bool x_zero = (v == kValInf);

    if (!x_zero && j + v == 0) {
        if (-j > mu) return Rational(0);
        long e = j - mu;
        if (e <= 0) return Rational(1);
        // measure of {unit a-digits : v(1 - M^2 x^2 a^4) >= e}; with
        // z = sigma / (p^{2 nu_a} x) this is soluble iff z^2 is a fourth
        // power, i.e. always for p = 3 mod 4 and iff z is a square for
        // p = 1 mod 4.
        Rational density;
        if (ctx.p() % 4 == 3) {
            density = Rational(1);
        } else if (x_exact) {
            PAdic z = sigma / (ctx.uniformizer(2 * nu_a) * (*x_exact));
            density = is_square_unit(ctx, z.unit_mod(1)) ? Rational(1) : Rational(0);
        } else {
            density = Rational(1, 2);
        }
        Rational meas = density * Rational(ctx.mu4_order()) * rat_pow(q, -e) /
                        (Rational(1) - rat_pow(q, -1));
        return meas;
    }

    long cart;
    if (x_zero) {
        cart = std::labs(j);
    } else {
        long third = -j + std::min(0L, 2 * (j + v));
        cart = -std::min({j, j + v, third});
    }
    return cart <= mu ? Rational(1) : Rational(0);
}

Rational wfd_nx_impl(const FieldContext& ctx, int idx, const PAdic* x_exact,
                     long v, long mu)
{
    const auto& cls = ctx.fourth_power_classes();
    PAdic sigma = cls.square_roots.at(static_cast<size_t>(idx));
    long W = mu + 2 * std::max(0L, v == kValInf ? 0 : -v) + 4;
    Rational total(0);
    for (long nu = -W; nu <= W; ++nu)
        total += nx_shell_contribution(ctx, sigma, x_exact, v, nu, mu);
    for (long nu : {-W - 2, -W - 1, W + 1, W + 2})
        if (nx_shell_contribution(ctx, sigma, x_exact, v, nu, mu) != 0)
            throw certification_error("wfd_nx: scan window too small");
    return total;
}

} // namespace

Rational wfd_nx_exact(const FieldContext& ctx, int idx, const PAdic& x, long mu)
{
    if (x.value() == 0) return wfd_nx_impl(ctx, idx, nullptr, kValInf, mu);
    return wfd_nx_impl(ctx, idx, &x, x.valuation(), mu);
}

Rational wfd_nx_shell_avg(const FieldContext& ctx, int idx, long v, long mu)
{
    return wfd_nx_impl(ctx, idx, nullptr, v, mu);
}

LemmaCheck lemma_pointwise(const FieldContext& ctx, int idx, const Mat2& g,
                           long nu_a, const PAdic& a_unit, long mu)
{
    const auto& cls = ctx.fourth_power_classes();
    PAdic sigma = cls.square_roots.at(static_cast<size_t>(idx));
    Mat2 r = r_gamma(ctx, idx);
    PAdic t = ctx.uniformizer(nu_a) * a_unit;
    Mat2 a = a_element(ctx, t);
    Mat2 m = r * a * g;
    LemmaCheck out;
    out.indicator = truncation_indicator(m, mu);
    Heights h = iwasawa_heights(g, Frame::B);
    long mid = sigma.valuation() + 2 * nu_a;
    out.inequality = (-2 * h.H_Bbar - mu <= mid) && (mid <= mu - 2 * h.H_B);
    return out;
}

} // namespace rtf
