#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rtf/conj_average.hpp"
#include "rtf/integration.hpp"
#include "rtf/weights.hpp"

using namespace rtf;

TEST_CASE("geometric sums and the min-coupled double tail")
{
    Rational r = rat(1, 3);
    // brute force with a closed-form remainder split
    auto brute_S0 = [&](long n0) -> Rational {
        Rational s(0), rp = rat_pow(3, -n0);
        for (long v = n0; v < n0 + 60; ++v, rp /= 3) s += rp;
        return Rational(s + rp / (Rational(1) - r));
    };
    for (long n0 : {-3L, 0L, 2L, 7L}) CHECK(geom_sum(r, n0) == brute_S0(n0));
    for (long n0 : {-2L, 0L, 3L}) {
        Rational s(0);
        for (long v = n0; v < n0 + 200; ++v) s += Rational(v) * rat_pow(3, -v);
        // remainder of sum v r^v from V: closed form with the same helper
        long V = n0 + 200;
        Rational rhs = s + geom_sum_linear(r, V);
        CHECK(geom_sum_linear(r, n0) == rhs);
    }
    for (long B : {-1L, 0L, 2L}) {
        for (long Y : {-2L, 0L, 1L, 4L}) {
            Rational direct(0);
            for (long i = B; i < B + 70; ++i)
                for (long j = Y; j < Y + 70; ++j)
                    direct += Rational(std::min(0L, j - i)) * rat_pow(3, -(i + j));
            // truncation error is below 3^{-38}; compare via difference bound
            Rational diff = tail2_min(r, B, Y) - direct;
            Rational bound = rat_pow(3, -50);
            CHECK(abs(diff.get_num()) * bound.get_den() <= bound.get_num() * diff.get_den());
        }
    }
}

TEST_CASE("balls")
{
    FieldContext ctx(5, 12, 3);
    Ball B{ctx.scalar(rat(2, 5)), 1};
    CHECK(ball_contains(B, ctx.scalar(rat(2, 5))));
    CHECK(ball_contains(B, ctx.scalar(rat(2, 5)) + ctx.uniformizer(1)));
    CHECK(!ball_contains(B, ctx.one()));
    CHECK(!ball_contains_zero(B));
    CHECK(ball_contains_zero(Ball{ctx.uniformizer(2), 1}));
    auto inter = ball_intersect(B, Ball{ctx.scalar(rat(2, 5)), 3});
    REQUIRE(inter.has_value());
    CHECK(inter->rexp == 3);
    CHECK(!ball_intersect(B, Ball{ctx.one(), 3}).has_value());
    CHECK(ball_vol(ctx, B) == rat(1, 5));
    CHECK(ball_shell_vol(ctx, B, -1) == rat(1, 5));
    CHECK(ball_shell_vol(ctx, B, 0) == 0);
    Ball Z{ctx.zero(), 1};
    CHECK(ball_shell_vol(ctx, Z, 3) == rat(4, 5) * rat_pow(5, -3));
    CHECK(ball_vol_above(ctx, Z, 3) == rat_pow(5, -3));
    CHECK(ball_vol_above(ctx, Z, 0) == rat_pow(5, -1));
}

TEST_CASE("nonsquare ratio volumes against brute force")
{
    FieldContext ctx(3, 12, 3);
    auto brute = [&](const Ball& B, const PAdic& beta) {
        // enumerate cells of B at depth rexp+6
        long depth = 6;
        long cells = 1;
        for (long i = 0; i < depth; ++i) cells *= 3;
        Rational vol(0);
        for (long k = 0; k < cells; ++k) {
            PAdic x = B.center + ctx.scalar(k) * ctx.uniformizer(B.rexp);
            if (x.value() == 0) continue; // measure-zero point: its cell is
                                          // split below; skip (error < eps)
            PAdic r = x / beta;
            bool square = (((r.valuation() % 2) + 2) % 2 == 0) &&
                          is_square_unit(ctx, r.unit_mod(1));
            if (!square) vol += rat_pow(3, -(B.rexp + depth));
        }
        return vol;
    };
    for (long crexp : {0L, 1L}) {
        for (long cnum : {0L, 1L, 3L, 7L}) {
            Ball B{ctx.scalar(cnum), crexp};
            for (long bv : {0L, 1L}) {
                PAdic beta = ctx.scalar(2) * ctx.uniformizer(bv);
                Rational exact = nonsquare_ratio_vol(ctx, B, beta);
                Rational approx = brute(B, beta);
                Rational diff = exact - approx;
                Rational bound = rat_pow(3, -(crexp + 4));
                CHECK(abs(diff.get_num()) * bound.get_den() <=
                      bound.get_num() * diff.get_den());
            }
        }
    }
}

TEST_CASE("integrate_line examples")
{
    FieldContext ctx(3, 12, 3);
    // int_F 1_O = 1
    LineHints h;
    h.v_min = -3;
    h.v_max = 4;
    ExactValue one = integrate_line(
        ctx, [&](const PAdic& x) {
            return ExactValue(Rational(x.valuation() >= 0 ? 1 : 0));
        },
        h);
    CHECK(one == ExactValue(Rational(1)));
    // int_{Z_3} v(n) dn = 1/2
    ExactValue half = integrate_line(
        ctx, [&](const PAdic& x) {
            return ExactValue(Rational(x.valuation() >= 0 ? x.valuation() : 0));
        },
        h);
    CHECK(half == ExactValue(rat(1, 2)));
    // truncated dh/|h| over v(eps) <= v <= V: (1 - 1/q)(V - v(eps) + 1)
    long veps = -1, V = 5;
    ExactValue w = integrate_line(
        ctx, [&](const PAdic& x) {
            long v = x.valuation();
            if (v < veps || v > V) return ExactValue();
            return ExactValue(rat_pow(3, v)); // 1/|h|
        },
        LineHints{veps - 1, V + 1, 1});
    CHECK(w == ExactValue((Rational(1) - rat(1, 3)) * Rational(V - veps + 1)));
    // violated support hint errors
    CHECK_THROWS_AS(integrate_line(
                        ctx, [&](const PAdic& x) {
                            return ExactValue(Rational(x.valuation() >= -5 ? 1 : 0));
                        },
                        h),
                    certification_error);
}

TEST_CASE("integrate_K counts and refinement")
{
    FieldContext ctx(3, 12, 3);
    // |SL2(Z/9)| = 648
    long count = 0;
    ExactValue one = integrate_K(
        ctx, [&](const Mat2&) {
            ++count;
            return ExactValue(Rational(1));
        },
        2);
    CHECK(count == 648);
    CHECK(one == ExactValue(Rational(1)));
    // refinement stability for a level-1-invariant function
    auto phi = [&](const Mat2& k) {
        // depends on k mod p only
        return ExactValue(Rational(k.a.truncate(1)));
    };
    CHECK(integrate_K(ctx, phi, 1) == integrate_K(ctx, phi, 2));
    Budgets tiny;
    tiny.max_cosets = 100;
    CHECK_THROWS_AS(integrate_K(
                        ctx, [](const Mat2&) { return ExactValue(); }, 2, tiny),
                    budget_error);
}

TEST_CASE("integrate_G normalization and invariance")
{
    FieldContext ctx(3, 14, 3);
    GIntegralHints h;
    h.t_lo = -3;
    h.t_hi = 3;
    h.n_lo = -3;
    h.n_hi = 3;
    h.k_level = 1;
    auto in_K = [&](const Mat2& g) {
        return ExactValue(Rational(cartan_invariant(g) == 0 ? 1 : 0));
    };
    CHECK(integrate_G(ctx, in_K, Frame::Bprime, h) == ExactValue(Rational(1)));
    // vol(K diag(p^-1, p) K) = (p + 1) p = 12
    auto in_cell = [&](const Mat2& g) {
        return ExactValue(Rational(cartan_invariant(g) == 1 ? 1 : 0));
    };
    CHECK(integrate_G(ctx, in_cell, Frame::Bprime, h) == ExactValue(Rational(12)));
    // left invariance at a sample point
    Mat2 g0 = Mat2::upper_unipotent(ctx.uniformizer(-1)) *
              Mat2::diag(ctx.uniformizer(1), ctx.uniformizer(-1));
    GIntegralHints h2 = h;
    h2.t_lo = -4;
    h2.t_hi = 4;
    h2.n_lo = -4;
    h2.n_hi = 4;
    auto shifted = [&](const Mat2& g) { return in_cell(g0 * g); };
    CHECK(integrate_G(ctx, shifted, Frame::Bprime, h2) == ExactValue(Rational(12)));
    // u-frame route agrees
    CHECK(integrate_G(ctx, in_cell, Frame::B, h) == ExactValue(Rational(12)));
}

TEST_CASE("orbital integrals on the h-torus")
{
    FieldContext ctx(3, 14, 3);
    StepFunction f(&ctx, 3);
    f.add_term({ctx.zero(), ctx.zero(), ctx.zero()}, 0, ExactValue(Rational(1)));
    TorusDescriptor h;
    h.is_h_torus = true;
    // unit h: integral 1 (slice bound |2hx| <= 1)
    LieVec X{ctx.one(), ctx.zero(), ctx.zero()};
    CHECK(orbital_integral(f, X, h, OrbitalWeight::None, 0) == ExactValue(Rational(1)));
    // X far from every conjugate of the support: 0
    LieVec Xfar{ctx.uniformizer(-3), ctx.zero(), ctx.zero()};
    CHECK(orbital_integral(f, Xfar, h, OrbitalWeight::None, 0) == ExactValue());
    // truncated agrees with unweighted for large mu
    LieVec Xd{ctx.uniformizer(1), ctx.zero(), ctx.zero()};
    ExactValue unw = orbital_integral(f, Xd, h, OrbitalWeight::None, 0);
    CHECK(orbital_integral(f, Xd, h, OrbitalWeight::Truncation, 12) == unw);
    CHECK_THROWS_AS(orbital_integral(f, LieVec{ctx.zero(), ctx.zero(), ctx.zero()}, h,
                                     OrbitalWeight::None, 0),
                    arithmetic_error);
}

TEST_CASE("orbital integrals: split and elliptic cases")
{
    FieldContext ctx(3, 14, 3);
    StepFunction f(&ctx, 3);
    f.add_term({ctx.zero(), ctx.zero(), ctx.zero()}, 0, ExactValue(Rational(1)));
    // split: X = (0, b; b, 0), b unit; A\G integral of 1_{L0}:
    // the slice gives vol{y in Z_p} restricted: value 1
    TorusDescriptor split;
    split.is_h_torus = false;
    split.class_index = 0;
    LieVec Xs{ctx.zero(), ctx.one(), ctx.one()};
    CHECK(orbital_integral(f, Xs, split, OrbitalWeight::None, 0) == ExactValue(Rational(1)));
    // elliptic: gamma a nonsquare unit; X = (0, gamma b; b, 0), b = 1
    const auto& cls = ctx.fourth_power_classes();
    int ell = -1;
    for (size_t i = 0; i < cls.reps.size(); ++i)
        if (cls.reps[i].valuation() == 0 && !is_square(cls.reps[i])) ell = static_cast<int>(i);
    REQUIRE(ell >= 0);
    TorusDescriptor td;
    td.is_h_torus = false;
    td.class_index = ell;
    LieVec Xe{ctx.zero(), cls.reps[static_cast<size_t>(ell)], ctx.one()};
    // brute-force oracle over G = H N K via integrate_G with the indicator
    GIntegralHints gh;
    gh.t_lo = -2;
    gh.t_hi = 2;
    gh.n_lo = -2;
    gh.n_hi = 2;
    gh.k_level = 1;
    auto phi = [&](const Mat2& g) {
        LieVec Y = adjoint_on(g, Xe);
        return f.evaluate({Y.h, Y.b, Y.c});
    };
    ExactValue oracle = integrate_G(ctx, phi, Frame::Bprime, gh);
    CHECK(orbital_integral(f, Xe, td, OrbitalWeight::None, 0) == oracle);
}

TEST_CASE("torus family integral examples")
{
    FieldContext ctx(3, 14, 3);
    TorusFamilyHints h;
    h.v_min = -4;
    // inner = 0 -> 0
    CHECK(torus_family_integral(ctx, 0, [](const PAdic&) { return ExactValue(); }, h) ==
          ExactValue());
    // inner = 1 on v >= 0, gamma unit: sum (1 - 1/q) q^{-2v} = (1-1/q)/(1-1/q^2)
    ExactValue v1 = torus_family_integral(
        ctx, 0,
        [&](const PAdic& b) {
            return ExactValue(Rational(b.valuation() >= 0 ? 1 : 0));
        },
        h);
    Rational expect1 = (Rational(1) - rat(1, 3)) / (Rational(1) - rat(1, 9));
    CHECK(v1 == ExactValue(expect1));
    // inner = v(b) on v >= 0: exact closed form sum v q^{-2v} (1 - 1/q)
    ExactValue v2 = torus_family_integral(
        ctx, 0,
        [&](const PAdic& b) {
            return ExactValue(Rational(b.valuation() >= 0 ? b.valuation() : 0));
        },
        h);
    Rational expect2 = (Rational(1) - rat(1, 3)) * geom_sum_linear(rat(1, 9), 0);
    CHECK(v2 == ExactValue(expect2));
}

TEST_CASE("weight-factor-weighted orbital integral matches the slice route")
{
    // gamma = 1 at g-slice n(x): the weighted A\G orbital integral of the
    // unit lattice at X = (0,b;b,0) equals int_{|y|<=1} wfd(y/2b) dy / |b|
    FieldContext ctx(3, 24, 5);
    StepFunction f(&ctx, 3);
    f.add_term({ctx.zero(), ctx.zero(), ctx.zero()}, 0, ExactValue(Rational(1)));
    TorusDescriptor split;
    split.is_h_torus = false;
    split.class_index = 0;
    split.weight_class = 0;
    for (long mu : {0L, 2L, 4L}) {
        LieVec X{ctx.zero(), ctx.one(), ctx.one()};
        ExactValue got = orbital_integral(f, X, split, OrbitalWeight::WeightFactor, mu);
        // oracle: per-shell averages of wfd over y in Z_p
        Rational expect(0);
        Rational one_m_qinv = Rational(1) - rat(1, 3);
        for (long v = 0; v <= mu + 6; ++v)
            expect += one_m_qinv * rat_pow(3, -v) * wfd_nx_shell_avg(ctx, 0, v, mu);
        expect += rat_pow(3, -(mu + 7)) * wfd_nx_shell_avg(ctx, 0, mu + 8, mu);
        CHECK(got == ExactValue(expect));
    }
}
