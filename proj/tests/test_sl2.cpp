#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rtf/weights.hpp"

#include <set>

using namespace rtf;

namespace {

Mat2 random_k_element(const FieldContext& ctx, uint64_t& s)
{
    auto nxt = [&s]() {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        return static_cast<long>(s >> 40);
    };
    long p3 = ctx.p() * ctx.p() * ctx.p();
    for (;;) {
        long c = nxt() % p3, d = nxt() % p3;
        if (c % ctx.p() == 0 && d % ctx.p() == 0) continue;
        Mat2 k{ctx.zero(), ctx.zero(), ctx.scalar(c), ctx.scalar(d)};
        if (d % ctx.p() != 0) {
            long b = nxt() % p3;
            k.b = ctx.scalar(b);
            k.a = (ctx.one() + k.b * k.c) / k.d;
        } else {
            long a = nxt() % p3;
            k.a = ctx.scalar(a);
            k.b = (k.a * k.d - ctx.one()) / k.c;
        }
        return k;
    }
}

} // namespace

TEST_CASE("tau on tori and unipotents")
{
    FieldContext ctx(5, 16, 3);
    Mat2 h = Mat2::diag(ctx.scalar(rat(7, 2)), ctx.scalar(rat(2, 7)));
    CHECK(tau(h) == Mat2::identity(&ctx));
    PAdic x = ctx.scalar(rat(3, 25));
    Mat2 n = Mat2::upper_unipotent(x);
    CHECK(tau(n) == Mat2::upper_unipotent(x * ctx.scalar(2)));
    CHECK(truncation_indicator(Mat2::upper_unipotent(ctx.uniformizer(-2)), 2));
    CHECK(!truncation_indicator(Mat2::upper_unipotent(ctx.uniformizer(-3)), 2));
}

TEST_CASE("cartan invariant is bi-K-invariant")
{
    FieldContext ctx(3, 16, 3);
    CHECK(cartan_invariant(Mat2::identity(&ctx)) == 0);
    CHECK(cartan_invariant(Mat2::diag(ctx.uniformizer(-3), ctx.uniformizer(3))) == 3);
    uint64_t s = 2024;
    for (int i = 0; i < 25; ++i) {
        Mat2 k1 = random_k_element(ctx, s), k2 = random_k_element(ctx, s);
        Mat2 a = Mat2::diag(ctx.uniformizer(-2), ctx.uniformizer(2));
        CHECK(cartan_invariant(k1 * a * k2) == 2);
        CHECK(cartan_invariant(k1 * k2) == 0);
    }
}

TEST_CASE("adjoint by K preserves the standard lattice")
{
    FieldContext ctx(3, 16, 3);
    uint64_t s = 5;
    for (int i = 0; i < 25; ++i) {
        Mat2 k = random_k_element(ctx, s);
        LieVec X{ctx.scalar(2), ctx.scalar(1), ctx.scalar(3)};
        LieVec Y = adjoint_on(k, X);
        for (const PAdic* c : {&Y.h, &Y.b, &Y.c})
            if (c->value() != 0) CHECK(c->valuation() >= 0);
    }
}

TEST_CASE("iwasawa witnesses reconstruct the element")
{
    FieldContext ctx(5, 16, 3);
    uint64_t s = 77;
    std::vector<Mat2> gs;
    for (int i = 0; i < 10; ++i) {
        Mat2 g = random_k_element(ctx, s);
        g = g * Mat2::diag(ctx.uniformizer(-1), ctx.uniformizer(1));
        g = g * Mat2::upper_unipotent(ctx.scalar(rat(2, 25)));
        gs.push_back(g);
    }
    gs.push_back(Mat2::identity(&ctx));
    gs.push_back(Mat2::lower_unipotent(ctx.uniformizer(-1)));
    for (const auto& g : gs) {
        for (Frame fr : {Frame::Bprime, Frame::B, Frame::Bbar}) {
            IwasawaData d = iwasawa(g, fr);
            Mat2 gf = (fr == Frame::Bprime) ? g : to_u_frame(g);
            CHECK(d.t * d.n * d.k == gf);
            CHECK(cartan_invariant(d.k) == 0);
        }
    }
    IwasawaData d0 = iwasawa(Mat2::identity(&ctx), Frame::Bprime);
    CHECK(d0.H == 0);
    Heights h1 = iwasawa_heights(Mat2::diag(ctx.uniformizer(1), ctx.uniformizer(-1)),
                                 Frame::Bprime);
    CHECK(h1.H_B == 1);
    CHECK(h1.H_Bbar == 1);
    CHECK(h1.d == 1);
    Heights h2 = iwasawa_heights(Mat2::lower_unipotent(ctx.uniformizer(-1)), Frame::Bprime);
    CHECK(h2.H_B == 1);
    CHECK(h2.H_Bbar == 0);
    CHECK(h2.d == 1);
    Mat2 g = gs[0];
    Mat2 t = Mat2::diag(ctx.uniformizer(2), ctx.uniformizer(-2));
    CHECK(iwasawa_heights(t * g, Frame::Bprime).H_B ==
          2 + iwasawa_heights(g, Frame::Bprime).H_B);
}

TEST_CASE("r_gamma properties")
{
    for (long p : {3L, 5L}) {
        FieldContext ctx(p, 16, 3);
        const auto& cls = ctx.fourth_power_classes();
        CHECK(r_gamma(ctx, 0) == Mat2::identity(&ctx));
        for (size_t i = 0; i < cls.square_reps.size(); ++i) {
            Mat2 r = r_gamma(ctx, static_cast<int>(i));
            CHECK(r.det() == ctx.one());
            // conjugation by r_gamma carries A_gamma = r A r^{-1} back to A
            Mat2 a_gen = from_u_frame(Mat2::diag(ctx.scalar(7), ctx.scalar(rat(1, 7))));
            Mat2 a_gamma_gen = r * a_gen * r.inverse();
            Mat2 back = to_u_frame(r.inverse() * a_gamma_gen * r);
            CHECK(back.b.value() == 0);
            CHECK(back.c.value() == 0);
            long vs = cls.square_roots[i].valuation();
            CHECK(cartan_invariant(tau(r)) == std::labs(vs));
        }
        CHECK_THROWS_AS(r_gamma(ctx, static_cast<int>(cls.square_reps.size())),
                        arithmetic_error);
    }
}

TEST_CASE("truncation indicator invariances")
{
    FieldContext ctx(3, 16, 3);
    uint64_t s = 31;
    for (int i = 0; i < 20; ++i) {
        Mat2 k = random_k_element(ctx, s);
        CHECK(truncation_indicator(k, 0));
        Mat2 h = Mat2::diag(ctx.scalar(rat(7, 9)), ctx.scalar(rat(9, 7)));
        Mat2 g = k * Mat2::upper_unipotent(ctx.uniformizer(-2));
        for (long mu : {0L, 1L, 2L, 3L})
            CHECK(truncation_indicator(h * g, mu) == truncation_indicator(g, mu));
        Mat2 k2 = random_k_element(ctx, s);
        for (long mu : {0L, 2L})
            CHECK(truncation_indicator(g * k2, mu) == truncation_indicator(g, mu));
    }
}

TEST_CASE("weight factor spot values")
{
    FieldContext ctx5(5, 20, 3);
    Mat2 id5 = Mat2::identity(&ctx5);
    const auto& cls5 = ctx5.fourth_power_classes();
    std::multiset<Rational> values;
    Rational total(0);
    for (size_t i = 0; i < cls5.square_reps.size(); ++i) {
        Rational w = weight_factor_direct(ctx5, static_cast<int>(i), id5, 4);
        values.insert(w);
        total += w;
    }
    CHECK(values ==
          std::multiset<Rational>{Rational(4), Rational(4), Rational(5), Rational(5)});
    CHECK(total == Rational(18));
    CHECK(weight_factor_closed_form(ctx5, id5, 4) == Rational(18));
    Rational total3(0);
    for (size_t i = 0; i < cls5.square_reps.size(); ++i)
        total3 += weight_factor_direct(ctx5, static_cast<int>(i), id5, 3);
    CHECK(total3 == Rational(14));
    CHECK(weight_factor_closed_form(ctx5, id5, 3) == Rational(14));

    FieldContext ctx3(3, 20, 3);
    Mat2 id3 = Mat2::identity(&ctx3);
    CHECK(weight_factor_closed_form(ctx3, id3, 4) == Rational(9));
    Rational t3(0);
    for (size_t i = 0; i < ctx3.fourth_power_classes().square_reps.size(); ++i)
        t3 += weight_factor_direct(ctx3, static_cast<int>(i), id3, 4);
    CHECK(t3 == Rational(9));
    CHECK(weight_factor_direct(ctx3, 0, id3, 4) == Rational(5));
    Mat2 deep = from_u_frame(Mat2::diag(ctx3.uniformizer(2), ctx3.uniformizer(-2)));
    CHECK_THROWS_AS(weight_factor_closed_form(ctx3, deep, 3), certification_error);
}

TEST_CASE("closed form equals direct sum over a grid")
{
    for (long p : {3L, 5L}) {
        FieldContext ctx(p, 24, 3);
        const auto& cls = ctx.fourth_power_classes();
        std::vector<Mat2> grid;
        for (long e = -1; e <= 1; ++e)
            for (long xv : {99L, 0L, 1L, -1L}) {
                Mat2 gt = Mat2::diag(ctx.uniformizer(e), ctx.uniformizer(-e));
                if (xv != 99)
                    gt = gt * Mat2::upper_unipotent(ctx.uniformizer(xv) * ctx.scalar(2));
                grid.push_back(from_u_frame(gt));
            }
        for (const auto& g : grid) {
            Heights h = iwasawa_heights(g, Frame::B);
            for (long mu = 4 * h.d + 1; mu <= 4 * h.d + 3; ++mu) {
                Rational direct(0);
                for (size_t i = 0; i < cls.square_reps.size(); ++i)
                    direct += weight_factor_direct(ctx, static_cast<int>(i), g, mu);
                CHECK(direct == weight_factor_closed_form(ctx, g, mu));
            }
        }
    }
}

TEST_CASE("wfd on the unipotent slice matches the general routine")
{
    for (long p : {3L, 5L}) {
        FieldContext ctx(p, 24, 4);
        const auto& cls = ctx.fourth_power_classes();
        std::vector<PAdic> xs{ctx.zero(), ctx.one(), ctx.uniformizer(1),
                              ctx.uniformizer(-1), ctx.uniformizer(-2),
                              ctx.scalar(2) * ctx.uniformizer(-1)};
        for (const auto& x : xs) {
            Mat2 g = from_u_frame(Mat2::upper_unipotent(x));
            for (size_t i = 0; i < cls.square_reps.size(); ++i)
                for (long mu : {0L, 1L, 2L, 4L})
                    CHECK(wfd_nx_exact(ctx, static_cast<int>(i), x, mu) ==
                          weight_factor_direct(ctx, static_cast<int>(i), g, mu));
        }
    }
}

TEST_CASE("lemma pointwise agreement in the lemma regime")
{
    FieldContext ctx(3, 24, 3);
    const auto& cls = ctx.fourth_power_classes();
    std::vector<PAdic> units{ctx.one(), ctx.scalar(2), ctx.scalar(4)};
    for (long e = -2; e <= 2; ++e) {
        for (long xv : {99L, 0L, -1L, -2L}) {
            Mat2 gt = Mat2::diag(ctx.uniformizer(e), ctx.uniformizer(-e));
            if (xv != 99) gt = gt * Mat2::upper_unipotent(ctx.uniformizer(xv));
            Mat2 g = from_u_frame(gt);
            Heights h = iwasawa_heights(g, Frame::B);
            if (h.d > 2) continue;
            for (size_t gi = 0; gi < cls.square_reps.size(); ++gi) {
                for (long mu = 4 * h.d + 1; mu <= std::min(4 * h.d + 4, 10L); ++mu) {
                    long W = mu + 2 * h.d + 2;
                    for (long nu = -W; nu <= W; ++nu)
                        for (const auto& u : units) {
                            LemmaCheck lc =
                                lemma_pointwise(ctx, static_cast<int>(gi), g, nu, u, mu);
                            CHECK(lc.indicator == lc.inequality);
                        }
                }
            }
        }
    }
}
