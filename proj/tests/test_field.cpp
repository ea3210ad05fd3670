#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rtf/field.hpp"

#include <set>

using namespace rtf;

TEST_CASE("padic arithmetic and valuations")
{
    FieldContext ctx(5, 12, 3);
    PAdic pi = ctx.uniformizer(1);
    CHECK((pi * pi).valuation() == 2);
    CHECK((pi * pi).unit_mod(1) == 1);
    CHECK((ctx.one() - ctx.one()).is_zero());
    CHECK(ctx.zero().valuation() == kValInf);
    CHECK(ctx.zero().norm() == 0);
    PAdic a = ctx.uniformizer(2) * ctx.scalar(7);
    CHECK(a.valuation() == 2);
    CHECK(a.norm() == rat(1, 25));
    CHECK(ctx.one().norm() == 1);
    CHECK_THROWS_AS(ctx.one() / ctx.zero(), arithmetic_error);
}

TEST_CASE("precision caps model truncated digit input")
{
    FieldContext ctx(3, 6, 2);
    // (1 + pi^N) - 1 at precision N: no digits left
    PAdic one_limited = PAdic::parse(&ctx, "v:0;digits:100000"); // 1 to 6 digits
    PAdic bumped(&ctx, Rational(1) + rat_pow(3, 6), 6);
    CHECK_THROWS_AS(bumped - one_limited, precision_error);
    // digit round trip
    PAdic x = PAdic::parse(&ctx, "v:-2;digits:120102");
    CHECK(x.valuation() == -2);
    CHECK(PAdic::parse(&ctx, x.to_string()) == x);
}

TEST_CASE("ultrametric inequality on random pairs")
{
    FieldContext ctx(3, 10, 2);
    uint64_t s = 99;
    auto nxt = [&s]() {
        s = s * 6364136223846793005ull + 1;
        return static_cast<long>((s >> 33) % 2000) - 1000;
    };
    for (int i = 0; i < 200; ++i) {
        long n1 = nxt(), n2 = nxt();
        long d1 = 1 + (nxt() + 1000) % 50, d2 = 1 + (nxt() + 1000) % 50;
        if (n1 == 0 || n2 == 0) continue;
        PAdic a = ctx.scalar(rat(n1, d1)), b = ctx.scalar(rat(n2, d2));
        PAdic sum = a + b;
        if (sum.value() == 0) continue;
        CHECK(sum.valuation() >= std::min(a.valuation(), b.valuation()));
        if (a.valuation() != b.valuation())
            CHECK(sum.valuation() == std::min(a.valuation(), b.valuation()));
        CHECK((a * b).valuation() == a.valuation() + b.valuation());
    }
}

TEST_CASE("hensel square roots")
{
    FieldContext ctx7(7, 10, 2);
    CHECK(hensel_sqrt(ctx7.one()) == ctx7.one());
    // 2 is a QR mod 7 (3^2 = 2 mod 7)
    PAdic r = hensel_sqrt(ctx7.scalar(2));
    CHECK((r * r).unit_mod(ctx7.precision()) == Integer(2));
    FieldContext ctx5(5, 10, 2);
    CHECK_THROWS_AS(hensel_sqrt(ctx5.uniformizer(1)), arithmetic_error);
    CHECK_THROWS_AS(hensel_sqrt(ctx5.scalar(2)), arithmetic_error); // 2 is not a QR mod 5
    // deterministic branch: first digit in {1..(p-1)/2}
    PAdic s4 = hensel_sqrt(ctx5.scalar(4));
    CHECK(s4.unit_mod(1) <= 2);
    CHECK((s4 * s4).unit_mod(10) == 4);
    // squares succeed iff even valuation and QR unit
    CHECK(is_square(ctx5.scalar(Rational(4) * rat_pow(5, 2))));
    CHECK(!is_square(ctx5.scalar(Rational(4) * rat_pow(5, 1))));
}

TEST_CASE("fourth power classes: sizes and coverage")
{
    for (long p : {3L, 5L, 7L}) {
        FieldContext ctx(p, 10, 2);
        const auto& cls = ctx.fourth_power_classes();
        int mu4 = ctx.mu4_order();
        CHECK(mu4 == (p % 4 == 1 ? 4 : 2));
        CHECK(cls.reps.size() == static_cast<size_t>(4 * mu4));
        CHECK(cls.square_reps.size() == static_cast<size_t>(mu4));
        // 1 is a representative, and lies in K'
        CHECK(cls.reps[0] == ctx.one());
        CHECK(cls.square_reps[0] == ctx.one());
        // half the square reps have valuation 0, half valuation 2
        int v0 = 0, v2 = 0;
        for (const auto& g : cls.square_reps) {
            if (g.valuation() == 0) ++v0;
            if (g.valuation() == 2) ++v2;
        }
        CHECK(v0 == mu4 / 2);
        CHECK(v2 == mu4 / 2);
        // roots square back
        for (size_t i = 0; i < cls.square_reps.size(); ++i)
            CHECK(cls.square_roots[i] * cls.square_roots[i] == cls.square_reps[i]);
        // brute force: every u p^j for units u in a window lands in exactly
        // one class
        for (long j = 0; j < 4; ++j) {
            for (long u = 1; u < p * p; ++u) {
                if (u % p == 0) continue;
                PAdic x = ctx.scalar(Rational(u) * rat_pow(p, j));
                int hits = 0;
                for (size_t ci = 0; ci < cls.reps.size(); ++ci) {
                    PAdic r = x / cls.reps[ci];
                    if (((r.valuation() % 4) + 4) % 4 != 0) continue;
                    if (is_fourth_power_unit(ctx, r.unit_mod(1))) ++hits;
                }
                CHECK(hits == 1);
                (void)cls.class_of(x);
            }
        }
    }
}

TEST_CASE("additive character psi")
{
    FieldContext ctx(3, 10, 3);
    // trivial on Z_p
    CHECK(ctx.psi(ctx.scalar(7)).rational_part() == Rational(1));
    CHECK(ctx.psi(ctx.zero()).rational_part() == Rational(1));
    // psi(1/p) = zeta_p
    Cyclotomic z = ctx.psi(ctx.uniformizer(-1));
    CHECK(z == Cyclotomic::root_of_unity(3, 3, int_pow(3, 2)));
    // additivity on random fractions
    uint64_t s = 7;
    auto nxt = [&s]() {
        s = s * 2862933555777941757ull + 3037000493ull;
        return static_cast<long>(s >> 40);
    };
    for (int i = 0; i < 60; ++i) {
        long a = nxt() % 27, b = nxt() % 27;
        PAdic x = ctx.scalar(rat(a, 27)), y = ctx.scalar(rat(b, 27));
        CHECK(ctx.psi(x + y) == ctx.psi(x) * ctx.psi(y));
    }
    // orthogonality: the full coset p^{-k} Z_p / Z_p sums to zero
    for (int k = 1; k <= 3; ++k) {
        long pk = 1;
        for (int i = 0; i < k; ++i) pk *= 3;
        Cyclotomic full(3, 3);
        for (long t = 0; t < pk; ++t) full += ctx.psi(ctx.scalar(rat(t, pk)));
        CHECK(full.zero());
    }
    // depth guard
    CHECK_THROWS_AS(ctx.psi(ctx.uniformizer(-4)), precision_error);
}
