#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rtf/cyclotomic.hpp"
#include "rtf/exact_value.hpp"

using namespace rtf;

TEST_CASE("rational arithmetic basics")
{
    CHECK(rat(1, 3) + rat(1, 6) == rat(1, 2));
    CHECK(rat(2, 3) * rat(3, 4) == rat(1, 2));
    CHECK_THROWS_AS(rat_div(rat(1, 2), Rational(0)), arithmetic_error);
    CHECK(rat_to_string(rat(-4, 6)) == "-2/3");
    CHECK(parse_rational("7/21") == rat(1, 3));
    CHECK(parse_rational("-5") == rat(-5));
    CHECK_THROWS_AS(parse_rational("x/y"), arithmetic_error);
}

TEST_CASE("roots of unity and reduction")
{
    // zeta_9 * zeta_9^8 = 1
    Cyclotomic a = Cyclotomic::root_of_unity(3, 2, Integer(1));
    Cyclotomic b = Cyclotomic::root_of_unity(3, 2, Integer(8));
    CHECK((a * b).rational_part() == Rational(1));

    // zeta_3 + zeta_3^2 = -1 (reduce modulo x^2 + x + 1)
    Cyclotomic z1 = Cyclotomic::root_of_unity(3, 1, Integer(1));
    Cyclotomic z2 = Cyclotomic::root_of_unity(3, 1, Integer(2));
    CHECK((z1 + z2).rational_part() == Rational(-1));
    CHECK_THROWS_AS(z1.rational_part(), arithmetic_error);

    // sum over all p^K-th roots of unity of exact order dividing p^K is 0
    for (long p : {3L, 5L}) {
        for (int k : {1, 2}) {
            Cyclotomic total(p, k);
            Integer pk = int_pow(p, k);
            for (Integer e = 0; e < pk; ++e) total += Cyclotomic::root_of_unity(p, k, e);
            CHECK(total.zero());
        }
    }
}

TEST_CASE("embedding round trip and order raising")
{
    Cyclotomic c = Cyclotomic::from_rational(5, 2, rat(5, 7));
    CHECK(c.is_rational());
    CHECK(c.rational_part() == rat(5, 7));
    Cyclotomic z = Cyclotomic::root_of_unity(3, 1, Integer(1));
    Cyclotomic zr = z.raised_to_order(2);
    // zeta_3 embeds as zeta_9^3
    CHECK(zr == Cyclotomic::root_of_unity(3, 2, Integer(3)));
    CHECK((zr * zr * zr).rational_part() == Rational(1));
    CHECK((z + (-z)).zero());
}

TEST_CASE("ring axioms on random triples")
{
    uint64_t s = 12345;
    auto next = [&s]() {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        return static_cast<long>((s >> 40) % 17) - 8;
    };
    for (int trial = 0; trial < 40; ++trial) {
        Cyclotomic a(3, 2), b(3, 2), c(3, 2);
        for (int i = 0; i < 3; ++i) {
            a += Cyclotomic::root_of_unity(3, 2, Integer(next() + 9)) *
                 Rational(next());
            b += Cyclotomic::root_of_unity(3, 2, Integer(next() + 9)) *
                 Rational(next());
            c += Cyclotomic::root_of_unity(3, 2, Integer(next() + 9)) *
                 Rational(next());
        }
        CHECK((a + b) + c == a + (b + c));
        CHECK((a * b) * c == a * (b * c));
        CHECK(a * (b + c) == a * b + a * c);
        CHECK(a * b == b * a);
    }
}

TEST_CASE("root_of_unity inverse property for every exponent")
{
    for (long t = 0; t < 25; ++t) {
        Cyclotomic a = Cyclotomic::root_of_unity(5, 2, Integer(t));
        Cyclotomic b = Cyclotomic::root_of_unity(5, 2, Integer(-t));
        CHECK((a * b).rational_part() == Rational(1));
    }
}

TEST_CASE("exact value variant demotes rational cyclotomics")
{
    Cyclotomic z1 = Cyclotomic::root_of_unity(3, 1, Integer(1));
    Cyclotomic z2 = Cyclotomic::root_of_unity(3, 1, Integer(2));
    ExactValue v = ExactValue(z1) + ExactValue(z2); // = -1
    CHECK(v.is_rational());
    CHECK(v == ExactValue(Rational(-1)));
    ExactValue w = ExactValue(z1) * ExactValue(z1) * ExactValue(z1);
    CHECK(w == ExactValue(Rational(1)));
}
