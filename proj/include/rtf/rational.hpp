#pragma once

#include <gmpxx.h>
#include <stdexcept>
#include <string>

namespace rtf {

// Exact rational arithmetic is delegated to GMP; mpq_class keeps values
// canonical (lowest terms, positive denominator), which is exactly the
// invariant we need for structural equality.
using Rational = mpq_class;
using Integer = mpz_class;

struct arithmetic_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct precision_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct budget_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct certification_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Rational rat(long num, long den = 1)
{
    if (den == 0) throw arithmetic_error("rational: zero denominator");
    Rational r(num, den);
    r.canonicalize();
    return r;
}

inline Rational rat_div(const Rational& a, const Rational& b)
{
    if (b == 0) throw arithmetic_error("rational: division by zero");
    return a / b;
}

// p^e for e of either sign.
inline Rational rat_pow(long p, long e)
{
    Integer num = 1;
    mpz_ui_pow_ui(num.get_mpz_t(), static_cast<unsigned long>(p),
                  static_cast<unsigned long>(e < 0 ? -e : e));
    Rational r = e < 0 ? Rational(1, num) : Rational(num);
    r.canonicalize();
    return r;
}

inline Integer int_pow(long p, long e)
{
    if (e < 0) throw arithmetic_error("int_pow: negative exponent");
    Integer n;
    mpz_ui_pow_ui(n.get_mpz_t(), static_cast<unsigned long>(p),
                  static_cast<unsigned long>(e));
    return n;
}

inline std::string rat_to_string(const Rational& r)
{
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

Rational parse_rational(const std::string& s);

} // namespace rtf
