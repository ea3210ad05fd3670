#pragma once

#include "rtf/cyclotomic.hpp"
#include "rtf/rational.hpp"

#include <string>
#include <variant>

namespace rtf {

// Exact number: rational, or a cyclotomic in Q(zeta_{p^K}).  Every integral
// the engine computes evaluates to one of these.  Sums that ought to
// collapse to rationals are checked by as_rational(), which throws when the
// cyclotomic part survives (that signals a bug upstream).
class ExactValue {
public:
    ExactValue() : v_(Rational(0)) {}
    ExactValue(const Rational& r) : v_(r) {}
    ExactValue(long n) : v_(Rational(n)) {}
    ExactValue(const Cyclotomic& c) { *this = c.is_rational() ? ExactValue(c.rational_part()) : ExactValue(c, keep{}); }

    bool is_rational() const { return std::holds_alternative<Rational>(v_); }
    bool is_zero() const;

    const Rational& as_rational() const;
    Cyclotomic as_cyclotomic(long p, int k) const;

    ExactValue operator+(const ExactValue& o) const;
    ExactValue operator-(const ExactValue& o) const;
    ExactValue operator*(const ExactValue& o) const;
    ExactValue& operator+=(const ExactValue& o) { *this = *this + o; return *this; }
    bool operator==(const ExactValue& o) const;
    bool operator!=(const ExactValue& o) const { return !(*this == o); }

    std::string to_string() const;

private:
    struct keep {};
    ExactValue(const Cyclotomic& c, keep) : v_(c) {}
    std::variant<Rational, Cyclotomic> v_;
};

} // namespace rtf
