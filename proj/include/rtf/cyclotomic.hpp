#pragma once

#include "rtf/rational.hpp"

#include <map>
#include <string>
#include <vector>

namespace rtf {

// Element of Q(zeta) for zeta a primitive p^K-th root of unity, stored on the
// power basis 1, zeta, ..., zeta^{phi(p^K)-1} reduced modulo the cyclotomic
// polynomial Phi_{p^K}(x) = sum_{j<p} x^{j p^{K-1}}.  Coefficients are kept
// sparse; the reduced form is canonical, so equality is map equality.
class Cyclotomic {
public:
    Cyclotomic() : p_(0), k_(0) {}
    Cyclotomic(long p, int k) : p_(p), k_(k) {}

    static Cyclotomic from_rational(long p, int k, const Rational& r);
    // zeta^e at order p^k (e taken mod p^k), reduced.
    static Cyclotomic root_of_unity(long p, int k, const Integer& e);

    long prime() const { return p_; }
    int order_exp() const { return k_; }
    bool zero() const { return coeffs_.empty(); }

    bool is_rational() const;
    // Throws arithmetic_error when the value is genuinely irrational.
    Rational rational_part() const;

    Cyclotomic& operator+=(const Cyclotomic& o);
    Cyclotomic operator+(const Cyclotomic& o) const;
    Cyclotomic operator-() const;
    Cyclotomic operator-(const Cyclotomic& o) const;
    Cyclotomic operator*(const Cyclotomic& o) const;
    Cyclotomic operator*(const Rational& r) const;
    bool operator==(const Cyclotomic& o) const;
    bool operator!=(const Cyclotomic& o) const { return !(*this == o); }

    // Re-embeds into order p^k2 (k2 >= current order exponent).
    Cyclotomic raised_to_order(int k2) const;

    const std::map<long, Rational>& coeffs() const { return coeffs_; }
    std::string to_string() const;
    // Dense coefficient strings over the power basis, length phi(p^K).
    std::vector<std::string> dense_coeff_strings() const;

private:
    void add_monomial(long e, const Rational& c); // reduces e mod relation
    long phi() const;

    long p_;
    int k_;
    std::map<long, Rational> coeffs_; // exponent in [0, phi) -> nonzero coeff
};

} // namespace rtf
