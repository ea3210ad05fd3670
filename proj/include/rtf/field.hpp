#pragma once

#include "rtf/cyclotomic.hpp"
#include "rtf/rational.hpp"

#include <climits>
#include <memory>
#include <string>
#include <vector>

namespace rtf {

class PAdic;

struct FourthPowerClasses; // below

// The base field F = Q_p for an odd prime p, together with the working
// precision, the additive character depth, and the fourth-power-class data.
class FieldContext {
public:
    FieldContext(long p, int precision, int character_depth);

    long p() const { return p_; }
    long q() const { return p_; } // residue field size
    int precision() const { return precision_; }
    int character_depth() const { return depth_; }
    int mu4_order() const { return mu4_; }
    long unit_generator() const { return unit_gen_; } // generates (Z/p^2)^x

    const FourthPowerClasses& fourth_power_classes() const;

    PAdic scalar(const Rational& v) const;
    PAdic scalar(long v) const;
    PAdic zero() const;
    PAdic one() const;
    PAdic uniformizer(long e = 1) const; // p^e

    // psi(x) = zeta_{p^K}^{p^K * frac(x)}; trivial on Z_p, conductor Z_p.
    Cyclotomic psi(const PAdic& x) const;

private:
    friend bool is_square_unit(const FieldContext&, const Integer&);
    friend bool is_fourth_power_unit(const FieldContext&, const Integer&);
    long p_;
    int precision_;
    int depth_;
    int mu4_;
    long unit_gen_;
    std::vector<bool> qr_;      // residue -> is a nonzero square mod p
    std::vector<bool> quartic_; // residue -> is a fourth power mod p
    mutable std::unique_ptr<FourthPowerClasses> classes_;
};

constexpr long kValInf = LONG_MAX; // valuation of the exact zero

// Element of Q_p.  Values are exact rationals, so arithmetic never loses
// digits; a finite known_digits cap models scalars that were constructed
// from truncated digit input (and Hensel lifts), in which case operations
// propagate the cap and digit queries beyond it raise precision_error.
class PAdic {
public:
    PAdic() : ctx_(nullptr) {}
    PAdic(const FieldContext* ctx, const Rational& v, int known_digits = INT_MAX);

    const FieldContext* ctx() const { return ctx_; }
    const Rational& value() const { return v_; }
    bool exact() const { return known_ == INT_MAX; }
    int known_digits() const { return known_; }

    bool is_zero() const;
    long valuation() const;           // kValInf for zero
    // value known mod p^{abs_precision()}; kValInf when exact
    long abs_precision() const;
    Rational norm() const;            // q^{-v}, 0 for zero

    PAdic operator+(const PAdic& o) const;
    PAdic operator-(const PAdic& o) const;
    PAdic operator-() const;
    PAdic operator*(const PAdic& o) const;
    PAdic operator/(const PAdic& o) const;
    bool operator==(const PAdic& o) const;
    bool operator!=(const PAdic& o) const { return !(*this == o); }

    // Digits d_0.. of the unit part, base p, little-endian, length n.
    std::vector<int> unit_digits(int n) const;
    // Value of the unit part mod p^n as an integer in [0, p^n).
    Integer unit_mod(int n) const;
    // x mod p^k Z_p as a rational with denominator a power of p (the
    // principal part plus digits below level k); requires enough digits.
    Rational truncate(long k) const;

    std::string to_string() const;                  // "v:<int>;digits:<...>"
    static PAdic parse(const FieldContext* ctx, const std::string& s);
    // same, but the listed digits define the exact value (for coset centers
    // and group-element entries, which are finite expansions)
    static PAdic parse_exact(const FieldContext* ctx, const std::string& s);

private:
    void check_same(const PAdic& o) const;
    const FieldContext* ctx_;
    Rational v_;
    int known_;  // relative digits known; INT_MAX = exact
};

// Deterministic square root: halves even valuation, unit part's first digit
// chosen in {1..(p-1)/2}.  Result carries precision ctx->precision().
PAdic hensel_sqrt(const PAdic& a);

// valuation of a nonzero rational at p
long rational_valuation(const Rational& r, long p);

bool is_square_unit(const FieldContext& ctx, const Integer& u); // u prime to p
// Is the unit u a fourth power in Z_p^x?
bool is_fourth_power_unit(const FieldContext& ctx, const Integer& u);
bool is_square(const PAdic& a);

// Representatives of F^x/(F^x)^4 containing 1, with K' = K cap (F^x)^2 and a
// chosen exact square root for each gamma in K'.
struct FourthPowerClasses {
    std::vector<PAdic> reps;          // u^i p^j, 0<=i<mu4, 0<=j<4
    std::vector<PAdic> square_reps;   // subset that are squares
    std::vector<PAdic> square_roots;  // exact sqrt of square_reps[i]
    // Index in reps of the class of x (exact), or throws for x = 0.
    int class_of(const PAdic& x) const;
};

} // namespace rtf
