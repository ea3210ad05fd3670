#include "rtf/field.hpp"

#include <algorithm>
#include <sstream>

namespace rtf {

namespace {

long val_p(const Integer& n, long p)
{
    if (n == 0) return kValInf;
    Integer m = n;
    long v = 0;
    while (mpz_divisible_ui_p(m.get_mpz_t(), static_cast<unsigned long>(p))) {
        mpz_divexact_ui(m.get_mpz_t(), m.get_mpz_t(), static_cast<unsigned long>(p));
        ++v;
    }
    return v;
}

long val_p(const Rational& r, long p)
{
    if (r == 0) return kValInf;
    return val_p(r.get_num(), p) - val_p(r.get_den(), p);
}

// multiplicative order of g mod p^2 equals p(p-1) iff g generates
bool generates_mod_p2(long g, long p)
{
    Integer mod = Integer(p) * p;
    Integer order = Integer(p) * (p - 1);
    // order divides p(p-1); test proper divisors via prime factors p and
    // the factors of p-1
    std::vector<long> primes;
    long m = p - 1;
    for (long d = 2; d * d <= m; ++d)
        while (m % d == 0) { primes.push_back(d); m /= d; }
    if (m > 1) primes.push_back(m);
    primes.push_back(p);
    Integer base(g);
    for (long f : primes) {
        Integer e = order / f;
        Integer r;
        mpz_powm(r.get_mpz_t(), base.get_mpz_t(), e.get_mpz_t(), mod.get_mpz_t());
        if (r == 1) return false;
    }
    Integer r;
    mpz_powm(r.get_mpz_t(), base.get_mpz_t(), order.get_mpz_t(), mod.get_mpz_t());
    return r == 1;
}

} // namespace

FieldContext::FieldContext(long p, int precision, int character_depth)
    : p_(p), precision_(precision), depth_(character_depth)
{
    if (p < 3 || p % 2 == 0) throw arithmetic_error("prime must be odd and >= 3");
    // crude primality check; inputs are small
    for (long d = 3; d * d <= p; d += 2)
        if (p % d == 0) throw arithmetic_error("p is not prime");
    if (precision < 4) precision_ = 4;
    if (character_depth < 1) depth_ = 1;
    mu4_ = (p % 4 == 1) ? 4 : 2;
    unit_gen_ = 2;
    while (!generates_mod_p2(unit_gen_, p_)) ++unit_gen_;
    qr_.assign(static_cast<size_t>(p_), false);
    quartic_.assign(static_cast<size_t>(p_), false);
    for (long u = 1; u < p_; ++u) {
        qr_[static_cast<size_t>((u * u) % p_)] = true;
        quartic_[static_cast<size_t>((((u * u) % p_) * ((u * u) % p_)) % p_)] = true;
    }
}

PAdic FieldContext::scalar(const Rational& v) const { return PAdic(this, v); }
PAdic FieldContext::scalar(long v) const { return PAdic(this, Rational(v)); }
PAdic FieldContext::zero() const { return PAdic(this, Rational(0)); }
PAdic FieldContext::one() const { return PAdic(this, Rational(1)); }
PAdic FieldContext::uniformizer(long e) const { return PAdic(this, rat_pow(p_, e)); }

Cyclotomic FieldContext::psi(const PAdic& x) const
{
    if (x.is_zero() || x.valuation() >= 0)
        return Cyclotomic::from_rational(p_, depth_, Rational(1));
    long k = -x.valuation();
    if (k > depth_)
        throw precision_error("character depth exceeded: need K >= " + std::to_string(k));
    // x = p^{-k} u with u the unit part; frac(x) = u mod p^k over p^k.
    Integer u = x.unit_mod(static_cast<int>(k));
    Integer e = u * int_pow(p_, depth_ - k);
    return Cyclotomic::root_of_unity(p_, depth_, e);
}

PAdic::PAdic(const FieldContext* ctx, const Rational& v, int known_digits)
    : ctx_(ctx), v_(v), known_(known_digits)
{
    if (known_ < 0) known_ = 0;
}

void PAdic::check_same(const PAdic& o) const
{
    if (ctx_ != o.ctx_) throw arithmetic_error("mixed field contexts");
}

bool PAdic::is_zero() const
{
    if (v_ != 0) return false;
    if (exact()) return true;
    throw precision_error("cannot certify zero at finite precision");
}

long PAdic::valuation() const
{
    if (v_ == 0) {
        if (exact()) return kValInf;
        throw precision_error("valuation of a precision-limited zero");
    }
    return val_p(v_, ctx_->p());
}

long PAdic::abs_precision() const
{
    if (exact()) return kValInf;
    if (v_ == 0) throw precision_error("precision floor of a capped zero");
    return valuation() + known_;
}

long rational_valuation(const Rational& r, long p)
{
    if (r == 0) throw arithmetic_error("rational_valuation of zero");
    return val_p(r, p);
}

Rational PAdic::norm() const
{
    if (v_ == 0 && exact()) return Rational(0);
    return rat_pow(ctx_->p(), -valuation());
}

PAdic PAdic::operator+(const PAdic& o) const
{
    check_same(o);
    Rational s = v_ + o.v_;
    if (exact() && o.exact()) return PAdic(ctx_, s);
    // absolute precision = min over operands; relative = abs - valuation
    long a1 = exact() ? kValInf : valuation() + known_;
    long a2 = o.exact() ? kValInf : o.valuation() + o.known_;
    long abs_prec = std::min(a1, a2);
    if (s == 0)
        throw precision_error("precision exhausted (full cancellation)");
    long rel = abs_prec - val_p(s, ctx_->p());
    if (rel < 1) throw precision_error("precision exhausted");
    return PAdic(ctx_, s, static_cast<int>(std::min<long>(rel, INT_MAX)));
}

PAdic PAdic::operator-() const { return PAdic(ctx_, -v_, known_); }

PAdic PAdic::operator-(const PAdic& o) const { return *this + (-o); }

PAdic PAdic::operator*(const PAdic& o) const
{
    check_same(o);
    if ((v_ == 0 && exact()) || (o.v_ == 0 && o.exact())) return PAdic(ctx_, Rational(0));
    int kd = std::min(known_, o.known_);
    return PAdic(ctx_, v_ * o.v_, kd);
}

PAdic PAdic::operator/(const PAdic& o) const
{
    check_same(o);
    if (o.v_ == 0) {
        if (o.exact()) throw arithmetic_error("division by zero");
        throw precision_error("division by a precision-limited zero");
    }
    if (v_ == 0 && exact()) return PAdic(ctx_, Rational(0));
    int kd = std::min(known_, o.known_);
    return PAdic(ctx_, v_ / o.v_, kd);
}

bool PAdic::operator==(const PAdic& o) const
{
    check_same(o);
    if (exact() && o.exact()) return v_ == o.v_;
    // agree to the joint precision
    if (v_ == o.v_) return true;
    long av = std::min(exact() ? kValInf : valuation() + known_,
                       o.exact() ? kValInf : o.valuation() + o.known_);
    return val_p(v_ - o.v_, ctx_->p()) >= av;
}

Integer PAdic::unit_mod(int n) const
{
    if (v_ == 0) {
        if (exact()) throw arithmetic_error("unit part of zero");
        throw precision_error("unit part of a precision-limited zero");
    }
    if (!exact() && known_ < n)
        throw precision_error("precision exhausted: need " + std::to_string(n) +
                              " digits, have " + std::to_string(known_));
    long p = ctx_->p();
    long v = valuation();
    // unit part = v_ / p^v = a/b with a, b prime to p
    Rational u = v_ / rat_pow(p, v);
    Integer mod = int_pow(p, n);
    Integer a = u.get_num() % mod, b = u.get_den() % mod;
    if (a < 0) a += mod;
    if (b < 0) b += mod;
    Integer binv;
    if (mpz_invert(binv.get_mpz_t(), b.get_mpz_t(), mod.get_mpz_t()) == 0)
        throw arithmetic_error("internal: denominator not a unit");
    return (a * binv) % mod;
}

std::vector<int> PAdic::unit_digits(int n) const
{
    Integer u = unit_mod(n);
    std::vector<int> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Integer d = u % ctx_->p();
        out.push_back(static_cast<int>(d.get_si()));
        u /= ctx_->p();
    }
    return out;
}

Rational PAdic::truncate(long k) const
{
    if (v_ == 0 && exact()) return Rational(0);
    long v = valuation();
    if (v >= k) return Rational(0);
    int digits = static_cast<int>(k - v);
    Integer u = unit_mod(digits);
    return Rational(u) * rat_pow(ctx_->p(), v);
}

std::string PAdic::to_string() const
{
    if (v_ == 0 && exact()) return "v:inf;digits:";
    std::ostringstream os;
    os << "v:" << valuation() << ";digits:";
    int n = std::min(known_, ctx_->precision());
    for (int d : unit_digits(n)) os << d;
    return os.str();
}

PAdic PAdic::parse(const FieldContext* ctx, const std::string& s)
{
    if (s.rfind("v:", 0) != 0) throw arithmetic_error("bad scalar: " + s);
    auto semi = s.find(";digits:");
    if (semi == std::string::npos) throw arithmetic_error("bad scalar: " + s);
    std::string vs = s.substr(2, semi - 2);
    std::string ds = s.substr(semi + 8);
    if (vs == "inf") return ctx->zero();
    long v = std::stol(vs);
    if (ds.empty()) throw arithmetic_error("bad scalar (no digits): " + s);
    Rational unit(0);
    Rational pw(1);
    for (char c : ds) {
        if (c < '0' || c > '9' || c - '0' >= ctx->p())
            throw arithmetic_error("bad digit for base p: " + s);
        unit += Rational(c - '0') * pw;
        pw *= Rational(ctx->p());
    }
    if (unit == 0 || val_p(unit, ctx->p()) != 0)
        throw arithmetic_error("unit part must start with a nonzero digit: " + s);
    return PAdic(ctx, unit * rat_pow(ctx->p(), v), static_cast<int>(ds.size()));
}

PAdic PAdic::parse_exact(const FieldContext* ctx, const std::string& s)
{
    PAdic capped = parse(ctx, s);
    return PAdic(ctx, capped.value());
}

bool is_square_unit(const FieldContext& ctx, const Integer& u)
{
    long r = static_cast<long>(mpz_fdiv_ui(u.get_mpz_t(), static_cast<unsigned long>(ctx.p())));
    if (r == 0) throw arithmetic_error("is_square_unit: not a unit");
    return ctx.qr_[static_cast<size_t>(r)];
}

bool is_fourth_power_unit(const FieldContext& ctx, const Integer& u)
{
    long r = static_cast<long>(mpz_fdiv_ui(u.get_mpz_t(), static_cast<unsigned long>(ctx.p())));
    if (r == 0) throw arithmetic_error("is_fourth_power_unit: not a unit");
    return ctx.quartic_[static_cast<size_t>(r)];
}

bool is_square(const PAdic& a)
{
    if (a.value() == 0) return true;
    if (a.valuation() % 2 != 0) return false;
    return is_square_unit(*a.ctx(), a.unit_mod(1));
}

PAdic hensel_sqrt(const PAdic& a)
{
    const FieldContext* ctx = a.ctx();
    if (a.value() == 0) throw arithmetic_error("sqrt of zero");
    long v = a.valuation();
    if (v % 2 != 0) throw arithmetic_error("not a square: odd valuation");
    long p = ctx->p();
    int n = ctx->precision();
    Integer u = a.unit_mod(n);
    if (!is_square_unit(*ctx, u))
        throw arithmetic_error("not a square: unit part is a non-residue");
    // first digit via brute force mod p, then Newton lifting
    Integer mod(p);
    Integer s(0);
    for (long t = 1; t < p; ++t) {
        if ((Integer(t) * t - u) % p == 0) { s = t; break; }
    }
    int have = 1;
    while (have < n) {
        have = std::min(2 * have, n);
        mod = int_pow(p, have);
        // s <- (s + u/s)/2 mod p^have
        Integer sinv, two_inv;
        Integer two(2);
        mpz_invert(sinv.get_mpz_t(), s.get_mpz_t(), mod.get_mpz_t());
        mpz_invert(two_inv.get_mpz_t(), two.get_mpz_t(), mod.get_mpz_t());
        s = ((s + u * sinv % mod) % mod * two_inv) % mod;
        if (s < 0) s += mod;
    }
    // deterministic branch: first digit in {1..(p-1)/2}
    if ((s % p) > (p - 1) / 2) s = (mod - s) % mod;
    Rational val = Rational(s) * rat_pow(p, v / 2);
    return PAdic(ctx, val, n);
}

int FourthPowerClasses::class_of(const PAdic& x) const
{
    if (x.value() == 0) throw arithmetic_error("class of zero");
    for (size_t i = 0; i < reps.size(); ++i) {
        PAdic r = x / reps[i];
        long v = r.valuation();
        if (v % 4 != 0) continue;
        // r = p^{4t} w: fourth power iff w is a fourth power unit
        if (is_fourth_power_unit(*x.ctx(), r.unit_mod(1))) return static_cast<int>(i);
    }
    throw arithmetic_error("internal: no fourth-power class matched");
}

const FourthPowerClasses& FieldContext::fourth_power_classes() const
{
    if (classes_) return *classes_;
    auto c = std::make_unique<FourthPowerClasses>();
    for (long j = 0; j < 4; ++j) {
        for (int i = 0; i < mu4_; ++i) {
            Rational rep = rat_pow(unit_gen_, i) * rat_pow(p_, j);
            // put 1 first: (i,j) = (0,0) comes first by loop order
            c->reps.push_back(scalar(rep));
        }
    }
    for (long j = 0; j < 4; j += 2) {
        for (int i = 0; i < mu4_; i += 2) {
            Rational root = rat_pow(unit_gen_, i / 2) * rat_pow(p_, j / 2);
            c->square_reps.push_back(scalar(root * root));
            c->square_roots.push_back(scalar(root));
        }
    }
    classes_ = std::move(c);
    return *classes_;
}

} // namespace rtf
