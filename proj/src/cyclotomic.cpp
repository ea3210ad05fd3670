#include "rtf/cyclotomic.hpp"

#include <sstream>

namespace rtf {

Rational parse_rational(const std::string& s)
{
    auto slash = s.find('/');
    try {
        Rational r;
        if (slash == std::string::npos)
            r = Rational(s);
        else
            r = Rational(s.substr(0, slash)) / Rational(s.substr(slash + 1));
        r.canonicalize();
        return r;
    } catch (const std::invalid_argument&) {
        throw arithmetic_error("cannot parse rational: " + s);
    }
}

long Cyclotomic::phi() const
{
    long pk1 = 1;
    for (int i = 0; i < k_ - 1; ++i) pk1 *= p_;
    return pk1 * (p_ - 1);
}

Cyclotomic Cyclotomic::from_rational(long p, int k, const Rational& r)
{
    Cyclotomic c(p, k);
    if (r != 0) c.coeffs_[0] = r;
    return c;
}

void Cyclotomic::add_monomial(long e, const Rational& c)
{
    if (c == 0) return;
    long pk = 1;
    for (int i = 0; i < k_; ++i) pk *= p_;
    long ph = phi();
    long pk1 = pk / p_; // p^{K-1}
    e %= pk;
    if (e < 0) e += pk;
    if (e < ph) {
        auto it = coeffs_.find(e);
        if (it == coeffs_.end()) {
            coeffs_.emplace(e, c);
        } else {
            it->second += c;
            if (it->second == 0) coeffs_.erase(it);
        }
        return;
    }
    // zeta^{(p-1)p^{K-1}+r} = -sum_{j<p-1} zeta^{j p^{K-1}+r}
    long r = e - (p_ - 1) * pk1;
    for (long j = 0; j < p_ - 1; ++j) add_monomial(j * pk1 + r, -c);
}

Cyclotomic Cyclotomic::root_of_unity(long p, int k, const Integer& e)
{
    Cyclotomic c(p, k);
    Integer pk = int_pow(p, k);
    Integer em = e % pk;
    if (em < 0) em += pk;
    c.add_monomial(em.get_si(), Rational(1));
    return c;
}

bool Cyclotomic::is_rational() const
{
    return coeffs_.empty() ||
           (coeffs_.size() == 1 && coeffs_.begin()->first == 0);
}

Rational Cyclotomic::rational_part() const
{
    if (!is_rational())
        throw arithmetic_error("expected rational value, got " + to_string());
    return coeffs_.empty() ? Rational(0) : coeffs_.begin()->second;
}

Cyclotomic Cyclotomic::raised_to_order(int k2) const
{
    if (k2 < k_) throw arithmetic_error("cyclotomic: cannot lower order");
    if (k2 == k_) return *this;
    Cyclotomic out(p_, k2);
    long scale = 1;
    for (int i = 0; i < k2 - k_; ++i) scale *= p_;
    for (auto& [e, c] : coeffs_) out.add_monomial(e * scale, c);
    return out;
}

Cyclotomic& Cyclotomic::operator+=(const Cyclotomic& o)
{
    if (o.zero()) return *this;
    if (zero() && p_ == 0) { *this = o; return *this; }
    if (p_ != o.p_)
        throw arithmetic_error("cyclotomic: incompatible root orders");
    if (o.k_ > k_) *this = raised_to_order(o.k_);
    Cyclotomic rhs = o.k_ < k_ ? o.raised_to_order(k_) : o;
    for (auto& [e, c] : rhs.coeffs_) add_monomial(e, c);
    return *this;
}

Cyclotomic Cyclotomic::operator+(const Cyclotomic& o) const
{
    Cyclotomic r = *this;
    r += o;
    return r;
}

Cyclotomic Cyclotomic::operator-() const
{
    Cyclotomic r = *this;
    for (auto& [e, c] : r.coeffs_) c = -c;
    return r;
}

Cyclotomic Cyclotomic::operator-(const Cyclotomic& o) const
{
    return *this + (-o);
}

Cyclotomic Cyclotomic::operator*(const Cyclotomic& o) const
{
    if (zero() || o.zero()) {
        return Cyclotomic(p_ ? p_ : o.p_, p_ ? k_ : o.k_);
    }
    if (p_ != o.p_)
        throw arithmetic_error("cyclotomic: incompatible root orders");
    int k = std::max(k_, o.k_);
    Cyclotomic a = raised_to_order(k), b = o.raised_to_order(k);
    Cyclotomic out(p_, k);
    for (auto& [ea, ca] : a.coeffs_)
        for (auto& [eb, cb] : b.coeffs_) out.add_monomial(ea + eb, ca * cb);
    return out;
}

Cyclotomic Cyclotomic::operator*(const Rational& r) const
{
    Cyclotomic out(p_, k_);
    if (r == 0) return out;
    for (auto& [e, c] : coeffs_) out.coeffs_[e] = c * r;
    return out;
}

bool Cyclotomic::operator==(const Cyclotomic& o) const
{
    if (zero() && o.zero()) return true;
    if (p_ != o.p_) return false;
    if (k_ != o.k_) {
        int k = std::max(k_, o.k_);
        return raised_to_order(k).coeffs_ == o.raised_to_order(k).coeffs_;
    }
    return coeffs_ == o.coeffs_;
}

std::string Cyclotomic::to_string() const
{
    if (coeffs_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto& [e, c] : coeffs_) {
        if (!first) os << " + ";
        os << "(" << rat_to_string(c) << ")";
        if (e > 0) os << "*z^" << e;
        first = false;
    }
    return os.str();
}

std::vector<std::string> Cyclotomic::dense_coeff_strings() const
{
    std::vector<std::string> out(static_cast<size_t>(phi()), "0/1");
    for (auto& [e, c] : coeffs_) out[static_cast<size_t>(e)] = rat_to_string(c);
    return out;
}

} // namespace rtf
