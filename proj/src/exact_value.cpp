#include "rtf/exact_value.hpp"

namespace rtf {

bool ExactValue::is_zero() const
{
    if (is_rational()) return std::get<Rational>(v_) == 0;
    return std::get<Cyclotomic>(v_).zero();
}

const Rational& ExactValue::as_rational() const
{
    if (is_rational()) return std::get<Rational>(v_);
    // Throws for genuinely irrational values.
    static thread_local Rational tmp;
    tmp = std::get<Cyclotomic>(v_).rational_part();
    return tmp;
}

Cyclotomic ExactValue::as_cyclotomic(long p, int k) const
{
    if (is_rational()) return Cyclotomic::from_rational(p, k, std::get<Rational>(v_));
    return std::get<Cyclotomic>(v_);
}

ExactValue ExactValue::operator+(const ExactValue& o) const
{
    if (is_rational() && o.is_rational())
        return ExactValue(std::get<Rational>(v_) + std::get<Rational>(o.v_));
    const Cyclotomic& model = is_rational() ? std::get<Cyclotomic>(o.v_) : std::get<Cyclotomic>(v_);
    Cyclotomic a = as_cyclotomic(model.prime(), model.order_exp());
    Cyclotomic b = o.as_cyclotomic(model.prime(), model.order_exp());
    return ExactValue(a + b);
}

ExactValue ExactValue::operator-(const ExactValue& o) const
{
    return *this + (o * ExactValue(Rational(-1)));
}

ExactValue ExactValue::operator*(const ExactValue& o) const
{
    if (is_rational() && o.is_rational())
        return ExactValue(std::get<Rational>(v_) * std::get<Rational>(o.v_));
    if (is_rational())
        return ExactValue(std::get<Cyclotomic>(o.v_) * std::get<Rational>(v_));
    if (o.is_rational())
        return ExactValue(std::get<Cyclotomic>(v_) * std::get<Rational>(o.v_));
    return ExactValue(std::get<Cyclotomic>(v_) * std::get<Cyclotomic>(o.v_));
}

bool ExactValue::operator==(const ExactValue& o) const
{
    if (is_rational() && o.is_rational())
        return std::get<Rational>(v_) == std::get<Rational>(o.v_);
    if (is_rational() != o.is_rational()) return false; // both canonical
    return std::get<Cyclotomic>(v_) == std::get<Cyclotomic>(o.v_);
}

std::string ExactValue::to_string() const
{
    if (is_rational()) return rat_to_string(std::get<Rational>(v_));
    return std::get<Cyclotomic>(v_).to_string();
}

} // namespace rtf
