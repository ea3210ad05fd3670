#include "rtf/matrix.hpp"

#include <sstream>

namespace rtf {

Mat2 Mat2::identity(const FieldContext* ctx)
{
    return {ctx->one(), ctx->zero(), ctx->zero(), ctx->one()};
}

Mat2 Mat2::diag(const PAdic& t1, const PAdic& t2)
{
    const FieldContext* ctx = t1.ctx();
    return {t1, ctx->zero(), ctx->zero(), t2};
}

Mat2 Mat2::upper_unipotent(const PAdic& x)
{
    const FieldContext* ctx = x.ctx();
    return {ctx->one(), x, ctx->zero(), ctx->one()};
}

Mat2 Mat2::lower_unipotent(const PAdic& x)
{
    const FieldContext* ctx = x.ctx();
    return {ctx->one(), ctx->zero(), x, ctx->one()};
}

Mat2 Mat2::operator*(const Mat2& o) const
{
    return {a * o.a + b * o.c, a * o.b + b * o.d,
            c * o.a + d * o.c, c * o.b + d * o.d};
}

PAdic Mat2::det() const { return a * d - b * c; }

Mat2 Mat2::inverse() const
{
    PAdic dt = det();
    return {d / dt, -b / dt, -c / dt, a / dt};
}

bool Mat2::operator==(const Mat2& o) const
{
    return a == o.a && b == o.b && c == o.c && d == o.d;
}

std::string Mat2::to_string() const
{
    std::ostringstream os;
    os << "[" << a.to_string() << ", " << b.to_string() << "; "
       << c.to_string() << ", " << d.to_string() << "]";
    return os.str();
}

Mat2 theta(const Mat2& g) { return {g.a, -g.b, -g.c, g.d}; }

Mat2 tau(const Mat2& g) { return theta(g).inverse() * g; }

std::string LieVec::to_string() const
{
    return "(" + h.to_string() + ", " + b.to_string() + ", " + c.to_string() + ")";
}

LieVec adjoint_on(const Mat2& g, const LieVec& X)
{
    Mat2 xm{X.h, X.b, X.c, -X.h};
    Mat2 r = g.inverse() * xm * g;
    return {r.a, r.b, r.c};
}

long cartan_invariant(const Mat2& g)
{
    long m = kValInf;
    for (const PAdic* e : {&g.a, &g.b, &g.c, &g.d})
        if (e->value() != 0) m = std::min(m, e->valuation());
    return -m;
}

bool truncation_indicator(const Mat2& g, long mu)
{
    return cartan_invariant(tau(g)) <= mu;
}

Frame parse_frame(const std::string& name)
{
    if (name == "B") return Frame::B;
    if (name == "Bbar") return Frame::Bbar;
    if (name == "Bprime") return Frame::Bprime;
    throw arithmetic_error("unknown frame: " + name);
}

namespace {

Mat2 u_matrix(const FieldContext* ctx)
{
    return {ctx->one(), ctx->one(), ctx->one(), -ctx->one()};
}

} // namespace

Mat2 to_u_frame(const Mat2& g)
{
    Mat2 u = u_matrix(g.ctx());
    return u * g * u.inverse();
}

Mat2 from_u_frame(const Mat2& g)
{
    Mat2 u = u_matrix(g.ctx());
    return u.inverse() * g * u;
}

LieVec lie_to_u_frame(const LieVec& X)
{
    Mat2 u = u_matrix(X.ctx());
    Mat2 xm{X.h, X.b, X.c, -X.h};
    Mat2 r = u * xm * u.inverse();
    return {r.a, r.b, r.c};
}

namespace {

// upper Iwasawa in the current coordinates: g = t n k, n upper unipotent
IwasawaData iwasawa_upper(const Mat2& g)
{
    const FieldContext* ctx = g.ctx();
    long vc = g.c.value() == 0 ? kValInf : g.c.valuation();
    long vd = g.d.value() == 0 ? kValInf : g.d.valuation();
    long H = -std::min(vc, vd);
    PAdic ph = ctx->uniformizer(H);
    PAdic ct = g.c * ph, dt = g.d * ph; // primitive row
    Mat2 k{ctx->zero(), ctx->zero(), ct, dt};
    if (dt.value() != 0 && dt.valuation() == 0) {
        k.a = ctx->one() / dt;
        k.b = ctx->zero();
    } else {
        k.a = ctx->zero();
        k.b = -(ctx->one() / ct);
    }
    Mat2 t = Mat2::diag(ph, ctx->one() / ph);
    Mat2 n = t.inverse() * g * k.inverse();
    if (!(n.c.value() == 0 && n.a == ctx->one() && n.d == ctx->one()))
        throw arithmetic_error("iwasawa: witness is not upper unipotent");
    return {H, t, n, k};
}

// lower Iwasawa: g = t nbar k, nbar lower unipotent
IwasawaData iwasawa_lower(const Mat2& g)
{
    const FieldContext* ctx = g.ctx();
    long va = g.a.value() == 0 ? kValInf : g.a.valuation();
    long vb = g.b.value() == 0 ? kValInf : g.b.valuation();
    long H = std::min(va, vb);
    PAdic ph = ctx->uniformizer(H);
    PAdic at = g.a / ph, bt = g.b / ph;
    Mat2 k{at, bt, ctx->zero(), ctx->zero()};
    if (at.value() != 0 && at.valuation() == 0) {
        k.c = ctx->zero();
        k.d = ctx->one() / at;
    } else {
        k.c = -(ctx->one() / bt);
        k.d = ctx->zero();
    }
    Mat2 t = Mat2::diag(ph, ctx->one() / ph);
    Mat2 n = t.inverse() * g * k.inverse();
    if (!(n.b.value() == 0 && n.a == ctx->one() && n.d == ctx->one()))
        throw arithmetic_error("iwasawa: witness is not lower unipotent");
    return {H, t, n, k};
}

} // namespace

IwasawaData iwasawa(const Mat2& g, Frame frame)
{
    switch (frame) {
    case Frame::Bprime: return iwasawa_upper(g);
    case Frame::B: return iwasawa_upper(to_u_frame(g));
    case Frame::Bbar: return iwasawa_lower(to_u_frame(g));
    }
    throw arithmetic_error("bad frame");
}

Heights iwasawa_heights(const Mat2& g, Frame frame)
{
    Mat2 gf = (frame == Frame::Bprime) ? g : to_u_frame(g);
    long vc = gf.c.value() == 0 ? kValInf : gf.c.valuation();
    long vd = gf.d.value() == 0 ? kValInf : gf.d.valuation();
    long va = gf.a.value() == 0 ? kValInf : gf.a.valuation();
    long vb = gf.b.value() == 0 ? kValInf : gf.b.valuation();
    Heights h;
    h.H_B = -std::min(vc, vd);
    h.H_Bbar = std::min(va, vb);
    h.d = std::max(std::labs(h.H_B), std::labs(h.H_Bbar));
    return h;
}

Mat2 r_gamma(const FieldContext& ctx, int idx)
{
    const auto& cls = ctx.fourth_power_classes();
    if (idx < 0 || idx >= static_cast<int>(cls.square_roots.size()))
        throw arithmetic_error("r_gamma: gamma is not in K'");
    PAdic s = cls.square_roots[static_cast<size_t>(idx)];
    PAdic one = ctx.one();
    PAdic two = ctx.scalar(2);
    return {(one + s) / two, (s - one) / two,
            (s - one) / (two * s), (one + s) / (two * s)};
}

} // namespace rtf
