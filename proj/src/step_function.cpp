#include "rtf/step_function.hpp"

#include "rtf/matrix.hpp"

#include <algorithm>
#include <map>

namespace rtf {

void StepFunction::add_term(std::vector<PAdic> center, long level, ExactValue coeff)
{
    if (static_cast<int>(center.size()) != dim_)
        throw arithmetic_error("step term dimension mismatch");
    if (coeff.is_zero()) return;
    // reduce the center mod p^level so serialized forms are stable
    for (auto& c : center) c = PAdic(ctx_, c.truncate(level));
    terms_.push_back({std::move(center), level, std::move(coeff)});
    canonical_ = false;
}

long StepFunction::support_exponent() const
{
    long s = 0;
    for (const auto& t : terms_) {
        s = std::max(s, -t.level);
        for (const auto& c : t.center)
            if (c.value() != 0) s = std::max(s, -c.valuation());
    }
    return s;
}

long StepFunction::level() const
{
    long m = 0;
    for (const auto& t : terms_) m = std::max(m, t.level);
    return m;
}

ExactValue StepFunction::evaluate(const std::vector<PAdic>& X) const
{
    if (static_cast<int>(X.size()) != dim_)
        throw arithmetic_error("evaluate: dimension mismatch");
    ExactValue out;
    for (const auto& t : terms_) {
        bool in = true;
        for (int i = 0; i < dim_ && in; ++i) {
            PAdic d = X[static_cast<size_t>(i)] - t.center[static_cast<size_t>(i)];
            if (d.value() != 0 && d.valuation() < t.level) in = false;
        }
        if (in) out += t.coeff;
    }
    return out;
}

namespace {

struct Cell {
    std::vector<Rational> center; // canonical truncations
    long level;
};

// coset u + p^m vs cell c + p^e, per coordinate logic lifted to products
enum class Rel { Disjoint, TermContainsCell, TermInsideCell };

Rel relate(const FieldContext* ctx, const StepTerm& t, const Cell& cell, int dim)
{
    long p = ctx->p();
    if (t.level <= cell.level) {
        // term coset is coarser: contains the cell or is disjoint
        for (int i = 0; i < dim; ++i) {
            Rational d = cell.center[static_cast<size_t>(i)] -
                         t.center[static_cast<size_t>(i)].value();
            if (d != 0) {
                long v = PAdic(ctx, d).valuation();
                if (v < t.level) return Rel::Disjoint;
            }
        }
        return Rel::TermContainsCell;
    }
    for (int i = 0; i < dim; ++i) {
        Rational d = cell.center[static_cast<size_t>(i)] -
                     t.center[static_cast<size_t>(i)].value();
        if (d != 0) {
            long v = PAdic(ctx, d).valuation();
            if (v < cell.level) return Rel::Disjoint;
        }
    }
    return Rel::TermInsideCell;
}

struct TreeBuilder {
    const FieldContext* ctx;
    int dim;
    const std::vector<StepTerm>& terms;
    const Budgets& budgets;
    long nodes = 0;
    std::vector<StepTerm> out;

    // returns the constant value if the subtree is constant, nullptr-like flag otherwise
    struct Result {
        bool constant;
        ExactValue value;
    };

    Result recurse(const Cell& cell, const std::vector<size_t>& active, ExactValue acc)
    {
        if (++nodes > budgets.max_cells * 4L)
            throw budget_error("canonicalization cell budget exceeded");
        std::vector<size_t> inside;
        for (size_t idx : active) {
            switch (relate(ctx, terms[idx], cell, dim)) {
            case Rel::Disjoint: break;
            case Rel::TermContainsCell: acc += terms[idx].coeff; break;
            case Rel::TermInsideCell: inside.push_back(idx); break;
            }
        }
        if (inside.empty()) return {true, acc};

        long p = ctx->p();
        long nchildren = 1;
        for (int i = 0; i < dim; ++i) nchildren *= p;
        std::vector<Result> results;
        results.reserve(static_cast<size_t>(nchildren));
        Rational step = rat_pow(p, cell.level);
        bool all_const = true;
        for (long child = 0; child < nchildren; ++child) {
            Cell cc{cell.center, cell.level + 1};
            long rem = child;
            for (int i = 0; i < dim; ++i) {
                long digit = rem % p;
                rem /= p;
                cc.center[static_cast<size_t>(i)] += Rational(digit) * step;
            }
            results.push_back(recurse(cc, inside, acc));
            if (!results.back().constant || results.back().value != results.front().value)
                all_const = false;
        }
        if (all_const) return {true, results.front().value};
        // emit non-constant children as refined cells
        long rem_index = 0;
        for (long child = 0; child < nchildren; ++child) {
            const Result& r = results[static_cast<size_t>(child)];
            Cell cc{cell.center, cell.level + 1};
            long rem = child;
            for (int i = 0; i < dim; ++i) {
                long digit = rem % p;
                rem /= p;
                cc.center[static_cast<size_t>(i)] += Rational(digit) * step;
            }
            if (r.constant) {
                if (!r.value.is_zero()) {
                    StepTerm t;
                    for (auto& c : cc.center) t.center.push_back(PAdic(ctx, c));
                    t.level = cc.level;
                    t.coeff = r.value;
                    out.push_back(std::move(t));
                }
            }
            (void)rem_index;
        }
        return {false, ExactValue()};
    }
};

std::string term_sort_key(const StepTerm& t)
{
    std::string k = std::to_string(t.level);
    for (const auto& c : t.center) k += "|" + c.value().get_num().get_str() + "/" + c.value().get_den().get_str();
    return k;
}

} // namespace

StepFunction canonicalize_impl(const StepFunction& f, const Budgets& budgets)
{
    StepFunction out(f.ctx(), f.dim());
    if (f.terms_.empty()) {
        out.canonical_ = true;
        return out;
    }
    long root_exp = 0;
    for (const auto& t : f.terms_) {
        root_exp = std::max(root_exp, -t.level);
        for (const auto& c : t.center)
            if (c.value() != 0) root_exp = std::max(root_exp, -c.valuation());
    }
    Cell root;
    root.center.assign(static_cast<size_t>(f.dim()), Rational(0));
    root.level = -root_exp;
    std::vector<size_t> all(f.terms_.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    TreeBuilder tb{f.ctx(), f.dim(), f.terms_, budgets};
    auto res = tb.recurse(root, all, ExactValue());
    if (res.constant) {
        // constant on the root cell; outside the root cell every term is 0
        if (!res.value.is_zero()) {
            StepTerm t;
            for (auto& c : root.center) t.center.push_back(PAdic(f.ctx(), c));
            t.level = root.level;
            t.coeff = res.value;
            tb.out.push_back(std::move(t));
        }
    }
    std::sort(tb.out.begin(), tb.out.end(), [](const StepTerm& a, const StepTerm& b) {
        return term_sort_key(a) < term_sort_key(b);
    });
    out.terms_ = std::move(tb.out);
    out.canonical_ = true;
    return out;
}

StepFunction StepFunction::canonical(const Budgets& budgets) const
{
    if (canonical_) return *this;
    return canonicalize_impl(*this, budgets);
}

StepFunction StepFunction::operator+(const StepFunction& o) const
{
    if (dim_ != o.dim_) throw arithmetic_error("step function dimension mismatch");
    StepFunction out(ctx_, dim_);
    out.terms_ = terms_;
    out.terms_.insert(out.terms_.end(), o.terms_.begin(), o.terms_.end());
    return out;
}

StepFunction StepFunction::scaled(const ExactValue& c) const
{
    StepFunction out(ctx_, dim_);
    if (c.is_zero()) return out;
    out.terms_ = terms_;
    for (auto& t : out.terms_) t.coeff = t.coeff * c;
    return out;
}

StepFunction StepFunction::negated_argument() const
{
    StepFunction out(ctx_, dim_);
    for (const auto& t : terms_) {
        std::vector<PAdic> c;
        for (const auto& ci : t.center) c.push_back(-ci);
        out.add_term(std::move(c), t.level, t.coeff);
    }
    return out;
}

StepFunction StepFunction::restrict_coordinate(int coord, const PAdic& value) const
{
    if (coord < 0 || coord >= dim_) throw arithmetic_error("restrict: bad coordinate");
    StepFunction out(ctx_, dim_ - 1);
    for (const auto& t : terms_) {
        PAdic d = value - t.center[static_cast<size_t>(coord)];
        if (d.value() != 0 && d.valuation() < t.level) continue;
        std::vector<PAdic> c;
        for (int i = 0; i < dim_; ++i)
            if (i != coord) c.push_back(t.center[static_cast<size_t>(i)]);
        out.add_term(std::move(c), t.level, t.coeff);
    }
    return out;
}

ExactValue StepFunction::integral() const
{
    ExactValue total;
    for (const auto& t : terms_)
        total += t.coeff * ExactValue(rat_pow(ctx_->q(), -t.level * dim_));
    return total;
}

bool StepFunction::equal_as_functions(const StepFunction& o, const Budgets& budgets) const
{
    StepFunction d = *this + o.scaled(ExactValue(Rational(-1)));
    StepFunction c = d.canonical(budgets);
    return c.empty();
}

StepFunction conjugate_pullback(const StepFunction& f, const Mat2& k)
{
    if (f.dim() != 3) throw arithmetic_error("conjugate_pullback needs dim 3");
    // membership k^{-1} X k in u + p^m L0  <=>  X in k u k^{-1} + p^m L0
    StepFunction out(f.ctx(), 3);
    Mat2 kinv = k.inverse();
    for (const auto& t : f.terms()) {
        LieVec u{t.center[0], t.center[1], t.center[2]};
        LieVec v = adjoint_on(kinv, u); // k u k^{-1}
        out.add_term({v.h, v.b, v.c}, t.level, t.coeff);
    }
    return out;
}

StepFunction u_frame_pullback(const StepFunction& f)
{
    if (f.dim() != 3) throw arithmetic_error("u_frame_pullback needs dim 3");
    // Y in u-coordinates; f evaluated at X = u^{-1} Y u.  The map on
    // coordinates is (H,B,C) -> ((B+C)/2, H+(C-B)/2, H+(B-C)/2), which
    // preserves L0 for p odd; cosets map to cosets of the same level.
    // Membership X in t.center + p^m L0 <=> Y in M(t.center) + p^m L0 for
    // the inverse map M = (X -> u X u^{-1}).
    StepFunction out(f.ctx(), 3);
    const FieldContext* ctx = f.ctx();
    Mat2 u{ctx->one(), ctx->one(), ctx->one(), -ctx->one()};
    Mat2 uinv = u.inverse();
    for (const auto& t : f.terms()) {
        LieVec x{t.center[0], t.center[1], t.center[2]};
        // Y-center = u X u^{-1} = adjoint_on(u^{-1}, X)
        LieVec y = adjoint_on(uinv, x);
        out.add_term({y.h, y.b, y.c}, t.level, t.coeff);
    }
    return out;
}

} // namespace rtf
