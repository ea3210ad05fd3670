#include "rtf/fourier.hpp"

#include <map>

namespace rtf {

PairingForm PairingForm::standard_line() { return {1, {{1}}}; }

PairingForm PairingForm::sl2_trace_form()
{
    return {3, {{2, 0, 0}, {0, 0, 1}, {0, 1, 0}}};
}

namespace {

// B u as exact rationals
std::vector<Rational> apply_form(const PairingForm& form, const std::vector<PAdic>& u)
{
    std::vector<Rational> out(static_cast<size_t>(form.dim), Rational(0));
    for (int i = 0; i < form.dim; ++i)
        for (int j = 0; j < form.dim; ++j)
            out[static_cast<size_t>(i)] +=
                Rational(form.gram[static_cast<size_t>(i)][static_cast<size_t>(j)]) *
                u[static_cast<size_t>(j)].value();
    return out;
}

// smallest t with psi(<u, .>) trivial on p^t L0, or kValInf-like when the
// character is trivial everywhere (u pairs to 0)
long character_level(const FieldContext* ctx, const PairingForm& form,
                     const std::vector<PAdic>& u)
{
    auto bu = apply_form(form, u);
    long t = kValInf;
    for (auto& r : bu) {
        if (r == 0) continue;
        t = std::min(t, PAdic(ctx, r).valuation());
    }
    if (t == kValInf) return -(1L << 30); // trivial character
    return -t;
}

} // namespace

int required_character_depth(const StepFunction& f, const PairingForm& form)
{
    const FieldContext* ctx = f.ctx();
    long need = 1;
    for (const auto& t : f.terms()) {
        long tu = character_level(ctx, form, t.center);
        if (tu + t.level > need) need = tu + t.level;
    }
    return static_cast<int>(need);
}

StepFunction fourier_transform(const StepFunction& f, const PairingForm& form,
                               const Budgets& budgets)
{
    const FieldContext* ctx = f.ctx();
    if (f.dim() != form.dim) throw arithmetic_error("fourier: dimension mismatch");
    int d = f.dim();
    long p = ctx->p();

    int need = required_character_depth(f, form);
    if (need > ctx->character_depth())
        throw precision_error("character depth exceeded: run with character_depth >= " +
                              std::to_string(need));

    // dual cells keyed by (level, canonical center digits)
    using Key = std::pair<long, std::vector<Rational>>;
    std::map<Key, ExactValue> acc;
    long total_cells = 0;

    for (const auto& term : f.terms()) {
        long m = term.level;
        long tu = character_level(ctx, form, term.center);
        long tlevel = std::max(-m, tu); // dual cell level
        long depth = tlevel + m;        // >= 0: subdivision depth of p^{-m}L0
        Rational vol = rat_pow(p, -m * d);

        long per_axis = 1;
        long ncells = 1;
        for (long i = 0; i < depth; ++i) per_axis *= p;
        for (int i = 0; i < d; ++i) {
            ncells *= per_axis;
            if (ncells > budgets.max_cells)
                throw budget_error("fourier subdivision exceeds max_cells budget");
        }
        total_cells += ncells;
        if (total_cells > 4 * budgets.max_cells)
            throw budget_error("fourier transform exceeds max_cells budget");

        auto bu = apply_form(form, term.center);
        Rational pm = rat_pow(p, -m);
        std::vector<long> digit(static_cast<size_t>(d), 0);
        for (long cell = 0; cell < ncells; ++cell) {
            std::vector<Rational> center(static_cast<size_t>(d));
            Rational phase(0);
            for (int i = 0; i < d; ++i) {
                center[static_cast<size_t>(i)] = Rational(digit[static_cast<size_t>(i)]) * pm;
                phase += bu[static_cast<size_t>(i)] * center[static_cast<size_t>(i)];
            }
            Cyclotomic ps = ctx->psi(PAdic(ctx, phase));
            ExactValue coeff = term.coeff * ExactValue(ps) * ExactValue(vol);
            acc[{tlevel, std::move(center)}] += coeff;

            for (int i = 0; i < d; ++i) {
                if (++digit[static_cast<size_t>(i)] < per_axis) break;
                digit[static_cast<size_t>(i)] = 0;
            }
        }
    }

    StepFunction out(ctx, d);
    for (auto& [key, coeff] : acc) {
        if (coeff.is_zero()) continue;
        std::vector<PAdic> center;
        center.reserve(static_cast<size_t>(d));
        for (auto& c : key.second) center.push_back(PAdic(ctx, c));
        out.add_term(std::move(center), key.first, coeff);
    }
    return out;
}

} // namespace rtf
