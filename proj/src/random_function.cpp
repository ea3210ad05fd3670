#include "rtf/random_function.hpp"

#include "rtf/fourier.hpp"

namespace rtf {

namespace {

long pow_long(long p, long e)
{
    long r = 1;
    while (e-- > 0) r *= p;
    return r;
}

long sl2_count(long p, long n)
{
    if (n <= 0) return 1;
    long r = 1;
    for (long i = 0; i < 3 * n; ++i) r *= p;
    return r - r / (p * p);
}

bool within_budgets(const StepFunction& f, const Budgets& budgets)
{
    const FieldContext& ctx = *f.ctx();
    long q = ctx.q();
    long s = f.support_exponent();
    long m = std::max(f.level(), 0L);
    long n = s + m;
    if (pow_long(q, 3 * n) > budgets.max_cells) return false;
    if (sl2_count(q, n) > budgets.max_cosets) return false;
    // Fourier subdivision and the dual-side grid
    long shat = 0, mhat = 0, subdiv = 0;
    for (const auto& t : f.terms()) {
        long tu = 0;
        bool any = false;
        for (const auto& c : t.center)
            if (c.value() != 0) {
                tu = std::max(tu, -c.valuation());
                any = true;
            }
        long tlevel = any ? std::max(-t.level, tu) : -t.level;
        long depth = std::max(0L, tlevel + t.level);
        long cells = pow_long(q, 3 * depth);
        subdiv += cells;
        if (subdiv > budgets.max_cells) return false;
        shat = std::max(shat, std::max(0L, t.level));
        mhat = std::max(mhat, tlevel);
    }
    long nhat = shat + std::max(mhat, 0L);
    if (pow_long(q, 3 * nhat) > budgets.max_cells) return false;
    if (sl2_count(q, nhat) > budgets.max_cosets) return false;
    return true;
}

} // namespace

StepFunction random_step_function(const FieldContext& ctx, uint64_t seed,
                                  const Budgets& budgets)
{
    Rng rng(seed);
    for (int attempt = 0; attempt < 4096; ++attempt) {
        StepFunction f(&ctx, 3);
        long nterms = 1 + rng.below(8);
        for (long t = 0; t < nterms; ++t) {
            long level = -2 + rng.below(6); // [-2, 3]
            std::vector<PAdic> center;
            for (int i = 0; i < 3; ++i) {
                // digits from p^{-2} up to the level
                long depth = std::max(level + 2, 0L);
                long digits = rng.below(pow_long(ctx.p(), std::min(depth, 8L)));
                center.push_back(ctx.scalar(Rational(digits) * rat_pow(ctx.p(), -2)));
            }
            long coeff = 0;
            while (coeff == 0) coeff = -3 + rng.below(7);
            f.add_term(std::move(center), level, ExactValue(Rational(coeff)));
        }
        if (f.empty()) continue;
        if (within_budgets(f, budgets)) return f;
    }
    throw budget_error("random_step_function: no draw fits the budgets");
}

StepFunction builtin_function(const FieldContext& ctx, const std::string& name)
{
    StepFunction f(&ctx, 3);
    if (name == "unit-lattice") {
        f.add_term({ctx.zero(), ctx.zero(), ctx.zero()}, 0, ExactValue(Rational(1)));
        return f;
    }
    if (name == "shifted-coset") {
        f.add_term({ctx.scalar(Rational(1, ctx.p())), ctx.zero(), ctx.one()}, 1,
                   ExactValue(Rational(1)));
        return f;
    }
    if (name == "two-term") {
        f.add_term({ctx.zero(), ctx.zero(), ctx.zero()}, 0, ExactValue(Rational(2)));
        f.add_term({ctx.zero(), ctx.one(), ctx.zero()}, 1, ExactValue(Rational(-1)));
        return f;
    }
    throw arithmetic_error("unknown builtin function: " + name +
                           " (expected unit-lattice, shifted-coset, or two-term)");
}

} // namespace rtf
