#include "rtf/conj_average.hpp"

#include <map>
#include <memory>

namespace rtf {

namespace {

long pow_long(long p, int e)
{
    long r = 1;
    while (e-- > 0) r *= p;
    return r;
}

// SL2(Z/p^n) coset count
long sl2_count(long p, int n)
{
    if (n == 0) return 1;
    long r = 1;
    for (int i = 0; i < 3 * n; ++i) r *= p;
    return r - r / (p * p);
}

std::map<std::pair<long, int>, std::unique_ptr<OrbitTable>>& table_cache()
{
    static std::map<std::pair<long, int>, std::unique_ptr<OrbitTable>> cache;
    return cache;
}

} // namespace

const OrbitTable& orbit_table(long p, int n, const Budgets& budgets)
{
    auto& cache = table_cache();
    auto it = cache.find({p, n});
    if (it != cache.end()) return *it->second;

    long cells = pow_long(p, 3 * n);
    if (cells > budgets.max_cells)
        throw budget_error("orbit grid of " + std::to_string(cells) +
                           " cells exceeds max_cells (raise the budget or shrink the function)");
    if (sl2_count(p, n) > budgets.max_cosets)
        throw budget_error("K-enumeration of " + std::to_string(sl2_count(p, n)) +
                           " cosets exceeds max_cosets");

    auto tab = std::make_unique<OrbitTable>();
    tab->p = p;
    tab->n = n;
    tab->cells = cells;
    tab->orbit_of.assign(static_cast<size_t>(cells), -1);

    long pn = pow_long(p, n);
    auto idx = [pn](long h, long b, long c) { return h + pn * (b + pn * c); };

    // Ad n(1):    (h,b,c) -> (h+c, b-2h-c, c)
    // Ad n(-1):   (h,b,c) -> (h-c, b+2h-c, c)
    // Ad nbar(1): (h,b,c) -> (h-b, b, c+2h-b)
    // Ad nbar(-1):(h,b,c) -> (h+b, b, c-2h-b)
    auto step = [&](long h, long b, long c, int gen) {
        long h2, b2, c2;
        switch (gen) {
        case 0: h2 = h + c; b2 = b - 2 * h - c; c2 = c; break;
        case 1: h2 = h - c; b2 = b + 2 * h - c; c2 = c; break;
        case 2: h2 = h - b; b2 = b; c2 = c + 2 * h - b; break;
        default: h2 = h + b; b2 = b; c2 = c - 2 * h - b; break;
        }
        auto md = [pn](long x) { x %= pn; return x < 0 ? x + pn : x; };
        return idx(md(h2), md(b2), md(c2));
    };

    std::vector<int32_t> stack;
    for (long start = 0; start < cells; ++start) {
        if (tab->orbit_of[static_cast<size_t>(start)] >= 0) continue;
        int32_t oid = static_cast<int32_t>(tab->members.size());
        tab->members.emplace_back();
        stack.push_back(static_cast<int32_t>(start));
        tab->orbit_of[static_cast<size_t>(start)] = oid;
        while (!stack.empty()) {
            long cur = stack.back();
            stack.pop_back();
            tab->members.back().push_back(static_cast<int32_t>(cur));
            long h = cur % pn, b = (cur / pn) % pn, c = cur / (pn * pn);
            for (int gen = 0; gen < 4; ++gen) {
                long nxt = step(h, b, c, gen);
                if (tab->orbit_of[static_cast<size_t>(nxt)] < 0) {
                    tab->orbit_of[static_cast<size_t>(nxt)] = oid;
                    stack.push_back(static_cast<int32_t>(nxt));
                }
            }
        }
    }

    auto& slot = cache[{p, n}];
    slot = std::move(tab);
    return *slot;
}

namespace {

// dense tabulation of f on p^{-s}L0 / p^{m}L0 by rasterizing terms
std::vector<ExactValue> rasterize(const StepFunction& f, long s, long m)
{
    const FieldContext* ctx = f.ctx();
    long p = ctx->p();
    int n = static_cast<int>(s + m);
    long pn = pow_long(p, n);
    long cells = pn * pn * pn;
    std::vector<ExactValue> grid(static_cast<size_t>(cells));

    for (const auto& t : f.terms()) {
        // digit index of the scaled center p^s * u mod p^n per coordinate
        long base[3];
        for (int i = 0; i < 3; ++i) {
            Rational scaled = t.center[static_cast<size_t>(i)].value() * rat_pow(p, s);
            PAdic sc(ctx, scaled);
            if (sc.value() == 0) {
                base[i] = 0;
            } else {
                if (sc.valuation() < 0)
                    throw arithmetic_error("rasterize: center outside grid support");
                Integer d = PAdic(ctx, scaled).truncate(n).get_num(); // integer in [0,p^n)
                // truncate returns rational with denominator 1 here
                base[i] = d.get_si() % pn;
                if (base[i] < 0) base[i] += pn;
            }
        }
        long depth = t.level + s; // digits fixed by the term
        if (depth < 0) depth = 0;
        if (depth > n) throw arithmetic_error("rasterize: term finer than grid");
        long free_per_axis = pow_long(p, static_cast<int>(n - depth));
        long pd = pow_long(p, static_cast<int>(depth));
        for (long ec = 0; ec < free_per_axis; ++ec)
            for (long eb = 0; eb < free_per_axis; ++eb)
                for (long eh = 0; eh < free_per_axis; ++eh) {
                    long h = (base[0] % pd) + pd * eh;
                    long b = (base[1] % pd) + pd * eb;
                    long c = (base[2] % pd) + pd * ec;
                    grid[static_cast<size_t>(h + pn * (b + pn * c))] += t.coeff;
                }
    }
    return grid;
}

// grid -> canonical StepFunction via bottom-up merge of constant blocks.
// A block at depth j fixes the low j digits per axis (residues mod p^j);
// as a coset it is p^{-s}(rh, rb, rc) + p^{j-s} L0.
void emit_blocks(const FieldContext* ctx, const std::vector<ExactValue>& grid,
                 long p, int n, long s, StepFunction& out,
                 long rh, long rb, long rc, int depth)
{
    long pn = pow_long(p, n);
    long pj = pow_long(p, depth);
    long free_count = pow_long(p, static_cast<int>(n - depth));
    const ExactValue& first =
        grid[static_cast<size_t>(rh + pn * (rb + pn * rc))];
    bool constant = true;
    for (long ec = 0; ec < free_count && constant; ++ec)
        for (long eb = 0; eb < free_count && constant; ++eb)
            for (long eh = 0; eh < free_count && constant; ++eh) {
                long h = rh + pj * eh, b = rb + pj * eb, c = rc + pj * ec;
                if (!(grid[static_cast<size_t>(h + pn * (b + pn * c))] == first))
                    constant = false;
            }
    if (constant) {
        if (!first.is_zero()) {
            Rational sc = rat_pow(p, -s);
            std::vector<PAdic> center{PAdic(ctx, Rational(rh) * sc),
                                      PAdic(ctx, Rational(rb) * sc),
                                      PAdic(ctx, Rational(rc) * sc)};
            out.add_term(std::move(center), depth - s, first);
        }
        return;
    }
    for (long dc = 0; dc < p; ++dc)
        for (long db = 0; db < p; ++db)
            for (long dh = 0; dh < p; ++dh)
                emit_blocks(ctx, grid, p, n, s, out, rh + dh * pj,
                            rb + db * pj, rc + dc * pj, depth + 1);
}

} // namespace

StepFunction conjugation_average(const StepFunction& f, int level, const Budgets& budgets)
{
    const FieldContext* ctx = f.ctx();
    if (f.dim() != 3) throw arithmetic_error("conjugation_average needs dim 3");
    if (f.empty()) return StepFunction(ctx, 3);
    long s = f.support_exponent();
    long m = f.level();
    if (m < -s) m = -s; // grid depth cannot be negative
    int n = static_cast<int>(s + m);
    if (level >= 0) {
        if (level < n)
            throw arithmetic_error("conjugation_average: level below m_f + s_f");
        n = level;
        m = n - s;
    }
    const OrbitTable& tab = orbit_table(ctx->p(), n, budgets);
    std::vector<ExactValue> grid = rasterize(f, s, m);

    // average per orbit
    for (const auto& orbit : tab.members) {
        ExactValue sum;
        bool any = false;
        for (int32_t cell : orbit)
            if (!grid[static_cast<size_t>(cell)].is_zero()) {
                sum += grid[static_cast<size_t>(cell)];
                any = true;
            }
        ExactValue avg;
        if (any) avg = sum * ExactValue(Rational(1, static_cast<long>(orbit.size())));
        for (int32_t cell : orbit) grid[static_cast<size_t>(cell)] = avg;
    }

    StepFunction out(ctx, 3);
    emit_blocks(ctx, grid, ctx->p(), n, s, out, 0, 0, 0, 0);
    return out;
}

} // namespace rtf
