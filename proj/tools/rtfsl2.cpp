// Command-line front end: verifies the local relative trace formula for
// F^x \ SL2(F) at the Lie algebra level over F = Q_p, term by term.

#include "rtf/report.hpp"
#include "rtf/random_function.hpp"
#include "rtf/conj_average.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace rtf;

long mu_max_of(const std::vector<long>& mus)
{
    long m = 12; // covers the derived default grid when mu is auto
    for (long v : mus) m = std::max(m, v);
    return m;
}

FieldContext make_context(const RunConfig& config, long s_hint = 4, long m_hint = 4)
{
    long mu_max = mu_max_of(config.mu_list);
    int prec = config.derived_precision(s_hint, m_hint, mu_max);
    int depth = config.character_depth > 0 ? config.character_depth
                                           : static_cast<int>(s_hint + m_hint + 2);
    return FieldContext(config.prime, prec, depth);
}

std::vector<std::pair<std::string, StepFunction>> gather_functions(const FieldContext& ctx,
                                                                   const RunConfig& config)
{
    std::vector<std::pair<std::string, StepFunction>> out;
    if (config.random) {
        for (long i = 0; i < config.count; ++i) {
            uint64_t seed = config.seed + static_cast<uint64_t>(i);
            out.emplace_back("random(seed=" + std::to_string(seed) + ")",
                             random_step_function(ctx, seed, config.budgets()));
        }
    } else if (config.function_source.rfind("builtin:", 0) == 0) {
        std::string name = config.function_source.substr(8);
        out.emplace_back(name, builtin_function(ctx, name));
    } else {
        std::string path = config.function_source.substr(5);
        StepFunction f = load_step_function(ctx, path);
        StepFunction canon = f.canonical(config.budgets());
        if (!f.equal_as_functions(canon, config.budgets()))
            throw config_error("function file failed canonical-form validation");
        out.emplace_back(path, std::move(canon));
    }
    return out;
}

int command_verify(const RunConfig& config)
{
    FieldContext ctx = make_context(config);
    RunReport report;
    report.config = config;
    report.lemma = certify_lemma(ctx, 2, 10, config.budgets());
    for (auto& [label, f] : gather_functions(ctx, config)) {
        TraceFormulaRequest req{f, config.mu_list, config.epsilon_valuation,
                                config.budgets(), label};
        report.functions.push_back(verify_function(ctx, req));
    }
    std::string out = report_to_json(report);
    if (!config.out_path.empty()) {
        std::string tmp = config.out_path + ".tmp";
        {
            std::ofstream os(tmp);
            os << out << "\n";
        }
        std::rename(tmp.c_str(), config.out_path.c_str());
    }
    std::cout << report_summary(report);
    if (report.all_ok()) return 0;
    std::cerr << "first failing flag: " << report.first_failure() << "\n";
    return 1;
}

Mat2 parse_group_element(const FieldContext& ctx, const std::string& spec)
{
    if (spec == "identity" || spec.empty()) return Mat2::identity(&ctx);
    // comma-separated scalar strings a,b,c,d
    std::vector<PAdic> entries;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) entries.push_back(PAdic::parse_exact(&ctx, item));
    if (entries.size() != 4) throw config_error("group element needs 4 entries or 'identity'");
    Mat2 g{entries[0], entries[1], entries[2], entries[3]};
    if (!(g.det() == ctx.one())) throw config_error("group element must have det 1");
    return g;
}

int command_term(const RunConfig& config, const std::string& term, long mu,
                 const std::string& g_spec)
{
    FieldContext ctx = make_context(config);
    auto fns = gather_functions(ctx, config);
    const auto& [label, f] = fns.front();

    if (term == "weight-table") {
        Mat2 g = parse_group_element(ctx, g_spec);
        const auto& cls = ctx.fourth_power_classes();
        std::cout << "weight factors at mu = " << mu << " for g = " << g_spec << ":\n";
        Rational total(0);
        for (size_t i = 0; i < cls.square_roots.size(); ++i) {
            Rational w = weight_factor_direct(ctx, static_cast<int>(i), g, mu);
            total += w;
            std::cout << "  gamma = " << cls.square_reps[i].value() << ": "
                      << rat_to_string(w) << "\n";
        }
        std::cout << "  direct sum: " << rat_to_string(total) << "\n";
        try {
            Rational closed = weight_factor_closed_form(ctx, g, mu);
            std::cout << "  closed form: " << rat_to_string(closed)
                      << (closed == total ? " (agrees)" : " (DISAGREES)") << "\n";
            return closed == total ? 0 : 1;
        } catch (const certification_error& e) {
            std::cout << "  closed form: not applicable (" << e.what() << ")\n";
            return 0;
        }
    }

    Pipeline pipe(ctx, f, config.budgets(), config.epsilon_valuation);
    if (term == "plancherel-check") {
        ExactValue lhs = pipe.plancherel_lhs(), rhs = pipe.plancherel_rhs();
        std::cout << "int_h f_hat = " << lhs.to_string() << "\n";
        std::cout << "int_perp f  = " << rhs.to_string() << "\n";
        std::cout << (lhs == rhs ? "equal\n" : "NOT equal\n");
        return lhs == rhs ? 0 : 1;
    }
    if (term == "weyl-check") {
        Mat2 g = parse_group_element(ctx, g_spec);
        WeylCheck wc = weyl_integration_check(f, g, config.budgets());
        std::cout << "lhs = " << wc.lhs.to_string() << "\n";
        std::cout << "rhs = " << wc.rhs.to_string() << " over "
                  << wc.per_class.size() << " classes\n";
        std::cout << (wc.ok ? "equal\n" : "NOT equal\n");
        return wc.ok ? 0 : 1;
    }
    ExactValue v;
    if (term == "theta-split")
        v = pipe.theta_split_direct(mu);
    else if (term == "theta-split-weyl")
        v = pipe.theta_split_weyl(mu);
    else if (term == "theta-fixed")
        v = pipe.theta_fixed(mu);
    else if (term == "J-minus")
        v = pipe.j_minus(mu);
    else if (term == "J-plus")
        v = pipe.j_plus(mu);
    else
        throw config_error("unknown term '" + term +
                           "' (expected theta-split, theta-split-weyl, theta-fixed, "
                           "J-minus, J-plus, weight-table, weyl-check, plancherel-check)");
    std::cout << term << "(" << label << ", mu = " << mu << ") = " << v.to_string();
    if (v.is_rational()) std::cout << " (~" << v.as_rational().get_d() << ")";
    std::cout << "\n  epsilon valuation: " << pipe.epsilon_valuation()
              << ", support bound: " << pipe.support_bound() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"local relative trace formula engine for F^x \\ SL2(Q_p)"};
    app.require_subcommand(1);

    RunConfig config;
    std::string config_path, mu_spec, function_spec, term_name, g_spec = "identity";
    long epsilon_val = LONG_MIN;
    long term_mu = 4;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (flags override it)");
        cmd->add_option("--prime", config.prime, "odd prime p");
        cmd->add_option("--precision", config.precision, "working precision (digits)");
        cmd->add_option("--depth", config.character_depth, "character depth K");
        cmd->add_option("--mu", mu_spec, "mu grid, e.g. 0..4 or 0,2,4 (default: 0..max(4, 4D+2))");
        cmd->add_option("--epsilon", epsilon_val, "override v(epsilon)");
        cmd->add_option("--function", function_spec, "builtin:NAME or file:PATH");
        cmd->add_flag("--random", config.random, "use seeded random functions");
        cmd->add_option("--seed", config.seed, "random seed");
        cmd->add_option("--count", config.count, "number of random functions");
        cmd->add_option("--out", config.out_path, "report output path");
        cmd->add_option("--max-shells", config.max_shells, "shell budget");
        cmd->add_option("--max-cosets", config.max_cosets, "K-enumeration budget");
        cmd->add_option("--max-cells", config.max_cells, "grid cell budget");
    };

    CLI::App* verify = app.add_subcommand("verify", "verify all identities");
    add_common(verify);
    CLI::App* term = app.add_subcommand("term", "evaluate a single term");
    add_common(term);
    term->add_option("name", term_name, "term name")->required();
    term->add_option("--term-mu", term_mu, "mu for the term");
    term->add_option("--g", g_spec, "group element: 'identity' or 4 scalars");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) {
            RunConfig file_config = parse_config_file(config_path);
            // flags already parsed into `config` override file values only
            // when explicitly given; simplest merge: start from file, apply
            // given flags
            RunConfig merged = file_config;
            for (CLI::App* cmd : {verify, term}) {
                if (!cmd->parsed()) continue;
                if (cmd->count("--prime")) merged.prime = config.prime;
                if (cmd->count("--precision")) merged.precision = config.precision;
                if (cmd->count("--depth")) merged.character_depth = config.character_depth;
                if (cmd->count("--mu")) merged.mu_list = parse_mu_spec(mu_spec);
                if (cmd->count("--epsilon")) merged.epsilon_valuation = epsilon_val;
                if (cmd->count("--function")) merged.function_source = function_spec;
                if (cmd->count("--random")) merged.random = config.random;
                if (cmd->count("--seed")) merged.seed = config.seed;
                if (cmd->count("--count")) merged.count = config.count;
                if (cmd->count("--out")) merged.out_path = config.out_path;
                if (cmd->count("--max-shells")) merged.max_shells = config.max_shells;
                if (cmd->count("--max-cosets")) merged.max_cosets = config.max_cosets;
                if (cmd->count("--max-cells")) merged.max_cells = config.max_cells;
            }
            config = merged;
        } else {
            if (!mu_spec.empty()) config.mu_list = parse_mu_spec(mu_spec);
            if (epsilon_val != LONG_MIN) config.epsilon_valuation = epsilon_val;
            if (!function_spec.empty()) config.function_source = function_spec;
        }
        config.validate();

        if (verify->parsed()) return command_verify(config);
        if (term->parsed()) return command_term(config, term_name, term_mu, g_spec);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const budget_error& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return 3;
    } catch (const precision_error& e) {
        std::cerr << "precision error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    }
    return 0;
}
