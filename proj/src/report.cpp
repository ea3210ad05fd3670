#include "rtf/report.hpp"

#include <json.hpp>

#include <iomanip>
#include <sstream>

namespace rtf {

using nlohmann::json;

namespace {

json value_json(const ExactValue& v)
{
    if (v.is_rational()) return rat_to_string(v.as_rational());
    // cyclotomic values appear only if an integral failed to collapse
    return v.to_string();
}

double approx(const ExactValue& v)
{
    if (!v.is_rational()) return 0.0;
    return v.as_rational().get_d();
}

} // namespace

std::string RunReport::first_failure() const
{
    if (!lemma.ok()) return "lemma-certification";
    for (const auto& f : functions) {
        if (!f.flag_direct_eq_weyl) return f.label + ": theta-split direct != weyl";
        if (!f.flag_split_eq_fixed) return f.label + ": theta-split != theta-fixed";
        if (!f.flag_jminus_eq_jplus) return f.label + ": J- != J+";
        if (!f.flag_affine) return f.label + ": J-terms not affine in mu";
        if (!f.flag_identities) return f.label + ": coefficient identities";
        if (!f.flag_convergence) return f.label + ": convergence";
        if (!f.flag_epsilon_split) return f.label + ": epsilon split";
    }
    if (functions.empty()) return "no functions verified";
    return "";
}

std::string report_to_json(const RunReport& report)
{
    json j;
    j["params"] = json::parse(serialize_config(report.config));
    j["lemma_certification"] = {{"points", report.lemma.points_checked},
                                {"mismatches", report.lemma.mismatches},
                                {"pass", report.lemma.ok()}};
    json fns = json::array();
    for (const auto& f : report.functions) {
        json fj;
        fj["label"] = f.label;
        fj["epsilon_valuation"] = f.epsilon_valuation;
        fj["support_bound"] = f.support_bound;
        json terms = json::object();
        for (const auto& row : f.rows) {
            json r;
            r["theta_split_direct"] = value_json(row.theta_split_direct);
            r["theta_split_weyl"] = value_json(row.theta_split_weyl);
            r["theta_fixed"] = value_json(row.theta_fixed);
            r["J_minus"] = value_json(row.j_minus);
            r["J_plus"] = value_json(row.j_plus);
            r["split_minus_Jminus"] = value_json(row.split_minus_jminus);
            r["fixed_minus_Jplus"] = value_json(row.fixed_minus_jplus);
            terms[std::to_string(row.mu)] = r;
        }
        fj["terms"] = terms;
        fj["coefficient_identities"] = {
            {"mu1_lhs", value_json(f.identities.mu1_lhs)},
            {"mu1_rhs", value_json(f.identities.mu1_rhs)},
            {"mu1_rhs_bprime", value_json(f.identities.mu1_rhs_bprime)},
            {"mu0_lhs", value_json(f.identities.mu0_lhs)},
            {"mu0_rhs", value_json(f.identities.mu0_rhs)},
            {"mu1_pass", f.identities.mu1_ok},
            {"mu0_pass", f.identities.mu0_ok}};
        fj["flags"] = {{"direct_eq_weyl", f.flag_direct_eq_weyl},
                       {"split_eq_fixed", f.flag_split_eq_fixed},
                       {"jminus_eq_jplus", f.flag_jminus_eq_jplus},
                       {"affine_in_mu", f.flag_affine},
                       {"coefficient_identities", f.flag_identities},
                       {"convergence", f.flag_convergence},
                       {"epsilon_split", f.flag_epsilon_split}};
        fns.push_back(fj);
    }
    j["functions"] = fns;
    j["pass"] = report.all_ok();
    return j.dump(2);
}

std::string report_summary(const RunReport& report)
{
    std::ostringstream os;
    os << "p = " << report.config.prime << ", functions = " << report.functions.size()
       << "\n";
    os << "lemma certification: " << (report.lemma.ok() ? "pass" : "FAIL") << " ("
       << report.lemma.points_checked << " points, " << report.lemma.mismatches
       << " mismatches)\n";
    for (const auto& f : report.functions) {
        os << "[" << (f.all_ok() ? "pass" : "FAIL") << "] " << f.label
           << "  (v(eps) = " << f.epsilon_valuation << ", D = " << f.support_bound << ")\n";
        for (const auto& row : f.rows) {
            os << "  mu = " << row.mu << ": J- = " << row.j_minus.to_string() << " (~"
               << std::setprecision(6) << approx(row.j_minus) << ")"
               << ", J+ = " << row.j_plus.to_string()
               << ", theta-split = " << row.theta_split_direct.to_string()
               << ", theta-fixed = " << row.theta_fixed.to_string() << "\n";
        }
        os << "  mu^1 identity: " << f.identities.mu1_lhs.to_string() << " vs "
           << f.identities.mu1_rhs.to_string()
           << (f.identities.mu1_ok ? " (pass)" : " (FAIL)") << "\n";
        os << "  mu^0 identity: " << f.identities.mu0_lhs.to_string() << " vs "
           << f.identities.mu0_rhs.to_string()
           << (f.identities.mu0_ok ? " (pass)" : " (FAIL)") << "\n";
    }
    os << (report.all_ok() ? "ALL PASS" : "FAILURES PRESENT: " + report.first_failure())
       << "\n";
    return os.str();
}

} // namespace rtf
