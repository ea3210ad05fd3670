#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rtf/config.hpp"
#include "rtf/random_function.hpp"

using namespace rtf;

TEST_CASE("config round trip")
{
    RunConfig c;
    c.prime = 5;
    c.mu_list = {0, 1, 2};
    c.epsilon_valuation = 2;
    c.function_source = "builtin:two-term";
    c.seed = 42;
    c.max_cells = 12345;
    std::string text = serialize_config(c);
    RunConfig back = parse_config_string(text);
    CHECK(back.prime == c.prime);
    CHECK(back.mu_list == c.mu_list);
    CHECK(back.epsilon_valuation == c.epsilon_valuation);
    CHECK(back.function_source == c.function_source);
    CHECK(back.seed == c.seed);
    CHECK(back.max_cells == c.max_cells);
    CHECK(serialize_config(back) == text); // parse -> serialize -> parse identity
}

TEST_CASE("config validation errors")
{
    CHECK_THROWS_AS(parse_config_string("{\"prime\": 2}"), config_error);
    CHECK_THROWS_AS(parse_config_string("{\"spectral\": 1}"), config_error);
    CHECK_THROWS_AS(parse_config_string("not json"), config_error);
    // minimal config loads with documented defaults; an absent mu key means
    // the derived grid 0..max(4, 4D+2)
    RunConfig c = parse_config_string("{}");
    CHECK(c.prime == 3);
    CHECK(c.mu_list.empty());
    CHECK(c.max_cosets == 1000000);
}

TEST_CASE("mu spec parsing")
{
    CHECK(parse_mu_spec("0..4") == std::vector<long>({0, 1, 2, 3, 4}));
    CHECK(parse_mu_spec("1,3,5") == std::vector<long>({1, 3, 5}));
    CHECK_THROWS_AS(parse_mu_spec("x"), config_error);
}

TEST_CASE("step function file round trip")
{
    FieldContext ctx(3, 12, 4);
    StepFunction f = builtin_function(ctx, "two-term");
    std::string text = serialize_step_function(f);
    StepFunction back = parse_step_function(ctx, text);
    CHECK(back.equal_as_functions(f));
    CHECK(serialize_step_function(back) == text);
    CHECK_THROWS_AS(parse_step_function(ctx, "{\"bad\": 1}"), config_error);
}

TEST_CASE("random generator determinism and budgets")
{
    FieldContext ctx(5, 20, 5);
    Budgets budgets;
    StepFunction a = random_step_function(ctx, 77, budgets);
    StepFunction b = random_step_function(ctx, 77, budgets);
    CHECK(serialize_step_function(a) == serialize_step_function(b));
    StepFunction c = random_step_function(ctx, 78, budgets);
    CHECK(serialize_step_function(a) != serialize_step_function(c));
    // drawn functions respect the budget caps
    for (uint64_t s = 1; s <= 10; ++s) {
        StepFunction f = random_step_function(ctx, s, budgets);
        long n = f.support_exponent() + std::max(f.level(), 0L);
        long cells = 1;
        for (long i = 0; i < 3 * n; ++i) cells *= 5;
        CHECK(cells <= budgets.max_cells);
    }
}

TEST_CASE("builtin functions")
{
    FieldContext ctx(3, 12, 4);
    CHECK(builtin_function(ctx, "unit-lattice").terms().size() == 1);
    CHECK(builtin_function(ctx, "shifted-coset").support_exponent() == 1);
    CHECK(builtin_function(ctx, "two-term").terms().size() == 2);
    CHECK_THROWS_AS(builtin_function(ctx, "spectral"), arithmetic_error);
}
