#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ga/cohort.hpp"
#include "ga/formulae.hpp"
#include "ga/rng.hpp"

using namespace ga::formulae;

namespace {

const std::map<std::string, double> kVars = {
    {"bpd", 5.5}, {"hc", 20.0}, {"ac", 18.0}, {"fl", 4.0}, {"crl", 7.0}};

double eval_text(const std::string& text) {
    return evaluate(*parse_expression(text), kVars);
}

// Independent oracle: flatten to postfix tokens, evaluate with an explicit
// stack. Shares no code with the recursive evaluator.
struct RpnToken {
    enum class Op { push_num, push_var, neg, add, sub, mul, div, pow, ln, exp, sqrt };
    Op op;
    double value = 0.0;
    std::string name;
};

void flatten(const Expr& e, std::vector<RpnToken>& out) {
    using K = Expr::Kind;
    switch (e.kind) {
        case K::number:
            out.push_back({RpnToken::Op::push_num, e.value, ""});
            return;
        case K::variable:
            out.push_back({RpnToken::Op::push_var, 0.0, e.name});
            return;
        case K::unary_minus:
            flatten(*e.lhs, out);
            out.push_back({RpnToken::Op::neg, 0.0, ""});
            return;
        case K::call:
            flatten(*e.lhs, out);
            out.push_back({e.name == "ln"    ? RpnToken::Op::ln
                           : e.name == "exp" ? RpnToken::Op::exp
                                             : RpnToken::Op::sqrt,
                           0.0, ""});
            return;
        default:
            flatten(*e.lhs, out);
            flatten(*e.rhs, out);
            const RpnToken::Op op = e.kind == K::add   ? RpnToken::Op::add
                                    : e.kind == K::sub ? RpnToken::Op::sub
                                    : e.kind == K::mul ? RpnToken::Op::mul
                                    : e.kind == K::div ? RpnToken::Op::div
                                                       : RpnToken::Op::pow;
            out.push_back({op, 0.0, ""});
    }
}

double rpn_eval(const Expr& root, const std::map<std::string, double>& vars) {
    std::vector<RpnToken> tokens;
    flatten(root, tokens);
    std::vector<double> stack;
    for (const auto& t : tokens) {
        switch (t.op) {
            case RpnToken::Op::push_num: stack.push_back(t.value); break;
            case RpnToken::Op::push_var: stack.push_back(vars.at(t.name)); break;
            case RpnToken::Op::neg: stack.back() = -stack.back(); break;
            case RpnToken::Op::ln: stack.back() = std::log(stack.back()); break;
            case RpnToken::Op::exp: stack.back() = std::exp(stack.back()); break;
            case RpnToken::Op::sqrt: stack.back() = std::sqrt(stack.back()); break;
            default: {
                const double b = stack.back();
                stack.pop_back();
                double& a = stack.back();
                switch (t.op) {
                    case RpnToken::Op::add: a += b; break;
                    case RpnToken::Op::sub: a -= b; break;
                    case RpnToken::Op::mul: a *= b; break;
                    case RpnToken::Op::div: a /= b; break;
                    default: a = std::pow(a, b);
                }
            }
        }
    }
    REQUIRE(stack.size() == 1);
    return stack.back();
}

ExprPtr random_ast(ga::rng::Rng& rng, int depth) {
    const char* vars[] = {"bpd", "hc", "ac", "fl", "crl"};
    Expr node;
    if (depth == 0 || rng.next_double() < 0.3) {
        if (rng.next_double() < 0.5) {
            node.kind = Expr::Kind::number;
            node.value = rng.uniform(0.1, 9.9);
        } else {
            node.kind = Expr::Kind::variable;
            node.name = vars[rng.below(5)];
        }
        return std::make_shared<const Expr>(std::move(node));
    }
    switch (rng.below(8)) {
        case 0: node.kind = Expr::Kind::add; break;
        case 1: node.kind = Expr::Kind::sub; break;
        case 2: node.kind = Expr::Kind::mul; break;
        case 3: node.kind = Expr::Kind::div; break;
        case 4: node.kind = Expr::Kind::pow; break;
        case 5: node.kind = Expr::Kind::unary_minus; break;
        default: {
            node.kind = Expr::Kind::call;
            const char* fns[] = {"ln", "exp", "sqrt"};
            node.name = fns[rng.below(3)];
        }
    }
    node.lhs = random_ast(rng, depth - 1);
    if (node.kind != Expr::Kind::unary_minus && node.kind != Expr::Kind::call)
        node.rhs = random_ast(rng, depth - 1);
    return std::make_shared<const Expr>(std::move(node));
}

std::filesystem::path write_config(const std::string& body) {
    const auto path = std::filesystem::temp_directory_path() / "ga_formulae_test.json";
    std::ofstream out(path);
    out << body;
    out.close();
    return path;
}

}  // namespace

TEST_CASE("precedence and simple evaluation") {
    CHECK(eval_text("1+2*3") == doctest::Approx(7.0));
    CHECK(eval_text("ln(exp(2))") == doctest::Approx(2.0));
    CHECK(eval_text("-2^2") == doctest::Approx(-4.0));   // ^ binds tighter than unary -
    CHECK(eval_text("2^3^2") == doctest::Approx(512.0));  // right-associative
    CHECK(eval_text("2*-3") == doctest::Approx(-6.0));
    CHECK(eval_text("8/4/2") == doctest::Approx(1.0));    // left-associative
    CHECK(eval_text("2^-1") == doctest::Approx(0.5));
    CHECK(eval_text("sqrt(16)") == doctest::Approx(4.0));
}

TEST_CASE("hadlock-style worked example") {
    CHECK(eval_text("10.85 + 0.060*hc*fl + 0.67*bpd + 0.168*ac") ==
          doctest::Approx(22.359).epsilon(1e-12));
}

TEST_CASE("syntax errors carry positions; unknown identifiers list variables") {
    CHECK_THROWS_WITH_AS(parse_expression("1+"),
                         doctest::Contains("position 2"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_expression("hc + foo"),
                         doctest::Contains("allowed variables"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_expression("sin(hc)"),
                         doctest::Contains("unknown function"), std::runtime_error);
    CHECK_THROWS_AS(parse_expression(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_expression("(1+2"), std::runtime_error);
}

TEST_CASE("print/parse round-trip holds for 1000 random ASTs") {
    ga::rng::Rng rng(2024);
    for (int i = 0; i < 1000; ++i) {
        const ExprPtr ast = random_ast(rng, 1 + static_cast<int>(rng.below(6)));
        const std::string text = print_expression(*ast);
        const ExprPtr back = parse_expression(text);
        REQUIRE_MESSAGE(expr_equal(*ast, *back), "failed on: " << text);
    }
}

TEST_CASE("evaluation matches the stack-machine oracle to 1e-12") {
    ga::rng::Rng rng(4048);
    int checked = 0;
    for (int i = 0; i < 1000 && checked < 400; ++i) {
        const ExprPtr ast = random_ast(rng, 1 + static_cast<int>(rng.below(5)));
        double mine;
        try {
            mine = evaluate(*ast, kVars);
        } catch (const std::runtime_error&) {
            continue;  // domain error (ln of negative, division by zero, ...)
        }
        const double oracle = rpn_eval(*ast, kVars);
        if (!std::isfinite(oracle)) continue;
        ++checked;
        CHECK(mine == doctest::Approx(oracle).epsilon(1e-12));
    }
    CHECK(checked >= 100);
}

TEST_CASE("eval_formula converts weeks to days and flags ranges") {
    FormulaSpec weeks_spec;
    weeks_spec.name = "hadlock_style";
    weeks_spec.expression_text = "10.85 + 0.060*hc*fl + 0.67*bpd + 0.168*ac";
    weeks_spec.expression = parse_expression(weeks_spec.expression_text);
    weeks_spec.output_unit = OutputUnit::weeks;
    weeks_spec.ga_range_lo_days = 84;
    weeks_spec.ga_range_hi_days = 301;
    weeks_spec.required_vars = {"hc", "fl", "bpd", "ac"};

    const auto est = eval_formula(weeks_spec, kVars);
    CHECK(est.days == doctest::Approx(156.513).epsilon(1e-9));
    CHECK_FALSE(est.out_of_range);

    FormulaSpec crl_spec;
    crl_spec.name = "crl_identity";
    crl_spec.expression_text = "crl";
    crl_spec.expression = parse_expression(crl_spec.expression_text);
    crl_spec.output_unit = OutputUnit::days;
    crl_spec.ga_range_lo_days = 98;
    crl_spec.ga_range_hi_days = 280;
    crl_spec.required_vars = {"crl"};

    const auto low = eval_formula(crl_spec, {{"crl", 60.0}});
    CHECK(low.days == doctest::Approx(60.0));
    CHECK(low.out_of_range);  // value still returned, only flagged

    CHECK_THROWS_WITH_AS(eval_formula(weeks_spec, {{"hc", 20.0}}),
                         doctest::Contains("missing variable"), std::runtime_error);
}

TEST_CASE("evaluation errors: division by zero and ln domain") {
    const auto div_ast = parse_expression("1/(hc-20)");
    CHECK_THROWS_WITH_AS(evaluate(*div_ast, kVars), doctest::Contains("division by zero"),
                         std::runtime_error);
    const auto ln_ast = parse_expression("ln(hc-20)");
    CHECK_THROWS_AS(evaluate(*ln_ast, kVars), std::runtime_error);
}

TEST_CASE("library loading validates entries") {
    const auto path = write_config(R"([
      {"name": "crl_dating", "expression": "8.052*sqrt(crl) + 23.73",
       "output_unit": "days", "ga_range_days": [42, 97]},
      {"name": "hadlock_example", "expression": "10.85 + 0.060*hc*fl + 0.67*bpd + 0.168*ac",
       "output_unit": "weeks", "ga_range_days": [84, 301],
       "required_vars": ["hc", "fl", "bpd", "ac"]}
    ])");
    const auto lib = load_library(path);
    CHECK(lib.formulas.size() == 2);
    CHECK(lib.get("crl_dating").required_vars == std::set<std::string>{"crl"});

    const auto dup = write_config(R"([
      {"name": "x", "expression": "crl", "output_unit": "days", "ga_range_days": [42, 97]},
      {"name": "x", "expression": "crl", "output_unit": "days", "ga_range_days": [42, 97]}
    ])");
    CHECK_THROWS_WITH_AS(load_library(dup), doctest::Contains("duplicate"),
                         std::runtime_error);
}

TEST_CASE("baseline_estimates skips unavailable formulas and honors the manifest") {
    const auto path = write_config(R"([
      {"name": "crl_dating", "expression": "8.052*sqrt(crl) + 23.73",
       "output_unit": "days", "ga_range_days": [42, 97]},
      {"name": "hadlock_example", "expression": "10.85 + 0.060*hc*fl + 0.67*bpd + 0.168*ac",
       "output_unit": "weeks", "ga_range_days": [84, 301]}
    ])");
    const auto lib = load_library(path);

    ga::cohort::Visit t1_visit;
    t1_visit.visit_id = "v0";
    t1_visit.biometry.crl = 6.25;
    auto result = baseline_estimates(t1_visit, lib, {"crl_dating", "hadlock_example"});
    CHECK(result.estimates.size() == 1);
    CHECK(result.estimates.count("crl_dating") == 1);
    CHECK(result.skipped.at("hadlock_example") == "missing measurement: ac");

    ga::cohort::Visit t2_visit;
    t2_visit.visit_id = "v1";
    t2_visit.biometry.bpd = 5.5;
    t2_visit.biometry.hc = 20.0;
    t2_visit.biometry.ac = 18.0;
    t2_visit.biometry.fl = 4.0;
    result = baseline_estimates(t2_visit, lib, {"crl_dating", "hadlock_example"});
    CHECK(result.estimates.count("hadlock_example") == 1);
    CHECK(result.estimates.at("hadlock_example").days ==
          doctest::Approx(156.513).epsilon(1e-9));
    CHECK(result.skipped.count("crl_dating") == 1);

    // A recorded manifest estimate wins over the engine.
    t2_visit.formula_ga_estimates["hadlock_example"] = 150.0;
    result = baseline_estimates(t2_visit, lib, {"hadlock_example"});
    CHECK(result.estimates.at("hadlock_example").days == doctest::Approx(150.0));
}
