#pragma once

// Config-driven biometry regression formula engine. Formulas are arithmetic
// expressions over the biometry variables (cm), parsed into an AST and
// evaluated against a visit's measurements to produce a baseline GA.
//
// The shipped configs/formulas.example.json documents the entry format; the
// published coefficient sets must be transcribed from their original sources
// by whoever deploys this against real data.

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace ga::cohort {
struct Visit;
}

namespace ga::formulae {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { number, variable, unary_minus, add, sub, mul, div, pow, call };
    Kind kind = Kind::number;
    double value = 0.0;   // number
    std::string name;     // variable or function name
    ExprPtr lhs, rhs;     // unary_minus/call use lhs only
};

bool expr_equal(const Expr& a, const Expr& b);

// Grammar: ^ binds tighter than unary minus, which binds tighter than * and /,
// which bind tighter than + and -. All binary operators are left-associative
// except ^, which is right-associative. Variables: bpd, hc, ac, fl, crl.
// Functions: ln, exp, sqrt. Errors carry the character position.
ExprPtr parse_expression(const std::string& text);

// Fully parenthesized rendering; parse(print(ast)) reproduces the AST.
std::string print_expression(const Expr& expr);

double evaluate(const Expr& expr, const std::map<std::string, double>& vars);

enum class OutputUnit { weeks, days };

struct FormulaSpec {
    std::string name;
    ExprPtr expression;
    std::string expression_text;
    OutputUnit output_unit = OutputUnit::weeks;
    double ga_range_lo_days = 0.0;
    double ga_range_hi_days = 0.0;
    std::set<std::string> required_vars;
};

struct GaEstimate {
    double days = 0.0;
    bool out_of_range = false;
};

// Evaluates the spec; converts weeks to days (x7); flags results outside the
// applicability window instead of rejecting them.
GaEstimate eval_formula(const FormulaSpec& spec,
                        const std::map<std::string, double>& measurements);

struct FormulaLibrary {
    std::map<std::string, FormulaSpec> formulas;

    const FormulaSpec& get(const std::string& name) const;
    bool contains(const std::string& name) const { return formulas.count(name) != 0; }
};

FormulaLibrary load_library(const std::filesystem::path& config_path);

struct BaselineEstimates {
    std::map<std::string, GaEstimate> estimates;
    std::map<std::string, std::string> skipped;  // formula -> reason
};

// Per-formula GA for one visit. A value recorded in the visit's
// formula_ga_estimates takes precedence over engine evaluation; formulas
// whose required variables are missing are skipped with a reason.
BaselineEstimates baseline_estimates(const cohort::Visit& visit,
                                     const FormulaLibrary& library,
                                     const std::vector<std::string>& formula_names);

}  // namespace ga::formulae
