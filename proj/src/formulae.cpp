#include "ga/formulae.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ga/cohort.hpp"

namespace ga::formulae {

namespace {

const std::set<std::string> kVariables = {"bpd", "hc", "ac", "fl", "crl"};
const std::set<std::string> kFunctions = {"ln", "exp", "sqrt"};

std::string allowed_variables_list() {
    std::string s;
    for (const auto& v : kVariables) {
        if (!s.empty()) s += ", ";
        s += v;
    }
    return s;
}

struct Token {
    enum class Kind { number, ident, op, lparen, rparen, end };
    Kind kind = Kind::end;
    double value = 0.0;
    std::string text;
    std::size_t pos = 0;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& peek() const { return current_; }

    Token take() {
        Token t = current_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        current_ = Token{};
        current_.pos = pos_;
        if (pos_ >= text_.size()) {
            current_.kind = Token::Kind::end;
            return;
        }
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            try {
                current_.value = std::stod(text_.substr(pos_), &used);
            } catch (const std::exception&) {
                fail("malformed number", pos_);
            }
            current_.kind = Token::Kind::number;
            current_.text = text_.substr(pos_, used);
            pos_ += used;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = pos_;
            while (end < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
                ++end;
            current_.kind = Token::Kind::ident;
            current_.text = text_.substr(pos_, end - pos_);
            pos_ = end;
            return;
        }
        if (c == '(') {
            current_.kind = Token::Kind::lparen;
        } else if (c == ')') {
            current_.kind = Token::Kind::rparen;
        } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
            current_.kind = Token::Kind::op;
            current_.text = std::string(1, c);
        } else {
            fail(std::string("unexpected character '") + c + "'", pos_);
        }
        ++pos_;
    }

    [[noreturn]] static void fail(const std::string& msg, std::size_t pos) {
        std::ostringstream out;
        out << "expression syntax error at position " << pos << ": " << msg;
        throw std::runtime_error(out.str());
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    Token current_;
};

ExprPtr make_node(Expr node) { return std::make_shared<const Expr>(std::move(node)); }

class Parser {
public:
    explicit Parser(const std::string& text) : lexer_(text) {}

    ExprPtr parse() {
        ExprPtr e = parse_sum();
        const Token& t = lexer_.peek();
        if (t.kind != Token::Kind::end)
            fail("unexpected trailing input", t.pos);
        return e;
    }

private:
    ExprPtr parse_sum() {
        ExprPtr lhs = parse_product();
        while (lexer_.peek().kind == Token::Kind::op &&
               (lexer_.peek().text == "+" || lexer_.peek().text == "-")) {
            const Token op = lexer_.take();
            ExprPtr rhs = parse_product();
            Expr node;
            node.kind = op.text == "+" ? Expr::Kind::add : Expr::Kind::sub;
            node.lhs = lhs;
            node.rhs = rhs;
            lhs = make_node(std::move(node));
        }
        return lhs;
    }

    ExprPtr parse_product() {
        ExprPtr lhs = parse_unary();
        while (lexer_.peek().kind == Token::Kind::op &&
               (lexer_.peek().text == "*" || lexer_.peek().text == "/")) {
            const Token op = lexer_.take();
            ExprPtr rhs = parse_unary();
            Expr node;
            node.kind = op.text == "*" ? Expr::Kind::mul : Expr::Kind::div;
            node.lhs = lhs;
            node.rhs = rhs;
            lhs = make_node(std::move(node));
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (lexer_.peek().kind == Token::Kind::op && lexer_.peek().text == "-") {
            lexer_.take();
            Expr node;
            node.kind = Expr::Kind::unary_minus;
            node.lhs = parse_unary();
            return make_node(std::move(node));
        }
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_primary();
        if (lexer_.peek().kind == Token::Kind::op && lexer_.peek().text == "^") {
            lexer_.take();
            Expr node;
            node.kind = Expr::Kind::pow;
            node.lhs = base;
            node.rhs = parse_unary();  // right-associative; exponent may be signed
            return make_node(std::move(node));
        }
        return base;
    }

    ExprPtr parse_primary() {
        const Token t = lexer_.take();
        switch (t.kind) {
            case Token::Kind::number: {
                Expr node;
                node.kind = Expr::Kind::number;
                node.value = t.value;
                return make_node(std::move(node));
            }
            case Token::Kind::ident: {
                if (lexer_.peek().kind == Token::Kind::lparen) {
                    if (!kFunctions.count(t.text))
                        fail("unknown function '" + t.text + "' (allowed: ln, exp, sqrt)", t.pos);
                    lexer_.take();
                    Expr node;
                    node.kind = Expr::Kind::call;
                    node.name = t.text;
                    node.lhs = parse_sum();
                    expect_rparen();
                    return make_node(std::move(node));
                }
                if (!kVariables.count(t.text))
                    fail("unknown identifier '" + t.text + "' (allowed variables: " +
                             allowed_variables_list() + ")",
                         t.pos);
                Expr node;
                node.kind = Expr::Kind::variable;
                node.name = t.text;
                return make_node(std::move(node));
            }
            case Token::Kind::lparen: {
                ExprPtr e = parse_sum();
                expect_rparen();
                return e;
            }
            default:
                fail("expected a number, variable or '('", t.pos);
        }
    }

    void expect_rparen() {
        const Token t = lexer_.take();
        if (t.kind != Token::Kind::rparen) fail("expected ')'", t.pos);
    }

    [[noreturn]] static void fail(const std::string& msg, std::size_t pos) {
        std::ostringstream out;
        out << "expression syntax error at position " << pos << ": " << msg;
        throw std::runtime_error(out.str());
    }

    Lexer lexer_;
};

void collect_variables(const Expr& e, std::set<std::string>& out) {
    if (e.kind == Expr::Kind::variable) out.insert(e.name);
    if (e.lhs) collect_variables(*e.lhs, out);
    if (e.rhs) collect_variables(*e.rhs, out);
}

}  // namespace

bool expr_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expr::Kind::number:
            return a.value == b.value;
        case Expr::Kind::variable:
            return a.name == b.name;
        case Expr::Kind::call:
            if (a.name != b.name) return false;
            break;
        default:
            break;
    }
    if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
    if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
    if (a.lhs && !expr_equal(*a.lhs, *b.lhs)) return false;
    if (a.rhs && !expr_equal(*a.rhs, *b.rhs)) return false;
    return true;
}

ExprPtr parse_expression(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty expression");
    return Parser(text).parse();
}

std::string print_expression(const Expr& expr) {
    switch (expr.kind) {
        case Expr::Kind::number: {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", expr.value);
            return buf;
        }
        case Expr::Kind::variable:
            return expr.name;
        case Expr::Kind::unary_minus:
            return "(-" + print_expression(*expr.lhs) + ")";
        case Expr::Kind::call:
            return expr.name + "(" + print_expression(*expr.lhs) + ")";
        case Expr::Kind::add:
            return "(" + print_expression(*expr.lhs) + " + " + print_expression(*expr.rhs) + ")";
        case Expr::Kind::sub:
            return "(" + print_expression(*expr.lhs) + " - " + print_expression(*expr.rhs) + ")";
        case Expr::Kind::mul:
            return "(" + print_expression(*expr.lhs) + " * " + print_expression(*expr.rhs) + ")";
        case Expr::Kind::div:
            return "(" + print_expression(*expr.lhs) + " / " + print_expression(*expr.rhs) + ")";
        case Expr::Kind::pow:
            return "(" + print_expression(*expr.lhs) + " ^ " + print_expression(*expr.rhs) + ")";
    }
    throw std::logic_error("unreachable expression kind");
}

double evaluate(const Expr& expr, const std::map<std::string, double>& vars) {
    switch (expr.kind) {
        case Expr::Kind::number:
            return expr.value;
        case Expr::Kind::variable: {
            const auto it = vars.find(expr.name);
            if (it == vars.end())
                throw std::runtime_error("missing variable '" + expr.name + "'");
            return it->second;
        }
        case Expr::Kind::unary_minus:
            return -evaluate(*expr.lhs, vars);
        case Expr::Kind::call: {
            const double x = evaluate(*expr.lhs, vars);
            if (expr.name == "ln") {
                if (!(x > 0.0))
                    throw std::runtime_error("ln of non-positive value");
                return std::log(x);
            }
            if (expr.name == "exp") return std::exp(x);
            if (!(x >= 0.0)) throw std::runtime_error("sqrt of negative value");
            return std::sqrt(x);
        }
        case Expr::Kind::add:
            return evaluate(*expr.lhs, vars) + evaluate(*expr.rhs, vars);
        case Expr::Kind::sub:
            return evaluate(*expr.lhs, vars) - evaluate(*expr.rhs, vars);
        case Expr::Kind::mul:
            return evaluate(*expr.lhs, vars) * evaluate(*expr.rhs, vars);
        case Expr::Kind::div: {
            const double denom = evaluate(*expr.rhs, vars);
            if (denom == 0.0) throw std::runtime_error("division by zero");
            return evaluate(*expr.lhs, vars) / denom;
        }
        case Expr::Kind::pow: {
            const double r = std::pow(evaluate(*expr.lhs, vars), evaluate(*expr.rhs, vars));
            if (!std::isfinite(r)) throw std::runtime_error("non-finite power result");
            return r;
        }
    }
    throw std::logic_error("unreachable expression kind");
}

GaEstimate eval_formula(const FormulaSpec& spec,
                        const std::map<std::string, double>& measurements) {
    for (const auto& var : spec.required_vars)
        if (!measurements.count(var))
            throw std::runtime_error("formula '" + spec.name + "' missing variable '" + var + "'");
    double value = evaluate(*spec.expression, measurements);
    if (spec.output_unit == OutputUnit::weeks) value *= 7.0;
    GaEstimate est;
    est.days = value;
    est.out_of_range = value < spec.ga_range_lo_days || value > spec.ga_range_hi_days;
    return est;
}

const FormulaSpec& FormulaLibrary::get(const std::string& name) const {
    const auto it = formulas.find(name);
    if (it == formulas.end()) throw std::runtime_error("unknown formula: " + name);
    return it->second;
}

FormulaLibrary load_library(const std::filesystem::path& config_path) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open formula config: " + config_path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad formula config " + config_path.string() + ": " + e.what());
    }
    if (!doc.is_array())
        throw std::runtime_error("formula config must be a JSON array of entries");

    FormulaLibrary lib;
    for (const auto& entry : doc) {
        FormulaSpec spec;
        spec.name = entry.at("name").get<std::string>();
        if (lib.formulas.count(spec.name))
            throw std::runtime_error("duplicate formula name: " + spec.name);
        spec.expression_text = entry.at("expression").get<std::string>();
        spec.expression = parse_expression(spec.expression_text);

        const auto unit = entry.at("output_unit").get<std::string>();
        if (unit == "weeks")
            spec.output_unit = OutputUnit::weeks;
        else if (unit == "days")
            spec.output_unit = OutputUnit::days;
        else
            throw std::runtime_error("formula '" + spec.name + "': unknown output_unit '" + unit + "'");

        const auto range = entry.at("ga_range_days");
        spec.ga_range_lo_days = range.at(0).get<double>();
        spec.ga_range_hi_days = range.at(1).get<double>();
        if (!(spec.ga_range_lo_days < spec.ga_range_hi_days))
            throw std::runtime_error("formula '" + spec.name + "': ga_range_days must satisfy lo < hi");

        std::set<std::string> used;
        collect_variables(*spec.expression, used);
        if (entry.contains("required_vars")) {
            for (const auto& v : entry.at("required_vars")) {
                const auto name = v.get<std::string>();
                if (!kVariables.count(name))
                    throw std::runtime_error("formula '" + spec.name + "': unknown variable '" +
                                             name + "' (allowed: " + allowed_variables_list() + ")");
                spec.required_vars.insert(name);
            }
            for (const auto& v : used)
                if (!spec.required_vars.count(v))
                    throw std::runtime_error("formula '" + spec.name + "': expression uses '" + v +
                                             "' which is not in required_vars");
        } else {
            spec.required_vars = used;
        }
        lib.formulas.emplace(spec.name, std::move(spec));
    }
    return lib;
}

BaselineEstimates baseline_estimates(const cohort::Visit& visit,
                                     const FormulaLibrary& library,
                                     const std::vector<std::string>& formula_names) {
    const auto available = visit.biometry.as_map();
    BaselineEstimates out;
    for (const auto& name : formula_names) {
        // A value recorded in the manifest is authoritative.
        const auto recorded = visit.formula_ga_estimates.find(name);
        if (recorded != visit.formula_ga_estimates.end()) {
            GaEstimate est;
            est.days = recorded->second;
            out.estimates.emplace(name, est);
            continue;
        }
        if (!library.contains(name)) {
            out.skipped.emplace(name, "formula not in library");
            continue;
        }
        const FormulaSpec& spec = library.get(name);
        std::string missing;
        for (const auto& var : spec.required_vars)
            if (!available.count(var)) {
                missing = var;
                break;
            }
        if (!missing.empty()) {
            out.skipped.emplace(name, "missing measurement: " + missing);
            continue;
        }
        out.estimates.emplace(name, eval_formula(spec, available));
    }
    return out;
}

}  // namespace ga::formulae
