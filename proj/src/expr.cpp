#include "psivolterra/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <system_error>
#include <vector>

namespace psivolterra {

ParseError::ParseError(std::size_t position, const std::string& what)
    : Error(ErrorCode::Parse, "parse error at byte " + std::to_string(position) + ": " + what), position_(position) {}

enum class Op { Num, VarT, VarS, VarX, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Sin, Cos, Sqrt, Abs };

struct Expr::Node {
    Op op;
    double value = 0.0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr leaf(Op op, double v = 0.0) { return std::make_shared<const Expr::Node>(Expr::Node{op, v, nullptr, nullptr}); }
NodePtr unary(Op op, NodePtr a) { return std::make_shared<const Expr::Node>(Expr::Node{op, 0.0, std::move(a), nullptr}); }
NodePtr binary(Op op, NodePtr a, NodePtr b) {
    return std::make_shared<const Expr::Node>(Expr::Node{op, 0.0, std::move(a), std::move(b)});
}

struct FuncName {
    std::string_view name;
    Op op;
};
constexpr std::array<FuncName, 6> kFunctions{{{"exp", Op::Exp},
                                              {"log", Op::Log},
                                              {"sin", Op::Sin},
                                              {"cos", Op::Cos},
                                              {"sqrt", Op::Sqrt},
                                              {"abs", Op::Abs}}};

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr run() {
        skip_ws();
        if (pos_ == text_.size()) throw ParseError(pos_, "empty expression");
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) throw ParseError(pos_, std::string("unexpected '") + text_[pos_] + "'");
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int depth_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser) : p(parser) {
            if (++p.depth_ > 256) throw ParseError(p.pos_, "expression nested too deeply");
        }
        ~DepthGuard() { --p.depth_; }
    };

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            if (accept('+')) lhs = binary(Op::Add, lhs, parse_term());
            else if (accept('-')) lhs = binary(Op::Sub, lhs, parse_term());
            else return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*')) lhs = binary(Op::Mul, lhs, parse_unary());
            else if (accept('/')) lhs = binary(Op::Div, lhs, parse_unary());
            else return lhs;
        }
    }

    NodePtr parse_unary() {
        DepthGuard guard(*this);
        if (accept('-')) return unary(Op::Neg, parse_unary());
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (accept('^')) return binary(Op::Pow, base, parse_unary());
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ == text_.size()) throw ParseError(pos_, "unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            if (!accept(')')) throw ParseError(pos_, "expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        throw ParseError(pos_, std::string("unexpected '") + c + "'");
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        // Scan the literal ourselves so "2e" or "1.2.3" fail at a sensible offset.
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_, ++n;
            return n;
        };
        std::size_t mantissa = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            mantissa += digits();
        }
        if (mantissa == 0) throw ParseError(start, "malformed number");
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (digits() == 0) throw ParseError(pos_, "malformed exponent");
        }
        double v = 0.0;
        const char* first = text_.data() + start;
        const char* last = text_.data() + pos_;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec == std::errc::result_out_of_range) throw ParseError(start, "number out of range");
        if (ec != std::errc() || ptr != last) throw ParseError(start, "malformed number");
        return leaf(Op::Num, v);
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);
        if (name == "t") return leaf(Op::VarT);
        if (name == "s") return leaf(Op::VarS);
        if (name == "x") return leaf(Op::VarX);
        for (const auto& f : kFunctions) {
            if (name == f.name) {
                if (!accept('(')) throw ParseError(pos_, "expected '(' after " + std::string(name));
                NodePtr arg = parse_expr();
                if (!accept(')')) throw ParseError(pos_, "expected ')'");
                return unary(f.op, arg);
            }
        }
        throw ParseError(start, "unknown identifier '" + std::string(name) + "'");
    }
};

[[noreturn]] void eval_fail(const std::string& what) { throw Error(ErrorCode::Eval, what); }

double eval_node(const Expr::Node& n, const Bindings& b) {
    auto var = [&](const std::optional<double>& v, const char* name) {
        if (!v) eval_fail(std::string("unbound variable ") + name);
        return *v;
    };
    double r = 0.0;
    switch (n.op) {
        case Op::Num: return n.value;
        case Op::VarT: return var(b.t, "t");
        case Op::VarS: return var(b.s, "s");
        case Op::VarX: return var(b.x, "x");
        case Op::Add: r = eval_node(*n.lhs, b) + eval_node(*n.rhs, b); break;
        case Op::Sub: r = eval_node(*n.lhs, b) - eval_node(*n.rhs, b); break;
        case Op::Mul: r = eval_node(*n.lhs, b) * eval_node(*n.rhs, b); break;
        case Op::Div: {
            const double num = eval_node(*n.lhs, b);
            const double den = eval_node(*n.rhs, b);
            if (den == 0.0) eval_fail("division by zero");
            r = num / den;
            break;
        }
        case Op::Pow: r = std::pow(eval_node(*n.lhs, b), eval_node(*n.rhs, b)); break;
        case Op::Neg: return -eval_node(*n.lhs, b);
        case Op::Exp: r = std::exp(eval_node(*n.lhs, b)); break;
        case Op::Log: {
            const double a = eval_node(*n.lhs, b);
            if (!(a > 0.0)) eval_fail("log of nonpositive value");
            r = std::log(a);
            break;
        }
        case Op::Sin: r = std::sin(eval_node(*n.lhs, b)); break;
        case Op::Cos: r = std::cos(eval_node(*n.lhs, b)); break;
        case Op::Sqrt: {
            const double a = eval_node(*n.lhs, b);
            if (a < 0.0) eval_fail("sqrt of negative value");
            r = std::sqrt(a);
            break;
        }
        case Op::Abs: return std::abs(eval_node(*n.lhs, b));
    }
    if (!std::isfinite(r)) eval_fail("non-finite result");
    return r;
}

// Printing precedence: larger binds tighter.
int precedence(Op op) {
    switch (op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Pow: return 4;
        default: return 5;
    }
}

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void print_node(const Expr::Node& n, std::string& out);

void print_child(const Expr::Node& child, int min_prec, std::string& out) {
    if (precedence(child.op) < min_prec) {
        out += '(';
        print_node(child, out);
        out += ')';
    } else {
        print_node(child, out);
    }
}

void print_node(const Expr::Node& n, std::string& out) {
    switch (n.op) {
        case Op::Num: out += format_number(n.value); return;
        case Op::VarT: out += 't'; return;
        case Op::VarS: out += 's'; return;
        case Op::VarX: out += 'x'; return;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div: {
            const int p = precedence(n.op);
            const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? " * " : " / ";
            print_child(*n.lhs, p, out);
            out += sym;
            // Right operands of equal precedence keep their parentheses so the
            // tree shape survives a round trip.
            print_child(*n.rhs, p + 1, out);
            return;
        }
        case Op::Pow:
            print_child(*n.lhs, 5, out);
            out += " ^ ";
            print_child(*n.rhs, 3, out);
            return;
        case Op::Neg:
            out += '-';
            print_child(*n.lhs, 3, out);
            return;
        default: break;
    }
    for (const auto& f : kFunctions) {
        if (f.op == n.op) {
            out += f.name;
            out += '(';
            print_node(*n.lhs, out);
            out += ')';
            return;
        }
    }
}

bool uses(const Expr::Node& n, Op var) {
    if (n.op == var) return true;
    return (n.lhs && uses(*n.lhs, var)) || (n.rhs && uses(*n.rhs, var));
}

}  // namespace

Expr Expr::parse(std::string_view text) { return Expr(Parser(text).run()); }

double Expr::eval(const Bindings& b) const { return eval_node(*root_, b); }

std::string Expr::print() const {
    std::string out;
    print_node(*root_, out);
    return out;
}

bool Expr::uses_t() const noexcept { return uses(*root_, Op::VarT); }
bool Expr::uses_s() const noexcept { return uses(*root_, Op::VarS); }
bool Expr::uses_x() const noexcept { return uses(*root_, Op::VarX); }

}  // namespace psivolterra
