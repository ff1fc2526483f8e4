#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "psivolterra/expr.hpp"

using namespace psivolterra;

namespace {

double ev(const std::string& text, Bindings b = {}) { return Expr::parse(text).eval(b); }

std::size_t parse_error_at(const std::string& text) {
    try {
        Expr::parse(text);
    } catch (const ParseError& e) {
        return e.position();
    }
    return std::string::npos;
}

bool eval_fails(const std::string& text, Bindings b) {
    try {
        Expr::parse(text).eval(b);
    } catch (const Error& e) {
        return e.code() == ErrorCode::Eval;
    }
    return false;
}

}  // namespace

TEST_CASE("precedence and associativity") {
    CHECK(ev("t^2 + 1", {.t = 2.0}) == 5.0);
    CHECK(ev("exp(-(t-s))*x", {.t = 1.0, .s = 1.0, .x = 3.0}) == 3.0);
    CHECK(ev("2^3^2") == 512.0);
    CHECK(ev("-2^2") == -4.0);
    CHECK(ev("2^-1") == 0.5);
    CHECK(ev("8/4/2") == 1.0);
    CHECK(ev("8-4-2") == 2.0);
    CHECK(ev("1 + 2 * 3") == 7.0);
    CHECK(ev("(1 + 2) * 3") == 9.0);
    CHECK(ev("--3") == 3.0);
    CHECK(ev("+3 - -1") == 4.0);
    CHECK(ev("1.5e2 + .5") == 150.5);
    CHECK(ev("  sqrt( x )  ", {.x = 4.0}) == 2.0);
    CHECK(ev("0.5*x + sin(t)", {.t = 0.0, .x = 2.0}) == 1.0);
    CHECK(ev("abs(-3) + log(exp(2)) + cos(0)") == doctest::Approx(6.0));
}

TEST_CASE("parse errors carry byte offsets") {
    CHECK(parse_error_at("t +") == 3);
    CHECK(parse_error_at("") == 0);
    CHECK(parse_error_at("   ") == 3);
    CHECK(parse_error_at("2 * y") == 4);
    CHECK(parse_error_at("sinh(t)") == 0);
    CHECK(parse_error_at("(t + 1") == 6);
    CHECK(parse_error_at("t + 1)") == 5);
    CHECK(parse_error_at("exp t") == 4);
    CHECK(parse_error_at("1e") == 2);
    CHECK(parse_error_at("1e999") == 0);
    CHECK(parse_error_at("t $ 2") == 2);
    CHECK(parse_error_at(std::string(1000, '(') + "t" + std::string(1000, ')')) != std::string::npos);
    try {
        Expr::parse("t +");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Parse);
        CHECK(std::string(e.what()).find("byte 3") != std::string::npos);
    }
}

TEST_CASE("evaluation errors") {
    CHECK(eval_fails("x / (t - 1)", {.t = 1.0, .x = 2.0}));
    CHECK(eval_fails("log(t)", {.t = 0.0}));
    CHECK(eval_fails("log(t)", {.t = -1.0}));
    CHECK(eval_fails("sqrt(t)", {.t = -1e-300}));
    CHECK(eval_fails("x + 1", {.t = 1.0}));
    CHECK(eval_fails("exp(1000)", {}));
    CHECK(eval_fails("(-8)^0.5", {}));
    CHECK(ev("sqrt(x)", {.x = 4.0}) == 2.0);
}

TEST_CASE("variable usage") {
    const Expr e = Expr::parse("0.5 * x + t");
    CHECK(e.uses_x());
    CHECK(e.uses_t());
    CHECK_FALSE(e.uses_s());
}

TEST_CASE("canonical printing") {
    CHECK(Expr::parse("t^2+1").print() == "t ^ 2 + 1");
    CHECK(Expr::parse("(t^2)^3").print() == "(t ^ 2) ^ 3");
    CHECK(Expr::parse("2^3^2").print() == "2 ^ 3 ^ 2");
    CHECK(Expr::parse("t - (s - x)").print() == "t - (s - x)");
    CHECK(Expr::parse("(t - s) - x").print() == "t - s - x");
    CHECK(Expr::parse("-(t+1)").print() == "-(t + 1)");
    CHECK(Expr::parse("(-t)^2").print() == "(-t) ^ 2");
    CHECK(Expr::parse("-t^2").print() == "-t ^ 2");
    CHECK(Expr::parse("0.1*exp(-(t-s))").print() == "0.1 * exp(-(t - s))");
    const std::string canon = Expr::parse("1/3 + 2^-0.25*sin(x)").print();
    CHECK(Expr::parse(canon).print() == canon);
}

TEST_CASE("print/parse round trip preserves evaluation") {
    // Random expression trees built from the grammar, printed, reparsed and
    // evaluated on random bindings.
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> pick(0, 11);
    std::uniform_real_distribution<double> val(-2.0, 2.0);
    const char* leaves[] = {"t", "s", "x", "0.5", "1.25", "3"};
    std::function<std::string(int)> gen = [&](int depth) -> std::string {
        const int k = depth <= 0 ? 0 : pick(rng);
        switch (k) {
            case 0:
            case 1: return leaves[pick(rng) % 6];
            case 2: return "(" + gen(depth - 1) + ")+" + gen(depth - 1);
            case 3: return gen(depth - 1) + "-(" + gen(depth - 1) + ")";
            case 4: return gen(depth - 1) + "*" + gen(depth - 1);
            case 5: return "(" + gen(depth - 1) + ")/(2+" + "abs(" + gen(depth - 1) + "))";
            case 6: return "-" + gen(depth - 1);
            case 7: return "abs(" + gen(depth - 1) + ")^0.5";
            case 8: return "sin(" + gen(depth - 1) + ")";
            case 9: return "cos(" + gen(depth - 1) + ")";
            case 10: return "exp(-abs(" + gen(depth - 1) + "))";
            default: return "sqrt(1+" + gen(depth - 1) + "^2)";
        }
    };
    int compared = 0;
    for (int i = 0; i < 60; ++i) {
        const std::string text = gen(4);
        const Expr a = Expr::parse(text);
        const Expr b = Expr::parse(a.print());
        CHECK(b.print() == a.print());
        for (int k = 0; k < 100; ++k) {
            const Bindings bind{val(rng), val(rng), val(rng)};
            double va = 0.0, vb = 0.0;
            bool fa = false, fb = false;
            try { va = a.eval(bind); } catch (const Error&) { fa = true; }
            try { vb = b.eval(bind); } catch (const Error&) { fb = true; }
            CHECK(fa == fb);
            if (!fa && !fb) {
                CHECK(va == vb);
                ++compared;
            }
        }
    }
    CHECK(compared > 3000);
}
