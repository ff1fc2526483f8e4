#pragma once

// Scalar expressions over t, s, x used to define g, K, phi and test data in
// config files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?          (right-associative)
//   primary := number | t | s | x | func '(' expr ')' | '(' expr ')'
//   func    := exp | log | sin | cos | sqrt | abs

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "psivolterra/error.hpp"

namespace psivolterra {

/// Syntax error with the byte offset where it was detected.
class ParseError : public Error {
public:
    ParseError(std::size_t position, const std::string& what);
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

struct Bindings {
    std::optional<double> t = std::nullopt;
    std::optional<double> s = std::nullopt;
    std::optional<double> x = std::nullopt;
};

class Expr {
public:
    struct Node;

    /// Throws ParseError.
    static Expr parse(std::string_view text);

    /// Throws Error(Eval) on an unbound variable, division by zero, log of a
    /// nonpositive value, sqrt of a negative value or any non-finite result.
    double eval(const Bindings& b) const;
    double operator()(const Bindings& b) const { return eval(b); }

    /// Canonical text: minimal parentheses, shortest round-trip literals,
    /// single spaces around binary operators.
    std::string print() const;

    bool uses_t() const noexcept;
    bool uses_s() const noexcept;
    bool uses_x() const noexcept;

private:
    explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
    std::shared_ptr<const Node> root_;
};

}  // namespace psivolterra
