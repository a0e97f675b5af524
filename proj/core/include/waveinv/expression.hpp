#pragma once

#include <memory>
#include <string>
#include <vector>

namespace waveinv {

/// Small arithmetic expression language for user-supplied sources and
/// temporal profiles.
///
/// Grammar: numbers, the variables x, y, t, the constant pi, the binary
/// operators + - * / ^ (power is right-associative and binds tighter than
/// unary minus), parentheses, and the functions sin, cos, tan, exp, log,
/// sqrt, abs. Parsing errors throw InvalidArgument with the offending column.
class Expression {
public:
    /// `variables` restricts which of x, y, t may appear.
    static Expression parse(const std::string& text, const std::string& variables = "xyt");

    double operator()(double x, double y = 0.0, double t = 0.0) const;
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
};

}  // namespace waveinv
