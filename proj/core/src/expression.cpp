#include "waveinv/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "waveinv/errors.hpp"

namespace waveinv {

struct Expression::Node {
    enum class Kind { constant, variable, negate, add, subtract, multiply, divide, power, call };
    Kind kind = Kind::constant;
    double value = 0.0;
    int variable = 0;  // 0 = x, 1 = y, 2 = t
    double (*function)(double) = nullptr;
    std::shared_ptr<const Node> left;
    std::shared_ptr<const Node> right;

    double eval(const double* vars) const {
        switch (kind) {
            case Kind::constant: return value;
            case Kind::variable: return vars[variable];
            case Kind::negate: return -left->eval(vars);
            case Kind::add: return left->eval(vars) + right->eval(vars);
            case Kind::subtract: return left->eval(vars) - right->eval(vars);
            case Kind::multiply: return left->eval(vars) * right->eval(vars);
            case Kind::divide: return left->eval(vars) / right->eval(vars);
            case Kind::power: return std::pow(left->eval(vars), right->eval(vars));
            case Kind::call: return function(left->eval(vars));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, NodePtr left = nullptr, NodePtr right = nullptr) {
    auto node = std::make_shared<Expression::Node>();
    node->kind = kind;
    node->left = std::move(left);
    node->right = std::move(right);
    return node;
}

double call_sin(double v) { return std::sin(v); }
double call_cos(double v) { return std::cos(v); }
double call_tan(double v) { return std::tan(v); }
double call_exp(double v) { return std::exp(v); }
double call_log(double v) { return std::log(v); }
double call_sqrt(double v) { return std::sqrt(v); }
double call_abs(double v) { return std::abs(v); }

struct Builtin {
    const char* name;
    double (*function)(double);
};

constexpr Builtin kFunctions[] = {
    {"sin", call_sin}, {"cos", call_cos},   {"tan", call_tan}, {"exp", call_exp},
    {"log", call_log}, {"sqrt", call_sqrt}, {"abs", call_abs},
};

// expr   := term (('+' | '-') term)*
// term   := unary (('*' | '/') unary)*
// unary  := '-' unary | '+' unary | power
// power  := atom ('^' unary)?
class Parser {
public:
    Parser(const std::string& text, const std::string& variables) : text_(text), variables_(variables) {}

    NodePtr parse() {
        NodePtr root = expression();
        skip_space();
        if (pos_ != text_.size()) {
            fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        }
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw InvalidArgument("expression '" + text_ + "': " + what + " at column " + std::to_string(pos_ + 1));
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expression() {
        NodePtr left = term();
        while (true) {
            if (accept('+')) {
                left = make(Kind::add, left, term());
            } else if (accept('-')) {
                left = make(Kind::subtract, left, term());
            } else {
                return left;
            }
        }
    }

    NodePtr term() {
        NodePtr left = unary();
        while (true) {
            if (accept('*')) {
                left = make(Kind::multiply, left, unary());
            } else if (accept('/')) {
                left = make(Kind::divide, left, unary());
            } else {
                return left;
            }
        }
    }

    NodePtr unary() {
        if (accept('-')) {
            return make(Kind::negate, unary());
        }
        if (accept('+')) {
            return unary();
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = atom();
        if (accept('^')) {
            return make(Kind::power, base, unary());
        }
        return base;
    }

    NodePtr atom() {
        skip_space();
        if (pos_ >= text_.size()) {
            fail("unexpected end of input");
        }
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = expression();
            if (!accept(')')) {
                fail("expected ')'");
            }
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = text_.c_str() + pos_;
            char* end = nullptr;
            const double value = std::strtod(begin, &end);
            if (end == begin) {
                fail("malformed number");
            }
            pos_ += static_cast<std::size_t>(end - begin);
            auto node = std::make_shared<Expression::Node>();
            node->value = value;
            return node;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            }
            const std::string name = text_.substr(start, pos_ - start);
            if (name == "pi") {
                auto node = std::make_shared<Expression::Node>();
                node->value = std::numbers::pi;
                return node;
            }
            if (name.size() == 1 && std::string("xyt").find(name[0]) != std::string::npos) {
                if (variables_.find(name[0]) == std::string::npos) {
                    pos_ = start;
                    fail("variable '" + name + "' is not allowed here");
                }
                auto node = std::make_shared<Expression::Node>();
                node->kind = Kind::variable;
                node->variable = name[0] == 'x' ? 0 : (name[0] == 'y' ? 1 : 2);
                return node;
            }
            for (const Builtin& builtin : kFunctions) {
                if (name == builtin.name) {
                    if (!accept('(')) {
                        fail("expected '(' after " + name);
                    }
                    auto node = std::make_shared<Expression::Node>();
                    node->kind = Kind::call;
                    node->function = builtin.function;
                    node->left = expression();
                    if (!accept(')')) {
                        fail("expected ')'");
                    }
                    return node;
                }
            }
            pos_ = start;
            fail("unknown identifier '" + name + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    const std::string& text_;
    const std::string& variables_;
    std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, const std::string& variables) {
    Expression expression;
    expression.text_ = text;
    expression.root_ = Parser(text, variables).parse();
    return expression;
}

double Expression::operator()(double x, double y, double t) const {
    const double vars[3] = {x, y, t};
    return root_->eval(vars);
}

}  // namespace waveinv
