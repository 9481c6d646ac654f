#pragma once

#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include "cubal/errors.hpp"

namespace cubal {

/// Arithmetic expressions in one variable t, parsed once and evaluated many
/// times. Supported: numeric literals, t, pi, + - * /, unary minus, sin,
/// cos, exp, pow(x, y), parentheses.
class Expr {
  public:
    static Expr parse(const std::string& text) {
        Parser p{text, 0, {}};
        const int root = p.expression();
        p.skip_ws();
        if (p.pos != text.size()) p.fail("unexpected trailing input");
        Expr e;
        e.nodes_ = std::move(p.nodes);
        e.root_ = root;
        e.text_ = text;
        return e;
    }

    double eval(double t) const { return eval_node(root_, t); }

    const std::string& text() const { return text_; }

  private:
    enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Sin, Cos, Exp, Pow };

    struct Node {
        Op op = Op::Const;
        double value = 0.0;
        int a = -1;
        int b = -1;
    };

    struct Parser {
        const std::string& text;
        std::size_t pos;
        std::vector<Node> nodes;

        [[noreturn]] void fail(const std::string& what) const {
            throw ValidationError("expression error at position " + std::to_string(pos) + " in '" +
                                  text + "': " + what);
        }

        void skip_ws() {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        }

        bool eat(char c) {
            skip_ws();
            if (pos < text.size() && text[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        int add(Node n) {
            nodes.push_back(n);
            return static_cast<int>(nodes.size()) - 1;
        }

        int expression() {
            int lhs = term();
            for (;;) {
                if (eat('+'))
                    lhs = add({Op::Add, 0.0, lhs, term()});
                else if (eat('-'))
                    lhs = add({Op::Sub, 0.0, lhs, term()});
                else
                    return lhs;
            }
        }

        int term() {
            int lhs = unary();
            for (;;) {
                if (eat('*'))
                    lhs = add({Op::Mul, 0.0, lhs, unary()});
                else if (eat('/'))
                    lhs = add({Op::Div, 0.0, lhs, unary()});
                else
                    return lhs;
            }
        }

        int unary() {
            if (eat('-')) return add({Op::Neg, 0.0, unary(), -1});
            return primary();
        }

        int primary() {
            skip_ws();
            if (pos >= text.size()) fail("expected a value");
            const char c = text[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
            if (std::isalpha(static_cast<unsigned char>(c))) return name();
            if (eat('(')) {
                const int inner = expression();
                if (!eat(')')) fail("expected ')'");
                return inner;
            }
            fail(std::string("unexpected character '") + c + "'");
        }

        int number() {
            const std::size_t start = pos;
            while (pos < text.size() &&
                   (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.' ||
                    text[pos] == 'e' || text[pos] == 'E' ||
                    ((text[pos] == '+' || text[pos] == '-') && pos > start &&
                     (text[pos - 1] == 'e' || text[pos - 1] == 'E'))))
                ++pos;
            try {
                std::size_t used = 0;
                const double v = std::stod(text.substr(start, pos - start), &used);
                if (used != pos - start) throw std::invalid_argument("partial");
                return add({Op::Const, v, -1, -1});
            } catch (const std::exception&) {
                pos = start;
                fail("malformed number");
            }
        }

        int name() {
            const std::size_t start = pos;
            while (pos < text.size() && std::isalpha(static_cast<unsigned char>(text[pos]))) ++pos;
            const std::string id = text.substr(start, pos - start);
            if (id == "t") return add({Op::Var, 0.0, -1, -1});
            if (id == "pi") return add({Op::Const, std::acos(-1.0), -1, -1});
            Op op;
            if (id == "sin")
                op = Op::Sin;
            else if (id == "cos")
                op = Op::Cos;
            else if (id == "exp")
                op = Op::Exp;
            else if (id == "pow")
                op = Op::Pow;
            else {
                pos = start;
                fail("unknown name '" + id + "'");
            }
            if (!eat('(')) fail("expected '(' after '" + id + "'");
            const int a = expression();
            int b = -1;
            if (op == Op::Pow) {
                if (!eat(',')) fail("pow takes two arguments");
                b = expression();
            }
            if (!eat(')')) fail("expected ')'");
            return add({op, 0.0, a, b});
        }
    };

    double eval_node(int idx, double t) const {
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        switch (n.op) {
            case Op::Const: return n.value;
            case Op::Var: return t;
            case Op::Add: return eval_node(n.a, t) + eval_node(n.b, t);
            case Op::Sub: return eval_node(n.a, t) - eval_node(n.b, t);
            case Op::Mul: return eval_node(n.a, t) * eval_node(n.b, t);
            case Op::Div: return eval_node(n.a, t) / eval_node(n.b, t);
            case Op::Neg: return -eval_node(n.a, t);
            case Op::Sin: return std::sin(eval_node(n.a, t));
            case Op::Cos: return std::cos(eval_node(n.a, t));
            case Op::Exp: return std::exp(eval_node(n.a, t));
            case Op::Pow: return std::pow(eval_node(n.a, t), eval_node(n.b, t));
        }
        throw Error("unreachable");
    }

    std::vector<Node> nodes_;
    int root_ = -1;
    std::string text_;
};

} // namespace cubal
