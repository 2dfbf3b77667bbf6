#include "lmce/expr.hpp"

#include <cctype>
#include <cmath>
#include <functional>

namespace lmce {

struct Expression::Node {
    enum class Kind { Number, Var, Radius, Unary, Binary, Call1, Call2 } kind;
    double number = 0.0;
    int var = 0;
    char op = 0;
    double (*fn1)(double) = nullptr;
    double (*fn2)(double, double) = nullptr;
    std::shared_ptr<const Node> a, b;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

struct Parser {
    const std::string& s;
    std::size_t pos = 0;

    explicit Parser(const std::string& text) : s(text) {}

    void skip() { while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos; }

    bool eat(char c) {
        skip();
        if (pos < s.size() && s[pos] == c) { ++pos; return true; }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) {
        throw ConfigError("expr: " + msg + " at position " + std::to_string(pos) + " in '" + s + "'");
    }

    NodePtr make(Node n) { return std::make_shared<Node>(std::move(n)); }

    NodePtr parse_expr() {
        NodePtr left = parse_term();
        for (;;) {
            skip();
            if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
                const char op = s[pos++];
                NodePtr right = parse_term();
                Node n; n.kind = Node::Kind::Binary; n.op = op; n.a = left; n.b = right;
                left = make(std::move(n));
            } else break;
        }
        return left;
    }

    NodePtr parse_term() {
        NodePtr left = parse_power();
        for (;;) {
            skip();
            if (pos < s.size() && (s[pos] == '*' || s[pos] == '/')) {
                const char op = s[pos++];
                NodePtr right = parse_power();
                Node n; n.kind = Node::Kind::Binary; n.op = op; n.a = left; n.b = right;
                left = make(std::move(n));
            } else break;
        }
        return left;
    }

    NodePtr parse_power() {
        NodePtr base = parse_unary();
        skip();
        if (pos < s.size() && s[pos] == '^') {
            ++pos;
            NodePtr exp = parse_power();  // right associative
            Node n; n.kind = Node::Kind::Binary; n.op = '^'; n.a = base; n.b = exp;
            return make(std::move(n));
        }
        return base;
    }

    NodePtr parse_unary() {
        skip();
        if (pos < s.size() && s[pos] == '-') {
            ++pos;
            NodePtr inner = parse_unary();
            Node n; n.kind = Node::Kind::Unary; n.op = '-'; n.a = inner;
            return make(std::move(n));
        }
        if (pos < s.size() && s[pos] == '+') { ++pos; return parse_unary(); }
        return parse_primary();
    }

    NodePtr parse_primary() {
        skip();
        if (pos >= s.size()) fail("unexpected end");
        const char c = s[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            const double v = std::stod(s.substr(pos), &used);
            pos += used;
            Node n; n.kind = Node::Kind::Number; n.number = v;
            return make(std::move(n));
        }
        if (c == '(') {
            ++pos;
            NodePtr inner = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos;
            while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
            const std::string name = s.substr(start, pos - start);
            skip();
            if (pos < s.size() && s[pos] == '(') return parse_call(name);
            return make_name(name);
        }
        fail("unexpected character");
    }

    NodePtr make_name(const std::string& name) {
        Node n;
        if (name == "pi") { n.kind = Node::Kind::Number; n.number = 3.14159265358979323846; return make(std::move(n)); }
        if (name == "e") { n.kind = Node::Kind::Number; n.number = 2.71828182845904523536; return make(std::move(n)); }
        if (name == "r") { n.kind = Node::Kind::Radius; return make(std::move(n)); }
        if (name == "x") { n.kind = Node::Kind::Var; n.var = 0; return make(std::move(n)); }
        if (name == "y") { n.kind = Node::Kind::Var; n.var = 1; return make(std::move(n)); }
        if (name == "z") { n.kind = Node::Kind::Var; n.var = 2; return make(std::move(n)); }
        if (name.size() >= 2 && name[0] == 'x' && std::isdigit(static_cast<unsigned char>(name[1]))) {
            n.kind = Node::Kind::Var;
            n.var = std::stoi(name.substr(1)) - 1;
            if (n.var < 0 || n.var >= 8) fail("variable index out of range");
            return make(std::move(n));
        }
        fail("unknown identifier '" + name + "'");
    }

    NodePtr parse_call(const std::string& name) {
        if (!eat('(')) fail("expected '('");
        NodePtr a = parse_expr();
        NodePtr b;
        if (eat(',')) b = parse_expr();
        if (!eat(')')) fail("expected ')'");
        Node n;
        if (b) {
            n.kind = Node::Kind::Call2;
            if (name == "min") n.fn2 = [](double u, double v) { return std::fmin(u, v); };
            else if (name == "max") n.fn2 = [](double u, double v) { return std::fmax(u, v); };
            else if (name == "pow") n.fn2 = [](double u, double v) { return std::pow(u, v); };
            else if (name == "atan2") n.fn2 = [](double u, double v) { return std::atan2(u, v); };
            else fail("unknown two-argument function '" + name + "'");
            n.a = a; n.b = b;
            return make(std::move(n));
        }
        n.kind = Node::Kind::Call1;
        if (name == "sin") n.fn1 = [](double u) { return std::sin(u); };
        else if (name == "cos") n.fn1 = [](double u) { return std::cos(u); };
        else if (name == "tan") n.fn1 = [](double u) { return std::tan(u); };
        else if (name == "atan" || name == "arctan") n.fn1 = [](double u) { return std::atan(u); };
        else if (name == "asin") n.fn1 = [](double u) { return std::asin(u); };
        else if (name == "acos") n.fn1 = [](double u) { return std::acos(u); };
        else if (name == "exp") n.fn1 = [](double u) { return std::exp(u); };
        else if (name == "log") n.fn1 = [](double u) { return std::log(u); };
        else if (name == "sqrt") n.fn1 = [](double u) { return std::sqrt(u); };
        else if (name == "abs") n.fn1 = [](double u) { return std::fabs(u); };
        else if (name == "cot") n.fn1 = [](double u) { return 1.0 / std::tan(u); };
        else fail("unknown function '" + name + "'");
        n.a = a;
        return make(std::move(n));
    }
};

double eval_node(const Node& n, const double* x, int dim) {
    switch (n.kind) {
        case Node::Kind::Number: return n.number;
        case Node::Kind::Var:
            if (n.var >= dim) throw ConfigError("expr: variable x" + std::to_string(n.var + 1) + " beyond dimension");
            return x[n.var];
        case Node::Kind::Radius: {
            double s = 0.0;
            for (int a = 0; a < dim; ++a) s += x[a] * x[a];
            return std::sqrt(s);
        }
        case Node::Kind::Unary: return -eval_node(*n.a, x, dim);
        case Node::Kind::Binary: {
            const double a = eval_node(*n.a, x, dim);
            const double b = eval_node(*n.b, x, dim);
            switch (n.op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/': return a / b;
                case '^': return std::pow(a, b);
            }
            return 0.0;
        }
        case Node::Kind::Call1: return n.fn1(eval_node(*n.a, x, dim));
        case Node::Kind::Call2: return n.fn2(eval_node(*n.a, x, dim), eval_node(*n.b, x, dim));
    }
    return 0.0;
}

} // namespace

Expression Expression::parse(const std::string& text) {
    Parser p(text);
    Expression e;
    e.root_ = p.parse_expr();
    p.skip();
    if (p.pos != text.size()) p.fail("trailing input");
    e.text_ = text;
    return e;
}

double Expression::eval(const double* x, int n) const {
    if (!root_) throw ConfigError("expr: empty expression");
    return eval_node(*root_, x, n);
}

} // namespace lmce
