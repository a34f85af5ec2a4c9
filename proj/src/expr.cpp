#include "scmbench/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace scmbench {

class ExprParser {
public:
    ExprParser(std::string_view text, SymbolicExpr& out) : text_(text), out_(out) {}

    void run() {
        int root = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        if (root < 0) fail("empty expression");
    }

private:
    using Op = SymbolicExpr::Op;

    int add(Op op, double value = 0.0, int lhs = -1, int rhs = -1) {
        out_.nodes_.push_back({op, value, lhs, rhs});
        return static_cast<int>(out_.nodes_.size()) - 1;
    }

    [[noreturn]] void fail(const std::string& what) {
        throw SyntaxError("expression \"" + std::string(text_) + "\": " + what + " at position " +
                          std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    int parse_sum() {
        int lhs = parse_term();
        for (;;) {
            if (consume('+'))
                lhs = add(Op::Add, 0.0, lhs, parse_term());
            else if (consume('-'))
                lhs = add(Op::Sub, 0.0, lhs, parse_term());
            else
                return lhs;
        }
    }

    int parse_term() {
        int lhs = parse_unary();
        for (;;) {
            if (consume('*'))
                lhs = add(Op::Mul, 0.0, lhs, parse_unary());
            else if (consume('/'))
                lhs = add(Op::Div, 0.0, lhs, parse_unary());
            else
                return lhs;
        }
    }

    int parse_unary() {
        if (consume('-')) return add(Op::Neg, 0.0, parse_unary());
        return parse_primary();
    }

    int parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("expected operand");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            int e = parse_sum();
            if (!consume(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        fail("unexpected character");
    }

    int parse_number() {
        const char* begin = text_.data() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos_ += static_cast<size_t>(end - begin);
        return add(Op::Num, v);
    }

    int parse_ident() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name(text_.substr(start, pos_ - start));
        if (name == "N") return add(Op::VarN);
        if (name == "V") return add(Op::VarV);

        Op op;
        int arity = 1;
        if (name == "log")
            op = Op::Log;
        else if (name == "sqrt")
            op = Op::Sqrt;
        else if (name == "floor")
            op = Op::Floor;
        else if (name == "ceil")
            op = Op::Ceil;
        else if (name == "min") {
            op = Op::Min;
            arity = 2;
        } else if (name == "max") {
            op = Op::Max;
            arity = 2;
        } else {
            fail("unknown symbol '" + name + "'");
        }
        if (!consume('(')) fail("expected '(' after '" + name + "'");
        int a = parse_sum();
        int b = -1;
        if (arity == 2) {
            if (!consume(',')) fail("expected ',' in '" + name + "'");
            b = parse_sum();
        }
        if (!consume(')')) fail("expected ')'");
        return add(op, 0.0, a, b);
    }

    std::string_view text_;
    SymbolicExpr& out_;
    size_t pos_ = 0;
};

SymbolicExpr SymbolicExpr::parse(std::string_view text) {
    SymbolicExpr e;
    e.text_ = std::string(text);
    ExprParser(text, e).run();
    return e;
}

double SymbolicExpr::eval(double n, double v) const {
    if (nodes_.empty()) throw DomainError("eval of empty expression");
    double r = eval_node(static_cast<int>(nodes_.size()) - 1, n, v);
    if (!std::isfinite(r))
        throw DomainError("expression \"" + text_ + "\" is not finite at N=" + std::to_string(n) +
                          ", V=" + std::to_string(v));
    return r;
}

double SymbolicExpr::eval_node(int idx, double n, double v) const {
    const Node& nd = nodes_[static_cast<size_t>(idx)];
    switch (nd.op) {
        case Op::Num: return nd.value;
        case Op::VarN: return n;
        case Op::VarV: return v;
        case Op::Add: return eval_node(nd.lhs, n, v) + eval_node(nd.rhs, n, v);
        case Op::Sub: return eval_node(nd.lhs, n, v) - eval_node(nd.rhs, n, v);
        case Op::Mul: return eval_node(nd.lhs, n, v) * eval_node(nd.rhs, n, v);
        case Op::Div: {
            double d = eval_node(nd.rhs, n, v);
            if (d == 0.0) throw DomainError("division by zero in \"" + text_ + "\"");
            return eval_node(nd.lhs, n, v) / d;
        }
        case Op::Neg: return -eval_node(nd.lhs, n, v);
        case Op::Log: {
            double a = eval_node(nd.lhs, n, v);
            if (a <= 0.0) throw DomainError("log of non-positive value in \"" + text_ + "\"");
            return std::log(a);
        }
        case Op::Sqrt: {
            double a = eval_node(nd.lhs, n, v);
            if (a < 0.0) throw DomainError("sqrt of negative value in \"" + text_ + "\"");
            return std::sqrt(a);
        }
        case Op::Floor: return std::floor(eval_node(nd.lhs, n, v));
        case Op::Ceil: return std::ceil(eval_node(nd.lhs, n, v));
        case Op::Min: return std::min(eval_node(nd.lhs, n, v), eval_node(nd.rhs, n, v));
        case Op::Max: return std::max(eval_node(nd.lhs, n, v), eval_node(nd.rhs, n, v));
    }
    throw DomainError("corrupt expression node");
}

long SymbolicExpr::eval_int(double n, double v) const {
    double r = std::floor(eval(n, v));
    if (r < 0.0)
        throw DomainError("expression \"" + text_ + "\" is negative in an integer context");
    return static_cast<long>(r);
}

bool SymbolicExpr::uses_v() const {
    for (const auto& nd : nodes_)
        if (nd.op == Op::VarV) return true;
    return false;
}

bool SymbolicExpr::same_structure(const SymbolicExpr& other) const {
    if (nodes_.size() != other.nodes_.size()) return false;
    for (size_t i = 0; i < nodes_.size(); ++i) {
        const Node& a = nodes_[i];
        const Node& b = other.nodes_[i];
        if (a.op != b.op || a.value != b.value || a.lhs != b.lhs || a.rhs != b.rhs) return false;
    }
    return true;
}

}  // namespace scmbench
