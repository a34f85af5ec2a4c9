#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "scmbench/common.hpp"

namespace scmbench {

// Arithmetic expression over the symbols N (node count) and V (variable
// cardinality). Operators: + - * /. Functions: log (natural), sqrt, floor,
// ceil, min, max. Evaluation is pure.
class SymbolicExpr {
public:
    SymbolicExpr() = default;

    static SymbolicExpr parse(std::string_view text);

    double eval(double n, double v = 0.0) const;

    // Floor of eval(); rejects negative results. Used wherever an integer is
    // required (e.g. noise region counts).
    long eval_int(double n, double v = 0.0) const;

    bool uses_v() const;
    bool empty() const { return nodes_.empty(); }
    const std::string& text() const { return text_; }

    // Structural identity of the parsed trees (not string equality).
    bool same_structure(const SymbolicExpr& other) const;

private:
    enum class Op : uint8_t { Num, VarN, VarV, Add, Sub, Mul, Div, Neg, Log, Sqrt, Floor, Ceil, Min, Max };
    struct Node {
        Op op;
        double value = 0.0;
        int lhs = -1;
        int rhs = -1;
    };

    double eval_node(int idx, double n, double v) const;

    std::string text_;
    std::vector<Node> nodes_;  // nodes_.back() is the root
    friend class ExprParser;
};

}  // namespace scmbench
