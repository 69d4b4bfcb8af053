#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "helix/common.hpp"

namespace helix::expr {

// Value together with its first three derivatives with respect to x.
// The fields are true derivatives, not Taylor coefficients; the k!
// factors live inside the propagation rules below.
struct Jet3 {
    double v0 = 0.0;
    double v1 = 0.0;
    double v2 = 0.0;
    double v3 = 0.0;
};

inline Jet3 jet_constant(double c) { return {c, 0.0, 0.0, 0.0}; }
inline Jet3 jet_variable(double x) { return {x, 1.0, 0.0, 0.0}; }

inline Jet3 operator+(const Jet3& a, const Jet3& b) {
    return {a.v0 + b.v0, a.v1 + b.v1, a.v2 + b.v2, a.v3 + b.v3};
}

inline Jet3 operator-(const Jet3& a, const Jet3& b) {
    return {a.v0 - b.v0, a.v1 - b.v1, a.v2 - b.v2, a.v3 - b.v3};
}

inline Jet3 operator-(const Jet3& a) { return {-a.v0, -a.v1, -a.v2, -a.v3}; }

// Leibniz rule up to order 3.
inline Jet3 operator*(const Jet3& a, const Jet3& b) {
    return {a.v0 * b.v0,
            a.v1 * b.v0 + a.v0 * b.v1,
            a.v2 * b.v0 + 2.0 * a.v1 * b.v1 + a.v0 * b.v2,
            a.v3 * b.v0 + 3.0 * a.v2 * b.v1 + 3.0 * a.v1 * b.v2 + a.v0 * b.v3};
}

// Quotient w = a/b solved from w*b = a order by order.
inline Jet3 operator/(const Jet3& a, const Jet3& b) {
    if (b.v0 == 0.0) throw DomainError("division by zero");
    Jet3 w;
    w.v0 = a.v0 / b.v0;
    w.v1 = (a.v1 - w.v0 * b.v1) / b.v0;
    w.v2 = (a.v2 - w.v0 * b.v2 - 2.0 * w.v1 * b.v1) / b.v0;
    w.v3 = (a.v3 - w.v0 * b.v3 - 3.0 * w.v1 * b.v2 - 3.0 * w.v2 * b.v1) / b.v0;
    return w;
}

// Faa di Bruno through order 3: outer g given by its derivatives at f.v0.
inline Jet3 jet_chain(double g0, double g1, double g2, double g3, const Jet3& f) {
    const double f1 = f.v1, f2 = f.v2, f3 = f.v3;
    return {g0,
            g1 * f1,
            g2 * f1 * f1 + g1 * f2,
            g3 * f1 * f1 * f1 + 3.0 * g2 * f1 * f2 + g1 * f3};
}

inline Jet3 jet_sin(const Jet3& f) {
    const double s = std::sin(f.v0), c = std::cos(f.v0);
    return jet_chain(s, c, -s, -c, f);
}

inline Jet3 jet_cos(const Jet3& f) {
    const double s = std::sin(f.v0), c = std::cos(f.v0);
    return jet_chain(c, -s, -c, s, f);
}

inline Jet3 jet_exp(const Jet3& f) {
    const double e = std::exp(f.v0);
    return jet_chain(e, e, e, e, f);
}

inline Jet3 jet_log(const Jet3& f) {
    if (f.v0 <= 0.0) throw DomainError("power with non-positive base");
    const double r = 1.0 / f.v0;
    return jet_chain(std::log(f.v0), r, -r * r, 2.0 * r * r * r, f);
}

// Integer powers by repeated multiplication, valid for any base.
inline Jet3 jet_pow_int(const Jet3& a, std::int64_t n) {
    if (n < 0) return jet_constant(1.0) / jet_pow_int(a, -n);
    Jet3 acc = jet_constant(1.0);
    Jet3 base = a;
    std::int64_t k = n;
    while (k > 0) {
        if (k & 1) acc = acc * base;
        base = base * base;
        k >>= 1;
    }
    return acc;
}

// General power a^b = exp(b * ln a); requires a > 0.
inline Jet3 jet_pow(const Jet3& a, const Jet3& b) {
    return jet_exp(b * jet_log(a));
}

namespace detail {
class Parser;
}

enum class NodeKind : std::uint8_t {
    Constant,   // numeric literal or pi
    Var,        // x
    ParamAlpha,
    ParamBeta,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Pow,
    PowInt,     // right child is an integer constant; kept exact for any base
    Sin,
    Cos,
};

struct Node {
    NodeKind kind;
    double value = 0.0;        // Constant payload, or integer exponent for PowInt
    std::int32_t left = -1;
    std::int32_t right = -1;
};

// Parsed map expression. Nodes live in a flat arena; `root` is the index of
// the top node and the arena is in evaluation (post-)order-friendly form in
// the sense that children always precede their parent.
class MapExpr {
public:
    MapExpr() = default;

    const std::string& source_text() const { return source_; }
    bool uses_alpha() const { return uses_alpha_; }
    bool uses_beta() const { return uses_beta_; }

    double eval_value(double x, double alpha = 0.0, double beta = 0.0) const {
        double inline_buf[kInlineNodes];
        std::vector<double> heap_buf;
        double* buf = inline_buf;
        if (nodes_.size() > kInlineNodes) {
            heap_buf.resize(nodes_.size());
            buf = heap_buf.data();
        }
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const Node& n = nodes_[i];
            double* out = &buf[i];
            switch (n.kind) {
                case NodeKind::Constant: *out = n.value; break;
                case NodeKind::Var: *out = x; break;
                case NodeKind::ParamAlpha: *out = alpha; break;
                case NodeKind::ParamBeta: *out = beta; break;
                case NodeKind::Add: *out = buf[n.left] + buf[n.right]; break;
                case NodeKind::Sub: *out = buf[n.left] - buf[n.right]; break;
                case NodeKind::Mul: *out = buf[n.left] * buf[n.right]; break;
                case NodeKind::Div: {
                    const double den = buf[n.right];
                    if (den == 0.0) throw DomainError("division by zero");
                    *out = buf[n.left] / den;
                    break;
                }
                case NodeKind::Neg: *out = -buf[n.left]; break;
                case NodeKind::PowInt:
                    *out = pow_int_value(buf[n.left],
                                         static_cast<std::int64_t>(n.value));
                    break;
                case NodeKind::Pow: {
                    const double base = buf[n.left];
                    if (base <= 0.0) throw DomainError("power with non-positive base");
                    *out = std::exp(buf[n.right] * std::log(base));
                    break;
                }
                case NodeKind::Sin: *out = std::sin(buf[n.left]); break;
                case NodeKind::Cos: *out = std::cos(buf[n.left]); break;
            }
        }
        const double r = buf[static_cast<std::size_t>(root_)];
        if (!std::isfinite(r)) throw DomainError("non-finite evaluation result");
        return r;
    }

    Jet3 eval_jet(double x, double alpha = 0.0, double beta = 0.0) const {
        Jet3 inline_buf[kInlineNodes];
        std::vector<Jet3> heap_buf;
        Jet3* buf = inline_buf;
        if (nodes_.size() > kInlineNodes) {
            heap_buf.resize(nodes_.size());
            buf = heap_buf.data();
        }
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const Node& n = nodes_[i];
            Jet3* out = &buf[i];
            switch (n.kind) {
                case NodeKind::Constant: *out = jet_constant(n.value); break;
                case NodeKind::Var: *out = jet_variable(x); break;
                case NodeKind::ParamAlpha: *out = jet_constant(alpha); break;
                case NodeKind::ParamBeta: *out = jet_constant(beta); break;
                case NodeKind::Add: *out = buf[n.left] + buf[n.right]; break;
                case NodeKind::Sub: *out = buf[n.left] - buf[n.right]; break;
                case NodeKind::Mul: *out = buf[n.left] * buf[n.right]; break;
                case NodeKind::Div: *out = buf[n.left] / buf[n.right]; break;
                case NodeKind::Neg: *out = -buf[n.left]; break;
                case NodeKind::PowInt:
                    *out = jet_pow_int(buf[n.left],
                                       static_cast<std::int64_t>(n.value));
                    break;
                case NodeKind::Pow:
                    *out = jet_pow(buf[n.left], buf[n.right]);
                    break;
                case NodeKind::Sin: *out = jet_sin(buf[n.left]); break;
                case NodeKind::Cos: *out = jet_cos(buf[n.left]); break;
            }
        }
        const Jet3 r = buf[static_cast<std::size_t>(root_)];
        if (!std::isfinite(r.v0) || !std::isfinite(r.v1) || !std::isfinite(r.v2) ||
            !std::isfinite(r.v3)) {
            throw DomainError("non-finite jet result");
        }
        return r;
    }

    std::string serialize() const { return serialize_node(root_); }

    bool structurally_equal(const MapExpr& other) const {
        return node_equal(*this, root_, other, other.root_);
    }

private:
    friend class detail::Parser;

    static double pow_int_value(double base, std::int64_t n) {
        if (n < 0) {
            const double d = pow_int_value(base, -n);
            if (d == 0.0) throw DomainError("zero raised to a negative power");
            return 1.0 / d;
        }
        double acc = 1.0, b = base;
        std::int64_t k = n;
        while (k > 0) {
            if (k & 1) acc *= b;
            b *= b;
            k >>= 1;
        }
        return acc;
    }

    static bool node_equal(const MapExpr& a, std::int32_t ia, const MapExpr& b,
                           std::int32_t ib) {
        if ((ia < 0) != (ib < 0)) return false;
        if (ia < 0) return true;
        const Node& na = a.nodes_[static_cast<std::size_t>(ia)];
        const Node& nb = b.nodes_[static_cast<std::size_t>(ib)];
        if (na.kind != nb.kind || na.value != nb.value) return false;
        return node_equal(a, na.left, b, nb.left) && node_equal(a, na.right, b, nb.right);
    }

    // Precedence used when re-serializing: higher binds tighter.
    static int precedence(NodeKind k) {
        switch (k) {
            case NodeKind::Add:
            case NodeKind::Sub: return 1;
            case NodeKind::Mul:
            case NodeKind::Div: return 2;
            case NodeKind::Neg: return 3;
            case NodeKind::Pow:
            case NodeKind::PowInt: return 4;
            default: return 5;
        }
    }

    static std::string format_number(double v) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, res.ptr);
    }

    std::string serialize_node(std::int32_t idx) const {
        const Node& n = nodes_[static_cast<std::size_t>(idx)];
        const auto child = [&](std::int32_t c, bool strict) {
            std::string s = serialize_node(c);
            const int pc = precedence(nodes_[static_cast<std::size_t>(c)].kind);
            const int pn = precedence(n.kind);
            if (pc < pn || (strict && pc == pn)) return "(" + s + ")";
            return s;
        };
        switch (n.kind) {
            case NodeKind::Constant: return format_number(n.value);
            case NodeKind::Var: return "x";
            case NodeKind::ParamAlpha: return "alpha";
            case NodeKind::ParamBeta: return "beta";
            case NodeKind::Add: return child(n.left, false) + "+" + child(n.right, true);
            case NodeKind::Sub: return child(n.left, false) + "-" + child(n.right, true);
            case NodeKind::Mul: return child(n.left, false) + "*" + child(n.right, true);
            case NodeKind::Div: return child(n.left, false) + "/" + child(n.right, true);
            case NodeKind::Neg: return "-" + child(n.left, true);
            case NodeKind::PowInt:
                return child(n.left, true) + "^" + format_number(n.value);
            case NodeKind::Pow:
                return child(n.left, true) + "^" + child(n.right, false);
            case NodeKind::Sin: return "sin(" + serialize_node(n.left) + ")";
            case NodeKind::Cos: return "cos(" + serialize_node(n.left) + ")";
        }
        return {};
    }

    static constexpr std::size_t kInlineNodes = 64;

    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
    std::string source_;
    bool uses_alpha_ = false;
    bool uses_beta_ = false;
};

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    MapExpr run() {
        if (text_.empty()) throw ParseError("empty expression", 0);
        MapExpr e;
        e.source_ = std::string(text_);
        nodes_ = &e.nodes_;
        e.root_ = parse_expr();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError("unexpected trailing input", pos_);
        e.uses_alpha_ = uses_alpha_;
        e.uses_beta_ = uses_beta_;
        return e;
    }

private:
    std::int32_t add(Node n) {
        nodes_->push_back(n);
        return static_cast<std::int32_t>(nodes_->size() - 1);
    }

    void skip_ws() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool eat(char c) {
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

    // expr  := term (('+'|'-') term)*
    std::int32_t parse_expr() {
        std::int32_t lhs = parse_term();
        for (;;) {
            if (eat('+')) {
                std::int32_t rhs = parse_term();
                lhs = add({NodeKind::Add, 0.0, lhs, rhs});
            } else if (eat('-')) {
                std::int32_t rhs = parse_term();
                lhs = add({NodeKind::Sub, 0.0, lhs, rhs});
            } else {
                return lhs;
            }
        }
    }

    // term  := unary (('*'|'/') unary)*
    std::int32_t parse_term() {
        std::int32_t lhs = parse_unary();
        for (;;) {
            if (eat('*')) {
                std::int32_t rhs = parse_unary();
                lhs = add({NodeKind::Mul, 0.0, lhs, rhs});
            } else if (eat('/')) {
                std::int32_t rhs = parse_unary();
                lhs = add({NodeKind::Div, 0.0, lhs, rhs});
            } else {
                return lhs;
            }
        }
    }

    // unary := '-' unary | power      (so -x^2 parses as -(x^2))
    std::int32_t parse_unary() {
        if (eat('-')) {
            std::int32_t inner = parse_unary();
            return add({NodeKind::Neg, 0.0, inner, -1});
        }
        return parse_power();
    }

    // power := atom ('^' unary)?      (right associative)
    std::int32_t parse_power() {
        std::int32_t base = parse_atom();
        skip_ws();
        if (eat('^')) {
            std::int32_t exponent = parse_unary();
            // Constant integer exponents stay exact (valid for any base);
            // everything else goes through exp(b*ln a).
            const Node& en = (*nodes_)[static_cast<std::size_t>(exponent)];
            if (en.kind == NodeKind::Constant && en.value == std::floor(en.value) &&
                std::fabs(en.value) <= 64.0) {
                return add({NodeKind::PowInt, en.value, base, -1});
            }
            return add({NodeKind::Pow, 0.0, base, exponent});
        }
        return base;
    }

    std::int32_t parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            std::int32_t inner = parse_expr();
            if (!eat(')')) throw ParseError("missing ')'", pos_);
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    std::int32_t parse_number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t e = pos_ + 1;
            if (e < text_.size() && (text_[e] == '+' || text_[e] == '-')) ++e;
            if (e < text_.size() && std::isdigit(static_cast<unsigned char>(text_[e]))) {
                pos_ = e;
                while (pos_ < text_.size() &&
                       std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            }
        }
        double value = 0.0;
        const auto res =
            std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (res.ec != std::errc() || res.ptr != text_.data() + pos_)
            throw ParseError("malformed number", start);
        return add({NodeKind::Constant, value, -1, -1});
    }

    std::int32_t parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);
        if (name == "x") return add({NodeKind::Var, 0.0, -1, -1});
        if (name == "pi") return add({NodeKind::Constant, kPi, -1, -1});
        if (name == "alpha") {
            uses_alpha_ = true;
            return add({NodeKind::ParamAlpha, 0.0, -1, -1});
        }
        if (name == "beta") {
            uses_beta_ = true;
            return add({NodeKind::ParamBeta, 0.0, -1, -1});
        }
        if (name == "sin" || name == "cos") {
            if (!eat('('))
                throw ParseError("function '" + std::string(name) +
                                     "' requires parentheses",
                                 pos_);
            std::int32_t arg = parse_expr();
            if (!eat(')')) throw ParseError("missing ')'", pos_);
            return add({name == "sin" ? NodeKind::Sin : NodeKind::Cos, 0.0, arg, -1});
        }
        throw ParseError("unknown identifier '" + std::string(name) +
                             "' (expected one of x, alpha, beta, pi, sin, cos)",
                         start);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::vector<Node>* nodes_ = nullptr;
    bool uses_alpha_ = false;
    bool uses_beta_ = false;
};

}  // namespace detail

// Grammar: '^' > unary '-' > '*','/' > '+','-'; all left associative except
// '^' which associates right; sin/cos require parenthesized arguments;
// identifiers are limited to {x, alpha, beta, pi}.
inline MapExpr parse_map_expr(std::string_view text) {
    return detail::Parser(text).run();
}

}  // namespace helix::expr
