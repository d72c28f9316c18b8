#pragma once

// Scalar expressions in the chart coordinates, used for coefficient fields
// (metric entries, drift covector, log-density). Grammar:
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | variable | func '(' expr ')' | '(' expr ')'
//   variable:= x | y | z | x1 | x2 | x3
//   func    := exp | log | sqrt | sin | cos
//
// Evaluation is templated on the scalar type so coefficient fields can be
// differentiated with jets.

#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace finsler {

class ExpressionError : public std::runtime_error {
 public:
  ExpressionError(const std::string& what, std::size_t column)
      : std::runtime_error(what + " at column " + std::to_string(column + 1)),
        column_(column) {}
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

class Expression {
 public:
  enum class Kind { kConst, kVar, kAdd, kSub, kMul, kDiv, kPow, kNeg, kExp, kLog, kSqrt, kSin, kCos };

  Expression() : Expression(0.0) {}
  Expression(double c) : node_(std::make_shared<Node>(Node{Kind::kConst, c, 0, nullptr, nullptr})) {}  // NOLINT

  static Expression parse(const std::string& text) {
    Parser p{text, 0};
    Expression e = p.expr();
    p.skip();
    if (p.pos != text.size()) throw ExpressionError("unexpected '" + std::string(1, text[p.pos]) + "'", p.pos);
    return e.folded();
  }

  static Expression variable(int index) {
    return Expression(std::make_shared<Node>(Node{Kind::kVar, 0.0, index, nullptr, nullptr}));
  }

  /// Highest variable index referenced plus one.
  int arity() const { return arity(node_.get()); }
  bool is_constant() const { return node_->kind == Kind::kConst; }
  double constant_value() const { return node_->value; }

  template <class T>
  T eval(std::span<const T> x) const {
    return eval_node<T>(*node_, x);
  }
  double operator()(std::span<const double> x) const { return eval<double>(x); }

  /// Canonical text form; parse(to_string()) reproduces the same tree.
  std::string to_string() const {
    std::ostringstream os;
    print(os, *node_);
    return os.str();
  }

  friend bool operator==(const Expression& a, const Expression& b) { return a.to_string() == b.to_string(); }

 private:
  struct Node {
    Kind kind;
    double value;
    int var;
    std::shared_ptr<const Node> a, b;
  };
  explicit Expression(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static Expression make(Kind k, const Expression& a, const Expression& b = Expression()) {
    return Expression(std::make_shared<Node>(Node{k, 0.0, 0, a.node_, b.node_}));
  }

  // Constant folding keeps "is this coefficient constant?" a structural query.
  Expression folded() const { return Expression(fold(node_)); }
  static std::shared_ptr<const Node> fold(const std::shared_ptr<const Node>& n) {
    if (!n || n->kind == Kind::kConst || n->kind == Kind::kVar) return n;
    auto a = fold(n->a);
    auto b = n->b ? fold(n->b) : nullptr;
    auto out = std::make_shared<Node>(Node{n->kind, 0.0, 0, a, b});
    if (a->kind == Kind::kConst && (!b || b->kind == Kind::kConst)) {
      const double x[1] = {0.0};
      out->value = eval_node<double>(*out, std::span<const double>(x, 0));
      out->kind = Kind::kConst;
      out->a = out->b = nullptr;
    }
    return out;
  }

  static int arity(const Node* n) {
    if (!n) return 0;
    if (n->kind == Kind::kVar) return n->var + 1;
    return std::max(arity(n->a.get()), arity(n->b.get()));
  }

  template <class T>
  static T eval_node(const Node& n, std::span<const T> x) {
    using std::cos;
    using std::exp;
    using std::log;
    using std::pow;
    using std::sin;
    using std::sqrt;
    switch (n.kind) {
      case Kind::kConst: return T(n.value);
      case Kind::kVar:
        if (static_cast<std::size_t>(n.var) >= x.size()) throw std::out_of_range("expression variable out of range");
        return x[n.var];
      case Kind::kAdd: return eval_node<T>(*n.a, x) + eval_node<T>(*n.b, x);
      case Kind::kSub: return eval_node<T>(*n.a, x) - eval_node<T>(*n.b, x);
      case Kind::kMul: return eval_node<T>(*n.a, x) * eval_node<T>(*n.b, x);
      case Kind::kDiv: return eval_node<T>(*n.a, x) / eval_node<T>(*n.b, x);
      case Kind::kPow: {
        // Exponents must be constant: a^b with variable b is outside the grammar's intent.
        if (n.b->kind != Kind::kConst) throw std::domain_error("non-constant exponent");
        const double p = n.b->value;
        const T base = eval_node<T>(*n.a, x);
        if (p == 2.0) return base * base;
        if (p == 1.0) return base;
        return pow(base, p);
      }
      case Kind::kNeg: return -eval_node<T>(*n.a, x);
      case Kind::kExp: return exp(eval_node<T>(*n.a, x));
      case Kind::kLog: return log(eval_node<T>(*n.a, x));
      case Kind::kSqrt: return sqrt(eval_node<T>(*n.a, x));
      case Kind::kSin: return sin(eval_node<T>(*n.a, x));
      case Kind::kCos: return cos(eval_node<T>(*n.a, x));
    }
    return T(0.0);
  }

  static void print(std::ostream& os, const Node& n) {
    auto bin = [&](const char* op) {
      os << '(';
      print(os, *n.a);
      os << ' ' << op << ' ';
      print(os, *n.b);
      os << ')';
    };
    auto fn = [&](const char* name) {
      os << name << '(';
      print(os, *n.a);
      os << ')';
    };
    switch (n.kind) {
      case Kind::kConst: {
        std::ostringstream num;
        num << std::setprecision(std::numeric_limits<double>::max_digits10) << n.value;
        if (n.value < 0) os << '(' << num.str() << ')';
        else os << num.str();
        break;
      }
      case Kind::kVar: os << (n.var == 0 ? "x" : n.var == 1 ? "y" : "z"); break;
      case Kind::kAdd: bin("+"); break;
      case Kind::kSub: bin("-"); break;
      case Kind::kMul: bin("*"); break;
      case Kind::kDiv: bin("/"); break;
      case Kind::kPow: bin("^"); break;
      case Kind::kNeg: os << "(-"; print(os, *n.a); os << ')'; break;
      case Kind::kExp: fn("exp"); break;
      case Kind::kLog: fn("log"); break;
      case Kind::kSqrt: fn("sqrt"); break;
      case Kind::kSin: fn("sin"); break;
      case Kind::kCos: fn("cos"); break;
    }
  }

  struct Parser {
    const std::string& s;
    std::size_t pos;

    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool accept(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    Expression expr() {
      Expression e = term();
      for (;;) {
        if (accept('+')) e = make(Kind::kAdd, e, term());
        else if (accept('-')) e = make(Kind::kSub, e, term());
        else return e;
      }
    }
    Expression term() {
      Expression e = unary();
      for (;;) {
        if (accept('*')) e = make(Kind::kMul, e, unary());
        else if (accept('/')) e = make(Kind::kDiv, e, unary());
        else return e;
      }
    }
    Expression unary() {
      if (accept('-')) return make(Kind::kNeg, unary());
      if (accept('+')) return unary();
      return power();
    }
    Expression power() {
      Expression base = primary();
      if (accept('^')) {
        const std::size_t at = pos;
        Expression ex = unary().folded();
        if (!ex.is_constant()) throw ExpressionError("exponent must be constant", at);
        return make(Kind::kPow, base, ex);
      }
      return base;
    }
    Expression primary() {
      skip();
      if (pos >= s.size()) throw ExpressionError("unexpected end of expression", pos);
      const char c = s[pos];
      if (c == '(') {
        ++pos;
        Expression e = expr();
        if (!accept(')')) throw ExpressionError("expected ')'", pos);
        return e;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) throw ExpressionError("bad number", pos);
        pos += static_cast<std::size_t>(end - begin);
        return Expression(v);
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
        const std::string id = s.substr(start, pos - start);
        if (id == "x" || id == "x1") return variable(0);
        if (id == "y" || id == "x2") return variable(1);
        if (id == "z" || id == "x3") return variable(2);
        Kind k;
        if (id == "exp") k = Kind::kExp;
        else if (id == "log") k = Kind::kLog;
        else if (id == "sqrt") k = Kind::kSqrt;
        else if (id == "sin") k = Kind::kSin;
        else if (id == "cos") k = Kind::kCos;
        else throw ExpressionError("unknown identifier '" + id + "'", start);
        if (!accept('(')) throw ExpressionError("expected '(' after " + id, pos);
        Expression arg = expr();
        if (!accept(')')) throw ExpressionError("expected ')'", pos);
        return make(k, arg);
      }
      throw ExpressionError("unexpected '" + std::string(1, c) + "'", pos);
    }
  };

  std::shared_ptr<const Node> node_;
};

}  // namespace finsler
