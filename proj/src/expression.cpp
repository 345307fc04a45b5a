#include "stmc/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace stmc {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  Expression run() {
    Expression e;
    e.src_ = text_;
    expr_ = &e;
    skip_ws();
    e.root_ = parse_expr();
    skip_ws();
    if (pos_ != text_.size())
      throw ExprError("unexpected trailing input", pos_);
    return e;
  }

 private:
  using Op = Expression::Op;

  int add(Op op, double value, int a, int b, std::size_t off) {
    expr_->nodes_.push_back({op, value, a, b, off});
    return static_cast<int>(expr_->nodes_.size()) - 1;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  // expr := term (('+'|'-') term)*
  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size()) return lhs;
      char c = text_[pos_];
      if (c != '+' && c != '-') return lhs;
      std::size_t off = pos_++;
      int rhs = parse_term();
      lhs = add(c == '+' ? Op::Add : Op::Sub, 0.0, lhs, rhs, off);
    }
  }

  // term := unary (('*'|'/') unary)*
  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size()) return lhs;
      char c = text_[pos_];
      if (c != '*' && c != '/') return lhs;
      std::size_t off = pos_++;
      int rhs = parse_unary();
      lhs = add(c == '*' ? Op::Mul : Op::Div, 0.0, lhs, rhs, off);
    }
  }

  // unary := '-' unary | power
  int parse_unary() {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '-') {
      std::size_t off = pos_++;
      int a = parse_unary();
      return add(Op::Neg, 0.0, a, -1, off);
    }
    return parse_power();
  }

  // power := primary ('^' unary)?   -- right-associative, exponent may carry
  // a sign ("2^-3"); the base does not ("-x^2" is -(x^2)).
  int parse_power() {
    int base = parse_primary();
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '^') {
      std::size_t off = pos_++;
      int exp = parse_unary();
      return add(Op::Pow, 0.0, base, exp, off);
    }
    return base;
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ExprError("unexpected end of input", pos_);
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      int inner = parse_expr();
      if (!peek(')')) throw ExprError("expected ')'", pos_);
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    throw ExprError(std::string("unexpected character '") + c + "'", pos_);
  }

  int parse_number() {
    std::size_t off = pos_;
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) throw ExprError("malformed number", pos_);
    pos_ += static_cast<std::size_t>(end - begin);
    return add(Op::Const, v, -1, -1, off);
  }

  int parse_ident() {
    std::size_t off = pos_;
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string name = text_.substr(start, pos_ - start);
    if (name == "x") return add(Op::VarX, 0.0, -1, -1, off);
    if (name == "y") return add(Op::VarY, 0.0, -1, -1, off);
    if (name == "t") return add(Op::VarT, 0.0, -1, -1, off);
    if (name == "pi") return add(Op::Const, kPi, -1, -1, off);

    Op fn;
    if (name == "sin") fn = Op::Sin;
    else if (name == "cos") fn = Op::Cos;
    else if (name == "exp") fn = Op::Exp;
    else if (name == "sqrt") fn = Op::Sqrt;
    else if (name == "abs") fn = Op::Abs;
    else throw ExprError("unknown identifier '" + name + "'", off);

    if (!peek('(')) throw ExprError("expected '(' after function name", pos_);
    ++pos_;
    int arg = parse_expr();
    if (!peek(')')) throw ExprError("expected ')'", pos_);
    ++pos_;
    return add(fn, 0.0, arg, -1, off);
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  Expression* expr_ = nullptr;
};

Expression Expression::parse(const std::string& text) { return Parser(text).run(); }

double Expression::eval_node(int idx, double x, double y, double t) const {
  const Node& n = nodes_[idx];
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::VarX: return x;
    case Op::VarY: return y;
    case Op::VarT: return t;
    case Op::Add: return eval_node(n.a, x, y, t) + eval_node(n.b, x, y, t);
    case Op::Sub: return eval_node(n.a, x, y, t) - eval_node(n.b, x, y, t);
    case Op::Mul: return eval_node(n.a, x, y, t) * eval_node(n.b, x, y, t);
    case Op::Div: {
      double den = eval_node(n.b, x, y, t);
      if (den == 0.0) throw ExprError("division by zero", n.offset);
      return eval_node(n.a, x, y, t) / den;
    }
    case Op::Pow: return std::pow(eval_node(n.a, x, y, t), eval_node(n.b, x, y, t));
    case Op::Neg: return -eval_node(n.a, x, y, t);
    case Op::Sin: return std::sin(eval_node(n.a, x, y, t));
    case Op::Cos: return std::cos(eval_node(n.a, x, y, t));
    case Op::Exp: return std::exp(eval_node(n.a, x, y, t));
    case Op::Sqrt: return std::sqrt(eval_node(n.a, x, y, t));
    case Op::Abs: return std::fabs(eval_node(n.a, x, y, t));
  }
  return 0.0; // unreachable
}

double Expression::eval(double x, double y, double t) const {
  return eval_node(root_, x, y, t);
}

void Expression::print_node(int idx, std::string& out) const {
  const Node& n = nodes_[idx];
  auto binary = [&](const char* op) {
    out += '(';
    print_node(n.a, out);
    out += op;
    print_node(n.b, out);
    out += ')';
  };
  auto fn = [&](const char* name) {
    out += name;
    out += '(';
    print_node(n.a, out);
    out += ')';
  };
  switch (n.op) {
    case Op::Const: {
      if (n.value == kPi) { out += "pi"; break; }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      break;
    }
    case Op::VarX: out += 'x'; break;
    case Op::VarY: out += 'y'; break;
    case Op::VarT: out += 't'; break;
    case Op::Add: binary("+"); break;
    case Op::Sub: binary("-"); break;
    case Op::Mul: binary("*"); break;
    case Op::Div: binary("/"); break;
    case Op::Pow: binary("^"); break;
    case Op::Neg:
      out += "(-";
      print_node(n.a, out);
      out += ')';
      break;
    case Op::Sin: fn("sin"); break;
    case Op::Cos: fn("cos"); break;
    case Op::Exp: fn("exp"); break;
    case Op::Sqrt: fn("sqrt"); break;
    case Op::Abs: fn("abs"); break;
  }
}

std::string Expression::print() const {
  std::string out;
  print_node(root_, out);
  return out;
}

bool Expression::equal_node(int i, const Expression& o, int j) const {
  const Node& a = nodes_[i];
  const Node& b = o.nodes_[j];
  if (a.op != b.op) return false;
  if (a.op == Op::Const) return a.value == b.value;
  if (a.a >= 0 && !equal_node(a.a, o, b.a)) return false;
  if (a.b >= 0 && !equal_node(a.b, o, b.b)) return false;
  return (a.a >= 0) == (b.a >= 0) && (a.b >= 0) == (b.b >= 0);
}

bool Expression::structurally_equal(const Expression& other) const {
  if (root_ < 0 || other.root_ < 0) return root_ == other.root_;
  return equal_node(root_, other, other.root_);
}

bool Expression::is_zero_literal() const {
  if (root_ < 0) return true;  // default-constructed: behaves as the zero function
  return nodes_[root_].op == Op::Const && nodes_[root_].value == 0.0;
}

} // namespace stmc
