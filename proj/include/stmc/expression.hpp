#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace stmc {

// Parse or evaluation failure; offset is the byte position in the source text
// (for evaluation errors: of the offending operator).
struct ExprError : std::runtime_error {
  ExprError(const std::string& msg, std::size_t offset_)
      : std::runtime_error(msg), offset(offset_) {}
  std::size_t offset;
};

// Closed-form data functions of (x, y, t).
//
// Grammar: variables x, y, t; the constant pi; binary + - * / ^ with the usual
// precedence (^ highest and right-associative, then unary minus, then * /,
// then + -); functions sin, cos, exp, sqrt, abs.  Whitespace-insensitive.
// There is no unary plus.
class Expression {
 public:
  Expression() = default;

  static Expression parse(const std::string& text);

  // IEEE double evaluation; throws ExprError on division by exact zero.
  double eval(double x, double y, double t) const;

  // Fully parenthesized form; parse(print()) is structurally equal to *this.
  std::string print() const;

  bool structurally_equal(const Expression& other) const;

  // True when the expression is the literal constant 0 or default-constructed
  // (lets solvers skip assembling loads that are identically zero).
  bool is_zero_literal() const;

  const std::string& source() const { return src_; }

  enum class Op : unsigned char {
    Const, VarX, VarY, VarT,
    Add, Sub, Mul, Div, Pow, Neg,
    Sin, Cos, Exp, Sqrt, Abs,
  };

 private:
  struct Node {
    Op op;
    double value;        // Op::Const only
    int a, b;            // child indices, -1 if unused
    std::size_t offset;  // source position
  };

  double eval_node(int idx, double x, double y, double t) const;
  void print_node(int idx, std::string& out) const;
  bool equal_node(int i, const Expression& o, int j) const;

  std::vector<Node> nodes_;
  int root_ = -1;
  std::string src_;

  friend class Parser;
};

} // namespace stmc
