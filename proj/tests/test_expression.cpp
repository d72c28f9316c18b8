#include <gtest/gtest.h>

#include <array>
#include <random>

#include "finsler/expression.hpp"
#include "finsler/jet.hpp"

namespace {

using finsler::Expression;
using finsler::ExpressionError;

double eval(const Expression& e, double x, double y) {
  const std::array<double, 2> p{x, y};
  return e(p);
}

TEST(Expression, EvaluatesArithmetic) {
  EXPECT_DOUBLE_EQ(eval(Expression::parse("1 + 2*3 - 4/2"), 0, 0), 5.0);
  EXPECT_DOUBLE_EQ(eval(Expression::parse("-(x^2 + y^2)/2"), 1.0, 2.0), -2.5);
  EXPECT_DOUBLE_EQ(eval(Expression::parse("2^-1"), 0, 0), 0.5);
  EXPECT_DOUBLE_EQ(eval(Expression::parse("x1*x2 + exp(0)"), 3, 4), 13.0);
  EXPECT_NEAR(eval(Expression::parse("4/(1 + x^2 + y^2)^2"), 1, 0), 1.0, 1e-15);
}

TEST(Expression, ConstantFolding) {
  EXPECT_TRUE(Expression::parse("0.5 * 2 + sqrt(4)").is_constant());
  EXPECT_DOUBLE_EQ(Expression::parse("0.5 * 2 + sqrt(4)").constant_value(), 3.0);
  EXPECT_FALSE(Expression::parse("0 * x").is_constant());
  EXPECT_EQ(Expression::parse("x + z").arity(), 3);
}

TEST(Expression, ReportsErrorColumn) {
  try {
    Expression::parse("1 + kapa");
    FAIL();
  } catch (const ExpressionError& e) {
    EXPECT_EQ(e.column(), 4u);
  }
  EXPECT_THROW(Expression::parse("(x + 1"), ExpressionError);
  EXPECT_THROW(Expression::parse("x ^ y"), ExpressionError);
  EXPECT_THROW(Expression::parse("2 3"), ExpressionError);
}

TEST(Expression, CanonicalFormRoundTrips) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (const char* text : {"-(x^2 + y^2)/2", "1 + 0.25*x - y/3", "exp(-x) * cos(y) + sqrt(2 + x*y)",
                           "4/(1 + x^2 + y^2)^2", "-x", "-0.1"}) {
    const Expression e = Expression::parse(text);
    const Expression back = Expression::parse(e.to_string());
    EXPECT_EQ(e.to_string(), back.to_string()) << text;
    for (int k = 0; k < 20; ++k) {
      const double x = u(rng), y = u(rng);
      EXPECT_EQ(eval(e, x, y), eval(back, x, y)) << text;
    }
  }
}

TEST(Expression, EvaluatesOnJets) {
  using J = finsler::Jet<2, 2>;
  const Expression e = Expression::parse("x^2*y + exp(y)");
  const std::array<J, 2> p{J::variable(2.0, 0), J::variable(0.0, 1)};
  const J r = e.eval<J>(p);
  EXPECT_DOUBLE_EQ(r.v, 1.0);
  EXPECT_DOUBLE_EQ(r.grad(0), 0.0);
  EXPECT_DOUBLE_EQ(r.grad(1), 5.0);
  EXPECT_DOUBLE_EQ(r.hess(0, 1), 4.0);
}

}  // namespace
