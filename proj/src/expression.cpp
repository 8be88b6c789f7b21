// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#include "bimfs/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace bimfs
{

namespace
{

// Value with gradient in (x, y).
struct Dual
{
  double v, dx, dy;
};

Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.dx + b.dx, a.dy + b.dy}; }
Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.dx - b.dx, a.dy - b.dy}; }
Dual operator*(Dual a, Dual b)
{
  return {a.v * b.v, a.dx * b.v + a.v * b.dx, a.dy * b.v + a.v * b.dy};
}
Dual operator/(Dual a, Dual b)
{
  const double inv = 1.0 / b.v;
  return {a.v * inv, (a.dx * b.v - a.v * b.dx) * inv * inv, (a.dy * b.v - a.v * b.dy) * inv * inv};
}
// Chain rule for a scalar function with value f and derivative df at a.v.
Dual chain(Dual a, double f, double df) { return {f, df * a.dx, df * a.dy}; }

enum class Op
{
  constant,
  var_x,
  var_y,
  add,
  sub,
  mul,
  div,
  pow,
  neg,
  sin,
  cos,
  tan,
  exp,
  log,
  sqrt,
  abs
};

}  // namespace

struct HeightExpression::Node
{
  Op op;
  double value = 0.0;
  std::shared_ptr<const Node> lhs, rhs;

  Dual eval(double x, double y) const
  {
    switch (op)
    {
      case Op::constant:
        return {value, 0.0, 0.0};
      case Op::var_x:
        return {x, 1.0, 0.0};
      case Op::var_y:
        return {y, 0.0, 1.0};
      case Op::add:
        return lhs->eval(x, y) + rhs->eval(x, y);
      case Op::sub:
        return lhs->eval(x, y) - rhs->eval(x, y);
      case Op::mul:
        return lhs->eval(x, y) * rhs->eval(x, y);
      case Op::div:
        return lhs->eval(x, y) / rhs->eval(x, y);
      case Op::neg:
      {
        const Dual a = lhs->eval(x, y);
        return {-a.v, -a.dx, -a.dy};
      }
      case Op::pow:
      {
        const Dual a = lhs->eval(x, y);
        const Dual b = rhs->eval(x, y);
        const double f = std::pow(a.v, b.v);
        // d(a^b) = b a^(b-1) da + a^b log(a) db; the log term only when b varies.
        const double da = b.v * std::pow(a.v, b.v - 1.0);
        const bool b_const = b.dx == 0.0 && b.dy == 0.0;
        const double lg = b_const ? 0.0 : std::log(a.v);
        return {f, da * a.dx + f * lg * b.dx, da * a.dy + f * lg * b.dy};
      }
      case Op::sin:
      {
        const Dual a = lhs->eval(x, y);
        return chain(a, std::sin(a.v), std::cos(a.v));
      }
      case Op::cos:
      {
        const Dual a = lhs->eval(x, y);
        return chain(a, std::cos(a.v), -std::sin(a.v));
      }
      case Op::tan:
      {
        const Dual a = lhs->eval(x, y);
        const double t = std::tan(a.v);
        return chain(a, t, 1.0 + t * t);
      }
      case Op::exp:
      {
        const Dual a = lhs->eval(x, y);
        const double e = std::exp(a.v);
        return chain(a, e, e);
      }
      case Op::log:
      {
        const Dual a = lhs->eval(x, y);
        return chain(a, std::log(a.v), 1.0 / a.v);
      }
      case Op::sqrt:
      {
        const Dual a = lhs->eval(x, y);
        const double s = std::sqrt(a.v);
        return chain(a, s, 0.5 / s);
      }
      case Op::abs:
      {
        const Dual a = lhs->eval(x, y);
        return chain(a, std::abs(a.v), a.v < 0.0 ? -1.0 : 1.0);
      }
    }
    return {0.0, 0.0, 0.0};
  }
};

namespace
{

using NodePtr = std::shared_ptr<const HeightExpression::Node>;

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr, double value = 0.0)
{
  auto n = std::make_shared<HeightExpression::Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  n->value = value;
  return n;
}

class Parser
{
public:
  explicit Parser(const std::string &text) : s_(text) {}

  NodePtr parse()
  {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size())
    {
      fail("unexpected character");
    }
    return e;
  }

private:
  [[noreturn]] void fail(const std::string &what) const
  {
    throw ConfigError("expression '" + s_ + "': " + what + " at column " +
                      std::to_string(pos_ + 1));
  }

  void skip()
  {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
    {
      ++pos_;
    }
  }

  bool accept(char c)
  {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c)
    {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr()
  {
    NodePtr lhs = term();
    while (true)
    {
      if (accept('+'))
      {
        lhs = make(Op::add, lhs, term());
      }
      else if (accept('-'))
      {
        lhs = make(Op::sub, lhs, term());
      }
      else
      {
        return lhs;
      }
    }
  }

  NodePtr term()
  {
    NodePtr lhs = unary();
    while (true)
    {
      if (accept('*'))
      {
        lhs = make(Op::mul, lhs, unary());
      }
      else if (accept('/'))
      {
        lhs = make(Op::div, lhs, unary());
      }
      else
      {
        return lhs;
      }
    }
  }

  NodePtr unary()
  {
    if (accept('-'))
    {
      return make(Op::neg, unary());
    }
    if (accept('+'))
    {
      return unary();
    }
    NodePtr base = atom();
    if (accept('^'))
    {
      return make(Op::pow, base, unary());
    }
    return base;
  }

  NodePtr atom()
  {
    skip();
    if (pos_ >= s_.size())
    {
      fail("unexpected end of input");
    }
    if (accept('('))
    {
      NodePtr e = expr();
      if (!accept(')'))
      {
        fail("expected ')'");
      }
      return e;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
    {
      const char *begin = s_.c_str() + pos_;
      char *end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin)
      {
        fail("malformed number");
      }
      pos_ += static_cast<std::size_t>(end - begin);
      return make(Op::constant, nullptr, nullptr, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)))
    {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_])))
      {
        ++pos_;
      }
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "x")
      {
        return make(Op::var_x);
      }
      if (name == "y")
      {
        return make(Op::var_y);
      }
      if (name == "pi")
      {
        return make(Op::constant, nullptr, nullptr, pi);
      }
      static const std::pair<const char *, Op> funcs[] = {
          {"sin", Op::sin}, {"cos", Op::cos},   {"tan", Op::tan}, {"exp", Op::exp},
          {"log", Op::log}, {"sqrt", Op::sqrt}, {"abs", Op::abs}};
      for (const auto &[fname, op] : funcs)
      {
        if (name == fname)
        {
          if (!accept('('))
          {
            fail("expected '(' after " + name);
          }
          NodePtr arg = expr();
          if (!accept(')'))
          {
            fail("expected ')'");
          }
          return make(op, arg);
        }
      }
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    fail("unexpected character");
  }

  const std::string &s_;
  std::size_t pos_ = 0;
};

}  // namespace

HeightExpression::HeightExpression(const std::string &text) : text_(text)
{
  root_ = Parser(text_).parse();
}

HeightSample HeightExpression::operator()(double x, double y) const
{
  const Dual d = root_->eval(x, y);
  return {d.v, d.dx, d.dy};
}

}  // namespace bimfs
