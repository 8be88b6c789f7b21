// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "bimfs/geometry.hpp"

namespace bimfs
{

// Compiled arithmetic expression f(x, y). Grammar:
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := ('-' | '+') unary | power
//   power  := atom ('^' unary)?
//   atom   := number | 'x' | 'y' | 'pi' | func '(' expr ')' | '(' expr ')'
//   func   := sin | cos | tan | exp | log | sqrt | abs
// Evaluation carries first derivatives in x and y alongside the value.
class HeightExpression
{
public:
  // Throws ConfigError with the column of the first offending character.
  explicit HeightExpression(const std::string &text);

  HeightSample operator()(double x, double y) const;
  const std::string &text() const { return text_; }

  struct Node;

private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace bimfs
