// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "bimfs/types.hpp"

namespace bimfs
{

using CRef = Eigen::Ref<CMatrix>;
using CConstRef = Eigen::Ref<const CMatrix>;

// Householder QR with column pivoting, A P = Q R. The factored matrix keeps R in its upper
// triangle and the reflectors below; this struct holds the rest.
struct QRFactors
{
  CVector tau;
  std::vector<int> perm;  // column j of A P is column perm[j] of A
  Eigen::Index rank = 0;  // leading |R_ii| > rcond |R_00|
};

// Logs once when OpenBLAS fell back to its generic kernels on a CPU with wider vector units.
void warn_if_generic_blas();

QRFactors pivoted_qr_inplace(CRef a, double rcond);

// B <- Q^H B. With `reflectors` >= 0 only the leading ones are applied, which is enough when
// just the top rows of the product are used.
void apply_qh(CConstRef qr, const QRFactors &f, CRef b, Eigen::Index reflectors = -1);

// Basic solution from the top `rank` rows of Q^H B. Dropped columns get zero.
CMatrix solve_basic(CConstRef qr, const QRFactors &f, CConstRef qhb);

struct LstsqResult
{
  CMatrix x;
  Eigen::Index rank = 0;
  std::vector<int> basis;  // the rows of x that can be nonzero, in pivot order (QR solvers only)
};

// Basic least-squares solution via pivoted QR.
LstsqResult lstsq_qr(CMatrix a, CMatrix b, double rcond);

// Basic least-squares solution for tall A. A blocked QR A = Q1 R is followed by a pivoted QR
// of R, which picks the same columns as pivoting A itself; the selected columns are then solved
// exactly. Far faster than zgeqp3 on tall blocks, whose pivoting runs in BLAS-2. Falls back to
// lstsq_qr when A is not at least twice as tall as wide.
LstsqResult lstsq_tall(CConstRef a, CConstRef b, double rcond);

// Rank-revealing QR of A in the same two steps: A is overwritten, B <- Q^H B in full, and `r`
// receives the pivoted triangular factor for solve_basic. Pivoting is skipped when the blocked
// factor is already well conditioned.
QRFactors two_step_qr(CRef a, CRef b, double rcond, CMatrix &r);

// Minimum-norm least-squares solution via the divide-and-conquer SVD driver.
LstsqResult lstsq_min_norm(CMatrix a, CMatrix b, double rcond);

struct Svd
{
  CMatrix u;  // full left factor
  RVector s;
  CMatrix vh;
};

Svd svd_full(CMatrix a);

}  // namespace bimfs
