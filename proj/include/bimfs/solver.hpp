// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "bimfs/assembly.hpp"

namespace bimfs
{

enum class SolveMethod
{
  direct,
  schur
};

std::string to_string(SolveMethod m);

// All unknowns in UnknownLayout order plus solve diagnostics.
struct Solution
{
  UnknownLayout layout;
  CVector x;
  SolveMethod method = SolveMethod::schur;
  double residual_norm = 0.0;      // ||M x - f||
  double rhs_norm = 0.0;           // ||f||
  Eigen::Index rank = 0;           // direct: of the full system; schur: of the reduced one
  double seconds = 0.0;

  double relative_residual() const { return rhs_norm > 0.0 ? residual_norm / rhs_norm : residual_norm; }

  CVector c_group(std::size_t layer) const;
  CVector d(std::size_t layer) const;
  CVector a(RadiationSide side) const;
};

struct SolverOptions
{
  double elimination_rcond = 1e-12;  // proxy and Rayleigh-Bloch elimination
  double reduced_rcond = 1e-14;      // reduced c-system
  bool equilibrate = false;          // column-norm scaling of the reduced system
  bool compute_residual = true;      // re-evaluate ||M x - f|| from the blocks
};

// Joint minimum-norm least squares on the dense system.
Solution solve_direct(const BlockSystem &system, const SolverOptions &opts = {});

// Eliminates (d, a) per layer, then solves the block-bidiagonal c-system by sequential
// orthogonal elimination from the top interface down. Blocks are requested one at a time.
Solution solve_schur(const BlockProvider &blocks, const SolverOptions &opts = {});

struct ResidualReport
{
  double transmission = 0.0;
  double quasi = 0.0;
  double radiation = 0.0;
  double total = 0.0;
  double rhs_norm = 0.0;
};

ResidualReport residual_report(const BlockProvider &blocks, const Solution &solution);

}  // namespace bimfs
