// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <gtest/gtest.h>

#include "bimfs/fields.hpp"
#include "bimfs/linalg.hpp"
#include "bimfs/solver.hpp"

using namespace bimfs;

namespace
{

Problem fresnel_problem(int n_side, int p_side, int w_side, int r)
{
  Problem p;
  p.stack.interfaces.push_back(Interface::flat());
  p.stack.materials = {Material{1.0, 1.0}, Material{4.0, 1.0}};
  p.wave = IncidentWave::from_angles(4.0, 0.9 * pi, 0.0, CVec3(0, 1, 0), p.stack.materials[0], 1, 1);
  p.params.n_src = n_side * n_side;
  p.params.n_proxy = p_side * p_side;
  p.params.n_wall = w_side * w_side;
  p.params.rb_order = r;
  return p;
}

CMatrix random_matrix(std::mt19937_64 &gen, Eigen::Index rows, Eigen::Index cols)
{
  std::normal_distribution<double> g;
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
  {
    for (Eigen::Index i = 0; i < rows; ++i)
    {
      m(i, j) = cplx(g(gen), g(gen));
    }
  }
  return m;
}

// Rank-one update of `mfs` so that mfs*c + rest = 0.
void annihilate(CMatrix &mfs, const CVector &c, const CVector &rest)
{
  const CVector r = mfs * c + rest;
  mfs -= r * c.adjoint() / c.squaredNorm();
}

// Random blocks with the shapes of a real system and a consistent right-hand side built from a
// known unknown vector. The constraint rows are adjusted to vanish on it.
BlockSystem manufactured(const UnknownLayout &lay, std::uint64_t seed, CVector &x_true)
{
  std::mt19937_64 gen(seed);
  BlockSystem s;
  s.index = lay;
  x_true = random_matrix(gen, static_cast<Eigen::Index>(lay.num_columns()), 1).col(0);
  const auto seg = [&](std::size_t off, std::size_t n) {
    return CVector(x_true.segment(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(n)));
  };
  const auto c = [&](std::size_t l) { return seg(lay.c_group_offset(l), lay.c_group_size(l)); };
  const auto d = [&](std::size_t l) { return seg(lay.d_offset(l), 2 * lay.n_proxy); };
  const auto a = [&](RadiationSide side) { return seg(lay.a_offset(side), 3 * lay.n_modes); };
  const auto m4 = static_cast<Eigen::Index>(4 * lay.n_targets);
  const auto w12 = static_cast<Eigen::Index>(12 * lay.n_wall);
  const auto w6 = static_cast<Eigen::Index>(6 * lay.n_wall);
  const auto np2 = static_cast<Eigen::Index>(2 * lay.n_proxy);
  const auto cs = [&](std::size_t l) { return static_cast<Eigen::Index>(lay.c_group_size(l)); };

  for (std::size_t i = 0; i < lay.num_interfaces; ++i)
  {
    BlockSystem::Transmission t;
    t.a_own = random_matrix(gen, m4, cs(i));
    t.a_next = random_matrix(gen, m4, cs(i + 1));
    t.b_own = random_matrix(gen, m4, np2);
    t.b_next = random_matrix(gen, m4, np2);
    t.f = t.a_own * c(i) + t.a_next * c(i + 1) + t.b_own * d(i) + t.b_next * d(i + 1);
    s.transmission.push_back(std::move(t));
  }
  for (std::size_t l = 0; l < lay.num_layers(); ++l)
  {
    CMatrix p = random_matrix(gen, w12, cs(l));
    CMatrix q = random_matrix(gen, w12, np2);
    annihilate(p, c(l), q * d(l));
    s.p.push_back(std::move(p));
    s.q.push_back(std::move(q));
  }
  for (RadiationSide side : {RadiationSide::up, RadiationSide::down})
  {
    const std::size_t l = side == RadiationSide::up ? 0 : lay.num_layers() - 1;
    BlockSystem::Radiation &r = side == RadiationSide::up ? s.up : s.down;
    r.z = random_matrix(gen, w6, cs(l));
    r.v = random_matrix(gen, w6, np2);
    // The mode block acts identically on each Cartesian component.
    const auto nm = static_cast<Eigen::Index>(lay.n_modes), w = w6 / 6;
    const CMatrix base = random_matrix(gen, 2 * w, nm);
    r.w = CMatrix::Zero(w6, 3 * nm);
    for (Eigen::Index q = 0; q < 3; ++q)
    {
      r.w.block(q * w, q * nm, w, nm) = base.topRows(w);
      r.w.block(3 * w + q * w, q * nm, w, nm) = base.bottomRows(w);
    }
    annihilate(r.z, c(l), r.v * d(l) + r.w * a(side));
  }
  return s;
}

}  // namespace

TEST(Solver, ZeroRhsGivesZeroSolution)
{
  Problem p = fresnel_problem(3, 3, 3, 1);
  p.wave.polarization = CVec3::Zero();
  const Model m(p);
  const BlockSystem sys = assemble_full(m);
  for (const Solution &s : {solve_direct(sys), solve_schur(sys)})
  {
    EXPECT_EQ(s.x.norm(), 0.0);
    EXPECT_EQ(s.residual_norm, 0.0);
  }
  const ResidualReport r = residual_report(sys, solve_schur(sys));
  EXPECT_EQ(r.total, 0.0);
  EXPECT_EQ(r.transmission + r.quasi + r.radiation, 0.0);
}

TEST(Solver, ManufacturedSolutionIsRecovered)
{
  for (std::size_t n_if : {1u, 3u})
  {
    UnknownLayout lay;
    lay.num_interfaces = n_if;
    lay.n_src = 4;
    lay.n_targets = 9;
    lay.n_proxy = 5;
    lay.n_wall = 9;
    lay.n_modes = 9;
    CVector x_true;
    const BlockSystem sys = manufactured(lay, 11 + n_if, x_true);
    ASSERT_LT((sys.dense() * x_true - sys.rhs()).norm(), 1e-12 * sys.rhs().norm());

    const Solution direct = solve_direct(sys);
    EXPECT_LT((direct.x - x_true).norm(), 1e-10 * x_true.norm()) << n_if << " interfaces";
    const Solution schur = solve_schur(sys);
    EXPECT_LT((schur.x - x_true).norm(), 1e-8 * x_true.norm()) << n_if << " interfaces";
    EXPECT_LT(schur.relative_residual(), 1e-12);
  }
}

TEST(Solver, SchurAndDirectAgreeOnFresnel)
{
  const Model m(fresnel_problem(8, 8, 8, 4));
  const BlockSystem sys = assemble_full(m);
  const Solution direct = solve_direct(sys);
  const Solution schur = solve_schur(Assembler(m));
  EXPECT_EQ(direct.method, SolveMethod::direct);
  EXPECT_EQ(schur.method, SolveMethod::schur);
  EXPECT_EQ(direct.x.size(), static_cast<Eigen::Index>(m.layout().num_columns()));
  EXPECT_EQ(schur.x.size(), direct.x.size());

  const FieldEvaluator fd(m, direct), fs(m, schur);
  const double bound = 10.0 * std::max(direct.residual_norm, schur.residual_norm);
  for (const InteriorPoint &pt : sample_interior(m, 20, 0.05, 3))
  {
    EXPECT_LE((fd.E(pt.x) - fs.E(pt.x)).norm(), bound) << pt.x.transpose();
  }
}

TEST(Solver, ResidualPartsPartitionTheTotal)
{
  const Model m(fresnel_problem(6, 6, 6, 3));
  const Assembler as(m);
  const Solution s = solve_schur(as);
  const ResidualReport r = residual_report(as, s);
  const double sum = r.transmission * r.transmission + r.quasi * r.quasi + r.radiation * r.radiation;
  EXPECT_NEAR(sum, r.total * r.total, 1e-14 * std::max(1.0, r.total * r.total));
  EXPECT_NEAR(r.total, s.residual_norm, 1e-14);
  const BlockSystem sys = assemble_full(m);
  EXPECT_NEAR(r.total, (sys.dense() * s.x - sys.rhs()).norm(), 1e-12);
  EXPECT_NEAR(r.rhs_norm, sys.rhs().norm(), 1e-12);
}

TEST(Solver, RepeatedSolvesAreDeterministic)
{
  const Model m(fresnel_problem(6, 6, 6, 2));
  const Assembler as(m);
  const Solution a = solve_schur(as), b = solve_schur(as);
  EXPECT_NEAR(a.residual_norm, b.residual_norm, 1e-14);
  EXPECT_EQ(a.x, b.x);
}

TEST(Solver, ResidualTrendsDownWithSources)
{
  double prev = 0.0;
  for (int n : {5, 7, 9, 11})
  {
    const Model m(fresnel_problem(n, 12, 12, 4));
    const Solution s = solve_schur(Assembler(m));
    if (prev > 0.0)
    {
      EXPECT_LE(s.residual_norm, 2.0 * prev) << "N = " << n * n;
    }
    prev = s.residual_norm;
  }
}

TEST(Solver, ReducedColumnCount)
{
  const Model m(fresnel_problem(4, 3, 3, 1));
  EXPECT_EQ(m.layout().c_columns(), 4u * 16u);
}

TEST(Linalg, TallLeastSquaresMatchesPivotedQr)
{
  std::mt19937_64 gen(5);
  // Tall, rank 40 of 60 columns, with a component of b outside the range.
  const CMatrix a = random_matrix(gen, 600, 40) * random_matrix(gen, 40, 60);
  const CMatrix b = a * random_matrix(gen, 60, 7) + 1e-3 * random_matrix(gen, 600, 7);
  const LstsqResult ref = lstsq_qr(a, b, 1e-12);
  const LstsqResult got = lstsq_tall(a, b, 1e-12);
  EXPECT_EQ(ref.rank, 40);
  EXPECT_EQ(got.rank, 40);
  const double r_ref = (a * ref.x - b).norm(), r_got = (a * got.x - b).norm();
  EXPECT_NEAR(r_got, r_ref, 1e-10 * r_ref);
  // Only the basis rows are nonzero.
  ASSERT_EQ(got.basis.size(), 40u);
  EXPECT_EQ((got.x.rowwise().norm().array() > 0.0).count(), 40);
  EXPECT_LT(got.x(got.basis, Eigen::all).norm(), got.x.norm() * (1 + 1e-15));

  // Not tall enough for the two-step path: same answer as the pivoted QR.
  const CMatrix c = random_matrix(gen, 100, 60);
  EXPECT_LT((lstsq_tall(c, b.topRows(100), 1e-12).x - lstsq_qr(c, b.topRows(100), 1e-12).x).norm(),
            1e-12);
}

TEST(Linalg, TwoStepQrPreservesTheLeastSquaresProblem)
{
  std::mt19937_64 gen(8);
  for (int rank : {30, 24})
  {
    const CMatrix a0 = random_matrix(gen, 90, rank) * random_matrix(gen, rank, 30);
    const CMatrix b0 = random_matrix(gen, 90, 4);
    CMatrix a = a0, b = b0, r;
    const QRFactors f = two_step_qr(a, b, 1e-12, r);
    EXPECT_EQ(f.rank, rank);
    // Q^H is orthogonal: B keeps its norm, and the rows past the rank hold the residual.
    EXPECT_NEAR(b.norm(), b0.norm(), 1e-12 * b0.norm());
    const CMatrix x = solve_basic(r, f, b);
    EXPECT_NEAR((a0 * x - b0).norm(), b.bottomRows(90 - rank).norm(), 1e-10 * b0.norm());
    EXPECT_NEAR((a0 * x - b0).norm(), (a0 * lstsq_qr(a0, b0, 1e-12).x - b0).norm(),
                1e-10 * b0.norm());
  }
}
