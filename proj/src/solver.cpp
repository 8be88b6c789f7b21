// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#include "bimfs/solver.hpp"

#include <array>
#include <chrono>

#include <spdlog/spdlog.h>

namespace bimfs
{

std::string to_string(SolveMethod m)
{
  return m == SolveMethod::direct ? "direct" : "schur";
}

CVector Solution::c_group(std::size_t layer) const
{
  return x.segment(static_cast<Eigen::Index>(layout.c_group_offset(layer)),
                   static_cast<Eigen::Index>(layout.c_group_size(layer)));
}

CVector Solution::d(std::size_t layer) const
{
  return x.segment(static_cast<Eigen::Index>(layout.d_offset(layer)),
                   static_cast<Eigen::Index>(2 * layout.n_proxy));
}

CVector Solution::a(RadiationSide side) const
{
  return x.segment(static_cast<Eigen::Index>(layout.a_offset(side)),
                   static_cast<Eigen::Index>(3 * layout.n_modes));
}

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::Index idx(std::size_t n)
{
  return static_cast<Eigen::Index>(n);
}

// Value and derivative rows of Cartesian component q from a 6W-row radiation block.
CMatrix component_rows(const CMatrix &m, Eigen::Index w, Eigen::Index q)
{
  CMatrix out(2 * w, m.cols());
  out.topRows(w) = m.middleRows(q * w, w);
  out.bottomRows(w) = m.middleRows(3 * w + q * w, w);
  return out;
}

// Per-layer elimination d = xd c and, for the outer layers, a = aa c. Only the `basis` rows of
// d can be nonzero, so xd holds just those.
struct Elimination
{
  std::vector<int> basis;
  CMatrix xd;
  CMatrix aa;
  Eigen::Index rank = 0;
};

Elimination eliminate(const BlockProvider &bp, std::size_t layer, const SolverOptions &opts)
{
  const UnknownLayout &lay = bp.layout();
  const Eigen::Index w = idx(lay.n_wall), nm = idx(lay.n_modes);
  const Eigen::Index nc = idx(lay.c_group_size(layer)), np = idx(2 * lay.n_proxy);
  const bool top = layer == 0, bottom = layer + 1 == lay.num_layers();
  const bool outer = top || bottom;
  const RadiationSide side = top ? RadiationSide::up : RadiationSide::down;

  // The mode block acts identically on each Cartesian component, so a is removed exactly by
  // keeping only the radiation rows orthogonal to its range: the trailing rows of Q_w^H.
  CMatrix wqr;
  QRFactors wf;
  Eigen::Index kept = 0;
  std::array<CMatrix, 3> qz, qv;  // Q_w^H applied to each component's Z and V rows
  if (outer)
  {
    wqr = component_rows(bp.radiation_modes(side), w, 0).leftCols(nm);
    wf = pivoted_qr_inplace(wqr, opts.elimination_rcond);
    kept = 2 * w - wf.rank;
    const CMatrix v = bp.radiation_proxy(side);
    const CMatrix z = bp.radiation_mfs(side);
    for (std::size_t q = 0; q < 3; ++q)
    {
      qv[q] = component_rows(v, w, static_cast<Eigen::Index>(q));
      qz[q] = component_rows(z, w, static_cast<Eigen::Index>(q));
      apply_qh(wqr, wf, qv[q]);
      apply_qh(wqr, wf, qz[q]);
    }
  }

  const Eigen::Index qrows = 12 * w;
  CMatrix k(qrows + 3 * kept, np);
  CMatrix s(qrows + 3 * kept, nc);
  bp.fill_quasi_proxy(layer, k.topRows(qrows));
  bp.fill_quasi_mfs(layer, s.topRows(qrows));
  for (std::size_t q = 0; q < 3 && outer; ++q)
  {
    const Eigen::Index row = qrows + static_cast<Eigen::Index>(q) * kept;
    k.middleRows(row, kept) = qv[q].bottomRows(kept);
    s.middleRows(row, kept) = qz[q].bottomRows(kept);
  }

  Elimination out;
  LstsqResult ls = lstsq_tall(k, s, opts.elimination_rcond);
  out.basis = std::move(ls.basis);
  out.xd = -ls.x(out.basis, Eigen::all);
  out.rank = ls.rank;
  if (ls.rank < np)
  {
    spdlog::debug("layer {}: proxy elimination rank {} of {}", layer, ls.rank, np);
  }
  k.resize(0, 0);
  s.resize(0, 0);

  if (outer)
  {
    // a_q = -W^+ (Z_q + V_q xd) c, from the leading rows of the transformed blocks.
    const Eigen::Index r = wf.rank;
    out.aa.resize(3 * nm, nc);
    for (std::size_t q = 0; q < 3; ++q)
    {
      CMatrix rhs = qz[q].topRows(r);
      rhs.noalias() += qv[q].topRows(r)(Eigen::all, out.basis) * out.xd;
      out.aa.middleRows(static_cast<Eigen::Index>(q) * nm, nm) = -solve_basic(wqr, wf, rhs);
    }
  }
  return out;
}

// One step of the banded elimination: the leading rows of Q^H for layer group l.
struct Stage
{
  CMatrix r_top;   // top `rank` rows of the pivoted triangular factor
  QRFactors f;
  CMatrix r_next;  // coupling to the next group
  CVector g;       // transformed rhs
  RVector scale;   // column equilibration, empty when unused
};

}  // namespace

Solution solve_schur(const BlockProvider &bp, const SolverOptions &opts)
{
  warn_if_generic_blas();
  const auto t0 = Clock::now();
  const UnknownLayout &lay = bp.layout();
  const std::size_t n_layers = lay.num_layers(), n_if = lay.num_interfaces;
  const Eigen::Index m4 = idx(4 * lay.n_targets);

  std::vector<Elimination> elim;
  elim.reserve(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l)
  {
    elim.push_back(eliminate(bp, l, opts));
    spdlog::debug("layer {} eliminated ({:.1f} s)", l, seconds_since(t0));
  }

  // Row block l couples groups l and l+1; pass the unreduced rows of each step down.
  std::vector<Stage> stages(n_layers);
  CMatrix carry;
  double rhs_sq = 0.0;
  for (std::size_t l = 0; l < n_layers; ++l)
  {
    const Eigen::Index n_own = idx(lay.c_group_size(l));
    const Eigen::Index n_next = l < n_if ? idx(lay.c_group_size(l + 1)) : 0;
    const Eigen::Index r_carry = carry.rows();
    const Eigen::Index rows = r_carry + (l < n_if ? m4 : 0);
    CMatrix g = CMatrix::Zero(rows, n_own + n_next + 1);
    if (r_carry > 0)
    {
      g.topLeftCorner(r_carry, n_own) = carry.leftCols(n_own);
      g.topRightCorner(r_carry, 1) = carry.rightCols(1);
    }
    carry.resize(0, 0);
    if (l < n_if)
    {
      bp.fill_transmission_mfs(l, l, g.block(r_carry, 0, m4, n_own));
      {
        const CMatrix b = bp.transmission_proxy(l, l);
        g.block(r_carry, 0, m4, n_own).noalias() += b(Eigen::all, elim[l].basis) * elim[l].xd;
      }
      bp.fill_transmission_mfs(l, l + 1, g.block(r_carry, n_own, m4, n_next));
      {
        const CMatrix b = bp.transmission_proxy(l, l + 1);
        g.block(r_carry, n_own, m4, n_next).noalias() +=
            b(Eigen::all, elim[l + 1].basis) * elim[l + 1].xd;
      }
      const CVector f = bp.transmission_rhs(l);
      rhs_sq += f.squaredNorm();
      g.block(r_carry, n_own + n_next, m4, 1) = f;
    }

    Stage &st = stages[l];
    if (opts.equilibrate)
    {
      st.scale = g.leftCols(n_own).colwise().norm().transpose();
      for (Eigen::Index j = 0; j < n_own; ++j)
      {
        st.scale(j) = st.scale(j) > 0.0 ? 1.0 / st.scale(j) : 1.0;
      }
      g.leftCols(n_own) = g.leftCols(n_own) * st.scale.asDiagonal();
    }
    CMatrix rr;
    st.f = two_step_qr(g.leftCols(n_own), g.rightCols(n_next + 1), opts.reduced_rcond, rr);
    const Eigen::Index r = st.f.rank;
    if (r < n_own)
    {
      spdlog::debug("reduced group {}: rank {} of {}", l, r, n_own);
    }
    st.r_top = rr.topRows(r);
    st.r_next = g.block(0, n_own, r, n_next);
    st.g = g.block(0, n_own + n_next, r, 1);
    carry = g.bottomRightCorner(rows - r, n_next + 1);
    spdlog::debug("reduced group {} factored ({:.1f} s)", l, seconds_since(t0));
  }

  Solution sol;
  sol.layout = lay;
  sol.method = SolveMethod::schur;
  sol.x = CVector::Zero(idx(lay.num_columns()));
  sol.rhs_norm = std::sqrt(rhs_sq);
  sol.residual_norm = carry.norm();
  sol.rank = 0;
  CVector next;
  for (std::size_t l = n_layers; l-- > 0;)
  {
    Stage &st = stages[l];
    CVector rhs = st.g;
    if (next.size() > 0)
    {
      rhs.noalias() -= st.r_next * next;
    }
    CVector c = solve_basic(st.r_top, st.f, rhs);
    if (st.scale.size() > 0)
    {
      c = st.scale.asDiagonal() * c;
    }
    sol.rank += st.f.rank;
    sol.x.segment(idx(lay.c_group_offset(l)), c.size()) = c;
    sol.x.segment(idx(lay.d_offset(l)), idx(2 * lay.n_proxy))(elim[l].basis) = elim[l].xd * c;
    if (l == 0)
    {
      sol.x.segment(idx(lay.a_offset(RadiationSide::up)), elim[l].aa.rows()) = elim[l].aa * c;
    }
    if (l + 1 == n_layers)
    {
      sol.x.segment(idx(lay.a_offset(RadiationSide::down)), elim[l].aa.rows()) = elim[l].aa * c;
    }
    next = std::move(c);
    st = Stage{};
  }
  if (opts.compute_residual)
  {
    const ResidualReport rep = residual_report(bp, sol);
    sol.residual_norm = rep.total;
  }
  sol.seconds = seconds_since(t0);
  return sol;
}

Solution solve_direct(const BlockSystem &system, const SolverOptions &opts)
{
  const auto t0 = Clock::now();
  const UnknownLayout &lay = system.layout();
  if (lay.num_rows() < lay.num_columns())
  {
    throw SolverError("direct solve needs at least as many rows as columns");
  }
  const CMatrix m = system.dense();
  const CVector f = system.rhs();
  LstsqResult res = lstsq_min_norm(m, f, opts.reduced_rcond);
  if (res.rank < m.cols())
  {
    spdlog::warn("direct solve: numerical rank {} of {} columns", res.rank, m.cols());
  }
  Solution sol;
  sol.layout = lay;
  sol.method = SolveMethod::direct;
  sol.x = res.x.col(0);
  sol.rank = res.rank;
  sol.rhs_norm = f.norm();
  sol.residual_norm = (m * sol.x - f).norm();
  sol.seconds = seconds_since(t0);
  return sol;
}

ResidualReport residual_report(const BlockProvider &bp, const Solution &sol)
{
  const UnknownLayout &lay = bp.layout();
  ResidualReport rep;
  double tr = 0.0, qp = 0.0, rad = 0.0, rhs = 0.0;
  for (std::size_t l = 0; l < lay.num_interfaces; ++l)
  {
    const CVector f = bp.transmission_rhs(l);
    rhs += f.squaredNorm();
    CVector r = -f;
    r.noalias() += bp.transmission_mfs(l, l) * sol.c_group(l);
    r.noalias() += bp.transmission_mfs(l, l + 1) * sol.c_group(l + 1);
    r.noalias() += bp.transmission_proxy(l, l) * sol.d(l);
    r.noalias() += bp.transmission_proxy(l, l + 1) * sol.d(l + 1);
    tr += r.squaredNorm();
  }
  for (std::size_t l = 0; l < lay.num_layers(); ++l)
  {
    CVector r = bp.quasi_mfs(l) * sol.c_group(l);
    r.noalias() += bp.quasi_proxy(l) * sol.d(l);
    qp += r.squaredNorm();
  }
  for (auto side : {RadiationSide::up, RadiationSide::down})
  {
    const std::size_t layer = bp.outer_layer(side);
    CVector r = bp.radiation_mfs(side) * sol.c_group(layer);
    r.noalias() += bp.radiation_proxy(side) * sol.d(layer);
    r.noalias() += bp.radiation_modes(side) * sol.a(side);
    rad += r.squaredNorm();
  }
  rep.transmission = std::sqrt(tr);
  rep.quasi = std::sqrt(qp);
  rep.radiation = std::sqrt(rad);
  rep.total = std::sqrt(tr + qp + rad);
  rep.rhs_norm = std::sqrt(rhs);
  return rep;
}

}  // namespace bimfs
