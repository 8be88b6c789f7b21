// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#include "bimfs/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numeric>
#include <string>

#include <spdlog/spdlog.h>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

extern "C" char *openblas_get_corename(void);

namespace bimfs
{

namespace
{

void check(lapack_int info, const char *routine)
{
  if (info != 0)
  {
    throw SolverError(std::string(routine) + " failed with info = " + std::to_string(info));
  }
}

lapack_int as_int(Eigen::Index n)
{
  return static_cast<lapack_int>(n);
}

}  // namespace

void warn_if_generic_blas()
{
  static std::once_flag once;
  std::call_once(once,
                 []
                 {
                   if (std::strcmp(openblas_get_corename(), "Prescott") != 0)
                   {
                     return;
                   }
                   __builtin_cpu_init();
                   const char *core = __builtin_cpu_supports("avx512f") ? "SkylakeX"
                                      : __builtin_cpu_supports("avx2") ? "Haswell"
                                                                       : nullptr;
                   if (core)
                   {
                     spdlog::warn("OpenBLAS runs generic kernels on this CPU; "
                                  "OPENBLAS_CORETYPE={} is about three times faster",
                                  core);
                   }
                 });
}

QRFactors pivoted_qr_inplace(CRef a, double rcond)
{
  QRFactors f;
  const lapack_int m = as_int(a.rows()), n = as_int(a.cols());
  const lapack_int k = std::min(m, n);
  f.tau.resize(k);
  std::vector<lapack_int> jpvt(static_cast<std::size_t>(n), 0);
  if (k > 0)
  {
    check(LAPACKE_zgeqp3(LAPACK_COL_MAJOR, m, n, a.data(), as_int(a.outerStride()), jpvt.data(),
                         f.tau.data()),
          "zgeqp3");
  }
  f.perm.resize(static_cast<std::size_t>(n));
  for (lapack_int j = 0; j < n; ++j)
  {
    f.perm[static_cast<std::size_t>(j)] = jpvt[static_cast<std::size_t>(j)] - 1;
  }
  if (k > 0)
  {
    const double r00 = std::abs(a(0, 0));
    while (f.rank < k && std::abs(a(f.rank, f.rank)) > rcond * r00)
    {
      ++f.rank;
    }
  }
  return f;
}

void apply_qh(CConstRef qr, const QRFactors &f, CRef b, Eigen::Index reflectors)
{
  const Eigen::Index all = f.tau.size();
  const lapack_int k = as_int(reflectors < 0 ? all : std::min(reflectors, all));
  if (k == 0 || b.cols() == 0)
  {
    return;
  }
  check(LAPACKE_zunmqr(LAPACK_COL_MAJOR, 'L', 'C', as_int(b.rows()), as_int(b.cols()), k,
                       qr.data(), as_int(qr.outerStride()), f.tau.data(), b.data(),
                       as_int(b.outerStride())),
        "zunmqr");
}

CMatrix solve_basic(CConstRef qr, const QRFactors &f, CConstRef qhb)
{
  const Eigen::Index r = f.rank;
  CMatrix top = qhb.topRows(r);
  if (r > 0 && top.cols() > 0)
  {
    check(LAPACKE_ztrtrs(LAPACK_COL_MAJOR, 'U', 'N', 'N', as_int(r), as_int(top.cols()),
                         qr.data(), as_int(qr.outerStride()), top.data(), as_int(r)),
          "ztrtrs");
  }
  CMatrix x = CMatrix::Zero(qr.cols(), qhb.cols());
  for (Eigen::Index j = 0; j < r; ++j)
  {
    x.row(f.perm[static_cast<std::size_t>(j)]) = top.row(j);
  }
  return x;
}

LstsqResult lstsq_qr(CMatrix a, CMatrix b, double rcond)
{
  const QRFactors f = pivoted_qr_inplace(a, rcond);
  apply_qh(a, f, b, f.rank);
  return {solve_basic(a, f, b), f.rank, {f.perm.begin(), f.perm.begin() + f.rank}};
}

LstsqResult lstsq_tall(CConstRef a, CConstRef b, double rcond)
{
  const Eigen::Index m = a.rows(), n = a.cols();
  if (m < 2 * n || n == 0)
  {
    return lstsq_qr(a, b, rcond);
  }

  // Pivots and rank from R alone: A^H A = R^H R, so column norms evolve identically.
  CMatrix work = a;
  CVector tau(n);
  check(LAPACKE_zgeqrf(LAPACK_COL_MAJOR, as_int(m), as_int(n), work.data(), as_int(m), tau.data()),
        "zgeqrf");
  CMatrix r = work.topRows(n).triangularView<Eigen::Upper>();
  const QRFactors f = pivoted_qr_inplace(r, rcond);

  LstsqResult out;
  out.rank = f.rank;
  out.x = CMatrix::Zero(n, b.cols());
  out.basis.assign(f.perm.begin(), f.perm.begin() + f.rank);
  const Eigen::Index k = f.rank;
  if (k == 0 || b.cols() == 0)
  {
    return out;
  }
  work.resize(m, k);
  for (Eigen::Index j = 0; j < k; ++j)
  {
    work.col(j) = a.col(out.basis[static_cast<std::size_t>(j)]);
  }
  tau.resize(k);
  check(LAPACKE_zgeqrf(LAPACK_COL_MAJOR, as_int(m), as_int(k), work.data(), as_int(m), tau.data()),
        "zgeqrf");
  r = work.topRows(k).triangularView<Eigen::Upper>();
  check(LAPACKE_zungqr(LAPACK_COL_MAJOR, as_int(m), as_int(k), as_int(k), work.data(), as_int(m),
                       tau.data()),
        "zungqr");
  CMatrix top = work.adjoint() * b;
  work.resize(0, 0);
  check(LAPACKE_ztrtrs(LAPACK_COL_MAJOR, 'U', 'N', 'N', as_int(k), as_int(top.cols()), r.data(),
                       as_int(k), top.data(), as_int(k)),
        "ztrtrs");
  for (Eigen::Index j = 0; j < k; ++j)
  {
    out.x.row(out.basis[static_cast<std::size_t>(j)]) = top.row(j);
  }
  return out;
}

QRFactors two_step_qr(CRef a, CRef b, double rcond, CMatrix &r)
{
  const Eigen::Index m = a.rows(), n = a.cols();
  if (m < n || n == 0)
  {
    QRFactors f = pivoted_qr_inplace(a, rcond);
    apply_qh(a, f, b);
    r = a.topRows(std::min(m, n));
    return f;
  }
  CVector tau(n);
  check(LAPACKE_zgeqrf(LAPACK_COL_MAJOR, as_int(m), as_int(n), a.data(), as_int(a.outerStride()),
                       tau.data()),
        "zgeqrf");
  if (b.cols() > 0)
  {
    check(LAPACKE_zunmqr(LAPACK_COL_MAJOR, 'L', 'C', as_int(m), as_int(b.cols()), as_int(n),
                         a.data(), as_int(a.outerStride()), tau.data(), b.data(),
                         as_int(b.outerStride())),
          "zunmqr");
  }
  r = a.topRows(n).triangularView<Eigen::Upper>();

  double cond_inv = 0.0;
  check(LAPACKE_ztrcon(LAPACK_COL_MAJOR, '1', 'U', 'N', as_int(n), r.data(), as_int(n), &cond_inv),
        "ztrcon");
  if (cond_inv > rcond)
  {
    QRFactors f;
    f.perm.resize(static_cast<std::size_t>(n));
    std::iota(f.perm.begin(), f.perm.end(), 0);
    f.rank = n;
    return f;
  }
  QRFactors f = pivoted_qr_inplace(r, rcond);
  apply_qh(r, f, b.topRows(n));
  return f;
}

LstsqResult lstsq_min_norm(CMatrix a, CMatrix b, double rcond)
{
  const lapack_int m = as_int(a.rows()), n = as_int(a.cols());
  const lapack_int nrhs = as_int(b.cols());
  CMatrix work = CMatrix::Zero(std::max(m, n), b.cols());
  work.topRows(m) = b;
  RVector s(std::min(m, n));
  lapack_int rank = 0;
  if (std::min(m, n) > 0 && nrhs > 0)
  {
    check(LAPACKE_zgelsd(LAPACK_COL_MAJOR, m, n, nrhs, a.data(), std::max(m, 1), work.data(),
                         as_int(work.rows()), s.data(), rcond, &rank),
          "zgelsd");
  }
  return {work.topRows(n), rank, {}};
}

Svd svd_full(CMatrix a)
{
  const lapack_int m = as_int(a.rows()), n = as_int(a.cols());
  Svd out;
  out.u.resize(m, m);
  out.vh.resize(n, n);
  out.s.resize(std::min(m, n));
  check(LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'A', m, n, a.data(), std::max(m, 1), out.s.data(),
                       out.u.data(), std::max(m, 1), out.vh.data(), std::max(n, 1)),
        "zgesdd");
  return out;
}

}  // namespace bimfs
