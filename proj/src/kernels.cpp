// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#include "bimfs/kernels.hpp"

#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

namespace bimfs
{

namespace
{

constexpr double coincidence_tol = 1e-12;

Eigen::Matrix3d cross_matrix(const Vec3 &v)
{
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

double separation(const Vec3 &x, const Vec3 &y)
{
  const double r = (x - y).norm();
  if (r < coincidence_tol)
  {
    std::ostringstream msg;
    msg << "kernel evaluated at coincident points (" << x.transpose() << ") and ("
        << y.transpose() << ")";
    throw CoincidentPointsError(msg.str());
  }
  return r;
}

}  // namespace

IncidentWave IncidentWave::from_k(double omega, const Vec3 &k_vec, const CVec3 &polarization,
                                  double dx, double dy)
{
  IncidentWave w;
  w.omega = omega;
  w.k_vec = k_vec;
  w.polarization = polarization;
  w.alpha = std::exp(I * (k_vec.x() * dx));
  w.beta = std::exp(I * (k_vec.y() * dy));
  return w;
}

IncidentWave IncidentWave::from_angles(double omega, double phi, double theta,
                                       const CVec3 &polarization, const Material &top,
                                       double dx, double dy)
{
  const double k0 = std::real(top.wavenumber(omega));
  const Vec3 k(k0 * std::sin(phi) * std::cos(theta), k0 * std::sin(phi) * std::sin(theta),
               k0 * std::cos(phi));
  if (k.z() > 0.0)
  {
    spdlog::warn("incident wavevector points upward (k_z = {}); phi is measured from +z", k.z());
  }
  return from_k(omega, k, polarization, dx, dy);
}

CVec3 IncidentWave::e_field(const Vec3 &x) const
{
  return polarization * std::exp(I * k_vec.dot(x));
}

CVec3 IncidentWave::h_field(const Vec3 &x, cplx mu_top) const
{
  const CVec3 kc = k_vec.cast<cplx>();
  return kc.cross(polarization) * (std::exp(I * k_vec.dot(x)) / (omega * mu_top));
}

CMat3 green_E_dyadic(const Medium &med, const Vec3 &x, const Vec3 &y)
{
  const Vec3 rv = x - y;
  const double r = separation(x, y);
  const Vec3 rh = rv / r;
  const cplx kr = med.k * r;
  const cplx g = std::exp(I * kr) / r;
  const cplx a = 1.0 + I / kr - 1.0 / (kr * kr);
  const cplx b = -1.0 - 3.0 * I / kr + 3.0 / (kr * kr);
  const cplx pref = I * med.omega / (4.0 * pi) * g;
  CMat3 d = (b * pref) * (rh * rh.transpose()).cast<cplx>();
  d.diagonal().array() += a * pref;
  return d;
}

CMat3 green_H_dyadic(const Medium &med, const Vec3 &x, const Vec3 &y)
{
  const Vec3 rv = x - y;
  const double r = separation(x, y);
  const cplx psi = std::exp(I * med.k * r) * (I * med.k * r - 1.0) / (r * r * r);
  return (psi / (4.0 * pi * med.mu)) * cross_matrix(rv).cast<cplx>();
}

void green_EH_dyadic(const Medium &med, const Vec3 &x, const Vec3 &y, CMat3 &e, CMat3 &h)
{
  const Vec3 rv = x - y;
  const double r = separation(x, y);
  const Vec3 rh = rv / r;
  const cplx kr = med.k * r;
  const cplx ex = std::exp(I * kr);
  const cplx a = 1.0 + I / kr - 1.0 / (kr * kr);
  const cplx b = -1.0 - 3.0 * I / kr + 3.0 / (kr * kr);
  const cplx pref = I * med.omega / (4.0 * pi) * ex / r;
  e = (b * pref) * (rh * rh.transpose()).cast<cplx>();
  e.diagonal().array() += a * pref;
  const cplx psi = ex * (kr * I - 1.0) / (r * r * r);
  h = (psi / (4.0 * pi * med.mu)) * cross_matrix(rv).cast<cplx>();
}

CMat3 dgreen_dyadic(KernelKind kind, const Medium &med, const Vec3 &x, const Vec3 &y,
                    const Vec3 &dir)
{
  const Vec3 rv = x - y;
  const double r = separation(x, y);
  const Vec3 rh = rv / r;
  const double rd = rh.dot(dir);
  const cplx k = med.k;
  const cplx e = std::exp(I * k * r);
  const double r2 = r * r, r3 = r2 * r, r4 = r3 * r;
  if (kind == KernelKind::electric)
  {
    // G = pref (phi1 I + phi2 rh rh^T); primes are d/dr.
    const cplx phi2 = e * (-1.0 / r - 3.0 * I / (k * r2) + 3.0 / (k * k * r3));
    const cplx dphi1 = e * (I * k / r - 2.0 / r2 - 3.0 * I / (k * r3) + 3.0 / (k * k * r4));
    const cplx dphi2 = e * (-I * k / r + 4.0 / r2 + 9.0 * I / (k * r3) - 9.0 / (k * k * r4));
    const cplx pref = I * med.omega / (4.0 * pi);
    const Vec3 u = dir - rd * rh;
    CMat3 d = (pref * dphi2 * rd) * (rh * rh.transpose()).cast<cplx>();
    d += (pref * phi2 / r) * (u * rh.transpose() + rh * u.transpose()).cast<cplx>();
    d.diagonal().array() += pref * dphi1 * rd;
    return d;
  }
  const cplx psi = e * (I * k / r2 - 1.0 / r3);
  const cplx dpsi = e * (-k * k / r2 - 3.0 * I * k / r3 + 3.0 / r4);
  const cplx pref = 1.0 / (4.0 * pi * med.mu);
  return pref * ((dpsi * rd) * cross_matrix(rv).cast<cplx>() + psi * cross_matrix(dir).cast<cplx>());
}

CVec3 green_E(const Medium &med, const Vec3 &x, const Vec3 &y, const CVec3 &p)
{
  return green_E_dyadic(med, x, y) * p;
}

CVec3 green_H(const Medium &med, const Vec3 &x, const Vec3 &y, const CVec3 &p)
{
  return green_H_dyadic(med, x, y) * p;
}

CVec3 dgreen_dir(KernelKind kind, const Medium &med, const Vec3 &x, const Vec3 &y,
                 const CVec3 &p, const Vec3 &dir)
{
  return dgreen_dyadic(kind, med, x, y, dir) * p;
}

CMat3 near_sum_dyadic(KernelKind kind, const Medium &med, const Lattice &lat, const Vec3 &x,
                      const Vec3 &y, const Vec3 *dir)
{
  CMat3 acc = CMat3::Zero();
  for (int m = -1; m <= 1; ++m)
  {
    for (int n = -1; n <= 1; ++n)
    {
      const auto [xs, ys] = lat.image(x, y, m, n);
      try
      {
        CMat3 d;
        if (dir)
        {
          d = dgreen_dyadic(kind, med, xs, ys, *dir);
        }
        else if (kind == KernelKind::electric)
        {
          d = green_E_dyadic(med, xs, ys);
        }
        else
        {
          d = green_H_dyadic(med, xs, ys);
        }
        acc += lat.weight(m, n) * d;
      }
      catch (const CoincidentPointsError &err)
      {
        std::ostringstream msg;
        msg << err.what() << " in near-sum image (m, n) = (" << m << ", " << n << ")";
        throw CoincidentPointsError(msg.str(), m, n);
      }
    }
  }
  return acc;
}

void near_sum_EH(const Medium &med, const Lattice &lat, const Vec3 &x, const Vec3 &y, CMat3 &e,
                 CMat3 &h)
{
  e.setZero();
  h.setZero();
  CMat3 de, dh;
  for (int m = -1; m <= 1; ++m)
  {
    for (int n = -1; n <= 1; ++n)
    {
      const auto [xs, ys] = lat.image(x, y, m, n);
      try
      {
        green_EH_dyadic(med, xs, ys, de, dh);
      }
      catch (const CoincidentPointsError &err)
      {
        std::ostringstream msg;
        msg << err.what() << " in near-sum image (m, n) = (" << m << ", " << n << ")";
        throw CoincidentPointsError(msg.str(), m, n);
      }
      const cplx w = lat.weight(m, n);
      e += w * de;
      h += w * dh;
    }
  }
}

CVec3 near_sum(KernelKind kind, const Medium &med, const Lattice &lat, const Vec3 &x,
               const Vec3 &y, const CVec3 &p)
{
  return near_sum_dyadic(kind, med, lat, x, y) * p;
}

RBMode rb_mode(int m, int n, const IncidentWave &wave, double dx, double dy, cplx k_layer)
{
  RBMode mode;
  mode.m = m;
  mode.n = n;
  mode.kappa_x = wave.k_vec.x() + 2.0 * pi * m / dx;
  mode.kappa_y = wave.k_vec.y() + 2.0 * pi * n / dy;
  const cplx arg = k_layer * k_layer - mode.kappa_x * mode.kappa_x - mode.kappa_y * mode.kappa_y;
  cplx kz = std::sqrt(arg);
  if (kz.imag() < 0.0 || (kz.imag() == 0.0 && kz.real() < 0.0))
  {
    kz = -kz;
  }
  mode.kappa_z = kz;
  if (std::abs(kz) < 1e-10 * std::abs(k_layer))
  {
    spdlog::warn("Wood anomaly: mode ({}, {}) has |kappa_z| = {:.3e}", m, n, std::abs(kz));
  }
  return mode;
}

RBBasisValue rb_basis(const RBMode &mode, const Vec3 &x, RadiationSide)
{
  const cplx v = std::exp(I * (mode.kappa_x * x.x() + mode.kappa_y * x.y()));
  return {v, I * mode.kappa_z};
}

std::vector<RBMode> rb_modes(int order, const IncidentWave &wave, double dx, double dy,
                             cplx k_layer)
{
  std::vector<RBMode> modes;
  modes.reserve(static_cast<std::size_t>((2 * order + 1) * (2 * order + 1)));
  for (int m = -order; m <= order; ++m)
  {
    for (int n = -order; n <= order; ++n)
    {
      modes.push_back(rb_mode(m, n, wave, dx, dy, k_layer));
    }
  }
  return modes;
}

}  // namespace bimfs
