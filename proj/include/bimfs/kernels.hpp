// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "bimfs/geometry.hpp"
#include "bimfs/types.hpp"

namespace bimfs
{

// Per-layer constants bound into every kernel evaluation. The angular frequency of the
// electric kernel prefactor i omega / (4 pi) lives here, so callers never pass it separately.
struct Medium
{
  double omega = 1.0;
  cplx k{1.0};
  cplx eps{1.0};
  cplx mu{1.0};

  static Medium from_material(const Material &mat, double omega)
  {
    return {omega, mat.wavenumber(omega), mat.eps_rel, mat.mu_rel};
  }
};

// Plane wave E^inc exp(i k . x) incident from the top layer.
struct IncidentWave
{
  double omega = 1.0;
  Vec3 k_vec = Vec3::Zero();
  CVec3 polarization = CVec3::Zero();
  cplx alpha{1.0};
  cplx beta{1.0};

  // Explicit wavevector; Bloch phases follow from the cell periods.
  static IncidentWave from_k(double omega, const Vec3 &k_vec, const CVec3 &polarization,
                             double dx, double dy);
  // k = k0 (sin(phi) cos(theta), sin(phi) sin(theta), cos(phi)) with k0 = omega sqrt(eps mu)
  // of the top layer; phi is measured from +z, so phi in (pi/2, pi] is downward incidence.
  static IncidentWave from_angles(double omega, double phi, double theta,
                                  const CVec3 &polarization, const Material &top, double dx,
                                  double dy);

  CVec3 e_field(const Vec3 &x) const;
  CVec3 h_field(const Vec3 &x, cplx mu_top) const;
};

enum class KernelKind
{
  electric,
  magnetic
};

// The 3x3 dyadic D with G(x, y, p) = D p.
CMat3 green_E_dyadic(const Medium &med, const Vec3 &x, const Vec3 &y);
CMat3 green_H_dyadic(const Medium &med, const Vec3 &x, const Vec3 &y);
// Both dyadics at once, sharing the exponential.
void green_EH_dyadic(const Medium &med, const Vec3 &x, const Vec3 &y, CMat3 &e, CMat3 &h);
// Derivative of the dyadic with respect to the target x along `dir`.
CMat3 dgreen_dyadic(KernelKind kind, const Medium &med, const Vec3 &x, const Vec3 &y,
                    const Vec3 &dir);

CVec3 green_E(const Medium &med, const Vec3 &x, const Vec3 &y, const CVec3 &p);
CVec3 green_H(const Medium &med, const Vec3 &x, const Vec3 &y, const CVec3 &p);
CVec3 dgreen_dir(KernelKind kind, const Medium &med, const Vec3 &x, const Vec3 &y,
                 const CVec3 &p, const Vec3 &dir);

// How the nine nearest images enter the near sum with weight alpha^m beta^n.
//  shift_target: kernel(x + m e_x, y + n e_y)
//  shift_source: kernel(x, y + m e_x + n e_y)
enum class NearSumConvention
{
  shift_target,
  shift_source
};

struct Lattice
{
  double dx = 1.0;
  double dy = 1.0;
  cplx alpha{1.0};
  cplx beta{1.0};
  NearSumConvention convention = NearSumConvention::shift_target;

  // Target/source pair for image (m, n) under the active convention.
  std::pair<Vec3, Vec3> image(const Vec3 &x, const Vec3 &y, int m, int n) const
  {
    if (convention == NearSumConvention::shift_target)
    {
      return {x + Vec3(m * dx, 0.0, 0.0), y + Vec3(0.0, n * dy, 0.0)};
    }
    return {x, y + Vec3(m * dx, n * dy, 0.0)};
  }
  cplx weight(int m, int n) const { return ipow(alpha, m) * ipow(beta, n); }

  static cplx ipow(cplx z, int p)
  {
    cplx out{1.0};
    const cplx base = p < 0 ? 1.0 / z : z;
    for (int i = 0; i < std::abs(p); ++i)
    {
      out *= base;
    }
    return out;
  }
};

// Sum over |m|, |n| <= 1 of alpha^m beta^n kernel(image). Passing `dir` differentiates the
// kernel along it.
CMat3 near_sum_dyadic(KernelKind kind, const Medium &med, const Lattice &lat, const Vec3 &x,
                      const Vec3 &y, const Vec3 *dir = nullptr);
// Near sums of G_E and G_H together.
void near_sum_EH(const Medium &med, const Lattice &lat, const Vec3 &x, const Vec3 &y, CMat3 &e,
                 CMat3 &h);
CVec3 near_sum(KernelKind kind, const Medium &med, const Lattice &lat, const Vec3 &x,
               const Vec3 &y, const CVec3 &p);

struct RBMode
{
  int m = 0;
  int n = 0;
  double kappa_x = 0.0;
  double kappa_y = 0.0;
  cplx kappa_z{0.0};

  bool propagating() const { return std::abs(kappa_z.imag()) <= 1e-12 * std::abs(kappa_z); }
};

// kappa_z is the branch with Im >= 0, and Re >= 0 when purely real. Warns near a Wood anomaly.
RBMode rb_mode(int m, int n, const IncidentWave &wave, double dx, double dy, cplx k_layer);

enum class RadiationSide
{
  up,
  down
};

struct RBBasisValue
{
  cplx value;
  cplx normal_derivative_factor;
};

// exp(i (kappa_x x + kappa_y y)) on a radiation surface, and the outward normal derivative
// factor i kappa_z shared by both sides.
RBBasisValue rb_basis(const RBMode &mode, const Vec3 &x, RadiationSide side);

// All (2R+1)^2 modes, row-major in (m, n) with m, n = -R..R.
std::vector<RBMode> rb_modes(int order, const IncidentWave &wave, double dx, double dy,
                             cplx k_layer);

}  // namespace bimfs
