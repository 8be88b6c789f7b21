// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "bimfs/solver.hpp"

namespace bimfs
{

// Layer containing x after wrapping (x, y) into the unit cell. Throws GeometryError within
// 1e-12 of an interface.
std::size_t locate_layer(const LayerStack &stack, const Vec3 &x);

struct FieldSample
{
  Vec3 position = Vec3::Zero();
  std::size_t layer = 0;
  CVec3 E = CVec3::Zero();
  CVec3 H = CVec3::Zero();
};

// Scattered fields of a solution. Points outside the unit cell are mapped back with the
// Bloch phases.
class FieldEvaluator
{
public:
  FieldEvaluator(const Model &model, const Solution &solution);

  CVec3 E(const Vec3 &x) const;
  CVec3 H(const Vec3 &x) const;
  FieldSample sample(const Vec3 &x) const;
  std::vector<FieldSample> sample(const std::vector<Vec3> &points) const;

  // Field in a given layer's representation, without locating or wrapping.
  void eval_in_layer(std::size_t layer, const Vec3 &x, CVec3 *e, CVec3 *h) const;

  const Model &model() const { return model_; }

private:
  struct LayerSources
  {
    std::vector<Vec3> points;
    std::vector<CVec3> moments;  // c_tau tau + c_sigma sigma
    std::vector<Vec3> proxies;
    std::vector<CVec3> proxy_moments;
  };

  const Model &model_;
  std::vector<LayerSources> layers_;
};

CVec3 eval_E(const FieldEvaluator &fields, const Vec3 &x);
CVec3 eval_H(const FieldEvaluator &fields, const Vec3 &x);

// Exact reflected (above) or transmitted (below) plane wave for a flat interface at
// z = height between two homogeneous half-spaces. Interface conditions are solved directly,
// so any polarization and any (eps, mu) pair is handled.
struct FresnelSolution
{
  Vec3 k_reflected = Vec3::Zero();
  CVec3 k_transmitted = CVec3::Zero();
  CVec3 reflected = CVec3::Zero();    // amplitude at the interface origin
  CVec3 transmitted = CVec3::Zero();
  double height = 0.0;
};

FresnelSolution fresnel_solve(const Material &top, const Material &bottom,
                              const IncidentWave &wave, double height = 0.0);
CVec3 fresnel_oracle(const FresnelSolution &fs, const Vec3 &x);
// Convenience for a two-layer flat stack; throws GeometryError otherwise.
CVec3 fresnel_oracle(const LayerStack &stack, const IncidentWave &wave, const Vec3 &x);

// Closed-form TE amplitude coefficients (r, t) for the E field tangential to the interface.
std::pair<cplx, cplx> fresnel_te(cplx kz0, cplx kz1, cplx mu0, cplx mu1);

struct ModePower
{
  int m = 0;
  int n = 0;
  double reflected = 0.0;
  double transmitted = 0.0;
};

struct EnergyReport
{
  double incident = 0.0;
  double reflected = 0.0;
  double transmitted = 0.0;
  double flux_error = 0.0;
  std::vector<ModePower> modes;  // propagating modes only

  double reflectance() const { return reflected / incident; }
  double transmittance() const { return transmitted / incident; }
};

EnergyReport energy_report(const Model &model, const Solution &solution);

struct DivergenceStats
{
  double max = 0.0;   // normalized by max |k| |E| over the samples
  double mean = 0.0;
  double max_abs = 0.0;
  std::size_t samples = 0;
};

struct InteriorPoint
{
  std::size_t layer;
  Vec3 x;
};

// Seeded points over the central 80% of the cell and the middle 80% of each layer, at least
// `margin` away from every interface and MFS source.
std::vector<InteriorPoint> sample_interior(const Model &model, std::size_t n, double margin,
                                           unsigned long long seed);

// Six-point central-difference divergence of an arbitrary field at x.
cplx fd_divergence(const std::function<CVec3(const Vec3 &)> &field, const Vec3 &x, double h);

// Central-difference divergence at seeded random interior points.
DivergenceStats divergence_check(const FieldEvaluator &fields, std::size_t n_samples, double h,
                                 unsigned long long seed);

double pointwise_error(const FieldEvaluator &fields, cplx reference, const Vec3 &x,
                       int component);

}  // namespace bimfs
