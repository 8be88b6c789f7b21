// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bimfs/types.hpp"

namespace bimfs
{

struct Material
{
  cplx eps_rel{1.0};
  cplx mu_rel{1.0};

  cplx wavenumber(double omega) const { return omega * std::sqrt(eps_rel * mu_rel); }
  bool operator==(const Material &) const = default;
};

// Height z = f(x, y) and its analytic gradient at one point.
struct HeightSample
{
  double z;
  double fx;
  double fy;
};

// A bi-periodic interface z = f(x, y). Built-in shapes are periodic by construction.
class Interface
{
public:
  using HeightFn = std::function<HeightSample(double, double)>;

  Interface() = default;
  Interface(HeightFn fn, std::string description)
    : fn_(std::move(fn)), description_(std::move(description))
  {
  }

  static Interface flat(double offset = 0.0);
  // amp * sin(2 pi cycles x / dx) + offset
  static Interface sine1d(double amp, double cycles, double dx, double offset = 0.0);
  // amp * sin(2 pi cx x / dx) * cos(2 pi cy y / dy) + offset
  static Interface sinecos(double amp, double cycles_x, double cycles_y, double dx, double dy,
                           double offset = 0.0);
  // Arithmetic expression in x and y; the gradient is obtained by forward differentiation.
  static Interface expression(const std::string &expr, double offset = 0.0);

  HeightSample sample(double x, double y) const { return fn_(x, y); }
  double height(double x, double y) const { return fn_(x, y).z; }
  const std::string &description() const { return description_; }
  bool is_flat() const { return flat_; }

private:
  HeightFn fn_;
  std::string description_;
  bool flat_ = false;
};

// Ordered top to bottom: interfaces[l] separates layer l (above) from layer l + 1 (below).
struct LayerStack
{
  double dx = 1.0;
  double dy = 1.0;
  std::vector<Interface> interfaces;
  std::vector<Material> materials;

  std::size_t num_interfaces() const { return interfaces.size(); }
  std::size_t num_layers() const { return materials.size(); }

  // Throws GeometryError when list lengths disagree or layers intersect.
  void validate() const;

  // Extremes of interface l over the unit cell, from a dense sampling grid.
  std::pair<double, double> height_range(std::size_t l) const;
};

struct DiscretizationParams
{
  int n_src = 400;      // MFS sources per interface side, a perfect square
  int n_proxy = 400;    // proxy points per layer
  int n_wall = 400;     // points per side wall and per radiation surface, a perfect square
  int rb_order = 10;    // Rayleigh-Bloch truncation |m|, |n| <= rb_order
  double offset_delta = 0.15;
  std::optional<double> proxy_radius;  // default 2 max(dx, dy)
  std::optional<double> z_u;           // default max f_0 + max(dx, dy) / 2
  std::optional<double> z_d;           // default min f_L - max(dx, dy) / 2
  double div_stencil_h = 1e-3;
  unsigned long long rng_seed = 1;

  void validate() const;
  bool operator==(const DiscretizationParams &) const = default;
  int src_side() const;
  int target_side() const;  // ceil(1.1 sqrt(n_src))
  int wall_side() const;
};

struct SurfaceSamples
{
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<Vec3> tangents_t;
  std::vector<Vec3> tangents_s;

  std::size_t size() const { return points.size(); }
};

struct SourceSet
{
  std::vector<Vec3> y_plus;
  std::vector<Vec3> y_minus;
  std::vector<Vec3> tau;
  std::vector<Vec3> sigma;

  std::size_t size() const { return y_plus.size(); }
};

struct ProxySet
{
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  std::vector<Vec3> points;
  std::vector<Vec3> rho;
  std::vector<Vec3> xi;

  std::size_t size() const { return points.size(); }
};

struct WallSet
{
  std::vector<Vec3> left, right;  // right[i] = left[i] + (dx, 0, 0)
  std::vector<Vec3> back, front;  // front[i] = back[i] + (0, dy, 0)
  std::vector<Vec3> radiation;    // z = z_u for the top layer, z = z_d for the bottom one
};

// Uniform half-open m_side x m_side grid over the cell, lifted onto the interface.
SurfaceSamples sample_interface(const Interface &iface, double dx, double dy, int m_side);

// Orthonormal right-handed frame (t, s) with t along (1, 0, f_x).
std::pair<Vec3, Vec3> tangent_frame(const Vec3 &normal, double fx);

// Sources pushed +-delta along the unit normal. Logs a warning when `neighbours` is given
// and a source crosses an adjacent interface.
SourceSet build_sources(const SurfaceSamples &samples, double delta,
                        const Interface *above = nullptr, const Interface *below = nullptr);

// Fibonacci sphere with tangent pairs (azimuthal, polar).
ProxySet build_proxies(int n_proxy, double radius, const Vec3 &center);

// Resolved vertical placement of the radiation surfaces and layer extents.
struct VerticalLayout
{
  double z_u;
  double z_d;
  // [bottom, top] of each layer's vertical extent over the cell
  std::vector<std::pair<double, double>> layer_extent;
};

VerticalLayout vertical_layout(const LayerStack &stack, const DiscretizationParams &params);

WallSet build_walls(const LayerStack &stack, const DiscretizationParams &params,
                    std::size_t layer);

// Every point set of a discretised problem.
struct Discretization
{
  VerticalLayout vertical;
  std::vector<SurfaceSamples> targets;  // per interface
  std::vector<SourceSet> sources;       // per interface
  std::vector<ProxySet> proxies;        // per layer
  std::vector<WallSet> walls;           // per layer
};

Discretization discretize(const LayerStack &stack, const DiscretizationParams &params);

}  // namespace bimfs
