// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#include "bimfs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "bimfs/expression.hpp"

namespace bimfs
{

Interface Interface::flat(double offset)
{
  Interface iface([offset](double, double) { return HeightSample{offset, 0.0, 0.0}; },
                  "flat(offset=" + std::to_string(offset) + ")");
  iface.flat_ = true;
  return iface;
}

Interface Interface::sine1d(double amp, double cycles, double dx, double offset)
{
  const double w = 2.0 * pi * cycles / dx;
  return Interface(
      [=](double x, double) {
        return HeightSample{amp * std::sin(w * x) + offset, amp * w * std::cos(w * x), 0.0};
      },
      "sine1d");
}

Interface Interface::sinecos(double amp, double cycles_x, double cycles_y, double dx, double dy,
                             double offset)
{
  const double wx = 2.0 * pi * cycles_x / dx;
  const double wy = 2.0 * pi * cycles_y / dy;
  return Interface(
      [=](double x, double y) {
        const double sx = std::sin(wx * x), cx = std::cos(wx * x);
        const double sy = std::sin(wy * y), cy = std::cos(wy * y);
        return HeightSample{amp * sx * cy + offset, amp * wx * cx * cy, -amp * wy * sx * sy};
      },
      "sinecos");
}

Interface Interface::expression(const std::string &expr, double offset)
{
  HeightExpression compiled(expr);
  return Interface(
      [compiled, offset](double x, double y) {
        HeightSample s = compiled(x, y);
        s.z += offset;
        return s;
      },
      "expression(" + expr + ")");
}

std::pair<double, double> LayerStack::height_range(std::size_t l) const
{
  constexpr int n = 97;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i < n; ++i)
  {
    for (int j = 0; j < n; ++j)
    {
      const double z = interfaces[l].height(-0.5 * dx + i * dx / n, -0.5 * dy + j * dy / n);
      lo = std::min(lo, z);
      hi = std::max(hi, z);
    }
  }
  return {lo, hi};
}

void LayerStack::validate() const
{
  if (!(dx > 0.0) || !(dy > 0.0))
  {
    throw GeometryError("cell periods must be positive");
  }
  if (interfaces.empty())
  {
    throw GeometryError("a layer stack needs at least one interface");
  }
  if (materials.size() != interfaces.size() + 1)
  {
    std::ostringstream msg;
    msg << "layer stack has " << interfaces.size() << " interfaces but " << materials.size()
        << " materials (expected " << interfaces.size() + 1 << ")";
    throw GeometryError(msg.str());
  }
  for (std::size_t l = 0; l + 1 < interfaces.size(); ++l)
  {
    const auto [lo_above, hi_above] = height_range(l);
    const auto [lo_below, hi_below] = height_range(l + 1);
    if (!(lo_above > hi_below))
    {
      std::ostringstream msg;
      msg << "interfaces " << l << " and " << l + 1 << " intersect or touch (min f_" << l
          << " = " << lo_above << ", max f_" << l + 1 << " = " << hi_below << ")";
      throw GeometryError(msg.str());
    }
  }
}

namespace
{

int exact_sqrt(int n, const char *what)
{
  const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (r * r != n)
  {
    throw GeometryError(std::string(what) + " = " + std::to_string(n) +
                        " is not a perfect square");
  }
  return r;
}

}  // namespace

void DiscretizationParams::validate() const
{
  if (n_src <= 0 || n_proxy <= 0 || n_wall <= 0)
  {
    throw GeometryError("n_src, n_proxy and n_wall must be positive");
  }
  exact_sqrt(n_src, "n_src");
  exact_sqrt(n_wall, "n_wall");
  if (rb_order < 0)
  {
    throw GeometryError("rb_order must be non-negative");
  }
  if (!(offset_delta > 0.0))
  {
    throw GeometryError("offset_delta must be positive");
  }
  if (proxy_radius && !(*proxy_radius > 0.0))
  {
    throw GeometryError("proxy_radius must be positive");
  }
  if (!(div_stencil_h > 0.0))
  {
    throw GeometryError("div_stencil_h must be positive");
  }
}

int DiscretizationParams::src_side() const { return exact_sqrt(n_src, "n_src"); }

int DiscretizationParams::target_side() const
{
  return static_cast<int>(std::ceil(1.1 * src_side() - 1e-12));
}

int DiscretizationParams::wall_side() const { return exact_sqrt(n_wall, "n_wall"); }

std::pair<Vec3, Vec3> tangent_frame(const Vec3 &normal, double fx)
{
  const Vec3 t = Vec3(1.0, 0.0, fx).normalized();
  const Vec3 s = normal.cross(t);
  return {t, s};
}

SurfaceSamples sample_interface(const Interface &iface, double dx, double dy, int m_side)
{
  if (m_side < 1)
  {
    throw GeometryError("sample_interface needs m_side >= 1");
  }
  SurfaceSamples out;
  const auto n = static_cast<std::size_t>(m_side) * static_cast<std::size_t>(m_side);
  out.points.reserve(n);
  out.normals.reserve(n);
  out.tangents_t.reserve(n);
  out.tangents_s.reserve(n);
  for (int i = 0; i < m_side; ++i)
  {
    const double x = -0.5 * dx + i * dx / m_side;
    for (int j = 0; j < m_side; ++j)
    {
      const double y = -0.5 * dy + j * dy / m_side;
      const HeightSample h = iface.sample(x, y);
      Vec3 normal = Vec3(-h.fx, -h.fy, 1.0).normalized();
      if (normal.z() < 0.0)
      {
        normal = -normal;
      }
      auto [t, s] = tangent_frame(normal, h.fx);
      out.points.emplace_back(x, y, h.z);
      out.normals.push_back(normal);
      out.tangents_t.push_back(t);
      out.tangents_s.push_back(s);
    }
  }
  return out;
}

SourceSet build_sources(const SurfaceSamples &samples, double delta, const Interface *above,
                        const Interface *below)
{
  if (!(delta > 0.0))
  {
    throw GeometryError("source offset must be positive");
  }
  SourceSet out;
  out.y_plus.reserve(samples.size());
  out.y_minus.reserve(samples.size());
  std::size_t crossed = 0;
  for (std::size_t j = 0; j < samples.size(); ++j)
  {
    const Vec3 yp = samples.points[j] + delta * samples.normals[j];
    const Vec3 ym = samples.points[j] - delta * samples.normals[j];
    if (above && yp.z() >= above->height(yp.x(), yp.y()))
    {
      ++crossed;
    }
    if (below && ym.z() <= below->height(ym.x(), ym.y()))
    {
      ++crossed;
    }
    out.y_plus.push_back(yp);
    out.y_minus.push_back(ym);
  }
  out.tau = samples.tangents_t;
  out.sigma = samples.tangents_s;
  if (crossed > 0)
  {
    spdlog::warn("{} MFS sources cross an adjacent interface (offset {})", crossed, delta);
  }
  return out;
}

ProxySet build_proxies(int n_proxy, double radius, const Vec3 &center)
{
  if (n_proxy < 1 || !(radius > 0.0))
  {
    throw GeometryError("build_proxies needs n_proxy >= 1 and radius > 0");
  }
  ProxySet out;
  out.center = center;
  out.radius = radius;
  const double golden = pi * (3.0 - std::sqrt(5.0));
  for (int j = 0; j < n_proxy; ++j)
  {
    const double zbar = 1.0 - (2.0 * j + 1.0) / n_proxy;
    const double rbar = std::sqrt(std::max(0.0, 1.0 - zbar * zbar));
    const double phi = j * golden;
    const Vec3 u(rbar * std::cos(phi), rbar * std::sin(phi), zbar);
    Vec3 t(-std::sin(phi), std::cos(phi), 0.0);
    if (rbar < 1e-12)
    {
      t = Vec3(1.0, 0.0, 0.0);
    }
    out.points.push_back(center + radius * u);
    out.rho.push_back(t);
    out.xi.push_back(u.cross(t));
  }
  return out;
}

VerticalLayout vertical_layout(const LayerStack &stack, const DiscretizationParams &params)
{
  const std::size_t n_if = stack.num_interfaces();
  const double margin = 0.5 * std::max(stack.dx, stack.dy);
  const auto [lo_top, hi_top] = stack.height_range(0);
  const auto [lo_bot, hi_bot] = stack.height_range(n_if - 1);

  VerticalLayout out;
  out.z_u = params.z_u.value_or(hi_top + margin);
  out.z_d = params.z_d.value_or(lo_bot - margin);
  if (!(out.z_u > hi_top))
  {
    throw GeometryError("z_u must lie above the top interface");
  }
  if (!(out.z_d < lo_bot))
  {
    throw GeometryError("z_d must lie below the bottom interface");
  }
  out.layer_extent.resize(n_if + 1);
  out.layer_extent[0] = {lo_top, out.z_u};
  for (std::size_t l = 1; l < n_if; ++l)
  {
    out.layer_extent[l] = {stack.height_range(l).first, stack.height_range(l - 1).second};
  }
  out.layer_extent[n_if] = {out.z_d, hi_bot};
  return out;
}

namespace
{

WallSet build_walls_impl(const LayerStack &stack, const DiscretizationParams &params,
                         const VerticalLayout &vert, std::size_t layer)
{
  const std::size_t n_if = stack.num_interfaces();
  if (layer > n_if)
  {
    throw GeometryError("build_walls: layer " + std::to_string(layer) + " does not exist");
  }
  const int n = params.wall_side();
  const double dx = stack.dx, dy = stack.dy;

  // Bounding heights of this layer at (x, y).
  auto bounds = [&](double x, double y) {
    const double lower = layer == n_if ? vert.z_d : stack.interfaces[layer].height(x, y);
    const double upper = layer == 0 ? vert.z_u : stack.interfaces[layer - 1].height(x, y);
    if (!(upper > lower))
    {
      std::ostringstream msg;
      msg << "layer " << layer << " has no vertical extent at (" << x << ", " << y << ")";
      throw GeometryError(msg.str());
    }
    return std::pair{lower, upper};
  };

  WallSet out;
  const Vec3 ex(dx, 0.0, 0.0), ey(0.0, dy, 0.0);
  for (int a = 0; a < n; ++a)
  {
    for (int b = 0; b < n; ++b)
    {
      const double t = (b + 0.5) / n;
      {
        const double x = -0.5 * dx, y = -0.5 * dy + a * dy / n;
        const auto [lo, hi] = bounds(x, y);
        const Vec3 p(x, y, (1.0 - t) * lo + t * hi);
        out.left.push_back(p);
        out.right.push_back(p + ex);
      }
      {
        const double x = -0.5 * dx + a * dx / n, y = -0.5 * dy;
        const auto [lo, hi] = bounds(x, y);
        const Vec3 p(x, y, (1.0 - t) * lo + t * hi);
        out.back.push_back(p);
        out.front.push_back(p + ey);
      }
    }
  }
  if (layer == 0 || layer == n_if)
  {
    const double z = layer == 0 ? vert.z_u : vert.z_d;
    for (int i = 0; i < n; ++i)
    {
      for (int j = 0; j < n; ++j)
      {
        out.radiation.emplace_back(-0.5 * dx + i * dx / n, -0.5 * dy + j * dy / n, z);
      }
    }
  }
  return out;
}

}  // namespace

WallSet build_walls(const LayerStack &stack, const DiscretizationParams &params, std::size_t layer)
{
  return build_walls_impl(stack, params, vertical_layout(stack, params), layer);
}

Discretization discretize(const LayerStack &stack, const DiscretizationParams &params)
{
  stack.validate();
  params.validate();
  Discretization out;
  out.vertical = vertical_layout(stack, params);
  const std::size_t n_if = stack.num_interfaces();
  for (std::size_t l = 0; l < n_if; ++l)
  {
    const Interface &iface = stack.interfaces[l];
    out.targets.push_back(sample_interface(iface, stack.dx, stack.dy, params.target_side()));
    const SurfaceSamples grid = sample_interface(iface, stack.dx, stack.dy, params.src_side());
    out.sources.push_back(build_sources(grid, params.offset_delta,
                                       l > 0 ? &stack.interfaces[l - 1] : nullptr,
                                       l + 1 < n_if ? &stack.interfaces[l + 1] : nullptr));
  }
  const double radius = params.proxy_radius.value_or(2.0 * std::max(stack.dx, stack.dy));
  for (std::size_t l = 0; l <= n_if; ++l)
  {
    const auto [lo, hi] = out.vertical.layer_extent[l];
    out.proxies.push_back(build_proxies(params.n_proxy, radius, Vec3(0.0, 0.0, 0.5 * (lo + hi))));
    out.walls.push_back(build_walls_impl(stack, params, out.vertical, l));
  }
  return out;
}

}  // namespace bimfs
