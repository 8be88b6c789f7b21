// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#include "bimfs/fields.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "bimfs/parallel.hpp"

namespace bimfs
{

namespace
{

// (x0, m, n) with x = x0 + m dx + n dy and x0 in the centred unit cell.
struct Wrapped
{
  Vec3 x;
  int m;
  int n;
};

Wrapped wrap(const LayerStack &stack, const Vec3 &x)
{
  const double m = std::floor((x.x() + 0.5 * stack.dx) / stack.dx);
  const double n = std::floor((x.y() + 0.5 * stack.dy) / stack.dy);
  Vec3 x0 = x;
  x0.x() -= m * stack.dx;
  x0.y() -= n * stack.dy;
  return {x0, static_cast<int>(m), static_cast<int>(n)};
}

}  // namespace

std::size_t locate_layer(const LayerStack &stack, const Vec3 &x)
{
  const Vec3 x0 = wrap(stack, x).x;
  for (std::size_t l = 0; l < stack.num_interfaces(); ++l)
  {
    const double f = stack.interfaces[l].height(x0.x(), x0.y());
    if (std::abs(x0.z() - f) < 1e-12)
    {
      throw GeometryError("point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) +
                          ", " + std::to_string(x.z()) + ") lies on interface " +
                          std::to_string(l));
    }
    if (x0.z() > f)
    {
      return l;
    }
  }
  return stack.num_interfaces();
}

FieldEvaluator::FieldEvaluator(const Model &model, const Solution &solution) : model_(model)
{
  const std::size_t n_src = model.layout().n_src;
  const std::size_t n_px = model.layout().n_proxy;
  layers_.resize(model.num_layers());
  for (std::size_t l = 0; l < model.num_layers(); ++l)
  {
    LayerSources &ls = layers_[l];
    const CVector c = solution.c_group(l);
    std::size_t g = 0;
    for (const SourceGroup &grp : model.layer_sources(l))
    {
      for (std::size_t j = 0; j < n_src; ++j)
      {
        const cplx ct = c(static_cast<Eigen::Index>(2 * n_src * g + j));
        const cplx cs = c(static_cast<Eigen::Index>(2 * n_src * g + n_src + j));
        ls.points.push_back((*grp.points)[j]);
        ls.moments.push_back(ct * (*grp.tau)[j].cast<cplx>() + cs * (*grp.sigma)[j].cast<cplx>());
      }
      ++g;
    }
    const CVector d = solution.d(l);
    const ProxySet &px = model.geometry().proxies[l];
    for (std::size_t i = 0; i < n_px; ++i)
    {
      const cplx cr = d(static_cast<Eigen::Index>(i));
      const cplx cx = d(static_cast<Eigen::Index>(n_px + i));
      ls.proxies.push_back(px.points[i]);
      ls.proxy_moments.push_back(cr * px.rho[i].cast<cplx>() + cx * px.xi[i].cast<cplx>());
    }
  }
}

void FieldEvaluator::eval_in_layer(std::size_t layer, const Vec3 &x, CVec3 *e, CVec3 *h) const
{
  const LayerSources &ls = layers_.at(layer);
  const Medium &med = model_.medium(layer);
  const Lattice &lat = model_.lattice();
  CVec3 acc_e = CVec3::Zero(), acc_h = CVec3::Zero();
  CMat3 de, dh;
  for (std::size_t j = 0; j < ls.points.size(); ++j)
  {
    near_sum_EH(med, lat, x, ls.points[j], de, dh);
    acc_e += de * ls.moments[j];
    acc_h += dh * ls.moments[j];
  }
  for (std::size_t i = 0; i < ls.proxies.size(); ++i)
  {
    green_EH_dyadic(med, x, ls.proxies[i], de, dh);
    acc_e += de * ls.proxy_moments[i];
    acc_h += dh * ls.proxy_moments[i];
  }
  if (e)
  {
    *e = acc_e;
  }
  if (h)
  {
    *h = acc_h;
  }
}

FieldSample FieldEvaluator::sample(const Vec3 &x) const
{
  const Lattice &lat = model_.lattice();
  const Wrapped w = wrap(model_.stack(), x);
  FieldSample out;
  out.position = x;
  out.layer = locate_layer(model_.stack(), w.x);
  eval_in_layer(out.layer, w.x, &out.E, &out.H);
  if (w.m != 0 || w.n != 0)
  {
    const cplx phase = lat.weight(w.m, w.n);
    out.E *= phase;
    out.H *= phase;
  }
  return out;
}

std::vector<FieldSample> FieldEvaluator::sample(const std::vector<Vec3> &points) const
{
  std::vector<FieldSample> out(points.size());
  parallel_for(points.size(), [&](std::size_t i) { out[i] = sample(points[i]); });
  return out;
}

CVec3 FieldEvaluator::E(const Vec3 &x) const
{
  return sample(x).E;
}

CVec3 FieldEvaluator::H(const Vec3 &x) const
{
  return sample(x).H;
}

CVec3 eval_E(const FieldEvaluator &fields, const Vec3 &x)
{
  return fields.E(x);
}

CVec3 eval_H(const FieldEvaluator &fields, const Vec3 &x)
{
  return fields.H(x);
}

FresnelSolution fresnel_solve(const Material &top, const Material &bottom,
                              const IncidentWave &wave, double height)
{
  const double omega = wave.omega;
  const cplx k1 = bottom.wavenumber(omega);
  const Vec3 &k = wave.k_vec;
  FresnelSolution fs;
  fs.height = height;
  fs.k_reflected = Vec3(k.x(), k.y(), -k.z());
  // Downward transmitted wave decays as z -> -inf.
  const cplx kz1 = -std::sqrt(k1 * k1 - k.x() * k.x() - k.y() * k.y());
  fs.k_transmitted = CVec3(k.x(), k.y(), kz1);

  const CVec3 kr = fs.k_reflected.cast<cplx>();
  const CVec3 &kt = fs.k_transmitted;
  const CVec3 e0 = wave.polarization * std::exp(I * k.z() * height);
  const CVec3 h0 = k.cast<cplx>().cross(e0) / (omega * top.mu_rel);
  const cplx pr = std::exp(-I * k.z() * height);
  const cplx pt = std::exp(I * kz1 * height);

  // Unknowns (R, T); rows: tangential E (x, y), tangential H (x, y), transversality.
  Eigen::Matrix<cplx, 6, 6> a = Eigen::Matrix<cplx, 6, 6>::Zero();
  Eigen::Matrix<cplx, 6, 1> b = Eigen::Matrix<cplx, 6, 1>::Zero();
  for (int c = 0; c < 2; ++c)
  {
    a(c, c) = pr;
    a(c, 3 + c) = -pt;
    b(c) = -e0(c);
  }
  // (k x v)_x = k_y v_z - k_z v_y, (k x v)_y = k_z v_x - k_x v_z
  auto curl_rows = [](const CVec3 &kk, cplx scale, Eigen::Matrix<cplx, 6, 6> &m, int col0) {
    m(2, col0 + 1) += -scale * kk.z();
    m(2, col0 + 2) += scale * kk.y();
    m(3, col0 + 0) += scale * kk.z();
    m(3, col0 + 2) += -scale * kk.x();
  };
  curl_rows(kr, pr / (omega * top.mu_rel), a, 0);
  curl_rows(kt, -pt / (omega * bottom.mu_rel), a, 3);
  b(2) = -h0.x();
  b(3) = -h0.y();
  a.block<1, 3>(4, 0) = kr.transpose();
  a.block<1, 3>(5, 3) = kt.transpose();

  const Eigen::Matrix<cplx, 6, 1> x = a.fullPivLu().solve(b);
  fs.reflected = x.head<3>();
  fs.transmitted = x.tail<3>();
  return fs;
}

CVec3 fresnel_oracle(const FresnelSolution &fs, const Vec3 &x)
{
  if (x.z() > fs.height)
  {
    return fs.reflected * std::exp(I * fs.k_reflected.dot(x));
  }
  return fs.transmitted * std::exp(I * fs.k_transmitted.dot(x.cast<cplx>()));
}

CVec3 fresnel_oracle(const LayerStack &stack, const IncidentWave &wave, const Vec3 &x)
{
  if (stack.num_interfaces() != 1 || !stack.interfaces.front().is_flat())
  {
    throw GeometryError("Fresnel oracle needs a single flat interface");
  }
  const double h = stack.interfaces.front().height(0.0, 0.0);
  return fresnel_oracle(fresnel_solve(stack.materials[0], stack.materials[1], wave, h), x);
}

std::pair<cplx, cplx> fresnel_te(cplx kz0, cplx kz1, cplx mu0, cplx mu1)
{
  const cplx r = (mu1 * kz0 - mu0 * kz1) / (mu1 * kz0 + mu0 * kz1);
  return {r, 1.0 + r};
}

EnergyReport energy_report(const Model &model, const Solution &solution)
{
  const LayerStack &stack = model.stack();
  const IncidentWave &w = model.wave();
  const double area = stack.dx * stack.dy;
  const double mu_top = model.medium(0).mu.real();
  const double mu_bot = model.medium(model.num_layers() - 1).mu.real();
  const double omega = w.omega;

  EnergyReport rep;
  {
    const CVec3 &e = w.polarization;
    const Vec3 &k = w.k_vec;
    const cplx s = k.z() * std::norm(e.x()) - k.x() * e.x() * std::conj(e.z()) -
                   k.y() * e.y() * std::conj(e.z()) + k.z() * std::norm(e.y());
    rep.incident = -0.5 * area / (omega * mu_top) * s.real();
  }

  const CVector au = solution.a(RadiationSide::up);
  const CVector ad = solution.a(RadiationSide::down);
  const auto &mu_modes = model.modes(RadiationSide::up);
  const auto &md_modes = model.modes(RadiationSide::down);
  const auto nm = static_cast<Eigen::Index>(mu_modes.size());
  for (Eigen::Index j = 0; j < nm; ++j)
  {
    const RBMode &mu = mu_modes[static_cast<std::size_t>(j)];
    const RBMode &md = md_modes[static_cast<std::size_t>(j)];
    ModePower mp{mu.m, mu.n, 0.0, 0.0};
    bool any = false;
    if (mu.propagating() && mu.kappa_z.real() > 0.0)
    {
      const cplx ax = au(j), ay = au(nm + j), az = au(2 * nm + j);
      const cplx s = ax * (mu.kappa_z * std::conj(ax) - mu.kappa_x * std::conj(az)) -
                     ay * (mu.kappa_y * std::conj(az) - mu.kappa_z * std::conj(ay));
      mp.reflected = 0.5 * area / (omega * mu_top) * s.real();
      any = true;
    }
    if (md.propagating() && md.kappa_z.real() > 0.0)
    {
      const cplx ax = ad(j), ay = ad(nm + j), az = ad(2 * nm + j);
      const cplx s = ax * (md.kappa_z * std::conj(ax) + md.kappa_x * std::conj(az)) +
                     ay * (md.kappa_y * std::conj(az) + md.kappa_z * std::conj(ay));
      mp.transmitted = 0.5 * area / (omega * mu_bot) * s.real();
      any = true;
    }
    if (any)
    {
      rep.reflected += mp.reflected;
      rep.transmitted += mp.transmitted;
      rep.modes.push_back(mp);
    }
  }
  rep.flux_error = std::abs(rep.reflected + rep.transmitted - rep.incident);
  return rep;
}

std::vector<InteriorPoint> sample_interior(const Model &model, std::size_t n, double margin,
                                           unsigned long long seed)
{
  const LayerStack &stack = model.stack();
  const Discretization &geo = model.geometry();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, model.num_layers() - 1);

  auto near_source = [&](const Vec3 &x) {
    for (const SourceSet &s : geo.sources)
    {
      for (std::size_t j = 0; j < s.size(); ++j)
      {
        if ((s.y_plus[j] - x).norm() < margin || (s.y_minus[j] - x).norm() < margin)
        {
          return true;
        }
      }
    }
    return false;
  };

  std::vector<InteriorPoint> points;
  const std::size_t max_tries = 1000 * std::max<std::size_t>(n, 1);
  for (std::size_t t = 0; t < max_tries && points.size() < n; ++t)
  {
    const std::size_t l = pick(rng);
    const auto [lo, hi] = geo.vertical.layer_extent[l];
    const double x = (unit(rng) - 0.5) * 0.8 * stack.dx;
    const double y = (unit(rng) - 0.5) * 0.8 * stack.dy;
    const double z = lo + (0.1 + 0.8 * unit(rng)) * (hi - lo);
    const Vec3 p(x, y, z);
    bool reject = false;
    for (std::size_t i = 0; i < stack.num_interfaces() && !reject; ++i)
    {
      reject = std::abs(z - stack.interfaces[i].height(x, y)) < margin;
    }
    if (reject || locate_layer(stack, p) != l || near_source(p))
    {
      continue;
    }
    points.push_back({l, p});
  }
  if (points.size() < n)
  {
    spdlog::warn("interior sampling: only {} of {} points accepted", points.size(), n);
  }
  return points;
}

cplx fd_divergence(const std::function<CVec3(const Vec3 &)> &field, const Vec3 &x, double h)
{
  cplx acc{0.0};
  for (int c = 0; c < 3; ++c)
  {
    Vec3 step = Vec3::Zero();
    step(c) = h;
    acc += (field(x + step)(c) - field(x - step)(c)) / (2.0 * h);
  }
  return acc;
}

DivergenceStats divergence_check(const FieldEvaluator &fields, std::size_t n_samples, double h,
                                 unsigned long long seed)
{
  const Model &model = fields.model();
  const std::vector<InteriorPoint> points = sample_interior(model, n_samples, 3.0 * h, seed);

  std::vector<double> div(points.size()), scale(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    const auto &[l, p] = points[i];
    const cplx acc = fd_divergence(
        [&, l = l](const Vec3 &y) {
          CVec3 e;
          fields.eval_in_layer(l, y, &e, nullptr);
          return e;
        },
        p, h);
    CVec3 e0;
    fields.eval_in_layer(l, p, &e0, nullptr);
    div[i] = std::abs(acc);
    scale[i] = std::abs(model.medium(l).k) * e0.norm();
  });

  DivergenceStats st;
  st.samples = points.size();
  double norm = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
  {
    st.max_abs = std::max(st.max_abs, div[i]);
    st.mean += div[i];
    norm = std::max(norm, scale[i]);
  }
  if (st.samples > 0)
  {
    st.mean /= static_cast<double>(st.samples);
  }
  if (norm > 0.0)
  {
    st.max = st.max_abs / norm;
    st.mean /= norm;
  }
  return st;
}

double pointwise_error(const FieldEvaluator &fields, cplx reference, const Vec3 &x, int component)
{
  return std::abs(fields.E(x)(component) - reference);
}

}  // namespace bimfs
