// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#include "bimfs/assembly.hpp"

#include <array>
#include <iomanip>
#include <ostream>

#include "bimfs/parallel.hpp"

namespace bimfs
{

std::size_t UnknownLayout::c_group_size(std::size_t layer) const
{
  return (layer == 0 || layer == num_interfaces) ? 2 * n_src : 4 * n_src;
}

std::size_t UnknownLayout::c_group_offset(std::size_t layer) const
{
  return layer == 0 ? 0 : 2 * n_src + 4 * n_src * (layer - 1);
}

std::size_t UnknownLayout::a_offset(RadiationSide side) const
{
  const std::size_t up = c_columns() + 2 * n_proxy * num_layers();
  return side == RadiationSide::up ? up : up + 3 * n_modes;
}

std::size_t UnknownLayout::quasi_row(std::size_t layer) const
{
  return 4 * n_targets * num_interfaces + 12 * n_wall * layer;
}

std::size_t UnknownLayout::radiation_row(RadiationSide side) const
{
  const std::size_t up = quasi_row(num_layers());
  return side == RadiationSide::up ? up : up + 6 * n_wall;
}

std::size_t UnknownLayout::num_rows() const
{
  return radiation_row(RadiationSide::down) + 6 * n_wall;
}

Model::Model(Problem problem) : problem_(std::move(problem))
{
  geometry_ = discretize(problem_.stack, problem_.params);
  const auto &p = problem_.params;
  const std::size_t n_if = problem_.stack.num_interfaces();
  layout_.num_interfaces = n_if;
  layout_.n_src = static_cast<std::size_t>(p.n_src);
  layout_.n_targets = geometry_.targets.front().size();
  layout_.n_proxy = static_cast<std::size_t>(p.n_proxy);
  layout_.n_wall = static_cast<std::size_t>(p.n_wall);
  layout_.n_modes = static_cast<std::size_t>((2 * p.rb_order + 1) * (2 * p.rb_order + 1));

  const IncidentWave &w = problem_.wave;
  lattice_ = {problem_.stack.dx, problem_.stack.dy, w.alpha, w.beta, problem_.convention};
  for (const Material &mat : problem_.stack.materials)
  {
    media_.push_back(Medium::from_material(mat, w.omega));
  }
  modes_up_ = rb_modes(p.rb_order, w, lattice_.dx, lattice_.dy, media_.front().k);
  modes_down_ = rb_modes(p.rb_order, w, lattice_.dx, lattice_.dy, media_.back().k);
}

const std::vector<RBMode> &Model::modes(RadiationSide side) const
{
  return side == RadiationSide::up ? modes_up_ : modes_down_;
}

std::vector<SourceGroup> Model::layer_sources(std::size_t layer) const
{
  const auto &src = geometry_.sources;
  std::vector<SourceGroup> out;
  if (layer > 0)
  {
    const SourceSet &s = src[layer - 1];
    out.push_back({&s.y_plus, &s.tau, &s.sigma});
  }
  if (layer < src.size())
  {
    const SourceSet &s = src[layer];
    out.push_back({&s.y_minus, &s.tau, &s.sigma});
  }
  return out;
}

namespace
{

using Dyadic = CMat3;

// Columns [tau, sigma] of one source family: points, tangent pair and whether the
// near sum applies (MFS sources) or a single free-space kernel (proxies).
struct Columns
{
  const std::vector<Vec3> &points;
  const std::vector<Vec3> &p1;
  const std::vector<Vec3> &p2;
  bool near;
};

std::vector<Columns> mfs_columns(const Model &model, std::size_t layer)
{
  std::vector<Columns> out;
  for (const SourceGroup &g : model.layer_sources(layer))
  {
    out.push_back({*g.points, *g.tau, *g.sigma, true});
  }
  return out;
}

Columns proxy_columns(const Model &model, std::size_t layer)
{
  const ProxySet &px = model.geometry().proxies[layer];
  return {px.points, px.rho, px.xi, false};
}

// E-kernel dyadic (or its derivative along dir) under the active near-sum rule.
Dyadic e_dyadic(const Medium &med, const Lattice &lat, bool near, const Vec3 &x, const Vec3 &y,
                const Vec3 *dir)
{
  if (near)
  {
    return near_sum_dyadic(KernelKind::electric, med, lat, x, y, dir);
  }
  return dir ? dgreen_dyadic(KernelKind::electric, med, x, y, *dir) : green_E_dyadic(med, x, y);
}

Dyadic e_plain(const Medium &med, const Vec3 &x, const Vec3 &y, const Vec3 *dir)
{
  return dir ? dgreen_dyadic(KernelKind::electric, med, x, y, *dir) : green_E_dyadic(med, x, y);
}

// Quasi-periodicity functional ph^{-1} F(x_a) - F(x_b) applied to one source.
//
// Under the source-shift rule the near-sum difference telescopes: only the two image columns
// that leave the 3x3 block survive, so they are evaluated directly.
Dyadic quasi_dyadic(const Medium &med, const Lattice &lat, bool near, bool along_x,
                    const Vec3 &xa, const Vec3 &xb, const Vec3 &y, const Vec3 *dir)
{
  const cplx ph = along_x ? lat.alpha : lat.beta;
  if (near && lat.convention == NearSumConvention::shift_source)
  {
    const Vec3 e_step = along_x ? Vec3(lat.dx, 0.0, 0.0) : Vec3(0.0, lat.dy, 0.0);
    const Vec3 e_side = along_x ? Vec3(0.0, lat.dy, 0.0) : Vec3(lat.dx, 0.0, 0.0);
    const cplx ph_side = along_x ? lat.beta : lat.alpha;
    const cplx ph_m2 = 1.0 / (ph * ph);
    Dyadic acc = Dyadic::Zero();
    for (int n = -1; n <= 1; ++n)
    {
      const cplx w = Lattice::ipow(ph_side, n);
      const Vec3 shift = n * e_side;
      acc += w * (ph_m2 * e_plain(med, xa, y - e_step + shift, dir) -
                  ph * e_plain(med, xb, y + e_step + shift, dir));
    }
    return acc;
  }
  return e_dyadic(med, lat, near, xa, y, dir) / ph - e_dyadic(med, lat, near, xb, y, dir);
}

void fill_transmission(CRef out, std::size_t col0, const Columns &cols, const Medium &med,
                       const Lattice &lat, const SurfaceSamples &targets, double sign,
                       double h_scale)
{
  const std::size_t m = targets.size(), n = cols.points.size();
  parallel_for(m, [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    const Eigen::Index mm = static_cast<Eigen::Index>(m);
    const Vec3 &t = targets.tangents_t[i];
    const Vec3 &s = targets.tangents_s[i];
    CMat3 de, dh;
    for (std::size_t j = 0; j < n; ++j)
    {
      if (cols.near)
      {
        near_sum_EH(med, lat, targets.points[i], cols.points[j], de, dh);
      }
      else
      {
        green_EH_dyadic(med, targets.points[i], cols.points[j], de, dh);
      }
      // Row functional t^T D p; p is real, so the conjugating dot is exact.
      const CVec3 te = de.transpose() * t.cast<cplx>();
      const CVec3 se = de.transpose() * s.cast<cplx>();
      const CVec3 th = dh.transpose() * t.cast<cplx>();
      const CVec3 sh = dh.transpose() * s.cast<cplx>();
      const Vec3 &p1 = cols.p1[j], &p2 = cols.p2[j];
      const auto c1 = static_cast<Eigen::Index>(col0 + j);
      const auto c2 = static_cast<Eigen::Index>(col0 + n + j);
      out(r, c1) = sign * p1.cast<cplx>().dot(te);
      out(r, c2) = sign * p2.cast<cplx>().dot(te);
      out(mm + r, c1) = sign * p1.cast<cplx>().dot(se);
      out(mm + r, c2) = sign * p2.cast<cplx>().dot(se);
      out(2 * mm + r, c1) = sign * h_scale * p1.cast<cplx>().dot(th);
      out(2 * mm + r, c2) = sign * h_scale * p2.cast<cplx>().dot(th);
      out(3 * mm + r, c1) = sign * h_scale * p1.cast<cplx>().dot(sh);
      out(3 * mm + r, c2) = sign * h_scale * p2.cast<cplx>().dot(sh);
    }
  });
}

void fill_quasi(CRef out, std::size_t col0, const Columns &cols, const Medium &med,
                const Lattice &lat, const WallSet &walls)
{
  const std::size_t w = walls.left.size(), n = cols.points.size();
  const Vec3 ux(1.0, 0.0, 0.0), uy(0.0, 1.0, 0.0);
  const auto ww = static_cast<Eigen::Index>(w);
  parallel_for(w, [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    std::array<Dyadic, 4> d;
    for (std::size_t j = 0; j < n; ++j)
    {
      const Vec3 &y = cols.points[j];
      d[0] = quasi_dyadic(med, lat, cols.near, true, walls.right[i], walls.left[i], y, nullptr);
      d[1] = quasi_dyadic(med, lat, cols.near, true, walls.right[i], walls.left[i], y, &ux);
      d[2] = quasi_dyadic(med, lat, cols.near, false, walls.front[i], walls.back[i], y, nullptr);
      d[3] = quasi_dyadic(med, lat, cols.near, false, walls.front[i], walls.back[i], y, &uy);
      const CVec3 p1 = cols.p1[j].cast<cplx>(), p2 = cols.p2[j].cast<cplx>();
      const auto c1 = static_cast<Eigen::Index>(col0 + j);
      const auto c2 = static_cast<Eigen::Index>(col0 + n + j);
      for (int g = 0; g < 4; ++g)
      {
        const CVec3 v1 = d[g] * p1, v2 = d[g] * p2;
        for (int q = 0; q < 3; ++q)
        {
          const Eigen::Index row = g * 3 * ww + q * ww + r;
          out(row, c1) = v1(q);
          out(row, c2) = v2(q);
        }
      }
    }
  });
}

void fill_radiation(CRef out, std::size_t col0, const Columns &cols, const Medium &med,
                    const Lattice &lat, const std::vector<Vec3> &surface, RadiationSide side)
{
  const std::size_t w = surface.size(), n = cols.points.size();
  const Vec3 normal(0.0, 0.0, side == RadiationSide::up ? 1.0 : -1.0);
  const auto ww = static_cast<Eigen::Index>(w);
  parallel_for(w, [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < n; ++j)
    {
      const Dyadic dv = e_dyadic(med, lat, cols.near, surface[i], cols.points[j], nullptr);
      const Dyadic dd = e_dyadic(med, lat, cols.near, surface[i], cols.points[j], &normal);
      const CVec3 p1 = cols.p1[j].cast<cplx>(), p2 = cols.p2[j].cast<cplx>();
      const auto c1 = static_cast<Eigen::Index>(col0 + j);
      const auto c2 = static_cast<Eigen::Index>(col0 + n + j);
      const CVec3 v1 = dv * p1, v2 = dv * p2, g1 = dd * p1, g2 = dd * p2;
      for (int q = 0; q < 3; ++q)
      {
        out(q * ww + r, c1) = v1(q);
        out(q * ww + r, c2) = v2(q);
        out(3 * ww + q * ww + r, c1) = g1(q);
        out(3 * ww + q * ww + r, c2) = g2(q);
      }
    }
  });
}

void check_transmission_layer(std::size_t iface, std::size_t layer)
{
  if (layer != iface && layer != iface + 1)
  {
    throw Error("interface " + std::to_string(iface) + " does not border layer " +
                std::to_string(layer));
  }
}

void check_shape(CConstRef out, std::size_t rows, std::size_t cols, const char *what)
{
  if (static_cast<std::size_t>(out.rows()) != rows || static_cast<std::size_t>(out.cols()) != cols)
  {
    throw Error(std::string(what) + ": target block is " + std::to_string(out.rows()) + " x " +
                std::to_string(out.cols()) + ", expected " + std::to_string(rows) + " x " +
                std::to_string(cols));
  }
}

}  // namespace

CMatrix BlockProvider::transmission_mfs(std::size_t iface, std::size_t layer) const
{
  CMatrix out(4 * layout().n_targets, layout().c_group_size(layer));
  fill_transmission_mfs(iface, layer, out);
  return out;
}

CMatrix BlockProvider::transmission_proxy(std::size_t iface, std::size_t layer) const
{
  CMatrix out(4 * layout().n_targets, 2 * layout().n_proxy);
  fill_transmission_proxy(iface, layer, out);
  return out;
}

CMatrix BlockProvider::quasi_mfs(std::size_t layer) const
{
  CMatrix out(12 * layout().n_wall, layout().c_group_size(layer));
  fill_quasi_mfs(layer, out);
  return out;
}

CMatrix BlockProvider::quasi_proxy(std::size_t layer) const
{
  CMatrix out(12 * layout().n_wall, 2 * layout().n_proxy);
  fill_quasi_proxy(layer, out);
  return out;
}

CMatrix BlockProvider::radiation_mfs(RadiationSide side) const
{
  CMatrix out(6 * layout().n_wall, layout().c_group_size(outer_layer(side)));
  fill_radiation_mfs(side, out);
  return out;
}

CMatrix BlockProvider::radiation_proxy(RadiationSide side) const
{
  CMatrix out(6 * layout().n_wall, 2 * layout().n_proxy);
  fill_radiation_proxy(side, out);
  return out;
}

CMatrix BlockProvider::radiation_modes(RadiationSide side) const
{
  CMatrix out(6 * layout().n_wall, 3 * layout().n_modes);
  fill_radiation_modes(side, out);
  return out;
}

void Assembler::fill_transmission_mfs(std::size_t iface, std::size_t layer, CRef out) const
{
  check_transmission_layer(iface, layer);
  const UnknownLayout &lay = layout();
  check_shape(out, 4 * lay.n_targets, lay.c_group_size(layer), "transmission_mfs");
  const SurfaceSamples &targets = model_.geometry().targets[iface];
  const double sign = layer == iface ? 1.0 : -1.0;
  std::size_t col = 0;
  for (const Columns &cols : mfs_columns(model_, layer))
  {
    fill_transmission(out, col, cols, model_.medium(layer), model_.lattice(), targets, sign,
                      model_.problem().h_row_scale);
    col += 2 * cols.points.size();
  }
}

void Assembler::fill_transmission_proxy(std::size_t iface, std::size_t layer, CRef out) const
{
  check_transmission_layer(iface, layer);
  const UnknownLayout &lay = layout();
  check_shape(out, 4 * lay.n_targets, 2 * lay.n_proxy, "transmission_proxy");
  fill_transmission(out, 0, proxy_columns(model_, layer), model_.medium(layer),
                    model_.lattice(), model_.geometry().targets[iface],
                    layer == iface ? 1.0 : -1.0, model_.problem().h_row_scale);
}

CVector Assembler::transmission_rhs(std::size_t iface) const
{
  const UnknownLayout &lay = layout();
  const std::size_t m = lay.n_targets;
  CVector f = CVector::Zero(static_cast<Eigen::Index>(4 * m));
  if (iface != 0)
  {
    return f;
  }
  const SurfaceSamples &targets = model_.geometry().targets[0];
  const IncidentWave &w = model_.wave();
  const double hs = model_.problem().h_row_scale;
  const cplx mu_top = model_.medium(0).mu;
  for (std::size_t i = 0; i < m; ++i)
  {
    const CVec3 e = w.e_field(targets.points[i]);
    const CVec3 h = w.h_field(targets.points[i], mu_top);
    const CVec3 t = targets.tangents_t[i].cast<cplx>(), s = targets.tangents_s[i].cast<cplx>();
    const auto r = static_cast<Eigen::Index>(i);
    const auto mm = static_cast<Eigen::Index>(m);
    f(r) = -t.dot(e);
    f(mm + r) = -s.dot(e);
    f(2 * mm + r) = -hs * t.dot(h);
    f(3 * mm + r) = -hs * s.dot(h);
  }
  return f;
}

void Assembler::fill_quasi_mfs(std::size_t layer, CRef out) const
{
  const UnknownLayout &lay = layout();
  check_shape(out, 12 * lay.n_wall, lay.c_group_size(layer), "quasi_mfs");
  std::size_t col = 0;
  for (const Columns &cols : mfs_columns(model_, layer))
  {
    fill_quasi(out, col, cols, model_.medium(layer), model_.lattice(),
               model_.geometry().walls[layer]);
    col += 2 * cols.points.size();
  }
}

void Assembler::fill_quasi_proxy(std::size_t layer, CRef out) const
{
  const UnknownLayout &lay = layout();
  check_shape(out, 12 * lay.n_wall, 2 * lay.n_proxy, "quasi_proxy");
  fill_quasi(out, 0, proxy_columns(model_, layer), model_.medium(layer), model_.lattice(),
             model_.geometry().walls[layer]);
}

void Assembler::fill_radiation_mfs(RadiationSide side, CRef out) const
{
  const std::size_t layer = outer_layer(side);
  const UnknownLayout &lay = layout();
  check_shape(out, 6 * lay.n_wall, lay.c_group_size(layer), "radiation_mfs");
  std::size_t col = 0;
  for (const Columns &cols : mfs_columns(model_, layer))
  {
    fill_radiation(out, col, cols, model_.medium(layer), model_.lattice(),
                   model_.geometry().walls[layer].radiation, side);
    col += 2 * cols.points.size();
  }
}

void Assembler::fill_radiation_proxy(RadiationSide side, CRef out) const
{
  const std::size_t layer = outer_layer(side);
  const UnknownLayout &lay = layout();
  check_shape(out, 6 * lay.n_wall, 2 * lay.n_proxy, "radiation_proxy");
  fill_radiation(out, 0, proxy_columns(model_, layer), model_.medium(layer), model_.lattice(),
                 model_.geometry().walls[layer].radiation, side);
}

void Assembler::fill_radiation_modes(RadiationSide side, CRef out) const
{
  const UnknownLayout &lay = layout();
  check_shape(out, 6 * lay.n_wall, 3 * lay.n_modes, "radiation_modes");
  const std::vector<Vec3> &surface = model_.geometry().walls[outer_layer(side)].radiation;
  const std::vector<RBMode> &modes = model_.modes(side);
  const auto w = static_cast<Eigen::Index>(lay.n_wall);
  const auto nm = static_cast<Eigen::Index>(lay.n_modes);
  out.setZero();
  for (Eigen::Index i = 0; i < w; ++i)
  {
    for (Eigen::Index k = 0; k < nm; ++k)
    {
      const RBBasisValue b = rb_basis(modes[static_cast<std::size_t>(k)],
                                      surface[static_cast<std::size_t>(i)], side);
      for (Eigen::Index q = 0; q < 3; ++q)
      {
        out(q * w + i, q * nm + k) = -b.value;
        out(3 * w + q * w + i, q * nm + k) = -b.value * b.normal_derivative_factor;
      }
    }
  }
}

void BlockSystem::fill_transmission_mfs(std::size_t iface, std::size_t layer, CRef out) const
{
  check_transmission_layer(iface, layer);
  const Transmission &t = transmission.at(iface);
  out = layer == iface ? t.a_own : t.a_next;
}

void BlockSystem::fill_transmission_proxy(std::size_t iface, std::size_t layer, CRef out) const
{
  check_transmission_layer(iface, layer);
  const Transmission &t = transmission.at(iface);
  out = layer == iface ? t.b_own : t.b_next;
}

CVector BlockSystem::transmission_rhs(std::size_t iface) const
{
  return transmission.at(iface).f;
}

CMatrix BlockSystem::dense() const
{
  const UnknownLayout &lay = index;
  CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(lay.num_rows()),
                            static_cast<Eigen::Index>(lay.num_columns()));
  auto place = [&m](std::size_t row, std::size_t col, const CMatrix &b) {
    m.block(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col), b.rows(), b.cols()) =
        b;
  };
  for (std::size_t l = 0; l < transmission.size(); ++l)
  {
    const Transmission &t = transmission[l];
    const std::size_t row = lay.transmission_row(l);
    place(row, lay.c_group_offset(l), t.a_own);
    place(row, lay.c_group_offset(l + 1), t.a_next);
    place(row, lay.d_offset(l), t.b_own);
    place(row, lay.d_offset(l + 1), t.b_next);
  }
  for (std::size_t l = 0; l < p.size(); ++l)
  {
    place(lay.quasi_row(l), lay.c_group_offset(l), p[l]);
    place(lay.quasi_row(l), lay.d_offset(l), q[l]);
  }
  const std::size_t bottom = lay.num_layers() - 1;
  for (auto side : {RadiationSide::up, RadiationSide::down})
  {
    const std::size_t layer = side == RadiationSide::up ? 0 : bottom;
    const Radiation &r = rad(side);
    place(lay.radiation_row(side), lay.c_group_offset(layer), r.z);
    place(lay.radiation_row(side), lay.d_offset(layer), r.v);
    place(lay.radiation_row(side), lay.a_offset(side), r.w);
  }
  return m;
}

CVector BlockSystem::rhs() const
{
  CVector f = CVector::Zero(static_cast<Eigen::Index>(index.num_rows()));
  for (std::size_t l = 0; l < transmission.size(); ++l)
  {
    f.segment(static_cast<Eigen::Index>(index.transmission_row(l)), transmission[l].f.size()) =
        transmission[l].f;
  }
  return f;
}

void BlockSystem::dump(std::ostream &os) const
{
  const UnknownLayout &lay = index;
  os << "# bimfs block system\n";
  os << "rows " << lay.num_rows() << " cols " << lay.num_columns() << "\n";
  os << "interfaces " << lay.num_interfaces << " N " << lay.n_src << " M " << lay.n_targets
     << " P " << lay.n_proxy << " W " << lay.n_wall << " modes " << lay.n_modes << "\n";
  for (std::size_t l = 0; l < lay.num_layers(); ++l)
  {
    os << "layer " << l << " c_offset " << lay.c_group_offset(l) << " c_size "
       << lay.c_group_size(l) << " d_offset " << lay.d_offset(l) << " quasi_row "
       << lay.quasi_row(l) << "\n";
  }
  for (std::size_t l = 0; l < lay.num_interfaces; ++l)
  {
    os << "interface " << l << " row " << lay.transmission_row(l) << "\n";
  }
  os << "a_up " << lay.a_offset(RadiationSide::up) << " a_down "
     << lay.a_offset(RadiationSide::down) << " rad_up_row "
     << lay.radiation_row(RadiationSide::up) << " rad_down_row "
     << lay.radiation_row(RadiationSide::down) << "\n";
  os << std::setprecision(17);
  const CMatrix m = dense();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
  {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
    {
      if (m(i, j) != cplx{0.0})
      {
        os << i << ' ' << j << ' ' << m(i, j).real() << ' ' << m(i, j).imag() << '\n';
      }
    }
  }
  const CVector f = rhs();
  for (Eigen::Index i = 0; i < f.size(); ++i)
  {
    if (f(i) != cplx{0.0})
    {
      os << "rhs " << i << ' ' << f(i).real() << ' ' << f(i).imag() << '\n';
    }
  }
}

BlockSystem assemble_full(const Model &model)
{
  const Assembler asmb(model);
  BlockSystem sys;
  sys.index = model.layout();
  const std::size_t n_if = model.num_interfaces();
  for (std::size_t l = 0; l < n_if; ++l)
  {
    BlockSystem::Transmission t;
    t.a_own = asmb.transmission_mfs(l, l);
    t.a_next = asmb.transmission_mfs(l, l + 1);
    t.b_own = asmb.transmission_proxy(l, l);
    t.b_next = asmb.transmission_proxy(l, l + 1);
    t.f = asmb.transmission_rhs(l);
    sys.transmission.push_back(std::move(t));
  }
  for (std::size_t l = 0; l <= n_if; ++l)
  {
    sys.p.push_back(asmb.quasi_mfs(l));
    sys.q.push_back(asmb.quasi_proxy(l));
  }
  for (auto side : {RadiationSide::up, RadiationSide::down})
  {
    BlockSystem::Radiation &r = side == RadiationSide::up ? sys.up : sys.down;
    r.z = asmb.radiation_mfs(side);
    r.v = asmb.radiation_proxy(side);
    r.w = asmb.radiation_modes(side);
  }
  return sys;
}

}  // namespace bimfs
