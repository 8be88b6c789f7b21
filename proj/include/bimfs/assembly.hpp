// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <vector>

#include "bimfs/geometry.hpp"
#include "bimfs/kernels.hpp"
#include "bimfs/linalg.hpp"
#include "bimfs/types.hpp"

namespace bimfs
{

struct Problem
{
  LayerStack stack;
  IncidentWave wave;
  DiscretizationParams params;
  NearSumConvention convention = NearSumConvention::shift_source;
  double h_row_scale = 1.0;  // multiplies the t.H and s.H transmission rows and their rhs
};

// Column and row offsets of every unknown group and row block.
//
// Columns: c grouped by layer ([c_0^-], [c_0^+, c_1^-], ..., [c_L^+], each side as [tau, sigma]),
// then d_l = [rho, xi] per layer, then a_u and a_d, each component-major with modes row-major.
// Rows: 4M transmission rows per interface (t.E, s.E, t.H, s.H), then 12W quasi-periodicity
// rows per layer, then 6W radiation rows for the top and the bottom layer.
struct UnknownLayout
{
  std::size_t num_interfaces = 1;
  std::size_t n_src = 0;
  std::size_t n_targets = 0;
  std::size_t n_proxy = 0;
  std::size_t n_wall = 0;
  std::size_t n_modes = 0;  // (2R+1)^2

  std::size_t num_layers() const { return num_interfaces + 1; }

  std::size_t c_group_size(std::size_t layer) const;
  std::size_t c_group_offset(std::size_t layer) const;
  std::size_t c_columns() const { return 4 * n_src * num_interfaces; }
  std::size_t d_offset(std::size_t layer) const { return c_columns() + 2 * n_proxy * layer; }
  std::size_t a_offset(RadiationSide side) const;
  std::size_t num_columns() const { return c_columns() + 2 * n_proxy * num_layers() + 6 * n_modes; }

  std::size_t transmission_row(std::size_t iface) const { return 4 * n_targets * iface; }
  std::size_t quasi_row(std::size_t layer) const;
  std::size_t radiation_row(RadiationSide side) const;
  std::size_t num_rows() const;
};

// Sources feeding one layer: points with their two tangent directions.
struct SourceGroup
{
  const std::vector<Vec3> *points;
  const std::vector<Vec3> *tau;
  const std::vector<Vec3> *sigma;
};

// A discretised problem: geometry, media and layout, immutable after construction.
class Model
{
public:
  explicit Model(Problem problem);

  const Problem &problem() const { return problem_; }
  const LayerStack &stack() const { return problem_.stack; }
  const IncidentWave &wave() const { return problem_.wave; }
  const Discretization &geometry() const { return geometry_; }
  const UnknownLayout &layout() const { return layout_; }
  const Lattice &lattice() const { return lattice_; }
  const Medium &medium(std::size_t layer) const { return media_[layer]; }
  const std::vector<RBMode> &modes(RadiationSide side) const;
  std::size_t num_layers() const { return media_.size(); }
  std::size_t num_interfaces() const { return media_.size() - 1; }

  // One group for the outer layers, two (above then below) for interior ones.
  std::vector<SourceGroup> layer_sources(std::size_t layer) const;

private:
  Problem problem_;
  Discretization geometry_;
  UnknownLayout layout_;
  Lattice lattice_;
  std::vector<Medium> media_;
  std::vector<RBMode> modes_up_, modes_down_;
};

// Blocks of the system on demand. Transmission blocks carry their sign: the layer above an
// interface enters positively, the layer below negatively. The fill_* methods write into a
// caller-provided block of the right shape; the plain ones allocate.
class BlockProvider
{
public:
  virtual ~BlockProvider() = default;

  virtual const UnknownLayout &layout() const = 0;
  // 4M x c_group_size(layer), layer in {iface, iface + 1}
  virtual void fill_transmission_mfs(std::size_t iface, std::size_t layer, CRef out) const = 0;
  // 4M x 2P
  virtual void fill_transmission_proxy(std::size_t iface, std::size_t layer, CRef out) const = 0;
  virtual CVector transmission_rhs(std::size_t iface) const = 0;
  // 12W x c_group_size(layer) and 12W x 2P
  virtual void fill_quasi_mfs(std::size_t layer, CRef out) const = 0;
  virtual void fill_quasi_proxy(std::size_t layer, CRef out) const = 0;
  // 6W x c_group_size, 6W x 2P and 6W x 3(2R+1)^2
  virtual void fill_radiation_mfs(RadiationSide side, CRef out) const = 0;
  virtual void fill_radiation_proxy(RadiationSide side, CRef out) const = 0;
  virtual void fill_radiation_modes(RadiationSide side, CRef out) const = 0;

  CMatrix transmission_mfs(std::size_t iface, std::size_t layer) const;
  CMatrix transmission_proxy(std::size_t iface, std::size_t layer) const;
  CMatrix quasi_mfs(std::size_t layer) const;
  CMatrix quasi_proxy(std::size_t layer) const;
  CMatrix radiation_mfs(RadiationSide side) const;
  CMatrix radiation_proxy(RadiationSide side) const;
  CMatrix radiation_modes(RadiationSide side) const;

  std::size_t outer_layer(RadiationSide side) const
  {
    return side == RadiationSide::up ? 0 : layout().num_layers() - 1;
  }
};

// Computes each block from the model when asked.
class Assembler : public BlockProvider
{
public:
  explicit Assembler(const Model &model) : model_(model) {}

  const Model &model() const { return model_; }
  const UnknownLayout &layout() const override { return model_.layout(); }
  void fill_transmission_mfs(std::size_t iface, std::size_t layer, CRef out) const override;
  void fill_transmission_proxy(std::size_t iface, std::size_t layer, CRef out) const override;
  CVector transmission_rhs(std::size_t iface) const override;
  void fill_quasi_mfs(std::size_t layer, CRef out) const override;
  void fill_quasi_proxy(std::size_t layer, CRef out) const override;
  void fill_radiation_mfs(RadiationSide side, CRef out) const override;
  void fill_radiation_proxy(RadiationSide side, CRef out) const override;
  void fill_radiation_modes(RadiationSide side, CRef out) const override;

private:
  const Model &model_;
};

// Every block held in memory. Only sensible for small problems.
class BlockSystem : public BlockProvider
{
public:
  struct Transmission
  {
    CMatrix a_own, a_next;  // A_{l,l}, A_{l,l+1}
    CMatrix b_own, b_next;  // B_{l,l}, B_{l,l+1}
    CVector f;
  };
  struct Radiation
  {
    CMatrix z, v, w;
  };

  UnknownLayout index;
  std::vector<Transmission> transmission;  // per interface
  std::vector<CMatrix> p, q;               // per layer
  Radiation up, down;

  const UnknownLayout &layout() const override { return index; }
  void fill_transmission_mfs(std::size_t iface, std::size_t layer, CRef out) const override;
  void fill_transmission_proxy(std::size_t iface, std::size_t layer, CRef out) const override;
  CVector transmission_rhs(std::size_t iface) const override;
  void fill_quasi_mfs(std::size_t layer, CRef out) const override { out = p.at(layer); }
  void fill_quasi_proxy(std::size_t layer, CRef out) const override { out = q.at(layer); }
  void fill_radiation_mfs(RadiationSide side, CRef out) const override { out = rad(side).z; }
  void fill_radiation_proxy(RadiationSide side, CRef out) const override { out = rad(side).v; }
  void fill_radiation_modes(RadiationSide side, CRef out) const override { out = rad(side).w; }

  CMatrix dense() const;
  CVector rhs() const;

  // Text dump: a header with the index map, then one "row col re im" line per nonzero.
  void dump(std::ostream &os) const;

private:
  const Radiation &rad(RadiationSide side) const { return side == RadiationSide::up ? up : down; }
};

BlockSystem assemble_full(const Model &model);

}  // namespace bimfs
