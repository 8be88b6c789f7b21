// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bimfs/assembly.hpp"
#include "bimfs/solver.hpp"

namespace bimfs
{

inline constexpr int config_schema_version = 1;

struct InterfaceSpec
{
  std::string shape = "flat";  // flat | sine1d | sinecos | expression
  double amp = 0.0;
  double cycles = 1.0;
  double cycles_x = 1.0;
  double cycles_y = 1.0;
  std::string expression;
  double offset = 0.0;

  bool operator==(const InterfaceSpec &) const = default;
};

struct WaveSpec
{
  double omega = 1.0;
  std::optional<Vec3> k_vec;
  std::optional<std::pair<double, double>> angles;  // (phi, theta)
  CVec3 polarization = CVec3::Zero();

  bool operator==(const WaveSpec &) const = default;
};

// Point probe with an optional reference value for pointwise errors.
struct Probe
{
  Vec3 x = Vec3::Zero();
  int component = 1;
  std::optional<cplx> reference;

  bool operator==(const Probe &) const = default;
};

struct GridSpec
{
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
  std::array<int, 3> count{1, 1, 1};

  std::size_t size() const
  {
    return static_cast<std::size_t>(count[0]) * count[1] * count[2];
  }
  std::vector<Vec3> points() const;
  bool operator==(const GridSpec &) const = default;
};

struct SweepSpec
{
  std::string axis;  // n_src | n_proxy | offset | omega
  std::vector<double> values;

  bool operator==(const SweepSpec &) const = default;
};

struct RunSpec
{
  std::string mode = "solve";  // solve | sweep
  std::string out_dir = "out";
  std::string method = "schur";  // schur | direct
  std::string near_sum = "shift_source";
  std::optional<SweepSpec> sweep;
  std::vector<Probe> probes;
  std::optional<GridSpec> grid;
  std::size_t divergence_samples = 200;
  unsigned long long seed = 1;
  int workers = 1;
  bool long_running = false;

  bool operator==(const RunSpec &) const = default;
};

struct RunConfig
{
  int schema_version = config_schema_version;
  std::string name;
  std::string description;
  double dx = 1.0;
  double dy = 1.0;
  std::vector<InterfaceSpec> interfaces;
  std::vector<Material> materials;
  WaveSpec wave;
  DiscretizationParams discretization;
  RunSpec run;

  bool operator==(const RunConfig &) const;
};

// Parse JSON text. Errors are ConfigError naming the file, the key path and a line number.
RunConfig parse_config(const std::string &text, const std::string &source = "<config>");
RunConfig load_config(const std::string &path);
nlohmann::ordered_json to_json(const RunConfig &cfg);

LayerStack build_stack(const RunConfig &cfg);
IncidentWave build_wave(const RunConfig &cfg);
Problem build_problem(const RunConfig &cfg);
SolveMethod solve_method(const RunConfig &cfg);

}  // namespace bimfs
