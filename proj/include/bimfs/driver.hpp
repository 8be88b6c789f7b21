// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bimfs/config.hpp"
#include "bimfs/fields.hpp"

namespace bimfs
{

struct ProbeResult
{
  Probe probe;
  cplx value{0.0};
  std::optional<double> error;  // when the probe has a reference
};

struct Timings
{
  double setup = 0.0;
  double solve = 0.0;
  double diagnostics = 0.0;
};

// One solved configuration with its diagnostics. The model owns the geometry the solution
// and field evaluator refer to, so it is kept behind a stable pointer.
struct CaseResult
{
  std::unique_ptr<Model> model;
  Solution solution;
  ResidualReport residual;
  EnergyReport energy;
  std::optional<DivergenceStats> divergence;
  std::vector<ProbeResult> probes;
  Timings timings;

  FieldEvaluator fields() const { return FieldEvaluator(*model, solution); }
};

struct CaseOptions
{
  bool divergence = true;
  SolverOptions solver;
};

CaseResult run_case(const RunConfig &cfg, const CaseOptions &opts = {});

// Copy of cfg with one sweep axis set to value.
RunConfig with_axis_value(const RunConfig &cfg, const std::string &axis, double value);

// Machine-readable summary; timings live under "timings" only.
nlohmann::ordered_json summary_json(const RunConfig &cfg, const CaseResult &res);

// One row of a sweep table, either solved diagnostics or an error marker.
struct SweepRow
{
  double value = 0.0;
  bool ok = false;
  std::string message;
  EnergyReport energy;
  double relative_residual = 0.0;
  std::optional<DivergenceStats> divergence;
  std::vector<ProbeResult> probes;
  double seconds = 0.0;
};

// Runs the values with up to `workers` cases at a time; rows come back in input order.
std::vector<SweepRow> run_sweep(const RunConfig &cfg, const std::string &axis,
                                const std::vector<double> &values, int workers,
                                const CaseOptions &opts = {});

struct CheckResult
{
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Solution-level properties: flux balance, residual, Bloch periodicity of the representation,
// Maxwell coupling of E and H, and divergence.
std::vector<CheckResult> property_checks(const CaseResult &res, unsigned long long seed);

void write_sweep_csv(std::ostream &os, const std::string &axis, const std::vector<SweepRow> &rows,
                     std::size_t n_probes);
void write_field_grid_csv(std::ostream &os, const std::vector<FieldSample> &samples);

}  // namespace bimfs
