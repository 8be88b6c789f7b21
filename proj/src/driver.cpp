// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#include "bimfs/driver.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <thread>

#include <spdlog/spdlog.h>

#include "bimfs/parallel.hpp"

namespace bimfs
{

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

using ojson = nlohmann::ordered_json;

ojson complex_pair(cplx z)
{
  return ojson::array({z.real(), z.imag()});
}

}  // namespace

CaseResult run_case(const RunConfig &cfg, const CaseOptions &opts)
{
  CaseResult res;
  auto t0 = Clock::now();
  res.model = std::make_unique<Model>(build_problem(cfg));
  res.timings.setup = seconds_since(t0);

  t0 = Clock::now();
  // The residual report below covers what the solver would otherwise recompute.
  SolverOptions sopts = opts.solver;
  sopts.compute_residual = false;
  if (solve_method(cfg) == SolveMethod::direct)
  {
    res.solution = solve_direct(assemble_full(*res.model), sopts);
  }
  else
  {
    res.solution = solve_schur(Assembler(*res.model), sopts);
  }
  res.timings.solve = seconds_since(t0);

  t0 = Clock::now();
  res.residual = residual_report(Assembler(*res.model), res.solution);
  res.solution.residual_norm = res.residual.total;
  res.energy = energy_report(*res.model, res.solution);
  const FieldEvaluator fields = res.fields();
  if (opts.divergence && cfg.run.divergence_samples > 0)
  {
    res.divergence = divergence_check(fields, cfg.run.divergence_samples,
                                      cfg.discretization.div_stencil_h, cfg.run.seed);
  }
  for (const Probe &p : cfg.run.probes)
  {
    ProbeResult pr;
    pr.probe = p;
    pr.value = fields.E(p.x)(p.component);
    if (p.reference)
    {
      pr.error = std::abs(pr.value - *p.reference);
    }
    res.probes.push_back(pr);
  }
  res.timings.diagnostics = seconds_since(t0);
  return res;
}

RunConfig with_axis_value(const RunConfig &cfg, const std::string &axis, double value)
{
  RunConfig out = cfg;
  if (axis == "n_src")
  {
    out.discretization.n_src = static_cast<int>(std::lround(value));
  }
  else if (axis == "n_proxy")
  {
    out.discretization.n_proxy = static_cast<int>(std::lround(value));
  }
  else if (axis == "offset")
  {
    out.discretization.offset_delta = value;
  }
  else if (axis == "omega")
  {
    if (out.wave.k_vec)
    {
      *out.wave.k_vec *= value / out.wave.omega;
    }
    out.wave.omega = value;
  }
  else
  {
    throw ConfigError("unknown sweep axis '" + axis + "' (n_src, n_proxy, offset, omega)");
  }
  out.discretization.validate();
  return out;
}

nlohmann::ordered_json summary_json(const RunConfig &cfg, const CaseResult &res)
{
  ojson doc;
  doc["schema_version"] = config_schema_version;
  doc["name"] = cfg.name;

  const Solution &s = res.solution;
  const UnknownLayout &lay = s.layout;
  doc["system"] = {{"rows", lay.num_rows()},
                   {"columns", lay.num_columns()},
                   {"interfaces", lay.num_interfaces},
                   {"n_targets", lay.n_targets}};
  doc["solve"] = {{"method", to_string(s.method)},
                  {"rank", s.rank},
                  {"residual_norm", s.residual_norm},
                  {"rhs_norm", s.rhs_norm},
                  {"relative_residual", s.relative_residual()}};
  doc["residual"] = {{"transmission", res.residual.transmission},
                     {"quasi_periodicity", res.residual.quasi},
                     {"radiation", res.residual.radiation},
                     {"total", res.residual.total}};

  const EnergyReport &e = res.energy;
  ojson modes = ojson::array();
  for (const ModePower &m : e.modes)
  {
    modes.push_back(
        {{"m", m.m}, {"n", m.n}, {"reflected", m.reflected}, {"transmitted", m.transmitted}});
  }
  doc["energy"] = {{"incident", e.incident},
                   {"reflected", e.reflected},
                   {"transmitted", e.transmitted},
                   {"flux_error", e.flux_error},
                   {"reflectance", e.reflectance()},
                   {"transmittance", e.transmittance()},
                   {"modes", modes}};
  if (res.divergence)
  {
    doc["divergence"] = {{"max", res.divergence->max},
                         {"mean", res.divergence->mean},
                         {"max_abs", res.divergence->max_abs},
                         {"samples", res.divergence->samples}};
  }
  ojson probes = ojson::array();
  for (const ProbeResult &p : res.probes)
  {
    ojson j;
    j["x"] = {p.probe.x.x(), p.probe.x.y(), p.probe.x.z()};
    j["component"] = p.probe.component;
    j["value"] = complex_pair(p.value);
    if (p.probe.reference)
    {
      j["reference"] = complex_pair(*p.probe.reference);
      j["error"] = *p.error;
    }
    probes.push_back(j);
  }
  doc["probes"] = probes;
  doc["config"] = to_json(cfg);
  doc["timings"] = {{"setup_s", res.timings.setup},
                    {"solve_s", res.timings.solve},
                    {"diagnostics_s", res.timings.diagnostics}};
  return doc;
}

std::vector<SweepRow> run_sweep(const RunConfig &cfg, const std::string &axis,
                                const std::vector<double> &values, int workers,
                                const CaseOptions &opts)
{
  std::vector<SweepRow> rows(values.size());
  if (values.empty())
  {
    return rows;
  }
  const std::size_t n_workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, values.size());
  const unsigned saved = thread_count();
  // Split the cores between concurrent cases.
  set_thread_count(std::max(1u, saved / static_cast<unsigned>(std::max<std::size_t>(n_workers, 1))));

  auto run_one = [&](std::size_t i) {
    SweepRow &row = rows[i];
    row.value = values[i];
    const auto t0 = Clock::now();
    try
    {
      const CaseResult res = run_case(with_axis_value(cfg, axis, values[i]), opts);
      row.ok = true;
      row.energy = res.energy;
      row.relative_residual = res.solution.relative_residual();
      row.divergence = res.divergence;
      row.probes = res.probes;
    }
    catch (const std::exception &e)
    {
      row.ok = false;
      row.message = e.what();
      spdlog::error("sweep {} = {}: {}", axis, values[i], e.what());
    }
    row.seconds = seconds_since(t0);
  };

  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < n_workers; ++w)
  {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < values.size(); i = next++)
      {
        run_one(i);
      }
    });
  }
  for (auto &t : pool)
  {
    t.join();
  }
  set_thread_count(saved);
  return rows;
}

std::vector<CheckResult> property_checks(const CaseResult &res, unsigned long long seed)
{
  std::vector<CheckResult> out;
  auto add = [&](std::string name, double value, double tol) {
    out.push_back({std::move(name), value, tol, std::isfinite(value) && value <= tol});
  };
  const Model &model = *res.model;
  const FieldEvaluator fields = res.fields();
  const Lattice &lat = model.lattice();
  const double dx = model.stack().dx;

  add("flux_error", res.energy.flux_error, 1e-6);
  add("relative_residual", res.solution.relative_residual(), 1e-6);

  // Representation at x and x + dx, both evaluated without wrapping.
  const auto pts = sample_interior(model, 20, 1e-2, seed);
  double qp = 0.0;
  for (const InteriorPoint &p : pts)
  {
    Vec3 xl = p.x;
    xl.x() = -0.5 * dx + 0.05 * dx * (xl.x() / dx + 0.4);
    if (locate_layer(model.stack(), xl) != p.layer)
    {
      continue;
    }
    CVec3 el, er;
    fields.eval_in_layer(p.layer, xl, &el, nullptr);
    fields.eval_in_layer(p.layer, xl + Vec3(dx, 0.0, 0.0), &er, nullptr);
    qp = std::max(qp, (er / lat.alpha - el).norm());
  }
  add("quasi_periodicity", qp, 10.0 * std::max(res.solution.residual_norm, 1e-12));

  // curl E = i omega mu H by central differences.
  const double h = 1e-4;
  double maxwell = 0.0;
  for (const InteriorPoint &p : pts)
  {
    CMat3 grad;  // grad(i, j) = dE_i / dx_j
    for (int j = 0; j < 3; ++j)
    {
      Vec3 step = Vec3::Zero();
      step(j) = h;
      CVec3 ep, em;
      fields.eval_in_layer(p.layer, p.x + step, &ep, nullptr);
      fields.eval_in_layer(p.layer, p.x - step, &em, nullptr);
      grad.col(j) = (ep - em) / (2.0 * h);
    }
    const CVec3 curl(grad(2, 1) - grad(1, 2), grad(0, 2) - grad(2, 0), grad(1, 0) - grad(0, 1));
    CVec3 hv;
    fields.eval_in_layer(p.layer, p.x, nullptr, &hv);
    const Medium &med = model.medium(p.layer);
    const CVec3 rhs = I * med.omega * med.mu * hv;
    maxwell = std::max(maxwell, (curl - rhs).norm() / std::max(rhs.norm(), 1e-300));
  }
  add("maxwell_coupling", maxwell, 1e-5);

  if (res.divergence)
  {
    add("divergence", res.divergence->max, 1e-4);
  }
  return out;
}

namespace
{

std::string csv_quote(const std::string &s)
{
  std::string out = "\"";
  for (char c : s)
  {
    if (c == '"')
    {
      out += '"';
    }
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

void write_sweep_csv(std::ostream &os, const std::string &axis, const std::vector<SweepRow> &rows,
                     std::size_t n_probes)
{
  os << std::setprecision(17);
  os << axis
     << ",status,incident,reflected,transmitted,flux_error,reflectance,transmittance,"
        "rt_defect,relative_residual,divergence_max,divergence_mean";
  for (std::size_t p = 0; p < n_probes; ++p)
  {
    os << ",probe" << p << "_re,probe" << p << "_im,probe" << p << "_error";
  }
  os << ",seconds,message\n";
  const std::string nan = "nan";
  for (const SweepRow &r : rows)
  {
    os << r.value << ',' << (r.ok ? "ok" : "error");
    if (r.ok)
    {
      const EnergyReport &e = r.energy;
      os << ',' << e.incident << ',' << e.reflected << ',' << e.transmitted << ','
         << e.flux_error << ',' << e.reflectance() << ',' << e.transmittance() << ','
         << e.reflectance() + e.transmittance() - 1.0 << ',' << r.relative_residual;
      if (r.divergence)
      {
        os << ',' << r.divergence->max << ',' << r.divergence->mean;
      }
      else
      {
        os << ',' << nan << ',' << nan;
      }
      for (std::size_t p = 0; p < n_probes; ++p)
      {
        const ProbeResult &pr = r.probes.at(p);
        os << ',' << pr.value.real() << ',' << pr.value.imag() << ',';
        if (pr.error)
        {
          os << *pr.error;
        }
        else
        {
          os << nan;
        }
      }
    }
    else
    {
      for (int c = 0; c < 10 + 3 * static_cast<int>(n_probes); ++c)
      {
        os << ',' << nan;
      }
    }
    os << ',' << r.seconds << ',' << csv_quote(r.message) << '\n';
  }
}

void write_field_grid_csv(std::ostream &os, const std::vector<FieldSample> &samples)
{
  os << std::setprecision(17);
  os << "x,y,z,Re(Ex),Im(Ex),Re(Ey),Im(Ey),Re(Ez),Im(Ez),Re(Hx),Im(Hx),Re(Hy),Im(Hy),"
        "Re(Hz),Im(Hz)\n";
  for (const FieldSample &s : samples)
  {
    os << s.position.x() << ',' << s.position.y() << ',' << s.position.z();
    for (int c = 0; c < 3; ++c)
    {
      os << ',' << s.E(c).real() << ',' << s.E(c).imag();
    }
    for (int c = 0; c < 3; ++c)
    {
      os << ',' << s.H(c).real() << ',' << s.H(c).imag();
    }
    os << '\n';
  }
}

}  // namespace bimfs
