// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

// Command line driver: solve | sweep | check on a JSON run configuration.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "bimfs/driver.hpp"
#include "bimfs/parallel.hpp"

namespace fs = std::filesystem;
using namespace bimfs;

namespace
{

std::vector<std::string> split(const std::string &s, char sep)
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
  {
    if (!item.empty())
    {
      out.push_back(item);
    }
  }
  return out;
}

double to_double(const std::string &s, const std::string &what)
{
  try
  {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size())
    {
      throw std::invalid_argument(s);
    }
    return v;
  }
  catch (const std::exception &)
  {
    throw ConfigError(what + ": cannot read '" + s + "' as a number");
  }
}

// "x0:x1:nx,y0:y1:ny,z0:z1:nz"
GridSpec parse_grid(const std::string &text)
{
  const auto axes = split(text, ',');
  if (axes.size() != 3)
  {
    throw ConfigError("--grid: expected lo:hi:count for x, y and z separated by commas");
  }
  GridSpec g;
  for (int a = 0; a < 3; ++a)
  {
    const auto parts = split(axes[static_cast<std::size_t>(a)], ':');
    if (parts.size() != 3)
    {
      throw ConfigError("--grid: axis '" + axes[static_cast<std::size_t>(a)] +
                        "' is not lo:hi:count");
    }
    g.lo(a) = to_double(parts[0], "--grid");
    g.hi(a) = to_double(parts[1], "--grid");
    g.count[static_cast<std::size_t>(a)] = static_cast<int>(to_double(parts[2], "--grid"));
    if (g.count[static_cast<std::size_t>(a)] < 1)
    {
      throw ConfigError("--grid: counts must be positive");
    }
  }
  return g;
}

// "x,y,z[,component];..."
std::vector<Probe> parse_probes(const std::string &text)
{
  std::vector<Probe> out;
  for (const std::string &item : split(text, ';'))
  {
    const auto parts = split(item, ',');
    if (parts.size() != 3 && parts.size() != 4)
    {
      throw ConfigError("--probes: expected x,y,z[,component] entries separated by ';'");
    }
    Probe p;
    p.x = Vec3(to_double(parts[0], "--probes"), to_double(parts[1], "--probes"),
               to_double(parts[2], "--probes"));
    if (parts.size() == 4)
    {
      p.component = static_cast<int>(to_double(parts[3], "--probes"));
    }
    out.push_back(p);
  }
  return out;
}

std::vector<double> parse_values(const std::string &text)
{
  std::vector<double> out;
  for (const std::string &v : split(text, ','))
  {
    out.push_back(to_double(v, "--values"));
  }
  return out;
}

std::vector<FieldSample> sample_grid(const FieldEvaluator &fields, const GridSpec &grid)
{
  const std::vector<Vec3> pts = grid.points();
  std::vector<FieldSample> out(pts.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  parallel_for(pts.size(), [&](std::size_t i) {
    try
    {
      out[i] = fields.sample(pts[i]);
    }
    catch (const Error &)
    {
      // On an interface or a source point: no value.
      out[i].position = pts[i];
      out[i].E.setConstant(cplx(nan, nan));
      out[i].H.setConstant(cplx(nan, nan));
    }
  });
  return out;
}

fs::path prepare_out_dir(const std::string &dir)
{
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path &path, const std::string &text)
{
  std::ofstream out(path);
  if (!out)
  {
    throw Error("cannot write " + path.string());
  }
  out << text;
}

struct Options
{
  std::string config;
  std::string out_dir;
  std::string axis;
  std::string values;
  std::string grid;
  std::string probes;
  std::optional<unsigned long long> seed;
  std::optional<int> workers;
  std::string log_level = "info";
};

RunConfig load_with_overrides(const Options &o)
{
  RunConfig cfg = load_config(o.config);
  if (!o.out_dir.empty())
  {
    cfg.run.out_dir = o.out_dir;
  }
  if (!o.grid.empty())
  {
    cfg.run.grid = parse_grid(o.grid);
  }
  if (!o.probes.empty())
  {
    cfg.run.probes = parse_probes(o.probes);
  }
  if (o.seed)
  {
    cfg.run.seed = *o.seed;
    cfg.discretization.rng_seed = *o.seed;
  }
  if (o.workers)
  {
    cfg.run.workers = *o.workers;
  }
  return cfg;
}

int cmd_solve(const Options &o)
{
  const RunConfig cfg = load_with_overrides(o);
  const fs::path dir = prepare_out_dir(cfg.run.out_dir);
  spdlog::info("solving '{}' ({} interfaces, N = {}, P = {}, W = {}, R = {})", cfg.name,
               cfg.interfaces.size(), cfg.discretization.n_src, cfg.discretization.n_proxy,
               cfg.discretization.n_wall, cfg.discretization.rb_order);
  const CaseResult res = run_case(cfg);
  write_text(dir / "summary.json", summary_json(cfg, res).dump(2) + "\n");
  spdlog::info("flux error {:.3e}, relative residual {:.3e}, solve {:.1f} s",
               res.energy.flux_error, res.solution.relative_residual(), res.timings.solve);
  if (cfg.run.grid)
  {
    const auto samples = sample_grid(res.fields(), *cfg.run.grid);
    std::ofstream out(dir / "field_grid.csv");
    write_field_grid_csv(out, samples);
    spdlog::info("wrote {} field samples", samples.size());
  }
  std::cout << (dir / "summary.json").string() << "\n";
  return 0;
}

int cmd_sweep(const Options &o)
{
  const RunConfig cfg = load_with_overrides(o);
  std::string axis = o.axis;
  std::vector<double> values = parse_values(o.values);
  if (axis.empty() && cfg.run.sweep)
  {
    axis = cfg.run.sweep->axis;
  }
  if (values.empty() && cfg.run.sweep)
  {
    values = cfg.run.sweep->values;
  }
  if (axis.empty() || values.empty())
  {
    throw ConfigError("sweep needs --axis and --values or a run.sweep section");
  }
  const fs::path dir = prepare_out_dir(cfg.run.out_dir);
  const auto rows = run_sweep(cfg, axis, values, cfg.run.workers);
  const fs::path table = dir / ("sweep_" + axis + ".csv");
  std::ofstream out(table);
  write_sweep_csv(out, axis, rows, cfg.run.probes.size());
  std::cout << table.string() << "\n";
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const SweepRow &r) { return !r.ok; });
  if (failed > 0)
  {
    spdlog::warn("{} of {} sweep points failed", failed, rows.size());
  }
  return 0;
}

int cmd_check(const Options &o)
{
  const RunConfig cfg = load_with_overrides(o);
  const CaseResult res = run_case(cfg);
  bool ok = true;
  for (const CheckResult &c : property_checks(res, cfg.run.seed))
  {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << c.value
              << " tol=" << c.tolerance << "\n";
    ok = ok && c.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Maxwell transmission through bi-periodic multilayer interfaces"};
  app.require_subcommand(1);
  Options o;
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads for assembly and field evaluation (0: all cores)");
  app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error");

  auto common = [&](CLI::App *sub) {
    sub->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out-dir", o.out_dir, "Output directory (overrides run.out_dir)");
    sub->add_option("--grid", o.grid, "Field grid x0:x1:nx,y0:y1:ny,z0:z1:nz");
    sub->add_option("--probes", o.probes, "Probe points x,y,z[,component];...");
    sub->add_option("--seed", o.seed, "Seed for sampled diagnostics");
    sub->add_option("--workers", o.workers, "Concurrent sweep points");
  };
  CLI::App *solve = app.add_subcommand("solve", "Solve one configuration and write a summary");
  common(solve);
  CLI::App *sweep = app.add_subcommand("sweep", "Solve over a list of values on one axis");
  common(sweep);
  sweep->add_option("--axis", o.axis, "n_src | n_proxy | offset | omega");
  sweep->add_option("--values", o.values, "Comma-separated values");
  CLI::App *check = app.add_subcommand("check", "Solve and run the property checks");
  common(check);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(o.log_level));
  set_thread_count(threads);

  try
  {
    if (*solve)
    {
      return cmd_solve(o);
    }
    if (*sweep)
    {
      return cmd_sweep(o);
    }
    return cmd_check(o);
  }
  catch (const std::exception &e)
  {
    spdlog::error("{}", e.what());
    return 2;
  }
}
