// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance runs. Prints one "PASS criterion k: ..." or "FAIL criterion k: ..." line per
// criterion after its sub-checks; exits non-zero if any selected criterion fails.
//
//   acceptance [--criterion k]

#include <chrono>
#include <functional>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "bimfs/driver.hpp"

using namespace bimfs;

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

RunConfig shipped(const std::string &name)
{
  return load_config(std::string(BIMFS_SOURCE_DIR) + "/configs/" + name);
}

void set_resolution(RunConfig &cfg, int n_side, int p_side, int w_side, int r)
{
  cfg.discretization.n_src = n_side * n_side;
  cfg.discretization.n_proxy = p_side * p_side;
  cfg.discretization.n_wall = w_side * w_side;
  cfg.discretization.rb_order = r;
}

// Collects sub-check outcomes for one criterion.
class Report
{
public:
  void check(bool ok, const std::string &what)
  {
    std::cout << "  [" << (ok ? "ok" : "FAIL") << "] " << what << std::endl;
    pass_ = pass_ && ok;
  }
  void note(const std::string &what) { std::cout << "  " << what << std::endl; }
  bool passed() const { return pass_; }

private:
  bool pass_ = true;
};

struct Timed
{
  CaseResult res;
  double seconds = 0.0;
};

Timed timed_case(const RunConfig &cfg, bool divergence = false)
{
  const auto t0 = Clock::now();
  Timed t{run_case(cfg, CaseOptions{divergence, {}}), 0.0};
  t.seconds = seconds_since(t0);
  return t;
}

void check_probes(Report &rep, const CaseResult &res, double tol, const std::string &label)
{
  for (const ProbeResult &p : res.probes)
  {
    if (!p.error)
    {
      continue;
    }
    rep.check(*p.error <= tol,
              fmt::format("{}: |E_{}({:g}, {:g}, {:g}) - ref| = {:.3e} (tol {:.0e})", label,
                          "xyz"[p.probe.component], p.probe.x.x(), p.probe.x.y(), p.probe.x.z(),
                          *p.error, tol));
  }
}

std::string case_line(const Timed &t)
{
  return fmt::format("flux_error {:.3e}, relative residual {:.3e}, R {:.10f}, T {:.10f}, {:.1f} s",
                     t.res.energy.flux_error, t.res.solution.relative_residual(),
                     t.res.energy.reflectance(), t.res.energy.transmittance(), t.seconds);
}

// Fresnel pointwise accuracy at two resolutions, plus the runtime of the finer one.
bool criterion_1(Report &rep)
{
  RunConfig cfg = shipped("01_fresnel_flat.json");
  cfg.run.grid.reset();

  RunConfig coarse = cfg;
  set_resolution(coarse, 20, 20, 20, 8);
  const Timed a = timed_case(coarse);
  rep.note("N = P = W = 20^2, R = 8: " + case_line(a));
  check_probes(rep, a.res, 1e-7, "N = 20^2");

  const Timed b = timed_case(cfg);
  rep.note("N = P = W = 30^2, R = 10: " + case_line(b));
  check_probes(rep, b.res, 1e-9, "N = 30^2");
  rep.check(b.seconds <= 300.0, fmt::format("N = 30^2 runtime {:.1f} s (limit 300 s)", b.seconds));
  return rep.passed();
}

bool criterion_2(Report &rep)
{
  const Timed t = timed_case(shipped("02_sine1d.json"));
  rep.note("sine1d, N = P = W = 30^2, R = 10: " + case_line(t));
  check_probes(rep, t.res, 1e-7, "N = 30^2");
  return rep.passed();
}

// Bi-periodic flux balance at full resolution, and the location of the best offset.
bool criterion_3(Report &rep)
{
  const Timed t = timed_case(shipped("03_sinecos.json"));
  rep.note("sinecos, N = 48^2, P = 40^2, W = 30^2, R = 10, offset 0.12: " + case_line(t));
  rep.check(t.res.energy.flux_error <= 1e-9,
            fmt::format("flux_error {:.3e} <= 1e-9", t.res.energy.flux_error));

  // The sweep runs at a reduced resolution to stay within desk time.
  RunConfig sweep = shipped("04_sinecos_offset_sweep.json");
  set_resolution(sweep, 24, 24, 24, 10);
  const std::vector<double> &values = sweep.run.sweep->values;
  const auto t0 = Clock::now();
  const auto rows = run_sweep(sweep, "offset", values, 1, CaseOptions{false, {}});
  std::size_t best = 0;
  for (std::size_t i = 0; i < rows.size(); ++i)
  {
    rep.note(fmt::format("  offset {:.2f}: {}", rows[i].value,
                         rows[i].ok ? fmt::format("flux_error {:.3e}", rows[i].energy.flux_error)
                                    : "error: " + rows[i].message));
    if (rows[i].ok && (!rows[best].ok || rows[i].energy.flux_error < rows[best].energy.flux_error))
    {
      best = i;
    }
  }
  const double at = rows[best].value;
  rep.check(rows[best].ok && best > 0 && best + 1 < rows.size() && at > 0.06 && at < 0.20,
            fmt::format("offset sweep (N = P = W = 24^2, R = 10, {:.0f} s): minimum at {:.2f}, "
                        "interior and inside (0.06, 0.20)",
                        seconds_since(t0), at));
  return rep.passed();
}

// Three bi-periodic interfaces cut from the five-interface configuration.
bool criterion_4(Report &rep)
{
  RunConfig cfg = shipped("05_five_interfaces.json");
  cfg.name = "three_interfaces";
  cfg.interfaces.resize(3);
  cfg.materials.resize(4);
  cfg.run.probes.clear();
  cfg.run.probes.push_back(Probe{Vec3(0, 0, 0.25), 1, std::nullopt});
  cfg.run.probes.push_back(Probe{Vec3(0, 0, -2.25), 1, std::nullopt});
  const Timed t = timed_case(cfg);
  rep.note("three sinecos interfaces, N = P = W = 30^2, R = 10: " + case_line(t));
  rep.check(t.res.energy.flux_error <= 1e-7,
            fmt::format("flux_error {:.3e} <= 1e-7", t.res.energy.flux_error));
  rep.check(t.seconds <= 600.0, fmt::format("runtime {:.1f} s (limit 600 s)", t.seconds));
  return rep.passed();
}

// Ten flat interfaces over nine frequencies.
bool criterion_5(Report &rep)
{
  const RunConfig cfg = shipped("08_spectra_ten_flat.json");
  const auto t0 = Clock::now();
  const auto rows = run_sweep(cfg, "omega", cfg.run.sweep->values, 1, CaseOptions{false, {}});
  double worst = 0.0;
  bool all_ok = rows.size() == 9;
  for (const SweepRow &r : rows)
  {
    if (!r.ok)
    {
      rep.check(false, fmt::format("omega {:.1f}: {}", r.value, r.message));
      all_ok = false;
      continue;
    }
    const double defect = std::abs(r.energy.reflectance() + r.energy.transmittance() - 1.0);
    worst = std::max(worst, defect);
    rep.check(defect <= 1e-6, fmt::format("omega {:.1f}: R {:.10f}, T {:.10f}, |R + T - 1| {:.3e}, "
                                          "{:.1f} s",
                                          r.value, r.energy.reflectance(),
                                          r.energy.transmittance(), defect, r.seconds));
  }
  rep.note(fmt::format("worst |R + T - 1| {:.3e} over {} frequencies, {:.0f} s", worst,
                       rows.size(), seconds_since(t0)));
  return all_ok && rep.passed();
}

// Property suites.
struct Rng
{
  std::mt19937_64 gen{2024};
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  Vec3 point(double r) { return {uniform(-r, r), uniform(-r, r), uniform(-r, r)}; }
  CVec3 moment()
  {
    return {cplx(uniform(-1, 1), uniform(-1, 1)), cplx(uniform(-1, 1), uniform(-1, 1)),
            cplx(uniform(-1, 1), uniform(-1, 1))};
  }
  Medium medium()
  {
    return Medium::from_material({uniform(1.0, 5.0), uniform(1.0, 2.0)}, uniform(0.5, 6.0));
  }
};

// Fourth-order central differences, J(i, j) = d f_i / d x_j.
CMat3 fd_jacobian(const std::function<CVec3(const Vec3 &)> &f, const Vec3 &x, double h)
{
  CMat3 j;
  for (int c = 0; c < 3; ++c)
  {
    Vec3 s = Vec3::Zero();
    s(c) = h;
    j.col(c) = (8.0 * (f(x + s) - f(x - s)) - (f(x + 2.0 * s) - f(x - 2.0 * s))) / (12.0 * h);
  }
  return j;
}

CVec3 curl_of(const CMat3 &j)
{
  return {j(2, 1) - j(1, 2), j(0, 2) - j(2, 0), j(1, 0) - j(0, 1)};
}

void kernel_properties(Report &rep)
{
  Rng rng;
  double curl_e = 0.0, curl_h = 0.0, div_e = 0.0, div_h = 0.0;
  for (int t = 0; t < 100; ++t)
  {
    const Medium med = rng.medium();
    const Vec3 y = rng.point(1.0);
    const Vec3 x = y + rng.point(1.0) + Vec3(0.3, 0.2, 0.0);
    const CVec3 p = rng.moment();
    const double h = 1e-3 * std::min((x - y).norm(), 2.0 * pi / std::abs(med.k));
    const CMat3 je = fd_jacobian([&](const Vec3 &z) { return green_E(med, z, y, p); }, x, h);
    const CMat3 jh = fd_jacobian([&](const Vec3 &z) { return green_H(med, z, y, p); }, x, h);
    const CVec3 he = I * med.omega * med.mu * green_H(med, x, y, p);
    const CVec3 eh = -I * med.omega * med.eps * green_E(med, x, y, p);
    curl_e = std::max(curl_e, (curl_of(je) - he).norm() / he.norm());
    curl_h = std::max(curl_h, (curl_of(jh) - eh).norm() / eh.norm());
    div_e = std::max(div_e, std::abs(je.trace()) / je.norm());
    div_h = std::max(div_h, std::abs(jh.trace()) / jh.norm());
  }
  rep.check(curl_e <= 1e-6, fmt::format("kernel curl G_E = i omega mu G_H on 100 random triples, "
                                        "max relative {:.2e} (tol 1e-6)",
                                        curl_e));
  rep.check(curl_h <= 1e-6, fmt::format("kernel curl G_H = -i omega eps G_E, max relative {:.2e} "
                                        "(tol 1e-6)",
                                        curl_h));
  rep.check(div_e <= 1e-6 && div_h <= 1e-6,
            fmt::format("kernel divergence, max relative {:.2e} (G_E) and {:.2e} (G_H) (tol 1e-6)",
                        div_e, div_h));

  // Same summation order as the library, with the images written out independently.
  double ns_err = 0.0;
  std::size_t bitwise = 0, total = 0;
  for (NearSumConvention conv : {NearSumConvention::shift_target, NearSumConvention::shift_source})
  {
    for (int t = 0; t < 100; ++t)
    {
      const Medium med = rng.medium();
      Lattice lat;
      lat.dx = rng.uniform(0.5, 1.5);
      lat.dy = rng.uniform(0.5, 1.5);
      lat.alpha = std::exp(I * rng.uniform(-3, 3));
      lat.beta = std::exp(I * rng.uniform(-3, 3));
      lat.convention = conv;
      const Vec3 x = rng.point(0.5), y = rng.point(0.5) + Vec3(0, 0, 1.0);
      const CVec3 p = rng.moment();
      for (KernelKind kind : {KernelKind::electric, KernelKind::magnetic})
      {
        CMat3 brute = CMat3::Zero();
        for (int m = -1; m <= 1; ++m)
        {
          for (int n = -1; n <= 1; ++n)
          {
            Vec3 xs = x, ys = y;
            if (conv == NearSumConvention::shift_target)
            {
              xs.x() += m * lat.dx;
              ys.y() += n * lat.dy;
            }
            else
            {
              ys.x() += m * lat.dx;
              ys.y() += n * lat.dy;
            }
            const CMat3 d = kind == KernelKind::electric ? green_E_dyadic(med, xs, ys)
                                                         : green_H_dyadic(med, xs, ys);
            brute += lat.weight(m, n) * d;
          }
        }
        const CVec3 want = brute * p;
        const CVec3 got = near_sum(kind, med, lat, x, y, p);
        ns_err = std::max(ns_err, (got - want).norm() / want.norm());
        bitwise += got == want ? 1 : 0;
        ++total;
      }
    }
  }
  rep.check(ns_err <= 1e-15,
            fmt::format("near_sum vs explicit nine-image sum: {} of {} bitwise equal, max relative "
                        "{:.2e} (tol 1e-15)",
                        bitwise, total, ns_err));

  std::size_t bad = 0;
  for (int t = 0; t < 10000; ++t)
  {
    const double omega = rng.uniform(0.5, 12.0);
    const Material top{rng.uniform(1.0, 4.0), 1.0};
    const double phi = rng.uniform(0.51 * pi, pi), theta = rng.uniform(0.0, 2.0 * pi);
    const double dx = rng.uniform(0.5, 2.0), dy = rng.uniform(0.5, 2.0);
    const IncidentWave w = IncidentWave::from_angles(omega, phi, theta, CVec3::Zero(), top, dx, dy);
    const cplx kl = Material{rng.uniform(1.0, 6.0), 1.0}.wavenumber(omega);
    const int m = static_cast<int>(rng.uniform(-10, 10)), n = static_cast<int>(rng.uniform(-10, 10));
    const RBMode md = rb_mode(m, n, w, dx, dy, kl);
    const cplx lhs = md.kappa_z * md.kappa_z;
    const cplx rhs = kl * kl - md.kappa_x * md.kappa_x - md.kappa_y * md.kappa_y;
    const bool branch = md.kappa_z.imag() > 0.0 || (md.kappa_z.imag() == 0.0 && md.kappa_z.real() >= 0.0);
    const bool ok = branch && std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)) &&
                    std::abs(md.kappa_x - w.k_vec.x() - 2.0 * pi * m / dx) <= 1e-12 * omega &&
                    std::abs(md.kappa_y - w.k_vec.y() - 2.0 * pi * n / dy) <= 1e-12 * omega;
    bad += ok ? 0 : 1;
  }
  rep.check(bad == 0, fmt::format("rb_mode branch and dispersion on 10^4 random modes: {} bad", bad));
}

Problem small_problem(int n_if, int ns, int np, int ws, int r, bool flat)
{
  Problem p;
  for (int l = 0; l < n_if; ++l)
  {
    p.stack.interfaces.push_back(flat ? Interface::flat(-l)
                                      : Interface::sinecos(0.1, 1, 1, 1.0, 1.0, -l));
    p.stack.materials.push_back({l % 2 == 0 ? 1.0 : 4.0, 1.0});
  }
  p.stack.materials.push_back({n_if % 2 == 0 ? 1.0 : 4.0, 1.0});
  p.wave = IncidentWave::from_angles(4.0, 0.9 * pi, flat ? 0.0 : 0.25 * pi,
                                     flat ? CVec3(0, 1, 0)
                                          : CVec3(-std::sqrt(0.5), std::sqrt(0.5), 0.0),
                                     p.stack.materials[0], 1.0, 1.0);
  p.params.n_src = ns * ns;
  p.params.n_proxy = np;
  p.params.n_wall = ws * ws;
  p.params.rb_order = r;
  return p;
}

void solver_properties(Report &rep)
{
  // Method equivalence on the evaluated field.
  for (int n_if : {1, 2})
  {
    const Model m(small_problem(n_if, 10, 100, 10, 4, n_if == 1));
    const Solution direct = solve_direct(assemble_full(m));
    const Solution schur = solve_schur(Assembler(m));
    const FieldEvaluator fd(m, direct), fs(m, schur);
    const double bound = 10.0 * std::max(direct.residual_norm, schur.residual_norm);
    double worst = 0.0;
    for (const InteriorPoint &pt : sample_interior(m, 20, 0.05, 17))
    {
      worst = std::max(worst, (fd.E(pt.x) - fs.E(pt.x)).norm());
    }
    rep.check(worst <= bound,
              fmt::format("Schur vs direct, {} interface(s): max field difference {:.2e} <= 10 x "
                          "residual {:.2e}",
                          n_if, worst, bound));
  }

  // Block shapes on random small systems.
  std::mt19937_64 gen(99);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
  std::size_t bad = 0;
  for (int t = 0; t < 20; ++t)
  {
    const int n_if = pick(1, 4), ns = pick(1, 3), np = pick(1, 12), ws = pick(1, 3), r = pick(0, 2);
    const Model m(small_problem(n_if, ns, np, ws, r, false));
    const UnknownLayout &lay = m.layout();
    const std::size_t n = ns * ns, mt = lay.n_targets, w = ws * ws, nm = (2 * r + 1) * (2 * r + 1);
    const BlockSystem sys = assemble_full(m);
    const CMatrix a = sys.dense();
    const bool ok =
        lay.num_rows() == 4 * mt * n_if + 12 * w * (n_if + 1) + 12 * w &&
        lay.num_columns() == 4 * n * n_if + 2 * static_cast<std::size_t>(np) * (n_if + 1) + 6 * nm &&
        static_cast<std::size_t>(a.rows()) == lay.num_rows() &&
        static_cast<std::size_t>(a.cols()) == lay.num_columns() &&
        sys.up.w.cols() == static_cast<Eigen::Index>(3 * nm);
    bad += ok ? 0 : 1;
  }
  rep.check(bad == 0, fmt::format("block-shape formulas on 20 random (N, P, W, R, L): {} bad", bad));
}

void divergence_property(Report &rep)
{
  RunConfig cfg = shipped("01_fresnel_flat.json");
  cfg.run.grid.reset();
  set_resolution(cfg, 20, 20, 20, 8);
  cfg.run.divergence_samples = 200;
  const Timed t = timed_case(cfg, true);
  rep.check(t.res.divergence && t.res.divergence->max <= 1e-4,
            fmt::format("divergence of converged Fresnel solution (N = 20^2, h = 1e-3, 200 "
                        "points): max normalized {:.2e}, mean {:.2e} (tol 1e-4)",
                        t.res.divergence->max, t.res.divergence->mean));
  for (const CheckResult &c : property_checks(t.res, 5))
  {
    rep.note(fmt::format("check {}: {:.3e} (tol {:.0e}) {}", c.name, c.value, c.tolerance,
                         c.passed ? "ok" : "not met"));
  }
}

bool criterion_6(Report &rep)
{
  kernel_properties(rep);
  solver_properties(rep);
  divergence_property(rep);
  return rep.passed();
}

struct Criterion
{
  int id;
  const char *title;
  std::function<bool(Report &)> run;
};

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Acceptance runs"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-6)")->check(CLI::Range(1, 6));
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);

  const std::vector<Criterion> all = {
      {1, "Fresnel pointwise accuracy", criterion_1},
      {2, "1D-sine reference values", criterion_2},
      {3, "bi-periodic flux conservation and offset sweep", criterion_3},
      {4, "three-interface flux conservation", criterion_4},
      {5, "ten-interface spectra |R + T - 1|", criterion_5},
      {6, "property suites", criterion_6},
  };
  bool ok = true;
  for (const Criterion &c : all)
  {
    if (only != 0 && c.id != only)
    {
      continue;
    }
    std::cout << "criterion " << c.id << ": " << c.title << std::endl;
    Report rep;
    bool pass = false;
    const auto t0 = Clock::now();
    try
    {
      pass = c.run(rep);
    }
    catch (const std::exception &e)
    {
      rep.check(false, std::string("exception: ") + e.what());
    }
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " ("
              << fmt::format("{:.0f}", seconds_since(t0)) << " s)" << std::endl;
    ok = ok && pass;
  }
  return ok ? 0 : 1;
}
