// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#include "bimfs/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "bimfs/expression.hpp"

namespace bimfs
{

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::vector<Vec3> GridSpec::points() const
{
  std::vector<Vec3> out;
  out.reserve(size());
  auto coord = [&](int axis, int i) {
    return count[axis] == 1 ? lo(axis) : lo(axis) + (hi(axis) - lo(axis)) * i / (count[axis] - 1);
  };
  for (int i = 0; i < count[0]; ++i)
  {
    for (int j = 0; j < count[1]; ++j)
    {
      for (int k = 0; k < count[2]; ++k)
      {
        out.emplace_back(coord(0, i), coord(1, j), coord(2, k));
      }
    }
  }
  return out;
}

bool RunConfig::operator==(const RunConfig &o) const
{
  return schema_version == o.schema_version && name == o.name &&
         description == o.description && dx == o.dx && dy == o.dy &&
         interfaces == o.interfaces && materials == o.materials && wave == o.wave &&
         discretization == o.discretization && run == o.run;
}

namespace
{

// Walks the parsed document, keeping the raw text to anchor diagnostics to a line.
class Reader
{
public:
  Reader(const std::string &text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string &path, const std::string &what) const
  {
    std::ostringstream msg;
    msg << source_ << ":" << line_of(path) << ": " << path << ": " << what;
    throw ConfigError(msg.str());
  }

  const json &require(const json &obj, const std::string &path, const std::string &key) const
  {
    if (!obj.is_object() || !obj.contains(key))
    {
      fail(join(path, key), "missing required key '" + key + "'");
    }
    return obj.at(key);
  }

  void allow_only(const json &obj, const std::string &path, std::set<std::string> keys) const
  {
    if (!obj.is_object())
    {
      fail(path, "expected an object");
    }
    for (const auto &[k, v] : obj.items())
    {
      if (!keys.contains(k))
      {
        fail(join(path, k), "unknown key '" + k + "'");
      }
    }
  }

  // Numbers may also be given as constant expressions, e.g. "9*pi/10".
  double number(const json &v, const std::string &path) const
  {
    if (v.is_number())
    {
      return v.get<double>();
    }
    if (v.is_string())
    {
      try
      {
        return HeightExpression(v.get<std::string>())(0.0, 0.0).z;
      }
      catch (const ConfigError &e)
      {
        fail(path, e.what());
      }
    }
    fail(path, "expected a number");
  }

  int integer(const json &v, const std::string &path) const
  {
    if (!v.is_number_integer())
    {
      fail(path, "expected an integer");
    }
    return v.get<int>();
  }

  cplx complex(const json &v, const std::string &path) const
  {
    if (v.is_array())
    {
      if (v.size() != 2)
      {
        fail(path, "complex values are [re, im]");
      }
      return {number(v[0], path + "[0]"), number(v[1], path + "[1]")};
    }
    return {number(v, path), 0.0};
  }

  Vec3 vec3(const json &v, const std::string &path) const
  {
    if (!v.is_array() || v.size() != 3)
    {
      fail(path, "expected an array of 3 numbers");
    }
    return {number(v[0], path + "[0]"), number(v[1], path + "[1]"), number(v[2], path + "[2]")};
  }

  CVec3 cvec3(const json &v, const std::string &path) const
  {
    if (!v.is_array() || v.size() != 3)
    {
      fail(path, "expected an array of 3 (complex) numbers");
    }
    return {complex(v[0], path + "[0]"), complex(v[1], path + "[1]"), complex(v[2], path + "[2]")};
  }

  std::string string(const json &v, const std::string &path) const
  {
    if (!v.is_string())
    {
      fail(path, "expected a string");
    }
    return v.get<std::string>();
  }

  static std::string join(const std::string &path, const std::string &key)
  {
    return path.empty() ? key : path + "." + key;
  }

private:
  // Line of the deepest key of `path` found by scanning for each component in turn.
  std::size_t line_of(const std::string &path) const
  {
    std::size_t pos = 0;
    std::size_t found = 0;
    std::istringstream parts(path);
    std::string part;
    while (std::getline(parts, part, '.'))
    {
      const std::string key = "\"" + part.substr(0, part.find('[')) + "\"";
      const std::size_t at = text_.find(key, pos);
      if (at == std::string::npos)
      {
        break;
      }
      pos = found = at;
    }
    return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + found, '\n'));
  }

  const std::string &text_;
  std::string source_;
};

json complex_json(cplx z)
{
  if (z.imag() == 0.0)
  {
    return z.real();
  }
  return json::array({z.real(), z.imag()});
}

InterfaceSpec read_interface(const Reader &r, const json &v, const std::string &path)
{
  r.allow_only(v, path, {"shape", "amp", "cycles", "cycles_x", "cycles_y", "expression", "offset"});
  InterfaceSpec s;
  s.shape = r.string(r.require(v, path, "shape"), path + ".shape");
  if (v.contains("offset"))
  {
    s.offset = r.number(v["offset"], path + ".offset");
  }
  if (s.shape == "flat")
  {
    return s;
  }
  if (s.shape == "sine1d")
  {
    s.amp = r.number(r.require(v, path, "amp"), path + ".amp");
    if (v.contains("cycles"))
    {
      s.cycles = r.number(v["cycles"], path + ".cycles");
    }
    return s;
  }
  if (s.shape == "sinecos")
  {
    s.amp = r.number(r.require(v, path, "amp"), path + ".amp");
    if (v.contains("cycles_x"))
    {
      s.cycles_x = r.number(v["cycles_x"], path + ".cycles_x");
    }
    if (v.contains("cycles_y"))
    {
      s.cycles_y = r.number(v["cycles_y"], path + ".cycles_y");
    }
    return s;
  }
  if (s.shape == "expression")
  {
    s.expression = r.string(r.require(v, path, "expression"), path + ".expression");
    try
    {
      HeightExpression check(s.expression);
    }
    catch (const ConfigError &e)
    {
      r.fail(path + ".expression", e.what());
    }
    return s;
  }
  r.fail(path + ".shape", "unknown shape '" + s.shape + "' (flat, sine1d, sinecos, expression)");
}

void read_discretization(const Reader &r, const json &v, DiscretizationParams &p)
{
  const std::string path = "discretization";
  r.allow_only(v, path,
               {"n_src", "n_proxy", "n_wall", "rb_order", "offset_delta", "proxy_radius", "z_u",
                "z_d", "div_stencil_h", "rng_seed"});
  auto opt_int = [&](const char *key, int &dst) {
    if (v.contains(key))
    {
      dst = r.integer(v[key], path + "." + key);
    }
  };
  auto opt_num = [&](const char *key, double &dst) {
    if (v.contains(key))
    {
      dst = r.number(v[key], path + "." + key);
    }
  };
  auto opt_opt = [&](const char *key, std::optional<double> &dst) {
    if (v.contains(key) && !v[key].is_null())
    {
      dst = r.number(v[key], path + "." + key);
    }
  };
  opt_int("n_src", p.n_src);
  opt_int("n_proxy", p.n_proxy);
  opt_int("n_wall", p.n_wall);
  opt_int("rb_order", p.rb_order);
  opt_num("offset_delta", p.offset_delta);
  opt_opt("proxy_radius", p.proxy_radius);
  opt_opt("z_u", p.z_u);
  opt_opt("z_d", p.z_d);
  opt_num("div_stencil_h", p.div_stencil_h);
  if (v.contains("rng_seed"))
  {
    if (!v["rng_seed"].is_number_unsigned())
    {
      r.fail(path + ".rng_seed", "expected a non-negative integer");
    }
    p.rng_seed = v["rng_seed"].get<unsigned long long>();
  }
  try
  {
    p.validate();
  }
  catch (const Error &e)
  {
    r.fail(path, e.what());
  }
}

void read_run(const Reader &r, const json &v, RunSpec &run)
{
  const std::string path = "run";
  r.allow_only(v, path,
               {"mode", "out_dir", "method", "near_sum", "sweep", "probes", "grid",
                "divergence_samples", "seed", "workers", "long_running"});
  if (v.contains("mode"))
  {
    run.mode = r.string(v["mode"], "run.mode");
    if (run.mode != "solve" && run.mode != "sweep")
    {
      r.fail("run.mode", "expected 'solve' or 'sweep'");
    }
  }
  if (v.contains("out_dir"))
  {
    run.out_dir = r.string(v["out_dir"], "run.out_dir");
  }
  if (v.contains("method"))
  {
    run.method = r.string(v["method"], "run.method");
    if (run.method != "schur" && run.method != "direct")
    {
      r.fail("run.method", "expected 'schur' or 'direct'");
    }
  }
  if (v.contains("near_sum"))
  {
    run.near_sum = r.string(v["near_sum"], "run.near_sum");
    if (run.near_sum != "shift_source" && run.near_sum != "shift_target")
    {
      r.fail("run.near_sum", "expected 'shift_source' or 'shift_target'");
    }
  }
  if (v.contains("sweep"))
  {
    const json &s = v["sweep"];
    r.allow_only(s, "run.sweep", {"axis", "values"});
    SweepSpec sw;
    sw.axis = r.string(r.require(s, "run.sweep", "axis"), "run.sweep.axis");
    if (sw.axis != "n_src" && sw.axis != "n_proxy" && sw.axis != "offset" && sw.axis != "omega")
    {
      r.fail("run.sweep.axis", "expected one of n_src, n_proxy, offset, omega");
    }
    const json &vals = r.require(s, "run.sweep", "values");
    if (!vals.is_array())
    {
      r.fail("run.sweep.values", "expected an array");
    }
    for (std::size_t i = 0; i < vals.size(); ++i)
    {
      sw.values.push_back(r.number(vals[i], "run.sweep.values[" + std::to_string(i) + "]"));
    }
    run.sweep = sw;
  }
  if (v.contains("probes"))
  {
    const json &ps = v["probes"];
    if (!ps.is_array())
    {
      r.fail("run.probes", "expected an array");
    }
    for (std::size_t i = 0; i < ps.size(); ++i)
    {
      const std::string p = "run.probes[" + std::to_string(i) + "]";
      r.allow_only(ps[i], p, {"x", "component", "reference"});
      Probe pr;
      pr.x = r.vec3(r.require(ps[i], p, "x"), p + ".x");
      if (ps[i].contains("component"))
      {
        pr.component = r.integer(ps[i]["component"], p + ".component");
        if (pr.component < 0 || pr.component > 2)
        {
          r.fail(p + ".component", "expected 0, 1 or 2");
        }
      }
      if (ps[i].contains("reference") && !ps[i]["reference"].is_null())
      {
        pr.reference = r.complex(ps[i]["reference"], p + ".reference");
      }
      run.probes.push_back(pr);
    }
  }
  if (v.contains("grid") && !v["grid"].is_null())
  {
    const json &g = v["grid"];
    r.allow_only(g, "run.grid", {"lo", "hi", "count"});
    GridSpec gs;
    gs.lo = r.vec3(r.require(g, "run.grid", "lo"), "run.grid.lo");
    gs.hi = r.vec3(r.require(g, "run.grid", "hi"), "run.grid.hi");
    const json &c = r.require(g, "run.grid", "count");
    if (!c.is_array() || c.size() != 3)
    {
      r.fail("run.grid.count", "expected three positive integers");
    }
    for (int a = 0; a < 3; ++a)
    {
      gs.count[a] = r.integer(c[a], "run.grid.count");
      if (gs.count[a] < 1)
      {
        r.fail("run.grid.count", "expected three positive integers");
      }
    }
    run.grid = gs;
  }
  if (v.contains("divergence_samples"))
  {
    run.divergence_samples =
        static_cast<std::size_t>(std::max(0, r.integer(v["divergence_samples"], "run.divergence_samples")));
  }
  if (v.contains("seed"))
  {
    if (!v["seed"].is_number_unsigned())
    {
      r.fail("run.seed", "expected a non-negative integer");
    }
    run.seed = v["seed"].get<unsigned long long>();
  }
  if (v.contains("workers"))
  {
    run.workers = r.integer(v["workers"], "run.workers");
  }
  if (v.contains("long_running"))
  {
    if (!v["long_running"].is_boolean())
    {
      r.fail("run.long_running", "expected true or false");
    }
    run.long_running = v["long_running"].get<bool>();
  }
}

}  // namespace

RunConfig parse_config(const std::string &text, const std::string &source)
{
  json doc;
  try
  {
    doc = json::parse(text);
  }
  catch (const json::parse_error &e)
  {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw ConfigError(source + ":" + std::to_string(line) + ": JSON syntax error: " + e.what());
  }
  const Reader r(text, source);
  r.allow_only(doc, "", {"schema_version", "name", "description", "geometry", "materials", "wave",
                         "discretization", "run"});

  RunConfig cfg;
  cfg.schema_version = r.integer(r.require(doc, "", "schema_version"), "schema_version");
  if (cfg.schema_version != config_schema_version)
  {
    r.fail("schema_version", "unsupported schema version " + std::to_string(cfg.schema_version) +
                                 " (this build reads " + std::to_string(config_schema_version) +
                                 ")");
  }
  if (doc.contains("name"))
  {
    cfg.name = r.string(doc["name"], "name");
  }
  if (doc.contains("description"))
  {
    cfg.description = r.string(doc["description"], "description");
  }

  const json &geo = r.require(doc, "", "geometry");
  r.allow_only(geo, "geometry", {"dx", "dy", "interfaces"});
  if (geo.contains("dx"))
  {
    cfg.dx = r.number(geo["dx"], "geometry.dx");
  }
  if (geo.contains("dy"))
  {
    cfg.dy = r.number(geo["dy"], "geometry.dy");
  }
  const json &ifs = r.require(geo, "geometry", "interfaces");
  if (!ifs.is_array() || ifs.empty())
  {
    r.fail("geometry.interfaces", "expected a non-empty array");
  }
  for (std::size_t i = 0; i < ifs.size(); ++i)
  {
    cfg.interfaces.push_back(
        read_interface(r, ifs[i], "geometry.interfaces[" + std::to_string(i) + "]"));
  }

  const json &mats = r.require(doc, "", "materials");
  if (!mats.is_array())
  {
    r.fail("materials", "expected an array");
  }
  for (std::size_t i = 0; i < mats.size(); ++i)
  {
    const std::string p = "materials[" + std::to_string(i) + "]";
    r.allow_only(mats[i], p, {"eps", "mu"});
    Material m;
    if (mats[i].contains("eps"))
    {
      m.eps_rel = r.complex(mats[i]["eps"], p + ".eps");
    }
    if (mats[i].contains("mu"))
    {
      m.mu_rel = r.complex(mats[i]["mu"], p + ".mu");
    }
    cfg.materials.push_back(m);
  }
  if (cfg.materials.size() != cfg.interfaces.size() + 1)
  {
    r.fail("materials", "expected " + std::to_string(cfg.interfaces.size() + 1) +
                            " materials for " + std::to_string(cfg.interfaces.size()) +
                            " interfaces, got " + std::to_string(cfg.materials.size()));
  }

  const json &wave = r.require(doc, "", "wave");
  r.allow_only(wave, "wave", {"omega", "k_vec", "angles", "polarization"});
  cfg.wave.omega = r.number(r.require(wave, "wave", "omega"), "wave.omega");
  if (!(cfg.wave.omega > 0.0))
  {
    r.fail("wave.omega", "must be positive");
  }
  if (wave.contains("k_vec") == wave.contains("angles"))
  {
    r.fail("wave", "give exactly one of 'k_vec' or 'angles'");
  }
  if (wave.contains("k_vec"))
  {
    cfg.wave.k_vec = r.vec3(wave["k_vec"], "wave.k_vec");
  }
  else
  {
    const json &a = wave["angles"];
    r.allow_only(a, "wave.angles", {"phi", "theta"});
    cfg.wave.angles = std::pair{r.number(r.require(a, "wave.angles", "phi"), "wave.angles.phi"),
                                r.number(r.require(a, "wave.angles", "theta"), "wave.angles.theta")};
  }
  cfg.wave.polarization = r.cvec3(r.require(wave, "wave", "polarization"), "wave.polarization");

  if (doc.contains("discretization"))
  {
    read_discretization(r, doc["discretization"], cfg.discretization);
  }
  if (doc.contains("run"))
  {
    read_run(r, doc["run"], cfg.run);
  }

  try
  {
    build_stack(cfg).validate();
  }
  catch (const GeometryError &e)
  {
    r.fail("geometry", e.what());
  }
  const IncidentWave w = build_wave(cfg);
  const cplx kdote = w.k_vec.cast<cplx>().dot(w.polarization);
  if (std::abs(kdote) > 1e-10 * w.k_vec.norm() * w.polarization.norm())
  {
    r.fail("wave.polarization", "not orthogonal to the wavevector (|k . E| = " +
                                    std::to_string(std::abs(kdote)) + ")");
  }
  if (!(w.k_vec.z() < 0.0))
  {
    r.fail("wave", "the incident wave must travel downward (k_z < 0)");
  }
  return cfg;
}

RunConfig load_config(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ConfigError(path + ": cannot open config file");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

ojson to_json(const RunConfig &cfg)
{
  ojson doc;
  doc["schema_version"] = cfg.schema_version;
  doc["name"] = cfg.name;
  doc["description"] = cfg.description;
  ojson ifs = ojson::array();
  for (const InterfaceSpec &s : cfg.interfaces)
  {
    ojson j;
    j["shape"] = s.shape;
    if (s.shape == "sine1d")
    {
      j["amp"] = s.amp;
      j["cycles"] = s.cycles;
    }
    else if (s.shape == "sinecos")
    {
      j["amp"] = s.amp;
      j["cycles_x"] = s.cycles_x;
      j["cycles_y"] = s.cycles_y;
    }
    else if (s.shape == "expression")
    {
      j["expression"] = s.expression;
    }
    j["offset"] = s.offset;
    ifs.push_back(j);
  }
  doc["geometry"] = {{"dx", cfg.dx}, {"dy", cfg.dy}, {"interfaces", ifs}};
  ojson mats = ojson::array();
  for (const Material &m : cfg.materials)
  {
    mats.push_back({{"eps", complex_json(m.eps_rel)}, {"mu", complex_json(m.mu_rel)}});
  }
  doc["materials"] = mats;

  ojson w;
  w["omega"] = cfg.wave.omega;
  if (cfg.wave.k_vec)
  {
    const Vec3 &k = *cfg.wave.k_vec;
    w["k_vec"] = {k.x(), k.y(), k.z()};
  }
  if (cfg.wave.angles)
  {
    w["angles"] = {{"phi", cfg.wave.angles->first}, {"theta", cfg.wave.angles->second}};
  }
  const CVec3 &p = cfg.wave.polarization;
  w["polarization"] = {complex_json(p.x()), complex_json(p.y()), complex_json(p.z())};
  doc["wave"] = w;

  const DiscretizationParams &d = cfg.discretization;
  ojson dj;
  dj["n_src"] = d.n_src;
  dj["n_proxy"] = d.n_proxy;
  dj["n_wall"] = d.n_wall;
  dj["rb_order"] = d.rb_order;
  dj["offset_delta"] = d.offset_delta;
  dj["proxy_radius"] = d.proxy_radius ? ojson(*d.proxy_radius) : ojson(nullptr);
  dj["z_u"] = d.z_u ? ojson(*d.z_u) : ojson(nullptr);
  dj["z_d"] = d.z_d ? ojson(*d.z_d) : ojson(nullptr);
  dj["div_stencil_h"] = d.div_stencil_h;
  dj["rng_seed"] = d.rng_seed;
  doc["discretization"] = dj;

  const RunSpec &r = cfg.run;
  ojson rj;
  rj["mode"] = r.mode;
  rj["out_dir"] = r.out_dir;
  rj["method"] = r.method;
  rj["near_sum"] = r.near_sum;
  if (r.sweep)
  {
    rj["sweep"] = {{"axis", r.sweep->axis}, {"values", r.sweep->values}};
  }
  ojson probes = ojson::array();
  for (const Probe &pr : r.probes)
  {
    ojson j;
    j["x"] = {pr.x.x(), pr.x.y(), pr.x.z()};
    j["component"] = pr.component;
    if (pr.reference)
    {
      j["reference"] = {pr.reference->real(), pr.reference->imag()};
    }
    probes.push_back(j);
  }
  rj["probes"] = probes;
  if (r.grid)
  {
    rj["grid"] = {{"lo", {r.grid->lo.x(), r.grid->lo.y(), r.grid->lo.z()}},
                  {"hi", {r.grid->hi.x(), r.grid->hi.y(), r.grid->hi.z()}},
                  {"count", r.grid->count}};
  }
  rj["divergence_samples"] = r.divergence_samples;
  rj["seed"] = r.seed;
  rj["workers"] = r.workers;
  rj["long_running"] = r.long_running;
  doc["run"] = rj;
  return doc;
}

LayerStack build_stack(const RunConfig &cfg)
{
  LayerStack st;
  st.dx = cfg.dx;
  st.dy = cfg.dy;
  st.materials = cfg.materials;
  for (const InterfaceSpec &s : cfg.interfaces)
  {
    if (s.shape == "flat")
    {
      st.interfaces.push_back(Interface::flat(s.offset));
    }
    else if (s.shape == "sine1d")
    {
      st.interfaces.push_back(Interface::sine1d(s.amp, s.cycles, cfg.dx, s.offset));
    }
    else if (s.shape == "sinecos")
    {
      st.interfaces.push_back(
          Interface::sinecos(s.amp, s.cycles_x, s.cycles_y, cfg.dx, cfg.dy, s.offset));
    }
    else
    {
      st.interfaces.push_back(Interface::expression(s.expression, s.offset));
    }
  }
  return st;
}

IncidentWave build_wave(const RunConfig &cfg)
{
  if (cfg.wave.k_vec)
  {
    return IncidentWave::from_k(cfg.wave.omega, *cfg.wave.k_vec, cfg.wave.polarization, cfg.dx,
                                cfg.dy);
  }
  return IncidentWave::from_angles(cfg.wave.omega, cfg.wave.angles->first,
                                   cfg.wave.angles->second, cfg.wave.polarization,
                                   cfg.materials.front(), cfg.dx, cfg.dy);
}

Problem build_problem(const RunConfig &cfg)
{
  Problem p;
  p.stack = build_stack(cfg);
  p.wave = build_wave(cfg);
  p.params = cfg.discretization;
  p.convention = cfg.run.near_sum == "shift_target" ? NearSumConvention::shift_target
                                                    : NearSumConvention::shift_source;
  return p;
}

SolveMethod solve_method(const RunConfig &cfg)
{
  return cfg.run.method == "direct" ? SolveMethod::direct : SolveMethod::schur;
}

}  // namespace bimfs
