// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "bimfs/config.hpp"

using namespace bimfs;
namespace fs = std::filesystem;

namespace
{

std::string read_file(const fs::path &p)
{
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char *minimal = R"({
  "schema_version": 1,
  "name": "minimal",
  "geometry": {"dx": 1.0, "dy": 1.0, "interfaces": [{"shape": "flat"}]},
  "materials": [{"eps": 1.0}, {"eps": 4.0}],
  "wave": {"omega": 4.0, "angles": {"phi": "9*pi/10", "theta": 0}, "polarization": [0, 1, 0]},
  "discretization": {"n_src": 16, "n_proxy": 16, "n_wall": 16, "rb_order": 2}
})";

std::string error_of(const std::string &text)
{
  try
  {
    parse_config(text, "test.json");
  }
  catch (const ConfigError &e)
  {
    return e.what();
  }
  return {};
}

std::string replaced(std::string text, const std::string &from, const std::string &to)
{
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST(Config, ShippedConfigsParseAndRoundTrip)
{
  std::size_t count = 0;
  for (const auto &entry : fs::directory_iterator(BIMFS_SOURCE_DIR "/configs"))
  {
    if (entry.path().extension() != ".json")
    {
      continue;
    }
    ++count;
    const RunConfig cfg = load_config(entry.path().string());
    EXPECT_EQ(cfg.schema_version, config_schema_version);
    const RunConfig again = parse_config(to_json(cfg).dump(2), "round-trip");
    EXPECT_TRUE(again == cfg) << entry.path();
    EXPECT_NO_THROW(build_problem(cfg)) << entry.path();
  }
  EXPECT_EQ(count, 8u);
}

TEST(Config, MinimalConfigDefaults)
{
  const RunConfig cfg = parse_config(minimal);
  EXPECT_EQ(cfg.run.method, "schur");
  EXPECT_EQ(cfg.run.near_sum, "shift_source");
  EXPECT_EQ(cfg.materials[1].mu_rel, cplx(1.0));
  ASSERT_TRUE(cfg.wave.angles.has_value());
  EXPECT_NEAR(cfg.wave.angles->first, 0.9 * pi, 1e-15);
  const Problem p = build_problem(cfg);
  EXPECT_LT(p.wave.k_vec.z(), 0.0);
  EXPECT_NEAR(p.wave.k_vec.norm(), 4.0, 1e-14);
  EXPECT_EQ(solve_method(cfg), SolveMethod::schur);
}

TEST(Config, MissingOmegaNamesKeyAndLine)
{
  const std::string text = read_file(BIMFS_SOURCE_DIR "/tests/data/missing_omega.json");
  const std::string err = error_of(text);
  EXPECT_NE(err.find("wave.omega: missing required key 'omega'"), std::string::npos) << err;
  // Anchored at the enclosing "wave" object.
  std::size_t line = 1;
  for (std::size_t i = 0; i < text.find("\"wave\""); ++i)
  {
    line += text[i] == '\n';
  }
  EXPECT_NE(err.find("test.json:" + std::to_string(line) + ":"), std::string::npos) << err;
}

TEST(Config, RejectsBadInput)
{
  EXPECT_NE(error_of(replaced(minimal, "\"rb_order\": 2", "\"rb_order\": 2, \"typo\": 1"))
                .find("unknown key 'typo'"),
            std::string::npos);
  EXPECT_NE(error_of(replaced(minimal, "[0, 1, 0]", "[1, 1, 0]")).find("wave.polarization"),
            std::string::npos);
  EXPECT_NE(error_of(replaced(minimal, "\"shape\": \"flat\"", "\"shape\": \"zigzag\""))
                .find("unknown shape 'zigzag'"),
            std::string::npos);
  EXPECT_NE(error_of(replaced(minimal, "{\"eps\": 4.0}", "{\"eps\": 4.0}, {\"eps\": 2.0}"))
                .find("materials"),
            std::string::npos);
  EXPECT_NE(error_of(replaced(minimal, "\"omega\": 4.0", "\"omega\": -1")).find("wave.omega"),
            std::string::npos);
  EXPECT_NE(error_of(replaced(minimal, "9*pi/10", "pi/10")).find("downward"), std::string::npos);
  EXPECT_NE(error_of(replaced(minimal, "\"n_src\": 16", "\"n_src\": 15")), "");
  EXPECT_NE(error_of("{ \"schema_version\": 1, ").find("JSON syntax error"), std::string::npos);
  EXPECT_NE(error_of(replaced(minimal, "\"schema_version\": 1", "\"schema_version\": 9"))
                .find("schema version"),
            std::string::npos);
}

TEST(Config, ExplicitWavevectorAndComplexPolarization)
{
  const std::string text = replaced(
      minimal, R"("angles": {"phi": "9*pi/10", "theta": 0}, "polarization": [0, 1, 0])",
      R"("k_vec": [0, 0, -4], "polarization": [[1, 0], [0, 1], 0])");
  const RunConfig cfg = parse_config(text);
  ASSERT_TRUE(cfg.wave.k_vec.has_value());
  EXPECT_EQ(cfg.wave.polarization(1), cplx(0, 1));
  EXPECT_TRUE(parse_config(to_json(cfg).dump()) == cfg);
}

TEST(Config, GridPoints)
{
  GridSpec g;
  g.lo = Vec3(-0.5, -0.5, -0.5);
  g.hi = Vec3(0.5, 0.5, 0.5);
  g.count = {11, 11, 11};
  const auto pts = g.points();
  ASSERT_EQ(pts.size(), 1331u);
  EXPECT_EQ(g.size(), 1331u);
  EXPECT_DOUBLE_EQ(pts.front().x(), -0.5);
  EXPECT_DOUBLE_EQ(pts.back().z(), 0.5);
  g.count = {1, 1, 3};
  EXPECT_EQ(g.points().size(), 3u);
}
