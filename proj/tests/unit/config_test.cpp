#include <algorithm>

#include <gtest/gtest.h>

#include "subflow/config.hpp"
#include "subflow/error.hpp"

using namespace subflow;

namespace {

std::vector<std::string> violations_of(const std::string &text) {
  try {
    parse_config(text);
  } catch (const ConfigError &e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string> &v, const std::string &needle) {
  return std::any_of(v.begin(), v.end(),
                     [&](const std::string &s) { return s.find(needle) != std::string::npos; });
}

} // namespace

TEST(Config, ParsesKeysCommentsAndQuotes) {
  const RunConfig c = parse_config(R"(
# torus run
model = heisenberg
grid.nx = 6
grid.ny = 6
grid.nz = 12   # trailing comment
target = torus
potential = cosine
potential.eps = 0.01
initial.winding = 1,0,0; 0,1,0
flow.scheme = projected-euler
flow.t_max = 2.5
output = "out dir"
seed = 42
)");
  EXPECT_EQ(c.grid, Grid(6, 6, 12));
  EXPECT_EQ(c.potential.name, "cosine");
  EXPECT_DOUBLE_EQ(c.potential.eps, 0.01);
  ASSERT_EQ(c.initial.winding.size(), 2u);
  EXPECT_EQ(c.initial.winding[1], (std::array<long, 3>{0, 1, 0}));
  EXPECT_DOUBLE_EQ(c.flow.t_max, 2.5);
  EXPECT_EQ(c.output, "out dir");
  EXPECT_EQ(c.seed, 42u);
}

TEST(Config, PresetSeedsOtherKeys) {
  const RunConfig c = parse_config("preset = sphere-tubular\nflow.t_max = 0.01\n");
  EXPECT_EQ(c.target, "sphere");
  EXPECT_EQ(c.flow.scheme, Scheme::tubular_euler);
  EXPECT_DOUBLE_EQ(c.flow.t_max, 0.01);
}

TEST(Config, CollectsEveryViolation) {
  const auto v = violations_of("grid.nx = 8\ngrid.nx = 9\ncolour = blue\nflow.dt = abc\n");
  EXPECT_GE(v.size(), 3u);
  EXPECT_TRUE(mentions(v, "grid.nx"));
  EXPECT_TRUE(mentions(v, "colour"));
  EXPECT_TRUE(mentions(v, "flow.dt"));
}

TEST(Config, DivisibilityMessageNamesBothKeys) {
  const auto v = violations_of("grid.nx = 8\ngrid.ny = 8\ngrid.nz = 12\n");
  EXPECT_TRUE(mentions(v, "grid.ny = 8 must divide grid.nz = 12")) << v.size();
}

TEST(Config, RejectsInconsistentTargetAndPotential) {
  EXPECT_TRUE(mentions(violations_of("preset = hyperbolic-decay\npotential.c = 0\n"),
                       "potential.c"));
  EXPECT_FALSE(violations_of("target = hyperbolic\ntarget.dim = 3\n").empty());
  EXPECT_FALSE(violations_of("initial.winding = 1,0,1; 0,1,0\n").empty());
  EXPECT_FALSE(violations_of("flow.scheme = leapfrog\n").empty());
  EXPECT_FALSE(violations_of("model = nowhere\n").empty());
}

TEST(Config, MalformedLine) {
  EXPECT_FALSE(violations_of("just some words\n").empty());
}

TEST(Config, FormatRoundTrips) {
  for (const auto &p : preset_catalogue()) {
    const RunConfig c = preset_config(p.name);
    EXPECT_TRUE(validate_config(c).empty()) << p.name;
    const RunConfig back = parse_config(format_config(c));
    EXPECT_EQ(back.preset, "");
    RunConfig named = back;
    named.preset = c.preset;
    EXPECT_EQ(format_config(named), format_config(c)) << p.name;
  }
}

TEST(Config, PresetCatalogue) {
  EXPECT_GE(preset_catalogue().size(), 5u);
  EXPECT_THROW(preset_config("no-such-preset"), ConfigError);
  const RunConfig es = preset_config("torus-eells-sampson");
  EXPECT_NEAR(es.potential.eps * 16 * 3.14159265358979323846 * 3.14159265358979323846, 1.0,
              1e-14);
}

TEST(Config, ParseGrid) {
  EXPECT_EQ(parse_grid("12x12x24"), Grid(12, 12, 24));
  EXPECT_THROW(parse_grid("12x12"), DomainError);
  EXPECT_THROW(parse_grid("axbxc"), DomainError);
}
