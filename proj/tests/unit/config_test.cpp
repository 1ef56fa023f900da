#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmslice/config.hpp"

using namespace mmslice;

namespace {

LoadedConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.cfg");
}

std::string field_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& text) {
    path = std::filesystem::temp_directory_path() /
           ("mmslice_cfg_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".cfg");
    std::ofstream(path) << text;
  }
  ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST(ParseConfig, PresetWithOverrides) {
  const auto lc = parse(
      "[experiment]\npreset = medium-lc-tight\nscheduler = drs_para\nk = 4\nttis = 25\nseed = 99\n"
      "workers = 3\nparallel_degree = 2\n"
      "[grouping]\nperiod = 5\nscope = rb\nthreshold = 0.4\n"
      "[link]\nnoise_w = 0.2\ntti_ms = 0.5\n");
  const auto& c = lc.experiment;
  EXPECT_EQ(c.cluster.num_users, 80);
  EXPECT_EQ(c.scheduler, SchedulerKind::DrsParallel);
  EXPECT_EQ(c.sched.max_users_per_rb, 4u);
  EXPECT_EQ(c.ttis, 25u);
  EXPECT_EQ(c.cluster.seed, 99u);
  EXPECT_EQ(c.sched.workers, 3u);
  EXPECT_EQ(c.sched.degree.fixed, 2u);
  EXPECT_EQ(c.grouping.update_period, 5u);
  EXPECT_EQ(c.grouping.scope, GroupingScope::PerRb);
  EXPECT_DOUBLE_EQ(c.grouping.threshold, 0.4);
  EXPECT_DOUBLE_EQ(c.sched.budget.noise_w, 0.2);
  EXPECT_DOUBLE_EQ(c.sched.budget.tti_s, 5e-4);
  EXPECT_DOUBLE_EQ(c.slices[0].sla_mbps, 55.8);
  EXPECT_FALSE(lc.output_dir);
}

TEST(ParseConfig, SliceSections) {
  const auto c = parse(
                     "[experiment]\npreset = small-hc-loose\n"
                     "[slice.0]\nusers = 0-2,5\nsla_mbps = 10\npolicy = pf\n"
                     "[slice.1]\ncount = 3\nsla_mbps = 2.5\n")
                     .experiment;
  ASSERT_EQ(c.slices.size(), 2u);
  EXPECT_EQ(c.slices[0].users, (std::vector<int>{0, 1, 2, 5}));
  EXPECT_EQ(c.slices[0].policy, Policy::ProportionalFair);
  EXPECT_EQ(c.slices[1].users, (std::vector<int>{6, 7, 8}));
  EXPECT_DOUBLE_EQ(c.slices[1].sla_mbps, 2.5);
  EXPECT_GE(c.sched.bnb.max_rbs, c.rbs);
}

TEST(ParseConfig, FieldLevelErrors) {
  EXPECT_EQ(field_of("[slice.0]\nusers = 0-3\nsla_mbps = -5\n"), "slice.0.sla_mbps");
  EXPECT_EQ(field_of("[experiment]\nbogus = 1\n"), "experiment.bogus");
  EXPECT_EQ(field_of("[experimnt]\nk = 1\n"), "experimnt");
  EXPECT_EQ(field_of("[experiment]\nk = three\n"), "experiment.k");
  EXPECT_EQ(field_of("[experiment]\nscheduler = fastest\n"), "experiment.scheduler");
  EXPECT_EQ(field_of("[slice.0]\nusers = 0\nsla_mbps = 1\n[slice.2]\nusers = 1\nsla_mbps = 1\n"), "slice.2");
  EXPECT_EQ(field_of("[slice.0]\nusers = 0\ncount = 2\nsla_mbps = 1\n"), "slice.0.users");
  EXPECT_EQ(field_of("[grouping]\nscope = sometimes\n"), "grouping.scope");
  EXPECT_EQ(field_of("[experiment]\nscheduler = drs\n[slice.0]\nusers = 0\nsla_mbps = 1\nsharing = orthogonal\n"),
            "slice.0.sharing");
  try {
    parse("[slice.0]\nusers = 0-3\nsla_mbps = -5\n");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("SLA must be non-negative"), std::string::npos);
  }
}

TEST(ResolveConfig, Precedence) {
  TempFile f("[experiment]\npreset = small-hc-loose\nscheduler = gp\nseed = 3\noutput_dir = from_file\n");
  Overrides none;
  auto lc = resolve_config(f.path.string(), none, nullptr);
  EXPECT_EQ(lc.experiment.scheduler, SchedulerKind::GreedyPlus);
  EXPECT_EQ(lc.experiment.cluster.seed, 3u);
  EXPECT_EQ(*lc.output_dir, "from_file");

  EXPECT_EQ(*resolve_config(f.path.string(), none, "from_env").output_dir, "from_env");

  Overrides o;
  o.scheduler = "drs";
  o.seed = 11;
  o.output_dir = "from_flag";
  o.sla = "tight";
  lc = resolve_config(f.path.string(), o, "from_env");
  EXPECT_EQ(lc.experiment.scheduler, SchedulerKind::Drs);
  EXPECT_EQ(lc.experiment.cluster.seed, 11u);
  EXPECT_EQ(*lc.output_dir, "from_flag");
  EXPECT_DOUBLE_EQ(lc.experiment.slices[0].sla_mbps, 90.4);
}

TEST(ResolveConfig, DefaultsWithoutFile) {
  const auto lc = resolve_config(std::nullopt, Overrides{}, nullptr);
  EXPECT_EQ(lc.experiment.name, "small-hc-loose");
  EXPECT_EQ(*lc.output_dir, "out");

  Overrides o;
  o.preset = "real-world-lc-loose";
  o.scenario = "fm";
  EXPECT_EQ(resolve_config(std::nullopt, o, nullptr).experiment.name, "real-world-fm-loose");
  o.preset = "small-hc-loose";
  EXPECT_THROW(resolve_config(std::nullopt, o, nullptr), ConfigError);
  Overrides bad_k;
  bad_k.k = 65;
  EXPECT_THROW(resolve_config(std::nullopt, bad_k, nullptr), ConfigError);
}

TEST(ResolveConfig, ShippedSamplesParse) {
  const std::filesystem::path dir = MMSLICE_SAMPLES_DIR;
  const auto good = resolve_config((dir / "small_custom.cfg").string(), Overrides{}, nullptr);
  EXPECT_EQ(good.experiment.slices.size(), 4u);
  EXPECT_THROW(load_config((dir / "bad_negative_sla.cfg").string()), ConfigError);
  EXPECT_NO_THROW(load_config((dir / "pf_medium.cfg").string()).experiment.validate());
}
