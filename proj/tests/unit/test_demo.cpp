#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "beac/checkpoint.hpp"
#include "beac/demonstrator.hpp"
#include "beac/oracle.hpp"
#include "beac/rng.hpp"
#include "support.hpp"

using namespace beac;
using namespace beac::demo;
using env::Action;
using env::Vec2;

TEST(Exploration, StartsWithForwardStrokeAndIsStateIndependent) {
  const auto s = ExplorationScript::for_config(env::EnvConfig{});
  EXPECT_EQ(exploration_action(0, s), (Action{0.0, s.a_max}));
  for (std::size_t i = 0; i < 2 * s.period(); ++i) {
    EXPECT_EQ(exploration_action(i, s), exploration_action(i, s));
    EXPECT_EQ(exploration_action(i, s), exploration_action(i + s.period(), s));
  }
}

TEST(Exploration, LaneSpacingBelowContactDiameter) {
  const env::EnvConfig c;
  const auto s = ExplorationScript::for_config(c);
  EXPECT_LT(s.lane_spacing(), 2.0 * c.contact_distance());
}

TEST(Exploration, CoversEveryPlacementInTheNoiseBox) {
  env::EnvConfig c;
  const auto s = ExplorationScript::for_config(c);
  const int n = 25;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec2 obj = c.nominal_obj_pos + Vec2{c.sigma * (2.0 * i / (n - 1) - 1.0), c.sigma * (2.0 * j / (n - 1) - 1.0)};
      auto st = env::initial_state(c, obj);
      if ((st.ee_pos - obj).norm() < c.contact_distance()) continue;
      bool touched = false;
      for (std::size_t t = 0; t < s.period() && !touched; ++t) {
        st = env::step_dynamics(st, exploration_action(t, s), c);
        touched = st.contact_force.norm() > 0.0;
      }
      EXPECT_TRUE(touched) << "object at " << obj.x << ", " << obj.y;
    }
  }
}

TEST(Switch, RuleExamples) {
  env::EnvState oracle = env::initial_state(env::EnvConfig{}, {0.0, 0.0});
  env::Observation obs;
  oracle.ee_pos = {0.3, 0.3};
  EXPECT_FALSE(switch_condition(obs, oracle));
  oracle.ee_pos = {oracle.obj_radius + oracle.ee_radius, 0.0};
  obs.contact_force = {-0.3, 0.0};
  EXPECT_TRUE(switch_condition(obs, oracle));
  SwitchLatch latch;
  EXPECT_EQ(latch.update(obs, oracle), Mode::task);
  obs.contact_force = {};
  oracle.ee_pos = {0.3, 0.3};
  EXPECT_EQ(latch.update(obs, oracle), Mode::task);
}

TEST(TaskAction, ConvergedAndPushLineExamples) {
  const env::EnvConfig c;
  auto s = env::initial_state(c, c.goal_pos);
  s.ee_pos = c.goal_pos - Vec2{0.2, 0.0};
  EXPECT_EQ(task_action(s, c), (Action{0.0, 0.0}));

  s.obj_pos = c.goal_pos - Vec2{0.1, 0.0};
  s.ee_pos = s.obj_pos - Vec2{c.contact_distance(), 0.0};
  const auto a = task_action(s, c);
  EXPECT_GT(a.dx, 0.0);
  EXPECT_NEAR(a.dy, 0.0, 1e-15);
  EXPECT_LE(std::hypot(a.dx, a.dy), c.a_max + 1e-15);
}

TEST(Collect, SwitchingDatasetShape) {
  const env::EnvConfig c;
  const auto r = collect(100, DemonstratorKind::switching, 5, c);
  ASSERT_EQ(r.dataset.trajectories.size(), 100u);
  EXPECT_EQ(r.dataset.kind, DemonstratorKind::switching);
  const auto script = ExplorationScript::for_config(c);
  for (const auto& t : r.dataset.trajectories) {
    ASSERT_EQ(t.observations.size(), t.actions.size() + 1);
    ASSERT_EQ(t.modes.size(), t.actions.size());
    bool switched = false;
    for (std::size_t i = 0; i < t.steps(); ++i) {
      if (t.modes[i] == Mode::task) switched = true;
      ASSERT_EQ(t.modes[i], switched ? Mode::task : Mode::exploration) << "non-monotone modes";
      if (!switched) {
        ASSERT_EQ(t.actions[i], exploration_action(i, script));
      }
    }
  }
}

TEST(Collect, SwitchStepMatchesReplayedFirstContact) {
  const env::EnvConfig c;
  const auto r = collect(100, DemonstratorKind::switching, 17, c);
  for (const auto& t : r.dataset.trajectories) {
    env::PushEnv env(c);
    env.reset(t.seed);
    std::size_t first_contact = t.steps();
    for (std::size_t i = 0; i < t.steps(); ++i) {
      if (env.observation().contact_force.norm() > 0.0) {
        first_contact = i;
        break;
      }
      env.step(t.actions[i]);
    }
    std::size_t switch_step = t.steps();
    for (std::size_t i = 0; i < t.steps(); ++i)
      if (t.modes[i] == Mode::task) {
        switch_step = i;
        break;
      }
    EXPECT_EQ(switch_step, first_contact) << "seed " << t.seed;
  }
}

TEST(Collect, DeterministicObjectGivesSameSwitchStep) {
  env::EnvConfig c;
  c.sigma = 0.0;
  auto switch_of = [&](std::uint64_t seed) {
    const auto t = collect(1, DemonstratorKind::switching, seed, c).dataset.trajectories[0];
    for (std::size_t i = 0; i < t.steps(); ++i)
      if (t.modes[i] == Mode::task) return i;
    return t.steps();
  };
  const auto first = switch_of(1);
  EXPECT_EQ(switch_of(1), first);
  EXPECT_EQ(switch_of(999), first);
}

TEST(Collect, NoSwitchLabelsEveryStepTask) {
  const auto r = collect(10, DemonstratorKind::no_switch, 3, env::EnvConfig{});
  for (const auto& t : r.dataset.trajectories)
    for (auto m : t.modes) ASSERT_EQ(m, Mode::task);
  EXPECT_GE(r.success_rate, 0.95);
}

TEST(Collect, RejectsZeroEpisodesAndHumanKind) {
  EXPECT_THROW(collect(0, DemonstratorKind::switching, 1, env::EnvConfig{}), std::invalid_argument);
  EXPECT_THROW(collect(1, DemonstratorKind::human, 1, env::EnvConfig{}), std::invalid_argument);
}

TEST(Collect, QualityGate) {
  const auto r = collect(100, DemonstratorKind::switching, 1, env::EnvConfig{});
  EXPECT_GE(r.success_rate, 0.95);
}

TEST(Collect, Deterministic) {
  const env::EnvConfig c;
  EXPECT_EQ(encode_dataset(collect(20, DemonstratorKind::switching, 8, c).dataset),
            encode_dataset(collect(20, DemonstratorKind::switching, 8, c).dataset));
}

TEST(Dataset, RoundTripIsByteIdentical) {
  Rng rng(2024);
  Dataset ds;
  ds.trajectories = beac::testing::toy_batch(rng, 100, 1, 40);
  for (auto& t : ds.trajectories) {
    t.success = rng.below(2) == 1;
    t.seed = rng.below(1u << 30);
    // Awkward binary fractions exercise the shortest round-trip formatting.
    t.observations[0].ee_pos.x = 0.1 + 0.2;
    t.actions[0].dx = std::nextafter(0.01, 1.0);
  }
  ds.refresh_stats();
  const auto text = encode_dataset(ds);
  const auto back = decode_dataset(text);
  EXPECT_EQ(encode_dataset(back), text);
  ASSERT_EQ(back.trajectories.size(), 100u);
  EXPECT_EQ(back.trajectories[0].actions[0].dx, std::nextafter(0.01, 1.0));

  beac::testing::TempDir dir("dataset");
  write_dataset(dir.path / "d.jsonl", ds);
  const auto file = ad::read_file(dir.path / "d.jsonl");
  EXPECT_EQ(file, text);
  write_dataset(dir.path / "d2.jsonl", read_dataset(dir.path / "d.jsonl"));
  EXPECT_EQ(ad::read_file(dir.path / "d2.jsonl"), text);
  std::size_t lines = 0;
  for (char ch : file) lines += ch == '\n';
  EXPECT_EQ(lines, 101u);
}

TEST(Dataset, DecodeReportsFirstBadLine) {
  Rng rng(1);
  Dataset ds;
  ds.trajectories = beac::testing::toy_batch(rng, 3, 2, 4);
  ds.refresh_stats();
  auto text = encode_dataset(ds);
  // Break line 3 (second trajectory).
  std::size_t pos = 0;
  for (int i = 0; i < 2; ++i) pos = text.find('\n', pos) + 1;
  text.insert(pos, "{\"oops\":");
  try {
    decode_dataset(text);
    FAIL();
  } catch (const DatasetFormatError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(decode_dataset(""), DatasetFormatError);
}

TEST(Dataset, ValidateRejectsLengthMismatch) {
  Trajectory t;
  t.observations.resize(3);
  t.actions.resize(1);
  t.modes.resize(1);
  EXPECT_THROW(t.validate(), std::invalid_argument);
}

TEST(Stats, NormalizationRoundTrip) {
  Rng rng(6);
  const auto batch = beac::testing::toy_batch(rng, 10, 3, 20);
  const auto stats = compute_stats(batch);
  for (const auto& t : batch) {
    for (const auto& o : t.observations) {
      const auto back = stats.denormalize_obs(stats.normalize(o)).to_array();
      const auto orig = o.to_array();
      for (std::size_t i = 0; i < orig.size(); ++i) ASSERT_NEAR(back[i], orig[i], 1e-12);
    }
    for (const auto& a : t.actions) {
      const auto back = stats.denormalize_act(stats.normalize(a));
      ASSERT_NEAR(back.dx, a.dx, 1e-12);
      ASSERT_NEAR(back.dy, a.dy, 1e-12);
    }
  }
}

TEST(Stats, PopulationMomentsAndDegenerateDimensions) {
  Trajectory t;
  for (int i = 0; i < 4; ++i) {
    env::Observation o;
    o.ee_pos = {static_cast<double>(i), 5.0};
    t.observations.push_back(o);
  }
  t.actions = {{1, 0}, {2, 0}, {3, 0}};
  t.modes.assign(3, Mode::task);
  const auto s = compute_stats({t});
  EXPECT_DOUBLE_EQ(s.obs_mean[0], 1.5);
  EXPECT_DOUBLE_EQ(s.obs_std[0], std::sqrt(1.25));
  EXPECT_EQ(s.obs_std[1], 1.0);
  EXPECT_DOUBLE_EQ(s.act_std[0], std::sqrt(2.0 / 3.0));
}

TEST(Split, DeterministicDisjointAndSized) {
  Rng rng(8);
  auto batch = beac::testing::toy_batch(rng, 100, 1, 3);
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i].seed = i;
  const auto a = split_dataset(batch, 0.2, 7);
  const auto b = split_dataset(batch, 0.2, 7);
  ASSERT_EQ(a.heldout.size(), 20u);
  ASSERT_EQ(a.train.size(), 80u);
  std::set<std::uint64_t> seen;
  for (const auto& t : a.train) seen.insert(t.seed);
  for (const auto& t : a.heldout) EXPECT_FALSE(seen.contains(t.seed));
  for (std::size_t i = 0; i < a.heldout.size(); ++i) EXPECT_EQ(a.heldout[i].seed, b.heldout[i].seed);
}
