#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "chessrl/chess/notation.hpp"
#include "chessrl/critic/oracle.hpp"
#include "chessrl/errors.hpp"
#include "chessrl/grpo/fixture.hpp"
#include "chessrl/grpo/trainer.hpp"
#include "support/fixtures.hpp"

namespace chessrl::grpo {
namespace {

using chess::parse_fen;

std::vector<Features> feats_of(const chess::Position& pos) { return feature_matrix(pos, chess::legal_moves(pos)); }

Theta random_theta(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Theta t(kFeatureDim);
  for (double& v : t) v = n(rng);
  return t;
}

TEST(Features, MatingQueenMove) {
  const auto pos = parse_fen(testing::kD2Fen);
  const auto f = features(pos, chess::parse_san(pos, "Qg7#"));
  EXPECT_EQ(f[4], 1.0);
  EXPECT_EQ(f[0] + f[1] + f[2] + f[3] + f[5], 0.0);
  EXPECT_EQ(f[6], 0.0);
  EXPECT_EQ(f[7], 1.0);
  EXPECT_EQ(f[8], 0.0);
  EXPECT_DOUBLE_EQ(f[9], 1.0 / 3.0);
  EXPECT_EQ(f[11], 1.0);
}

TEST(Features, CaptureAndPromotion) {
  const auto pos = parse_fen("1n5k/P7/8/8/8/8/8/K7 w - - 0 1");
  const auto f = features(pos, chess::parse_san(pos, "axb8=Q+"));
  EXPECT_EQ(f[0], 1.0);
  EXPECT_EQ(f[6], 1.0);
  EXPECT_EQ(f[7], 1.0);
  EXPECT_EQ(f[8], 1.0);
  EXPECT_DOUBLE_EQ(centrality(chess::make_square(3, 3)), 1.0);
  EXPECT_DOUBLE_EQ(centrality(chess::make_square(0, 0)), 0.0);
  EXPECT_EQ(feature_names().size(), kFeatureDim);
}

TEST(Policy, ZeroThetaIsUniform) {
  const auto p = policy_distribution(Theta(kFeatureDim, 0.0), parse_fen(testing::kD4Fen), 1.0);
  ASSERT_EQ(p.size(), 26u);
  for (double v : p) EXPECT_NEAR(v, 1.0 / 26.0, 1e-15);
}

TEST(Policy, NormalizedShiftInvariantAndHotLimit) {
  std::mt19937_64 rng(1);
  const auto f = feats_of(parse_fen(testing::kD5Fen));
  for (int i = 0; i < 50; ++i) {
    Theta t = random_theta(rng, 2.0);
    const auto p = softmax_policy(t, f, 1.0);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    Theta shifted = t;
    shifted[11] += 7.5;  // bias is constant across moves
    const auto q = softmax_policy(shifted, f, 1.0);
    for (std::size_t a = 0; a < p.size(); ++a) EXPECT_NEAR(p[a], q[a], 1e-14);
    const auto hot = softmax_policy(t, f, 1e9);
    for (double v : hot) EXPECT_NEAR(v, 1.0 / static_cast<double>(f.size()), 1e-6);
  }
  EXPECT_THROW(policy_distribution(Theta(kFeatureDim, 0.0), parse_fen("7k/5QQ1/8/8/8/8/8/K7 b - - 0 1"), 1.0),
               NoLegalMoves);
}

TEST(SampleGroup, DeterministicPerSeed) {
  const auto f = feats_of(parse_fen(testing::kD4Fen));
  std::mt19937_64 a(42), b(42);
  const Theta t(kFeatureDim, 0.1);
  EXPECT_EQ(sample_group(t, f, 8, 1.0, a).actions, sample_group(t, f, 8, 1.0, b).actions);
}

TEST(SampleGroup, UniformChiSquare) {
  const auto f = feats_of(parse_fen(testing::kD4Fen));
  std::mt19937_64 rng(9);
  const std::size_t draws = 26000;
  const auto g = sample_group(Theta(kFeatureDim, 0.0), f, draws, 1.0, rng);
  std::vector<double> counts(f.size(), 0.0);
  for (auto a : g.actions) counts[a] += 1.0;
  const double expected = static_cast<double>(draws) / static_cast<double>(f.size());
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 25 degrees of freedom; p = 0.001 critical value is 52.6.
  EXPECT_LT(chi2, 52.6);
  for (double lp : g.logprobs_old) EXPECT_NEAR(lp, -std::log(26.0), 1e-12);
}

TEST(Advantages, HandValues) {
  const auto a = compute_advantages({1.0, 0.0});
  EXPECT_NEAR(a[0], 1.0, 1e-7);
  EXPECT_NEAR(a[1], -1.0, 1e-7);
  EXPECT_EQ(compute_advantages({0.3, 0.3, 0.3}), std::vector<double>(3, 0.0));
  EXPECT_EQ(compute_advantages({0.7}), std::vector<double>(1, 0.0));
  EXPECT_TRUE(compute_advantages({}).empty());
}

TEST(Advantages, ZeroMeanUnitStd) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(2 + trial % 15);
    for (double& v : r) v = u(rng);
    const auto a = compute_advantages(r);
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    double var = 0.0;
    for (double v : a) var += (v - mean) * (v - mean);
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(std::sqrt(var / static_cast<double>(a.size())), 1.0, 1e-6);
  }
}

// Builds one scored group with `old` as the sampling policy.
GroupBatch make_group(std::span<const Features> f, const Theta& old, std::size_t g, std::mt19937_64& rng) {
  GroupBatch b{f, sample_group(old, f, g, 1.0, rng)};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < g; ++i) b.rollout.rewards.push_back(u(rng));
  b.rollout.advantages = compute_advantages(b.rollout.rewards);
  return b;
}

double fd_relative_error(const Theta& theta, const Theta& ref, std::span<const GroupBatch> batch,
                         const ObjectiveConfig& cfg) {
  const Theta g = objective_gradient(theta, ref, batch, cfg);
  const double h = 1e-5;
  double num = 0.0, den_a = 0.0, den_b = 0.0;
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    Theta plus = theta, minus = theta;
    plus[k] += h;
    minus[k] -= h;
    const double fd = (objective(plus, ref, batch, cfg).objective - objective(minus, ref, batch, cfg).objective) /
                      (2.0 * h);
    num += (g[k] - fd) * (g[k] - fd);
    den_a += g[k] * g[k];
    den_b += fd * fd;
  }
  return std::sqrt(num) / std::max({std::sqrt(den_a), std::sqrt(den_b), 1e-300});
}

TEST(Gradient, MatchesFiniteDifferencesOnThreeMovePosition) {
  const auto f = feats_of(parse_fen("7k/8/8/8/8/8/8/K7 w - - 0 1"));
  ASSERT_EQ(f.size(), 3u);
  std::mt19937_64 rng(5);
  ObjectiveConfig cfg;
  cfg.kl_coef = 0.05;
  cfg.entropy_coef = 0.02;
  for (int trial = 0; trial < 20; ++trial) {
    const Theta ref = random_theta(rng, 0.5);
    const Theta old = random_theta(rng, 0.5);
    Theta theta = old;
    for (double& v : theta) v += std::normal_distribution<double>(0.0, 0.05)(rng);
    std::vector<GroupBatch> batch{make_group(f, old, 8, rng)};
    EXPECT_LT(fd_relative_error(theta, ref, batch, cfg), 1e-5) << trial;
  }
}

TEST(Gradient, MatchesFiniteDifferencesOnBatches) {
  std::mt19937_64 rng(6);
  std::vector<std::vector<Features>> mats;
  for (std::string_view fen : {std::string_view(testing::kD2Fen), std::string_view(testing::kD4Fen),
                                std::string_view(testing::kD5Fen), chess::kStartFen})
    mats.push_back(feats_of(parse_fen(fen)));
  const ObjectiveConfig cfg;  // default coefficients
  for (int trial = 0; trial < 10; ++trial) {
    const Theta ref(kFeatureDim, 0.0);
    const Theta old = random_theta(rng, 0.3);
    Theta theta = old;
    for (double& v : theta) v += std::normal_distribution<double>(0.0, 0.1)(rng);
    std::vector<GroupBatch> batch;
    for (const auto& m : mats) batch.push_back(make_group(m, old, 8, rng));
    EXPECT_LT(fd_relative_error(theta, ref, batch, cfg), 1e-5) << trial;
  }
}

TEST(Step, ZeroAdvantagesLeaveThetaUnchanged) {
  const auto f = feats_of(parse_fen(testing::kD4Fen));
  std::mt19937_64 rng(1);
  GroupBatch b{f, sample_group(Theta(kFeatureDim, 0.2), f, 8, 1.0, rng)};
  b.rollout.rewards.assign(8, 0.5);
  b.rollout.advantages = compute_advantages(b.rollout.rewards);
  Theta theta(kFeatureDim, 0.2);
  const Theta before = theta;
  OptimizerState st;
  grpo_step(theta, Theta(kFeatureDim, 0.0), std::vector<GroupBatch>{b}, ObjectiveConfig{1.0, 0.2, 0.0, 0.0}, {}, st);
  EXPECT_EQ(theta, before);
}

TEST(Step, PositiveAdvantageRaisesProbability) {
  const auto f = feats_of(parse_fen(testing::kD4Fen));
  const Theta zero(kFeatureDim, 0.0);
  GroupBatch b{f, {}};
  const std::size_t target = 7;
  b.rollout.actions = {target, 0, 1, 2};
  b.rollout.logprobs_old.assign(4, -std::log(static_cast<double>(f.size())));
  b.rollout.rewards = {1.0, 0.0, 0.0, 0.0};
  b.rollout.advantages = compute_advantages(b.rollout.rewards);
  Theta theta = zero;
  OptimizerState st;
  grpo_step(theta, zero, std::vector<GroupBatch>{b}, ObjectiveConfig{1.0, 0.2, 0.0, 0.0}, {}, st);
  EXPECT_GT(softmax_policy(theta, f, 1.0)[target], softmax_policy(zero, f, 1.0)[target]);
}

TEST(Step, ClippedSamplesContributeNoGradient) {
  const auto f = feats_of(parse_fen(testing::kD4Fen));
  const Theta zero(kFeatureDim, 0.0);
  const double p = 1.0 / static_cast<double>(f.size());
  GroupBatch b{f, {}};
  b.rollout.actions = {3};
  b.rollout.advantages = {1.0};
  b.rollout.rewards = {1.0};
  const ObjectiveConfig cfg{1.0, 0.2, 0.0, 0.0};
  for (double ratio : {1.25, 1.5, 3.0}) {
    b.rollout.logprobs_old = {std::log(p / ratio)};
    for (double g : objective_gradient(zero, zero, std::vector<GroupBatch>{b}, cfg)) EXPECT_EQ(g, 0.0);
  }
  b.rollout.advantages = {-1.0};
  for (double ratio : {0.75, 0.5}) {
    b.rollout.logprobs_old = {std::log(p / ratio)};
    for (double g : objective_gradient(zero, zero, std::vector<GroupBatch>{b}, cfg)) EXPECT_EQ(g, 0.0);
  }
  b.rollout.logprobs_old = {std::log(p / 1.1)};
  const auto g = objective_gradient(zero, zero, std::vector<GroupBatch>{b}, cfg);
  EXPECT_GT(std::inner_product(g.begin(), g.end(), g.begin(), 0.0), 0.0);
}

TEST(Step, KlIsZeroAtReferenceAndNonNegative) {
  std::mt19937_64 rng(2);
  const auto f = feats_of(parse_fen(testing::kD5Fen));
  for (int i = 0; i < 30; ++i) {
    const Theta t = random_theta(rng, 1.0);
    const auto p = softmax_policy(t, f, 1.0);
    EXPECT_EQ(kl_divergence(p, p), 0.0);
    EXPECT_GE(kl_divergence(p, softmax_policy(random_theta(rng, 1.0), f, 1.0)), 0.0);
  }
}

TEST(Step, NonFiniteGradientPreservesTheta) {
  auto f = feats_of(parse_fen(testing::kD4Fen));
  f[2][9] = std::numeric_limits<double>::quiet_NaN();
  std::mt19937_64 rng(1);
  GroupBatch b{f, {}};
  b.rollout.actions = {0, 1};
  b.rollout.logprobs_old = {-3.0, -3.0};
  b.rollout.rewards = {1.0, 0.0};
  b.rollout.advantages = compute_advantages(b.rollout.rewards);
  Theta theta(kFeatureDim, 0.1);
  const Theta before = theta;
  OptimizerState st;
  EXPECT_THROW(grpo_step(theta, theta, std::vector<GroupBatch>{b}, {}, {}, st), NonFiniteGradient);
  EXPECT_EQ(theta, before);
}

TEST(Step, AdamWMovesTowardAdvantage) {
  const auto f = feats_of(parse_fen(testing::kD4Fen));
  const Theta zero(kFeatureDim, 0.0);
  GroupBatch b{f, {}};
  b.rollout.actions = {5, 6};
  b.rollout.logprobs_old.assign(2, -std::log(static_cast<double>(f.size())));
  b.rollout.rewards = {1.0, 0.0};
  b.rollout.advantages = compute_advantages(b.rollout.rewards);
  Theta theta = zero;
  OptimizerConfig opt;
  opt.kind = "adamw";
  opt.weight_decay = 0.01;
  OptimizerState st;
  grpo_step(theta, zero, std::vector<GroupBatch>{b}, ObjectiveConfig{1.0, 0.2, 0.0, 0.0}, opt, st);
  EXPECT_EQ(st.t, 1u);
  const auto p = softmax_policy(theta, f, 1.0);
  EXPECT_GT(p[5], p[6]);
  opt.kind = "rmsprop";
  EXPECT_THROW(grpo_step(theta, zero, std::vector<GroupBatch>{b}, {}, opt, st), ConfigError);
}

TEST(Fixture, LinearOracleStructure) {
  FixtureOptions o;
  o.count = 40;
  const auto fx = make_linear_oracle_fixture(o);
  ASSERT_EQ(fx.samples.size(), 40u);
  critic::TableCritic table(fx.table);
  for (const auto& s : fx.samples) {
    const auto legal = chess::legal_moves(s.state);
    EXPECT_GE(legal.size(), o.min_legal);
    int ones = 0;
    for (const auto& nm : legal) {
      const double v = table.score(s.state, nm.move).value;
      EXPECT_GT(v, 0.0);
      EXPECT_LE(v, 1.0);
      if (v == 1.0) {
        ++ones;
        EXPECT_EQ(nm.move, s.optimal_move);
      } else {
        EXPECT_LE(v, std::exp(-o.sharpness * o.margin) + 1e-12);
      }
    }
    EXPECT_EQ(ones, 1);
  }
  const auto again = make_linear_oracle_fixture(o);
  EXPECT_EQ(chess::to_fen(again.samples[17].state), chess::to_fen(fx.samples[17].state));
}

struct SmallRun {
  LinearOracleFixture fx = make_linear_oracle_fixture([] {
    FixtureOptions o;
    o.count = 60;
    return o;
  }());
  std::shared_ptr<const critic::Backend> table = std::make_shared<critic::TableCritic>(fx.table);

  TrainConfig cfg(std::size_t steps, std::uint64_t seed) const {
    TrainConfig c;
    c.steps = steps;
    c.batch_size = 16;
    c.seed = seed;
    c.eval_every = 5;
    return c;
  }
};

std::string run_log(const SmallRun& r, TrainConfig cfg, const std::string& preset = "dense") {
  std::ostringstream out;
  train(r.fx.samples, reward::preset(preset), r.table, cfg, &out);
  return out.str();
}

TEST(Trainer, SeededRunsAreByteIdentical) {
  SmallRun r;
  const auto a = run_log(r, r.cfg(40, 7));
  EXPECT_EQ(a, run_log(r, r.cfg(40, 7)));
  EXPECT_NE(a, run_log(r, r.cfg(40, 8)));
  auto serial = r.cfg(40, 7);
  serial.exec = parallel::Exec::Serial;
  EXPECT_EQ(a, run_log(r, serial));
}

TEST(Trainer, ResumeMatchesUninterruptedRun) {
  SmallRun r;
  const auto full = run_log(r, r.cfg(30, 3));
  testing::TempDir dir;
  std::ostringstream first, second;
  {
    Trainer t(r.fx.samples, reward::preset("dense"), r.table, r.cfg(30, 3));
    for (int i = 0; i < 12; ++i) first << t.step().to_json().dump() << '\n';
    t.checkpoint().save(dir / "ckpt.json");
  }
  Trainer t(r.fx.samples, reward::preset("dense"), r.table, r.cfg(30, 3));
  t.restore(Checkpoint::load(dir / "ckpt.json"));
  t.run(&second);
  EXPECT_EQ(first.str() + second.str(), full);

  Trainer other(r.fx.samples, reward::preset("dense"), r.table, r.cfg(30, 4));
  EXPECT_THROW(other.restore(Checkpoint::load(dir / "ckpt.json")), ConfigError);
}

TEST(Trainer, HaltsAfterThreeNonFiniteSteps) {
  SmallRun r;
  Trainer t(r.fx.samples, reward::preset("dense"), r.table, r.cfg(50, 1));
  auto ck = t.checkpoint();
  ck.theta[3] = std::numeric_limits<double>::infinity();
  t.restore(ck);
  const auto res = t.run();
  EXPECT_TRUE(res.halted);
  EXPECT_EQ(res.steps_run, 3u);
  ASSERT_TRUE(res.log.back().error.has_value());
  EXPECT_TRUE(std::isinf(t.theta()[3]));
}

TEST(Trainer, OracleDenseFromUniformLearnsTheFixture) {
  SmallRun r;
  auto oracle = std::make_shared<critic::OracleCritic>(critic::OracleCritic::from_samples(r.fx.samples));
  auto cfg = r.cfg(400, 2);
  cfg.eval_every = 1;
  cfg.stop_at_accuracy = 0.9;
  Trainer t(r.fx.samples, reward::preset("dense"), oracle, cfg);
  const double before = t.greedy_accuracy();
  EXPECT_LT(before, 0.3);
  const auto res = t.run();
  EXPECT_GE(*res.log.back().eval_accuracy, 0.9);
}

TEST(Trainer, SmoothedExpectedRewardRises) {
  SmallRun r;
  auto oracle = std::make_shared<critic::OracleCritic>(critic::OracleCritic::from_samples(r.fx.samples));
  auto cfg = r.cfg(300, 5);
  cfg.eval_every = 1;
  Trainer t(r.fx.samples, reward::preset("dense"), oracle, cfg);
  std::vector<double> er;
  t.run(nullptr, [&](const MetricsRecord& m) { er.push_back(*m.expected_reward); });
  std::vector<double> smooth;
  for (std::size_t i = 10; i <= er.size(); ++i)
    smooth.push_back(std::accumulate(er.begin() + static_cast<long>(i - 10), er.begin() + static_cast<long>(i), 0.0) / 10.0);
  for (std::size_t i = 1; i < smooth.size(); ++i) EXPECT_GE(smooth[i], smooth[i - 1] - 1e-9) << i;
  EXPECT_GT(smooth.back(), smooth.front());
}

TEST(TrainConfig, JsonRoundTripAndValidation) {
  TrainConfig c;
  c.steps = 12;
  c.seed = 99;
  c.optimizer.kind = "adamw";
  c.initial_theta = Theta(kFeatureDim, 0.5);
  c.stop_at_accuracy = 0.75;
  c.prompt.notation = prompt::MoveNotation::Uci;
  const auto back = TrainConfig::from_json(nlohmann::json::parse(c.to_json().dump()));
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_THROW(TrainConfig::from_json({{"stepz", 3}}), ConfigError);
  EXPECT_THROW(TrainConfig::from_json({{"temperature", 0.0}}), ConfigError);
  EXPECT_THROW(TrainConfig::from_json({{"steps", "many"}}), ConfigError);
}

}  // namespace
}  // namespace chessrl::grpo
