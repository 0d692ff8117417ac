#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chessrl/critic/critic.hpp"
#include "chessrl/grpo/policy.hpp"
#include "chessrl/prompt/prompt.hpp"
#include "chessrl/puzzle/sample.hpp"
#include "chessrl/reward/reward.hpp"

namespace chessrl::grpo {

struct TrainConfig {
  std::size_t steps = 150;
  std::size_t batch_size = 128;
  std::size_t group_size = 8;
  double temperature = 1.0;
  double clip_ratio = 0.2;
  double kl_coef = 1e-3;
  double entropy_coef = 1e-3;
  OptimizerConfig optimizer;  // lr 1e-2, grad clip 1.0
  /// Starting parameters, also used as the KL reference. Zero (uniform
  /// policy) when absent.
  std::optional<Theta> initial_theta;
  std::uint64_t seed = 0;
  /// Greedy accuracy and expected reward are measured every `eval_every`
  /// steps (0 disables) and after the last step.
  std::size_t eval_every = 10;
  /// Stop early once the measured greedy accuracy reaches this value.
  std::optional<double> stop_at_accuracy;
  /// Notation of the toy policy's answers.
  prompt::PromptConfig prompt;
  parallel::Exec exec = parallel::Exec::Parallel;

  nlohmann::ordered_json to_json() const;
  /// Missing keys keep their defaults; unknown keys raise ConfigError.
  static TrainConfig from_json(const nlohmann::json& j);
};

struct MetricsRecord {
  std::size_t step = 0;  // updates completed, 1-based
  double mean_reward = 0.0;
  double surrogate = 0.0;
  double kl = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;
  std::optional<double> eval_accuracy;
  std::optional<double> expected_reward;
  std::optional<std::string> error;

  nlohmann::ordered_json to_json() const;
};

struct Checkpoint {
  std::size_t step = 0;
  std::uint64_t seed = 0;
  Theta theta;
  Theta ref_theta;
  OptimizerState optimizer;

  nlohmann::ordered_json to_json() const;
  static Checkpoint from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

struct TrainResult {
  Theta theta;
  std::vector<MetricsRecord> log;
  std::size_t steps_run = 0;
  bool halted = false;
  std::string halt_reason;
};

/// Bandit-style GRPO over single-move episodes. Batches are drawn from a
/// seeded per-epoch permutation, and each (step, group) pair has its own
/// RNG stream, so results do not depend on the thread count and a resumed
/// run continues exactly where the checkpoint left off.
class Trainer {
 public:
  Trainer(std::vector<puzzle::PositionSample> samples, reward::RewardPreset preset,
          std::shared_ptr<const critic::Backend> backend, TrainConfig cfg);
  ~Trainer();

  /// Samples used for greedy-accuracy evaluation; defaults to the training
  /// set.
  void set_eval_samples(std::vector<puzzle::PositionSample> samples);

  /// One update. NonFiniteGradient is caught and reported in `error`.
  MetricsRecord step();

  /// Runs until cfg.steps, early stop, or three consecutive non-finite
  /// steps. Each record is written as one JSON line to `metrics_out`.
  TrainResult run(std::ostream* metrics_out = nullptr,
                  const std::function<void(const MetricsRecord&)>& on_step = {});

  double greedy_accuracy() const;
  double expected_reward() const;

  const Theta& theta() const { return theta_; }
  std::size_t steps_done() const { return step_; }

  Checkpoint checkpoint() const;
  /// Throws ConfigError when the checkpoint was made with another seed.
  void restore(const Checkpoint& ckpt);

  /// Reward of every legal move of training sample `i`, in MoveList order.
  const std::vector<double>& action_rewards(std::size_t i) const;

 private:
  struct Prepared;

  const Prepared& prepared(const std::vector<puzzle::PositionSample>& set,
                           std::vector<std::unique_ptr<Prepared>>& cache, std::size_t i) const;
  std::vector<std::size_t> batch_indices(std::size_t step) const;
  const std::vector<std::size_t>& epoch_permutation(std::uint64_t epoch) const;

  std::vector<puzzle::PositionSample> samples_;
  std::vector<puzzle::PositionSample> eval_samples_;
  bool separate_eval_ = false;
  reward::RewardPreset preset_;
  std::shared_ptr<const critic::Backend> backend_;
  TrainConfig cfg_;

  Theta theta_;
  Theta ref_theta_;
  OptimizerState opt_state_;
  std::size_t step_ = 0;
  int consecutive_failures_ = 0;

  mutable std::vector<std::unique_ptr<Prepared>> train_cache_;
  mutable std::vector<std::unique_ptr<Prepared>> eval_cache_;
  mutable std::mutex perm_mu_;
  mutable std::map<std::uint64_t, std::vector<std::size_t>> perms_;
};

/// Convenience wrapper: construct, run, return.
TrainResult train(const std::vector<puzzle::PositionSample>& samples, const reward::RewardPreset& preset,
                  std::shared_ptr<const critic::Backend> backend, const TrainConfig& cfg,
                  std::ostream* metrics_out = nullptr);

}  // namespace chessrl::grpo
