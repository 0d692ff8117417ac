#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "chessrl/grpo/features.hpp"

namespace chessrl::grpo {

using Theta = std::vector<double>;

/// softmax(theta . phi / temperature) over the rows of `feats`.
std::vector<double> softmax_policy(const Theta& theta, std::span<const Features> feats, double temperature);

/// Distribution over legal_moves(pos), in MoveList order. Throws
/// NoLegalMoves.
std::vector<double> policy_distribution(const Theta& theta, const chess::Position& pos, double temperature);

/// Index of the highest logit; ties go to the earliest row.
std::size_t greedy_action(const Theta& theta, std::span<const Features> feats);

struct GroupRollout {
  std::size_t sample_index = 0;
  std::vector<std::size_t> actions;  // rows of the sample's feature matrix
  std::vector<double> logprobs_old;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

/// G independent draws by inverse CDF. Throws NoLegalMoves on an empty
/// feature matrix.
GroupRollout sample_group(const Theta& theta, std::span<const Features> feats, std::size_t group_size,
                          double temperature, std::mt19937_64& rng);

inline constexpr double kAdvantageEps = 1e-8;

/// (r - mean) / (population std + 1e-8); all zeros for constant rewards or
/// G = 1.
std::vector<double> compute_advantages(const std::vector<double>& rewards);

struct ObjectiveConfig {
  double temperature = 1.0;
  double clip_ratio = 0.2;
  double kl_coef = 1e-3;
  double entropy_coef = 1e-3;
};

/// A scored group together with the feature matrix of its sample.
struct GroupBatch {
  std::span<const Features> feats;
  GroupRollout rollout;
};

struct ObjectiveTerms {
  double objective = 0.0;  // surrogate - kl_coef * kl + entropy_coef * entropy
  double surrogate = 0.0;  // mean over all rollouts
  double kl = 0.0;         // mean over groups, exact KL(pi_theta || pi_ref)
  double entropy = 0.0;    // mean over groups
};

/// Clipped surrogate objective; the clip interval [1 - eps, 1 + eps] is
/// closed, so the gradient flows at its end points.
ObjectiveTerms objective(const Theta& theta, const Theta& ref_theta, std::span<const GroupBatch> batch,
                         const ObjectiveConfig& cfg);

/// Analytic gradient of objective() with respect to theta.
Theta objective_gradient(const Theta& theta, const Theta& ref_theta, std::span<const GroupBatch> batch,
                         const ObjectiveConfig& cfg);

/// Exact categorical KL(p || q). Both must be strictly positive.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);
double entropy(const std::vector<double>& p);

struct OptimizerConfig {
  std::string kind = "sgd";  // sgd | adamw
  double lr = 1e-2;
  double grad_clip = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
};

struct OptimizerState {
  std::uint64_t t = 0;
  Theta m;
  Theta v;
};

struct StepMetrics {
  ObjectiveTerms terms;
  double grad_norm = 0.0;  // before clipping
  double mean_reward = 0.0;
};

/// One ascent step. Throws NonFiniteGradient and leaves theta and the
/// optimizer state untouched when the gradient has a non-finite entry.
StepMetrics grpo_step(Theta& theta, const Theta& ref_theta, std::span<const GroupBatch> batch,
                      const ObjectiveConfig& obj, const OptimizerConfig& opt, OptimizerState& state);

}  // namespace chessrl::grpo
