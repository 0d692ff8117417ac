#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chessrl/critic/critic.hpp"
#include "chessrl/parallel/exec.hpp"
#include "chessrl/prompt/output_parser.hpp"
#include "chessrl/puzzle/sample.hpp"

namespace chessrl::reward {

struct RewardWeights {
  double lambda_sparse = 1.0;
  double lambda_dense = 0.0;
  double lambda_fmt = 0.1;
  double lambda_lang = 0.1;

  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

/// What fills the dense slot: the critic value itself, or the move's rank
/// among all legal moves under the critic.
enum class DenseMode { Value, Rank, RankLiteral };

struct RewardPreset {
  std::string name;
  RewardWeights weights;
  DenseMode dense_mode = DenseMode::Value;
};

/// sparse = (1, 0, .1, .1); dense = (0, 1, .1, .1); rank and rank-literal use
/// the dense weights with a rank-based dense slot. Throws ConfigError.
RewardPreset preset(const std::string& name);
std::vector<std::string> preset_names();

/// The position being answered and, when known, its optimal move.
struct RewardTarget {
  chess::Position state;
  std::optional<chess::Move> optimal;
};

RewardTarget target_of(const puzzle::PositionSample& sample);

struct RewardBreakdown {
  double r_sparse = 0.0;
  double r_dense = 0.0;
  double r_fmt = 0.0;
  double r_lang = 0.0;
  double total = 0.0;
  std::optional<chess::Move> extracted_move;
  /// Set when the critic failed on a component whose weight is zero.
  std::optional<std::string> dense_error;
};

/// 1 iff `extracted` is the optimal move. Absent either way gives 0.
double sparse_reward(const RewardTarget& target, const std::optional<chess::Move>& extracted);

/// Critic value of the extracted move; 0 when absent or illegal.
double dense_reward(const RewardTarget& target, const std::optional<chess::Move>& extracted,
                    const critic::Backend& backend);

/// Rank reward. Moves are ordered by descending critic value, ties by SAN
/// order. Default orientation gives (L - rank) / (L - 1) (best = 1, and 1
/// when L = 1); `literal` gives (rank - 1) / (L - 1) (and 0 when L = 1).
/// 0 when the move is absent or illegal.
double rank_reward(const RewardTarget& target, const std::optional<chess::Move>& extracted,
                   const critic::Backend& backend, bool literal = false);

/// Full pipeline: parse_output, extract_move, all four components and the
/// weighted total. Backend errors propagate only when the dense slot has a
/// non-zero weight; `backend` may be null in that case only if it is never
/// needed (ConfigError otherwise).
RewardBreakdown score(const RewardTarget& target, std::string_view raw_output, const RewardPreset& preset,
                      const prompt::PromptConfig& cfg, const critic::Backend* backend,
                      const prompt::ParseOptions& parse = {});

/// Per-item scoring in index order. Failures are captured per item.
struct BatchItem {
  RewardTarget target;
  std::string raw_output;
  prompt::PromptConfig cfg;
};

struct BatchResult {
  std::optional<RewardBreakdown> breakdown;
  std::string error_category;
  std::string error_message;
};

std::vector<BatchResult> score_batch(const std::vector<BatchItem>& items, const RewardPreset& preset,
                                     const critic::Backend* backend, parallel::Exec exec = parallel::Exec::Serial);

/// Record form: r_* components, total, extracted_san / extracted_uci (null
/// when absent), and dense_error when set.
nlohmann::ordered_json to_json(const RewardBreakdown& b, const chess::Position& pos);

}  // namespace chessrl::reward
