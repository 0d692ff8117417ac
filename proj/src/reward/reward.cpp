#include "chessrl/reward/reward.hpp"

#include <algorithm>

#include "chessrl/chess/notation.hpp"
#include "chessrl/errors.hpp"

namespace chessrl::reward {

RewardPreset preset(const std::string& name) {
  const RewardWeights sparse{1.0, 0.0, 0.1, 0.1};
  const RewardWeights dense{0.0, 1.0, 0.1, 0.1};
  if (name == "sparse") return {name, sparse, DenseMode::Value};
  if (name == "dense") return {name, dense, DenseMode::Value};
  if (name == "rank") return {name, dense, DenseMode::Rank};
  if (name == "rank-literal") return {name, dense, DenseMode::RankLiteral};
  throw ConfigError("unknown reward preset '" + name + "'");
}

std::vector<std::string> preset_names() { return {"sparse", "dense", "rank", "rank-literal"}; }

RewardTarget target_of(const puzzle::PositionSample& sample) { return {sample.state, sample.optimal_move}; }

namespace {

bool usable(const RewardTarget& t, const std::optional<chess::Move>& mv) {
  return mv.has_value() && chess::is_legal(t.state, *mv);
}

}  // namespace

double sparse_reward(const RewardTarget& target, const std::optional<chess::Move>& extracted) {
  return extracted && target.optimal && *extracted == *target.optimal ? 1.0 : 0.0;
}

double dense_reward(const RewardTarget& target, const std::optional<chess::Move>& extracted,
                    const critic::Backend& backend) {
  if (!usable(target, extracted)) return 0.0;
  return backend.score(target.state, *extracted).value;
}

double rank_reward(const RewardTarget& target, const std::optional<chess::Move>& extracted,
                   const critic::Backend& backend, bool literal) {
  if (!usable(target, extracted)) return 0.0;
  const auto legal = chess::legal_moves(target.state);
  const auto scores = backend.score_all(target.state);
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(legal.size());
  for (std::size_t i = 0; i < legal.size(); ++i) order.emplace_back(scores.at(legal[i].move).value, i);
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  const double L = static_cast<double>(legal.size());
  std::size_t rank = 0;
  for (std::size_t r = 0; r < order.size(); ++r)
    if (legal[order[r].second].move == *extracted) rank = r + 1;
  if (legal.size() == 1) return literal ? 0.0 : 1.0;
  return literal ? (static_cast<double>(rank) - 1.0) / (L - 1.0) : (L - static_cast<double>(rank)) / (L - 1.0);
}

RewardBreakdown score(const RewardTarget& target, std::string_view raw_output, const RewardPreset& preset,
                      const prompt::PromptConfig& cfg, const critic::Backend* backend,
                      const prompt::ParseOptions& parse) {
  const auto parsed = prompt::parse_output(raw_output, parse);
  RewardBreakdown b;
  b.extracted_move = prompt::extract_move(parsed, target.state, cfg);
  b.r_fmt = parsed.format_ok ? 1.0 : 0.0;
  b.r_lang = parsed.english_ok ? 1.0 : 0.0;
  b.r_sparse = sparse_reward(target, b.extracted_move);

  const bool dense_needed = preset.weights.lambda_dense != 0.0;
  if (backend == nullptr) {
    if (dense_needed) throw ConfigError("preset '" + preset.name + "' needs a critic backend");
  } else {
    try {
      switch (preset.dense_mode) {
        case DenseMode::Value: b.r_dense = dense_reward(target, b.extracted_move, *backend); break;
        case DenseMode::Rank: b.r_dense = rank_reward(target, b.extracted_move, *backend, false); break;
        case DenseMode::RankLiteral: b.r_dense = rank_reward(target, b.extracted_move, *backend, true); break;
      }
    } catch (const Error& e) {
      if (dense_needed) throw;
      b.r_dense = 0.0;
      b.dense_error = e.category() + ": " + e.what();
    }
  }
  const auto& w = preset.weights;
  b.total = w.lambda_sparse * b.r_sparse + w.lambda_dense * b.r_dense + w.lambda_fmt * b.r_fmt +
            w.lambda_lang * b.r_lang;
  return b;
}

std::vector<BatchResult> score_batch(const std::vector<BatchItem>& items, const RewardPreset& preset,
                                     const critic::Backend* backend, parallel::Exec exec) {
  return parallel::map_index<BatchResult>(exec, items.size(), [&](std::size_t i) {
    BatchResult r;
    try {
      r.breakdown = score(items[i].target, items[i].raw_output, preset, items[i].cfg, backend);
    } catch (const Error& e) {
      r.error_category = e.category();
      r.error_message = e.what();
    }
    return r;
  });
}

nlohmann::ordered_json to_json(const RewardBreakdown& b, const chess::Position& pos) {
  nlohmann::ordered_json j;
  j["r_sparse"] = b.r_sparse;
  j["r_dense"] = b.r_dense;
  j["r_fmt"] = b.r_fmt;
  j["r_lang"] = b.r_lang;
  j["total"] = b.total;
  if (b.extracted_move) {
    j["extracted_san"] = chess::canonical_san(pos, *b.extracted_move);
    j["extracted_uci"] = chess::uci_of(*b.extracted_move);
  } else {
    j["extracted_san"] = nullptr;
    j["extracted_uci"] = nullptr;
  }
  j["legal"] = b.extracted_move.has_value();
  if (b.dense_error) j["dense_error"] = *b.dense_error;
  return j;
}

}  // namespace chessrl::reward
