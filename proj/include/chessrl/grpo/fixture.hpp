#pragma once

#include <cstdint>
#include <vector>

#include "chessrl/critic/oracle.hpp"
#include "chessrl/grpo/policy.hpp"
#include "chessrl/puzzle/sample.hpp"

namespace chessrl::grpo {

/// Positions whose best move is the argmax of a hidden linear score
/// h(a) = w* . phi(s, a). Every legal move gets the graded value
/// exp(sharpness * (h(a) - max h)), so the best move is worth exactly 1 and
/// the optimum is identifiable by the toy policy class.
struct LinearOracleFixture {
  std::vector<puzzle::PositionSample> samples;
  critic::TableCritic::Table table;
  Theta hidden_weights;
  /// Starting policy that rarely samples the best move:
  /// -prior_scale * hidden_weights.
  Theta prior;
};

struct FixtureOptions {
  std::size_t count = 200;
  std::uint64_t seed = 1;
  std::size_t min_legal = 10;
  /// Required gap between the best and second-best hidden score.
  double margin = 0.25;
  double sharpness = 2.0;
  int min_plies = 8;
  int max_plies = 40;
  double prior_scale = 0.3;
};

Theta default_hidden_weights();

/// Positions come from seeded random playouts from the initial position;
/// duplicates and positions failing `min_legal` or `margin` are skipped.
LinearOracleFixture make_linear_oracle_fixture(const FixtureOptions& opts,
                                               const Theta& hidden = default_hidden_weights());

}  // namespace chessrl::grpo
