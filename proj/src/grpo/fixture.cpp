#include "chessrl/grpo/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "chessrl/chess/notation.hpp"

namespace chessrl::grpo {

Theta default_hidden_weights() {
  // pawn knight bishop rook queen king capture check promotion centrality mobility bias
  return {0.3, 0.2, -0.1, -0.3, 0.1, -0.6, 1.0, 0.8, 0.5, 0.7, 0.6, 0.0};
}

LinearOracleFixture make_linear_oracle_fixture(const FixtureOptions& opts, const Theta& hidden) {
  LinearOracleFixture out;
  out.hidden_weights = hidden;
  out.prior.resize(hidden.size());
  for (std::size_t k = 0; k < hidden.size(); ++k) out.prior[k] = -opts.prior_scale * hidden[k];
  std::mt19937_64 rng(opts.seed);
  std::set<std::string> seen;
  const int span = std::max(opts.max_plies - opts.min_plies, 0) + 1;
  while (out.samples.size() < opts.count) {
    chess::Position pos;
    const int plies = opts.min_plies + static_cast<int>(rng() % static_cast<unsigned>(span));
    bool dead = false;
    for (int i = 0; i < plies; ++i) {
      const auto moves = chess::generate_legal(pos);
      if (moves.empty()) {
        dead = true;
        break;
      }
      pos = pos.play_unchecked(moves[rng() % moves.size()]);
    }
    if (dead) continue;
    const auto legal = chess::legal_moves(pos);
    if (legal.size() < opts.min_legal) continue;
    const std::string fen = chess::to_fen(pos);
    if (seen.count(fen)) continue;

    const auto feats = feature_matrix(pos, legal);
    std::vector<double> h(legal.size());
    for (std::size_t i = 0; i < legal.size(); ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < kFeatureDim; ++k) s += hidden[k] * feats[i][k];
      h[i] = s;
    }
    std::vector<double> sorted = h;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    if (sorted[0] - sorted[1] < opts.margin) continue;
    const std::size_t best = static_cast<std::size_t>(std::max_element(h.begin(), h.end()) - h.begin());

    seen.insert(fen);
    auto& row = out.table[fen];
    for (std::size_t i = 0; i < legal.size(); ++i) row[legal[i].uci] = std::exp(opts.sharpness * (h[i] - h[best]));

    puzzle::PositionSample s;
    char id[32];
    std::snprintf(id, sizeof id, "lin%04zu", out.samples.size());
    s.puzzle_id = id;
    s.ply_index = 0;
    s.state = pos;
    s.optimal_move = legal[best].move;
    s.solver_side = pos.side_to_move();
    s.is_solver_move = true;
    s.rating = 1500;
    s.root_fen = fen;
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace chessrl::grpo
