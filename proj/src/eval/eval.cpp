#include "chessrl/eval/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "chessrl/chess/notation.hpp"
#include "chessrl/errors.hpp"

namespace chessrl::eval {
namespace {

struct PuzzleOutcome {
  bool solved = true;
  std::size_t positions = 0;
  std::size_t correct = 0;
  std::vector<FailureTranscript> failures;
};

PuzzleOutcome run_puzzle(const Agent& agent, const puzzle::Puzzle& p, const EvalConfig& cfg) {
  PuzzleOutcome out;
  for (const auto& s : puzzle::decompose(p, puzzle::DecomposeMode::SolverOnly)) {
    const auto legal = chess::legal_moves(s.state);
    const std::string prompt_text = prompt::render_prompt(s, cfg.prompt);
    std::string raw;
    try {
      raw = agent.choose(AgentQuery{p.id, s.ply_index, s.state, legal, prompt_text});
    } catch (const std::exception& e) {
      throw AgentError("puzzle " + p.id + " ply " + std::to_string(s.ply_index) + ": " + e.what());
    }
    const auto chosen = prompt::extract_move(prompt::parse_output(raw, cfg.parse), s.state, cfg.prompt);
    ++out.positions;
    if (chosen && *chosen == s.optimal_move) {
      ++out.correct;
      continue;
    }
    out.solved = false;
    FailureTranscript f;
    f.puzzle_id = p.id;
    f.ply = s.ply_index;
    f.fen = chess::to_fen(s.state);
    f.expected_san = chess::canonical_san(s.state, s.optimal_move);
    if (chosen) f.chosen_san = chess::canonical_san(s.state, *chosen);
    f.raw_output = std::move(raw);
    out.failures.push_back(std::move(f));
  }
  return out;
}

double ratio(std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }

}  // namespace

EvalReport eval_puzzles(const Agent& agent, const std::vector<puzzle::Puzzle>& puzzles, const EvalConfig& cfg) {
  const auto outcomes = parallel::map_index<PuzzleOutcome>(
      cfg.exec, puzzles.size(), [&](std::size_t i) { return run_puzzle(agent, puzzles[i], cfg); });

  EvalReport r;
  r.agent = agent.name();
  const int width = std::max(cfg.bucket_width, 1);
  std::map<int, BucketStats> buckets;
  for (std::size_t i = 0; i < puzzles.size(); ++i) {
    const auto& o = outcomes[i];
    const int low = (puzzles[i].rating / width) * width;
    auto& b = buckets[low];
    b.low = low;
    b.high = low + width;
    ++b.puzzles;
    b.positions += o.positions;
    b.positions_correct += o.correct;
    ++r.puzzles;
    r.positions += o.positions;
    r.positions_correct += o.correct;
    if (o.solved) {
      ++b.solved;
      ++r.solved;
    }
    for (const auto& f : o.failures)
      if (r.failures.size() < cfg.max_failures) r.failures.push_back(f);
  }
  for (auto& [low, b] : buckets) r.buckets.push_back(b);
  r.puzzle_accuracy = ratio(r.solved, r.puzzles);
  r.per_position_accuracy = ratio(r.positions_correct, r.positions);
  return r;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["agent"] = agent;
  j["puzzles"] = puzzles;
  j["solved"] = solved;
  j["puzzle_accuracy"] = puzzle_accuracy;
  j["positions"] = positions;
  j["positions_correct"] = positions_correct;
  j["per_position_accuracy"] = per_position_accuracy;
  j["buckets"] = nlohmann::ordered_json::array();
  for (const auto& b : buckets)
    j["buckets"].push_back({{"low", b.low},
                            {"high", b.high},
                            {"puzzles", b.puzzles},
                            {"solved", b.solved},
                            {"positions", b.positions},
                            {"positions_correct", b.positions_correct}});
  j["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : failures) {
    nlohmann::ordered_json fj;
    fj["puzzle_id"] = f.puzzle_id;
    fj["ply"] = f.ply;
    fj["fen"] = f.fen;
    fj["expected_san"] = f.expected_san;
    fj["chosen_san"] = f.chosen_san ? nlohmann::ordered_json(*f.chosen_san) : nullptr;
    fj["raw_output"] = f.raw_output;
    j["failures"].push_back(fj);
  }
  return j;
}

std::string EvalReport::format_table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "agent %s: puzzle accuracy %.4f (%zu/%zu), per-position %.4f (%zu/%zu)\n",
                agent.c_str(), puzzle_accuracy, solved, puzzles, per_position_accuracy, positions_correct, positions);
  out << line;
  out << "rating       puzzles  solved   acc     positions  pos_acc\n";
  for (const auto& b : buckets) {
    std::snprintf(line, sizeof line, "%4d-%-4d  %9zu %7zu  %.4f  %9zu  %.4f\n", b.low, b.high - 1, b.puzzles,
                  b.solved, ratio(b.solved, b.puzzles), b.positions, ratio(b.positions_correct, b.positions));
    out << line;
  }
  return out.str();
}

}  // namespace chessrl::eval
