#include "chessrl/eval/agent.hpp"

#include <fstream>

#include <json.hpp>

#include "chessrl/chess/notation.hpp"
#include "chessrl/errors.hpp"
#include "chessrl/grpo/features.hpp"
#include "chessrl/prompt/output_parser.hpp"
#include "chessrl/rng.hpp"

namespace chessrl::eval {

OracleAgent::OracleAgent(const std::vector<puzzle::Puzzle>& puzzles) {
  for (const auto& p : puzzles) lines_[p.id] = p.moves;
}

std::string OracleAgent::choose(const AgentQuery& q) const {
  const auto it = lines_.find(q.task_id);
  if (it == lines_.end() || q.ply + 1 >= it->second.size())
    throw AgentError("oracle has no move for " + q.task_id + " ply " + std::to_string(q.ply));
  const auto mv = chess::parse_uci_move(q.pos, it->second[q.ply + 1]);
  return prompt::format_answer("Recorded line.", chess::canonical_san(q.pos, mv));
}

std::string RandomAgent::choose(const AgentQuery& q) const {
  if (q.legal.empty()) throw AgentError("no legal moves");
  std::mt19937_64 rng(mix_seed(mix_seed(seed_, hash_string(q.task_id)), q.ply));
  return prompt::format_answer("Random choice.", q.legal[uniform_index(rng, q.legal.size())].san);
}

std::string CriticGreedyAgent::choose(const AgentQuery& q) const {
  if (q.legal.empty()) throw AgentError("no legal moves");
  const auto scores = backend_->score_all(q.pos);
  const chess::NotatedMove* best = &q.legal.front();
  for (const auto& nm : q.legal)
    if (scores.at(nm.move).value > scores.at(best->move).value) best = &nm;
  return prompt::format_answer("Highest critic value.", best->san);
}

std::string PolicyAgent::choose(const AgentQuery& q) const {
  const auto feats = grpo::feature_matrix(q.pos, q.legal);
  return prompt::format_answer("Policy argmax.", q.legal[grpo::greedy_action(theta_, feats)].san);
}

std::string TranscriptAgent::key(const std::string& task_id, std::size_t ply) {
  return task_id + "#" + std::to_string(ply);
}

TranscriptAgent TranscriptAgent::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::map<std::string, std::string> outputs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      outputs[key(rec.at("task_id").get<std::string>(), rec.at("ply").get<std::size_t>())] =
          rec.at("raw_output").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return TranscriptAgent(std::move(outputs));
}

std::string TranscriptAgent::choose(const AgentQuery& q) const {
  const auto it = outputs_.find(key(q.task_id, q.ply));
  if (it == outputs_.end()) throw AgentError("no transcript for " + key(q.task_id, q.ply));
  return it->second;
}

}  // namespace chessrl::eval
