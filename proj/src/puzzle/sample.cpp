#include "chessrl/puzzle/sample.hpp"

#include "chessrl/chess/notation.hpp"
#include "chessrl/errors.hpp"

namespace chessrl::puzzle {

std::string to_string(DecomposeMode mode) { return mode == DecomposeMode::AllMoves ? "all_moves" : "solver_only"; }

DecomposeMode parse_decompose_mode(const std::string& text) {
  if (text == "all_moves" || text == "all-moves") return DecomposeMode::AllMoves;
  if (text == "solver_only" || text == "solver-only") return DecomposeMode::SolverOnly;
  throw ConfigError("unknown decompose mode '" + text + "'");
}

std::vector<PositionSample> decompose(const Puzzle& puzzle, DecomposeMode mode) {
  chess::Position pos = chess::parse_fen(puzzle.initial_fen);
  std::vector<chess::Move> history;
  const chess::Move setup = chess::parse_uci_move(pos, puzzle.moves.at(0));
  history.push_back(setup);
  pos = pos.play_unchecked(setup);
  const chess::Color solver = pos.side_to_move();

  std::vector<PositionSample> out;
  for (std::size_t t = 0; t + 1 < puzzle.moves.size(); ++t) {
    const chess::Move mv = chess::parse_uci_move(pos, puzzle.moves[t + 1]);
    const bool solver_move = t % 2 == 0;
    if (mode == DecomposeMode::AllMoves || solver_move) {
      PositionSample s;
      s.puzzle_id = puzzle.id;
      s.ply_index = t;
      s.state = pos;
      s.optimal_move = mv;
      s.solver_side = solver;
      s.is_solver_move = solver_move;
      s.rating = puzzle.rating;
      s.root_fen = puzzle.initial_fen;
      s.history = history;
      out.push_back(std::move(s));
    }
    history.push_back(mv);
    pos = pos.play_unchecked(mv);
  }
  return out;
}

std::vector<PositionSample> decompose_all(const std::vector<Puzzle>& puzzles, DecomposeMode mode,
                                          parallel::Exec exec) {
  const auto parts = parallel::map_index<std::vector<PositionSample>>(
      exec, puzzles.size(), [&](std::size_t i) { return decompose(puzzles[i], mode); });
  std::vector<PositionSample> out;
  for (const auto& part : parts) out.insert(out.end(), part.begin(), part.end());
  return out;
}

nlohmann::ordered_json to_record(const PositionSample& s, bool include_legal_san) {
  nlohmann::ordered_json j;
  j["puzzle_id"] = s.puzzle_id;
  j["ply_index"] = s.ply_index;
  j["fen"] = chess::to_fen(s.state);
  j["optimal_san"] = chess::canonical_san(s.state, s.optimal_move);
  j["optimal_uci"] = chess::uci_of(s.optimal_move);
  if (include_legal_san) {
    auto legal = nlohmann::ordered_json::array();
    for (const auto& m : chess::legal_moves(s.state)) legal.push_back(m.san);
    j["legal_san"] = std::move(legal);
  }
  j["solver_side"] = s.solver_side == chess::Color::White ? "w" : "b";
  j["is_solver_move"] = s.is_solver_move;
  j["rating"] = s.rating;
  if (s.root_fen) {
    j["root_fen"] = *s.root_fen;
    auto hist = nlohmann::ordered_json::array();
    for (const auto& mv : s.history) hist.push_back(chess::uci_of(mv));
    j["history_uci"] = std::move(hist);
  }
  return j;
}

PositionSample from_record(const nlohmann::json& r) {
  PositionSample s;
  try {
    s.puzzle_id = r.at("puzzle_id").get<std::string>();
    s.ply_index = r.at("ply_index").get<std::size_t>();
    s.state = chess::parse_fen(r.at("fen").get<std::string>());
    const std::string uci = r.at("optimal_uci").get<std::string>();
    s.optimal_move = chess::parse_uci_move(s.state, uci);
    if (r.contains("optimal_san") && chess::parse_san(s.state, r["optimal_san"].get<std::string>()) != s.optimal_move)
      throw ValidationError("optimal_san and optimal_uci disagree");
    const std::string side = r.at("solver_side").get<std::string>();
    if (side != "w" && side != "b") throw ValidationError("solver_side must be 'w' or 'b'");
    s.solver_side = side == "w" ? chess::Color::White : chess::Color::Black;
    s.is_solver_move = r.at("is_solver_move").get<bool>();
    s.rating = r.at("rating").get<int>();
    if (r.contains("root_fen")) {
      s.root_fen = r["root_fen"].get<std::string>();
      chess::Position pos = chess::parse_fen(*s.root_fen);
      for (const auto& u : r.at("history_uci")) {
        const chess::Move mv = chess::parse_uci_move(pos, u.get<std::string>());
        s.history.push_back(mv);
        pos = pos.play_unchecked(mv);
      }
      if (pos != s.state) throw ValidationError("history does not reach the recorded position");
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(std::string("invalid sample record: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid sample record: ") + e.what());
  }
  return s;
}

}  // namespace chessrl::puzzle
