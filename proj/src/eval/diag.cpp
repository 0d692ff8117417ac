#include "chessrl/eval/diag.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "chessrl/chess/movegen.hpp"
#include "chessrl/chess/notation.hpp"
#include "chessrl/errors.hpp"
#include "chessrl/rng.hpp"

namespace chessrl::eval {
namespace {

std::string task_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%06zu", prefix, i);
  return buf;
}

std::string board_state_prompt(const std::string& start_fen, const std::vector<std::string>& moves) {
  std::string text = "Starting position (FEN): " + start_fen + "\nMoves played:";
  for (const auto& m : moves) text += " " + m;
  text +=
      "\nGive the FEN of the position after these moves, including side to move, castling rights, en passant "
      "square and move counters. Put the FEN inside <answer></answer>.";
  return text;
}

std::string two_candidate_prompt(const std::string& fen, const std::string& a, const std::string& b) {
  return "Position (FEN): " + fen + "\nCandidate A: " + a + "\nCandidate B: " + b +
         "\nWhich candidate is the stronger move for the side to move? Put the chosen move inside "
         "<answer></answer>.";
}

// Plays k random moves; nullopt when a terminal position arrives first.
std::optional<std::vector<chess::Move>> random_line(std::mt19937_64& rng, chess::Position pos, int k) {
  std::vector<chess::Move> line;
  for (int i = 0; i < k; ++i) {
    const auto moves = chess::generate_legal(pos);
    if (moves.empty()) return std::nullopt;
    line.push_back(moves[uniform_index(rng, moves.size())]);
    pos = chess::apply_move(pos, line.back());
  }
  return line;
}

chess::Position draw_start(std::mt19937_64& rng, const std::vector<chess::Position>& pool) {
  return pool.empty() ? random_midgame(rng) : pool[uniform_index(rng, pool.size())];
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<chess::Move> try_san(const chess::Position& pos, const std::string& text) {
  try {
    return chess::parse_san(pos, text);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

chess::Position random_midgame(std::mt19937_64& rng) {
  const auto start = chess::parse_fen(chess::kStartFen);
  for (;;) {
    const int plies = 8 + static_cast<int>(uniform_index(rng, 23));
    auto line = random_line(rng, start, plies);
    if (!line) continue;
    auto pos = start;
    for (const auto& mv : *line) pos = chess::apply_move(pos, mv);
    if (!chess::generate_legal(pos).empty()) return pos;
  }
}

BoardStateTask gen_board_state_task(std::mt19937_64& rng, int k, const std::vector<chess::Position>& pool,
                                    std::string id) {
  if (k < 1 || k > 5) throw ValidationError("board-state move count must be in [1, 5], got " + std::to_string(k));
  for (;;) {
    const auto start = draw_start(rng, pool);
    const auto line = random_line(rng, start, k);
    if (!line) continue;
    BoardStateTask t;
    t.task_id = std::move(id);
    t.start_fen = chess::to_fen(start);
    auto pos = start;
    for (const auto& mv : *line) {
      t.san_moves.push_back(chess::canonical_san(pos, mv));
      pos = chess::apply_move(pos, mv);
    }
    t.expected_fen = chess::to_fen(pos);
    t.prompt = board_state_prompt(t.start_fen, t.san_moves);
    return t;
  }
}

std::vector<BoardStateTask> gen_board_state_tasks(std::size_t count, std::uint64_t seed,
                                                  const std::vector<chess::Position>& pool, parallel::Exec exec) {
  return parallel::map_index<BoardStateTask>(exec, count, [&](std::size_t i) {
    std::mt19937_64 rng(mix_seed(seed, i));
    const int k = 1 + static_cast<int>(uniform_index(rng, 5));
    return gen_board_state_task(rng, k, pool, task_id("bs", i));
  });
}

bool verify(const BoardStateTask& task) {
  try {
    auto pos = chess::parse_fen(task.start_fen);
    for (const auto& san : task.san_moves) pos = chess::apply_move(pos, chess::parse_san(pos, san));
    return chess::to_fen(pos) == task.expected_fen;
  } catch (const Error&) {
    return false;
  }
}

std::optional<TwoCandidateTask> make_two_candidate_task(std::mt19937_64& rng, const chess::Position& pos,
                                                        const chess::Move& first, const chess::Move& second,
                                                        const critic::Backend& backend, double margin) {
  const double v1 = backend.score(pos, first).value;
  const double v2 = backend.score(pos, second).value;
  if (std::abs(v1 - v2) < margin) return std::nullopt;
  TwoCandidateTask t;
  t.fen = chess::to_fen(pos);
  std::string s1 = chess::canonical_san(pos, first);
  std::string s2 = chess::canonical_san(pos, second);
  const bool first_better = v1 > v2;
  const bool swap = uniform_index(rng, 2) == 1;
  t.move_a = swap ? s2 : s1;
  t.move_b = swap ? s1 : s2;
  t.value_a = swap ? v2 : v1;
  t.value_b = swap ? v1 : v2;
  t.better = (first_better != swap) ? 'a' : 'b';
  t.prompt = two_candidate_prompt(t.fen, t.move_a, t.move_b);
  return t;
}

std::optional<TwoCandidateTask> gen_two_candidate_task(std::mt19937_64& rng, const chess::Position& pos,
                                                       const critic::Backend& backend, double margin) {
  const auto legal = chess::legal_moves(pos);
  if (legal.size() < 2) return std::nullopt;
  const auto scores = backend.score_all(pos, parallel::Exec::Serial);
  const chess::NotatedMove* best = &legal.front();
  for (const auto& nm : legal)
    if (scores.at(nm.move).value > scores.at(best->move).value) best = &nm;
  const double top = scores.at(best->move).value;
  std::vector<chess::Move> worse;
  for (const auto& nm : legal)
    if (scores.at(nm.move).value <= top - margin) worse.push_back(nm.move);
  if (worse.empty()) return std::nullopt;
  const auto other = worse[uniform_index(rng, worse.size())];
  return make_two_candidate_task(rng, pos, best->move, other, backend, margin);
}

std::vector<TwoCandidateTask> gen_two_candidate_tasks(std::size_t count, std::uint64_t seed,
                                                      const std::vector<chess::Position>& pool,
                                                      const critic::Backend& backend, double margin,
                                                      parallel::Exec exec) {
  const auto drawn = parallel::map_index<std::optional<TwoCandidateTask>>(exec, count, [&](std::size_t i) {
    std::mt19937_64 rng(mix_seed(seed, i));
    const auto pos = draw_start(rng, pool);
    auto t = gen_two_candidate_task(rng, pos, backend, margin);
    if (t) t->task_id = task_id("tc", i);
    return t;
  });
  std::vector<TwoCandidateTask> out;
  for (const auto& t : drawn)
    if (t) out.push_back(*t);
  return out;
}

std::string answer_span(const std::string& raw_output) {
  const auto open = raw_output.rfind("<answer>");
  if (open != std::string::npos) {
    const auto begin = open + 8;
    const auto close = raw_output.find("</answer>", begin);
    if (close != std::string::npos) return trim(raw_output.substr(begin, close - begin));
  }
  return trim(raw_output);
}

std::string normalize_fen_text(const std::string& text) {
  std::string out;
  bool pending_space = false;
  for (const char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out += c;
    }
  }
  return out;
}

bool grade_board_state(const BoardStateTask& task, const std::string& raw_output) {
  return normalize_fen_text(answer_span(raw_output)) == normalize_fen_text(task.expected_fen);
}

bool grade_two_candidate(const TwoCandidateTask& task, const std::string& raw_output) {
  std::string text = answer_span(raw_output);
  char chosen = 0;
  if (text.size() == 1 && (text[0] == 'a' || text[0] == 'A' || text[0] == 'b' || text[0] == 'B')) {
    chosen = static_cast<char>(std::tolower(static_cast<unsigned char>(text[0])));
  } else {
    const auto pos = chess::parse_fen(task.fen);
    const auto mv = try_san(pos, text);
    if (!mv) return false;
    if (*mv == chess::parse_san(pos, task.move_a)) chosen = 'a';
    if (*mv == chess::parse_san(pos, task.move_b)) chosen = 'b';
  }
  return chosen == task.better;
}

nlohmann::ordered_json to_record(const BoardStateTask& task) {
  nlohmann::ordered_json j;
  j["kind"] = "board-state";
  j["task_id"] = task.task_id;
  j["start_fen"] = task.start_fen;
  j["san_moves"] = task.san_moves;
  j["expected_fen"] = task.expected_fen;
  j["answer"] = task.expected_fen;
  j["prompt"] = task.prompt;
  return j;
}

nlohmann::ordered_json to_record(const TwoCandidateTask& task) {
  nlohmann::ordered_json j;
  j["kind"] = "two-candidate";
  j["task_id"] = task.task_id;
  j["fen"] = task.fen;
  j["move_a"] = task.move_a;
  j["move_b"] = task.move_b;
  j["better"] = std::string(1, task.better);
  j["value_a"] = task.value_a;
  j["value_b"] = task.value_b;
  j["answer"] = task.answer();
  j["prompt"] = task.prompt;
  return j;
}

TaskSet TaskSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  TaskSet set;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "board-state") {
        BoardStateTask t;
        t.task_id = j.at("task_id").get<std::string>();
        t.start_fen = j.at("start_fen").get<std::string>();
        t.san_moves = j.at("san_moves").get<std::vector<std::string>>();
        t.expected_fen = j.at("expected_fen").get<std::string>();
        t.prompt = j.value("prompt", std::string());
        set.board_state.push_back(std::move(t));
      } else if (kind == "two-candidate") {
        TwoCandidateTask t;
        t.task_id = j.at("task_id").get<std::string>();
        t.fen = j.at("fen").get<std::string>();
        t.move_a = j.at("move_a").get<std::string>();
        t.move_b = j.at("move_b").get<std::string>();
        const auto better = j.at("better").get<std::string>();
        if (better != "a" && better != "b") throw ValidationError("better must be \"a\" or \"b\"");
        t.better = better[0];
        t.value_a = j.value("value_a", 0.0);
        t.value_b = j.value("value_b", 0.0);
        t.prompt = j.value("prompt", std::string());
        set.two_candidate.push_back(std::move(t));
      } else {
        throw ValidationError("unknown task kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return set;
}

void TaskSet::write(std::ostream& out) const {
  for (const auto& t : board_state) out << to_record(t).dump() << '\n';
  for (const auto& t : two_candidate) out << to_record(t).dump() << '\n';
}

nlohmann::ordered_json DiagReport::to_json() const {
  nlohmann::ordered_json j;
  j["board_state"] = {{"items", board_state.items},
                      {"correct", board_state.correct},
                      {"accuracy", board_state.accuracy()}};
  j["two_candidate"] = {{"items", two_candidate.items},
                        {"correct", two_candidate.correct},
                        {"accuracy", two_candidate.accuracy()}};
  return j;
}

std::string DiagReport::format_table() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "task            items  correct  accuracy\n"
                "board-state  %8zu %8zu  %.4f\n"
                "two-candidate%8zu %8zu  %.4f\n",
                board_state.items, board_state.correct, board_state.accuracy(), two_candidate.items,
                two_candidate.correct, two_candidate.accuracy());
  return buf;
}

std::vector<Transcript> read_transcripts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Transcript> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("task_id").get<std::string>(), j.at("raw_output").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

DiagReport grade_transcripts(const TaskSet& keys, const std::vector<Transcript>& transcripts) {
  std::map<std::string, const BoardStateTask*> bs;
  std::map<std::string, const TwoCandidateTask*> tc;
  for (const auto& t : keys.board_state) bs[t.task_id] = &t;
  for (const auto& t : keys.two_candidate) tc[t.task_id] = &t;
  DiagReport r;
  for (const auto& tr : transcripts) {
    if (const auto it = bs.find(tr.task_id); it != bs.end()) {
      ++r.board_state.items;
      r.board_state.correct += grade_board_state(*it->second, tr.raw_output) ? 1 : 0;
    } else if (const auto jt = tc.find(tr.task_id); jt != tc.end()) {
      ++r.two_candidate.items;
      r.two_candidate.correct += grade_two_candidate(*jt->second, tr.raw_output) ? 1 : 0;
    } else {
      throw UnknownTaskId("no answer key for task '" + tr.task_id + "'");
    }
  }
  return r;
}

DiagReport grade_transcripts(const std::filesystem::path& transcripts, const std::filesystem::path& keys) {
  return grade_transcripts(TaskSet::load(keys), read_transcripts(transcripts));
}

}  // namespace chessrl::eval
