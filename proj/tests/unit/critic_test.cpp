#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "chessrl/chess/notation.hpp"
#include "chessrl/critic/heuristic.hpp"
#include "chessrl/critic/oracle.hpp"
#include "chessrl/critic/registry.hpp"
#include "chessrl/critic/uci_engine.hpp"
#include "chessrl/errors.hpp"
#include "support/fixtures.hpp"

namespace chessrl::critic {
namespace {

using chess::parse_fen;

// Plain minimax without pruning; the reference for negamax.
int brute_force(const chess::Position& pos, int depth, int ply) {
  const auto moves = chess::generate_legal(pos);
  if (moves.empty()) return pos.in_check() ? -(kMateScore - (ply / 2 + 1)) : 0;
  if (depth == 0) return static_eval(pos);
  int best = -1'000'000;
  for (const auto& mv : moves) best = std::max(best, -brute_force(pos.play_unchecked(mv), depth - 1, ply + 1));
  return best;
}

std::vector<chess::Position> playout_positions(int count, unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<chess::Position> out;
  while (static_cast<int>(out.size()) < count) {
    chess::Position pos;
    const int plies = 6 + static_cast<int>(rng() % 30);
    for (int i = 0; i < plies; ++i) {
      const auto moves = chess::generate_legal(pos);
      if (moves.empty()) break;
      pos = pos.play_unchecked(moves[rng() % moves.size()]);
    }
    if (!chess::generate_legal(pos).empty()) out.push_back(pos);
  }
  return out;
}

TEST(WinProbability, LogisticShape) {
  EXPECT_DOUBLE_EQ(win_probability(0), 0.5);
  EXPECT_NEAR(win_probability(400), 10.0 / 11.0, 1e-15);
  for (double cp : {1.0, 37.0, 250.0, 1200.0, 9999.0}) EXPECT_NEAR(win_probability(cp) + win_probability(-cp), 1.0, 1e-12);
  EXPECT_GT(win_probability(mate_cp(1)), 0.99);
}

TEST(HeuristicCritic, StaticEvalOfStartIsZero) {
  EXPECT_EQ(static_eval(chess::Position::start()), 0);
  const auto after = parse_fen("rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq - 0 1");
  // Black to move, white has more pseudo-legal moves after e4.
  EXPECT_LT(static_eval(after), 0);
}

TEST(HeuristicCritic, MateInOneDominates) {
  const auto pos = parse_fen(testing::kD2Fen);
  const auto mate = chess::parse_san(pos, "Qg7#");
  for (int d = 0; d <= 3; ++d) {
    HeuristicCritic c(d);
    EXPECT_EQ(c.score_cp(pos, mate), mate_cp(1)) << d;
    EXPECT_GT(c.score(pos, mate).value, 0.99) << d;
  }
}

TEST(HeuristicCritic, MateDistanceIsCountedInMoves) {
  // Back rank: Rd8# directly, or Rxd8+ Re8 Rxe8# when black can block.
  const auto pos = parse_fen("6k1/5ppp/8/8/8/8/3R1PPP/3R2K1 w - - 0 1");
  const auto pos2 = parse_fen("3r2k1/4rppp/8/8/8/8/3R1PPP/3R2K1 w - - 0 1");
  HeuristicCritic c(2);
  EXPECT_EQ(c.score_cp(pos, chess::parse_san(pos, "Rd8#")), mate_cp(1));
  EXPECT_EQ(c.score_cp(pos2, chess::parse_san(pos2, "Rxd8+")), mate_cp(2));
}

TEST(HeuristicCritic, HangingQueenScoresBelowBest) {
  const auto pos = parse_fen("4k3/8/2n5/8/8/8/8/3QK3 w - - 0 1");
  const auto hang = chess::parse_san(pos, "Qd4");
  for (int d = 1; d <= 3; ++d) {
    HeuristicCritic c(d);
    const auto all = c.score_all(pos);
    double best = 0.0;
    for (const auto& [mv, s] : all) best = std::max(best, s.value);
    EXPECT_LT(all.at(hang).value, best) << d;
    EXPECT_LT(all.at(hang).value, 0.5) << d;
  }
}

TEST(HeuristicCritic, AlphaBetaMatchesBruteForce) {
  for (const auto& pos : playout_positions(8, 11)) {
    for (int d = 0; d <= 2; ++d) {
      HeuristicCritic c(d);
      for (const auto& mv : chess::generate_legal(pos))
        ASSERT_EQ(c.score_cp(pos, mv), -brute_force(pos.play_unchecked(mv), d, 0))
            << chess::to_fen(pos) << " " << chess::uci_of(mv) << " d" << d;
    }
  }
}

TEST(HeuristicCritic, ColourSymmetry) {
  for (const auto& pos : playout_positions(20, 5)) {
    const auto flip = testing::mirrored(pos);
    EXPECT_EQ(static_eval(pos), static_eval(flip));
    HeuristicCritic c(1);
    for (const auto& mv : chess::generate_legal(pos))
      EXPECT_EQ(c.score_cp(pos, mv), c.score_cp(flip, testing::mirrored(mv)));
  }
}

TEST(HeuristicCritic, PerspectivesSumToOne) {
  // Same quiet position evaluated for each side to move.
  const auto w = parse_fen("r1bqkbnr/pppp1ppp/2n5/4p3/4P3/5N2/PPPP1PPP/RNBQKB1R w KQkq - 2 3");
  const auto b = parse_fen("r1bqkbnr/pppp1ppp/2n5/4p3/4P3/5N2/PPPP1PPP/RNBQKB1R b KQkq - 2 3");
  EXPECT_NEAR(win_probability(static_eval(w)) + win_probability(static_eval(b)), 1.0, 1e-9);
}

TEST(HeuristicCritic, ScoreAllCoversLegalMoves) {
  HeuristicCritic c(1);
  for (const auto& pos : playout_positions(10, 3)) {
    const auto serial = c.score_all(pos, parallel::Exec::Serial);
    const auto par = c.score_all(pos, parallel::Exec::Parallel);
    const auto legal = chess::legal_moves(pos);
    ASSERT_EQ(serial.size(), legal.size());
    for (const auto& nm : legal) {
      ASSERT_TRUE(serial.count(nm.move));
      EXPECT_GE(serial.at(nm.move).value, 0.0);
      EXPECT_LE(serial.at(nm.move).value, 1.0);
      EXPECT_EQ(serial.at(nm.move).value, par.at(nm.move).value);
    }
  }
}

TEST(HeuristicCritic, RejectsIllegalMove) {
  HeuristicCritic c(1);
  const auto pos = chess::Position::start();
  EXPECT_THROW(c.score(pos, chess::Move{chess::make_square(4, 1), chess::make_square(4, 4)}), IllegalMove);
}

TEST(OracleCritic, BinaryValues) {
  const auto pos = parse_fen(testing::kD2Fen);
  // Answer spelled without the mate suffix still names the same move.
  OracleCritic c(std::map<std::string, std::string>{{testing::kD2Fen, "Qg7"}});
  const auto all = c.score_all(pos);
  int ones = 0;
  for (const auto& [mv, s] : all) {
    EXPECT_TRUE(s.value == 0.0 || s.value == 1.0);
    ones += s.value == 1.0;
  }
  EXPECT_EQ(ones, 1);
  EXPECT_EQ(all.at(chess::parse_san(pos, "Qg7#")).value, 1.0);
  EXPECT_THROW(c.score(parse_fen(testing::kD4Fen), chess::parse_san(parse_fen(testing::kD4Fen), "Qxd5")),
               UnknownPosition);
  EXPECT_THROW(OracleCritic(std::map<std::string, std::string>{{testing::kD2Fen, "Qa1"}}), UnknownSan);
}

TEST(TableCritic, RoundTripAndLookups) {
  const auto pos = parse_fen(testing::kD4Fen);
  TableCritic::Table table;
  double v = 0.0;
  for (const auto& nm : chess::legal_moves(pos)) {
    table[testing::kD4Fen][nm.uci] = v;
    v += 0.03;
  }
  testing::TempDir dir;
  {
    std::ofstream out(dir / "t.jsonl");
    TableCritic::write(table, out);
  }
  const auto c = TableCritic::load(dir / "t.jsonl");
  EXPECT_EQ(c.size(), 1u);
  EXPECT_DOUBLE_EQ(c.score(pos, chess::parse_uci_move(pos, "e5d5")).value, table[testing::kD4Fen]["e5d5"]);

  table[testing::kD4Fen].erase("e5d5");
  TableCritic partial(table);
  EXPECT_THROW(partial.score(pos, chess::parse_uci_move(pos, "e5d5")), UnknownPosition);
  table[testing::kD4Fen]["g2g4"] = 1.5;
  EXPECT_THROW(TableCritic{table}, ValidationError);
}

TEST(UciProtocol, ParseInfoScore) {
  EngineEval e;
  EXPECT_TRUE(parse_info_score("info depth 12 seldepth 20 score cp -35 nodes 100 pv e2e4", e));
  EXPECT_FALSE(e.is_mate);
  EXPECT_EQ(e.value, -35);
  EXPECT_TRUE(parse_info_score("info depth 3 score mate -2 pv a1a2", e));
  EXPECT_TRUE(e.is_mate);
  EXPECT_EQ(e.value, -2);
  EXPECT_FALSE(parse_info_score("info depth 3 score cp 50 lowerbound", e));
  EXPECT_FALSE(parse_info_score("info depth 3 multipv 2 score cp 50", e));
  EXPECT_FALSE(parse_info_score("info string score cp 50", e));
  EXPECT_FALSE(parse_info_score("info depth 3 nodes 10", e));
  EXPECT_FALSE(parse_info_score("bestmove e2e4", e));
  EXPECT_FALSE(parse_info_score("info score cp x1", e));
}

TEST(UciProtocol, MoverPerspective) {
  EXPECT_EQ(mover_cp({false, 120}), -120);
  EXPECT_EQ(mover_cp({true, 3}), -mate_cp(3));
  EXPECT_EQ(mover_cp({true, -2}), mate_cp(2));
}

UciOptions fake_engine(const std::string& mode = "normal", int depth = 1) {
  UciOptions o;
  o.command = {CHESSRL_FAKE_ENGINE, "--depth", std::to_string(depth), "--mode", mode};
  o.movetime_ms = 10;
  o.grace_ms = 300;
  o.handshake_ms = 1000;
  return o;
}

TEST(UciEngineCritic, MissingBinary) {
  UciOptions o;
  o.command = {"/nonexistent/engine-binary"};
  EXPECT_THROW(UciEngineCritic{o}, EngineSpawnError);
}

TEST(UciEngineCritic, AgreesWithHeuristicSearch) {
  UciEngineCritic engine(fake_engine("normal", 1));
  HeuristicCritic reference(1);
  for (const auto& pos : playout_positions(5, 17))
    for (const auto& mv : chess::generate_legal(pos))
      EXPECT_DOUBLE_EQ(engine.score(pos, mv).value, reference.score(pos, mv).value);
}

TEST(UciEngineCritic, RepeatQueriesAgreeAndMateIsHigh) {
  UciEngineCritic engine(fake_engine());
  const auto pos = parse_fen(testing::kD4Fen);
  const auto mv = chess::parse_san(pos, "Qxd5");
  EXPECT_EQ(engine.score(pos, mv).value, engine.score(pos, mv).value);
  const auto d2 = parse_fen(testing::kD2Fen);
  EXPECT_GT(engine.score(d2, chess::parse_san(d2, "Qg7#")).value, 0.99);
  // Mate in two comes back from the engine as "mate -1" for the defender.
  UciEngineCritic deeper(fake_engine("normal", 2));
  const auto pos2 = parse_fen("3r2k1/4rppp/8/8/8/8/3R1PPP/3R2K1 w - - 0 1");
  EXPECT_DOUBLE_EQ(deeper.score(pos2, chess::parse_san(pos2, "Rxd8+")).value, win_probability(mate_cp(2)));
}

TEST(UciEngineCritic, TimeoutThenRestart) {
  UciEngineCritic engine(fake_engine("hang"));
  const auto pos = chess::Position::start();
  const auto mv = chess::parse_san(pos, "e4");
  EXPECT_THROW(engine.score(pos, mv), EngineTimeout);
  EXPECT_THROW(engine.score(pos, mv), EngineTimeout);
  EXPECT_EQ(engine.restarts(), 1);
}

TEST(UciEngineCritic, ProtocolFailures) {
  const auto pos = chess::Position::start();
  const auto mv = chess::parse_san(pos, "e4");
  UciEngineCritic no_score(fake_engine("no-score"));
  EXPECT_THROW(no_score.score(pos, mv), ProtocolError);
  UciEngineCritic dies(fake_engine("exit-on-go"));
  EXPECT_THROW(dies.score(pos, mv), ProtocolError);
  EXPECT_THROW(UciEngineCritic{fake_engine("silent")}, EngineTimeout);
}

TEST(UciEnginePool, ParallelScoresMatchSerial) {
  UciEnginePool pool(fake_engine(), 3);
  EXPECT_EQ(pool.size(), 3);
  const auto pos = parse_fen(testing::kD5Fen);
  const auto serial = pool.score_all(pos, parallel::Exec::Serial);
  const auto par = pool.score_all(pos, parallel::Exec::Parallel);
  ASSERT_EQ(serial.size(), chess::generate_legal(pos).size());
  for (const auto& [mv, s] : serial) EXPECT_EQ(s.value, par.at(mv).value);
}

TEST(Registry, BuildsAndRejects) {
  EXPECT_EQ(make_backend({})->id(), "heuristic-d2");
  BackendConfig bad;
  bad.kind = "nope";
  EXPECT_THROW(make_backend(bad), ConfigError);
  bad.kind = "uci";
  EXPECT_THROW(make_backend(bad), ConfigError);
  bad.kind = "oracle";
  EXPECT_THROW(make_backend(bad), ConfigError);
  BackendConfig uci;
  uci.kind = "uci";
  uci.engine_cmd = std::string(CHESSRL_FAKE_ENGINE) + " --depth 0";
  uci.movetime_ms = 5;
  EXPECT_EQ(make_backend(uci)->id(), "uci");
}

}  // namespace
}  // namespace chessrl::critic
