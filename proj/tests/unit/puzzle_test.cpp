#include <gtest/gtest.h>

#include <fstream>
#include <numeric>
#include <sstream>

#include "chessrl/chess/notation.hpp"
#include "chessrl/errors.hpp"
#include "chessrl/puzzle/dataset.hpp"
#include "support/fixtures.hpp"

namespace chessrl::puzzle {
namespace {

using testing::data_path;

const Puzzle& find_with_line_length(const std::vector<Puzzle>& puzzles, std::size_t t) {
  for (const auto& p : puzzles)
    if (p.line_length() == t) return p;
  throw std::runtime_error("fixture lacks a puzzle with the requested line length");
}

TEST(Ingest, HappyPath) {
  const auto result = ingest_csv(data_path("puzzles_10.csv"));
  EXPECT_EQ(result.rows, 10u);
  EXPECT_EQ(result.puzzles.size(), 10u);
  EXPECT_TRUE(result.errors.empty());
  EXPECT_EQ(result.puzzles[0].id, "fx0000");
  EXPECT_GE(result.puzzles[0].moves.size(), 2u);
}

TEST(Ingest, CorruptedMoveIsReportedAndSkipped) {
  const auto result = ingest_csv(data_path("puzzles_faulty.csv"));
  EXPECT_EQ(result.rows, 6u);
  EXPECT_EQ(result.puzzles.size(), 5u);
  ASSERT_EQ(result.errors.size(), 1u);
  EXPECT_EQ(result.errors[0].row, 3u);
  EXPECT_EQ(result.errors[0].category, "ValidationError");
  EXPECT_NE(result.errors[0].message.find("a1a1"), std::string::npos);
}

TEST(Ingest, RatingFilterIsInclusiveAndNotAnError) {
  IngestOptions opts;
  opts.rating_filter = RatingFilter{};
  const auto result = ingest_csv(data_path("puzzles_faulty.csv"), opts);
  EXPECT_EQ(result.filtered_out, 1u);
  EXPECT_EQ(result.puzzles.size(), 4u);
  EXPECT_EQ(result.errors.size(), 1u);

  EXPECT_TRUE(RatingFilter{}.contains(200));
  EXPECT_TRUE(RatingFilter{}.contains(2800));
  EXPECT_FALSE(RatingFilter{}.contains(199));
  EXPECT_FALSE(RatingFilter{}.contains(2801));
}

TEST(Ingest, FullFixtureCountIsRowsMinusInvalid) {
  IngestOptions opts;
  opts.rating_filter = RatingFilter{200, 2800};
  const auto result = ingest_csv(data_path("puzzles_100.csv"), opts);
  EXPECT_EQ(result.puzzles.size(), result.rows - result.errors.size() - result.filtered_out);
  EXPECT_EQ(result.puzzles.size(), 100u);
}

TEST(Ingest, HeaderMismatchIsSchemaError) {
  std::istringstream in("id,fen,moves\nx,y,z\n");
  EXPECT_THROW(ingest_csv(in), CsvSchemaError);
  std::istringstream empty("");
  EXPECT_THROW(PuzzleCsvReader{empty}, CsvSchemaError);
}

TEST(Ingest, StreamingReaderAgreesWithBatchIngest) {
  std::ifstream in(data_path("puzzles_faulty.csv"));
  PuzzleCsvReader reader(in);
  std::vector<std::string> ids;
  while (auto p = reader.next()) ids.push_back(p->id);
  const auto batch = ingest_csv(data_path("puzzles_faulty.csv"));
  ASSERT_EQ(ids.size(), batch.puzzles.size());
  for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(ids[i], batch.puzzles[i].id);
  ASSERT_EQ(reader.errors().size(), 1u);
  EXPECT_EQ(reader.errors()[0].row, 3u);
}

TEST(Ingest, SerialAndParallelKernelsAgree) {
  IngestOptions serial;
  serial.exec = parallel::Exec::Serial;
  const auto a = ingest_csv(data_path("puzzles_100.csv"), serial);
  const auto b = ingest_csv(data_path("puzzles_100.csv"));
  ASSERT_EQ(a.puzzles.size(), b.puzzles.size());
  for (std::size_t i = 0; i < a.puzzles.size(); ++i) EXPECT_EQ(a.puzzles[i].id, b.puzzles[i].id);
}

TEST(Ingest, CsvQuotingAndRoundTrip) {
  EXPECT_EQ(split_csv_record("a,\"b,c\",\"d\"\"e\",").size(), 4u);
  EXPECT_EQ(split_csv_record("a,\"b,c\",\"d\"\"e\",")[2], "d\"e");
  const auto original = ingest_csv(data_path("puzzles_10.csv")).puzzles;
  std::stringstream buf;
  write_csv(buf, original);
  const auto again = ingest_csv(buf).puzzles;
  ASSERT_EQ(again.size(), original.size());
  EXPECT_EQ(again[3].moves, original[3].moves);
  EXPECT_EQ(again[3].themes, original[3].themes);
}

TEST(Decompose, AllMovesYieldsOneSamplePerLineMove) {
  const auto puzzles = ingest_csv(data_path("puzzles_100.csv")).puzzles;
  const Puzzle& p = find_with_line_length(puzzles, 3);
  const auto samples = decompose(p, DecomposeMode::AllMoves);
  ASSERT_EQ(samples.size(), 3u);
  EXPECT_TRUE(samples[0].is_solver_move);
  EXPECT_FALSE(samples[1].is_solver_move);
  EXPECT_TRUE(samples[2].is_solver_move);
  for (const auto& s : samples) EXPECT_EQ(s.solver_side, samples[0].state.side_to_move());
}

TEST(Decompose, SolverOnlyKeepsEvenPlies) {
  const auto puzzles = ingest_csv(data_path("puzzles_100.csv")).puzzles;
  const auto samples = decompose(find_with_line_length(puzzles, 3), DecomposeMode::SolverOnly);
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_EQ(samples[0].ply_index, 0u);
  EXPECT_EQ(samples[1].ply_index, 2u);
}

TEST(Decompose, SetupMoveIsAppliedNotEmitted) {
  const auto puzzles = ingest_csv(data_path("puzzles_10.csv")).puzzles;
  for (const auto& p : puzzles) {
    const auto samples = decompose(p, DecomposeMode::AllMoves);
    chess::Position pos = chess::parse_fen(p.initial_fen);
    pos = chess::apply_move(pos, chess::parse_uci_move(pos, p.moves[0]));
    ASSERT_FALSE(samples.empty());
    EXPECT_EQ(samples[0].state, pos);
    EXPECT_EQ(chess::uci_of(samples[0].optimal_move), p.moves[1]);
  }
}

TEST(Decompose, ChainingLosslessnessAndCounts) {
  const auto puzzles = ingest_csv(data_path("puzzles_100.csv")).puzzles;
  for (const auto& p : puzzles) {
    const auto all = decompose(p, DecomposeMode::AllMoves);
    const auto solver = decompose(p, DecomposeMode::SolverOnly);
    ASSERT_EQ(all.size(), p.line_length());
    const auto opponent = std::count_if(all.begin(), all.end(), [](const auto& s) { return !s.is_solver_move; });
    EXPECT_EQ(all.size(), solver.size() + static_cast<std::size_t>(opponent));
    for (std::size_t t = 0; t + 1 < all.size(); ++t)
      EXPECT_EQ(chess::apply_move(all[t].state, all[t].optimal_move), all[t + 1].state);

    chess::Position final_pos = chess::parse_fen(p.initial_fen);
    for (const auto& u : p.moves) final_pos = chess::apply_move(final_pos, chess::parse_uci_move(final_pos, u));
    EXPECT_EQ(chess::apply_move(all.back().state, all.back().optimal_move), final_pos);
  }
}

TEST(Dataset, SizeIsSumOfLineLengthsAndManifestConserves) {
  const auto puzzles = ingest_csv(data_path("puzzles_10.csv")).puzzles;
  const std::size_t expected = std::accumulate(puzzles.begin(), puzzles.end(), std::size_t{0},
                                               [](std::size_t acc, const Puzzle& p) { return acc + p.line_length(); });
  DatasetManifest manifest;
  const auto samples = assemble_dataset(puzzles, BuildOptions{}, &manifest);
  EXPECT_EQ(samples.size(), expected);
  EXPECT_EQ(manifest.samples, expected);
  std::size_t bucket_samples = 0;
  std::size_t bucket_puzzles = 0;
  for (const auto& b : manifest.buckets) {
    bucket_samples += b.samples;
    bucket_puzzles += b.puzzles;
    EXPECT_EQ(b.high - b.low, 200);
  }
  EXPECT_EQ(bucket_samples, expected);
  EXPECT_EQ(bucket_puzzles, puzzles.size());
}

TEST(Dataset, SameSeedGivesIdenticalBytes) {
  testing::TempDir dir;
  const auto puzzles = ingest_csv(data_path("puzzles_100.csv")).puzzles;
  BuildOptions opts;
  opts.seed = 11;
  build_dataset(puzzles, opts, dir / "a.jsonl", dir / "a.manifest.json");
  build_dataset(puzzles, opts, dir / "b.jsonl", dir / "b.manifest.json");
  EXPECT_EQ(testing::read_text(dir / "a.jsonl"), testing::read_text(dir / "b.jsonl"));
  EXPECT_EQ(testing::read_text(dir / "a.manifest.json"), testing::read_text(dir / "b.manifest.json"));
  opts.seed = 12;
  build_dataset(puzzles, opts, dir / "c.jsonl", dir / "c.manifest.json");
  EXPECT_NE(testing::read_text(dir / "a.jsonl"), testing::read_text(dir / "c.jsonl"));
}

TEST(Dataset, RecordsRoundTripAndRevalidate) {
  testing::TempDir dir;
  const auto puzzles = ingest_csv(data_path("puzzles_10.csv")).puzzles;
  BuildOptions opts;
  opts.include_legal_san = true;
  build_dataset(puzzles, opts, dir / "s.jsonl", dir / "m.json");
  const auto samples = read_samples(dir / "s.jsonl");
  const auto expected = assemble_dataset(puzzles, opts);
  ASSERT_EQ(samples.size(), expected.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_EQ(samples[i].state, expected[i].state);
    EXPECT_EQ(samples[i].optimal_move, expected[i].optimal_move);
    EXPECT_EQ(samples[i].history, expected[i].history);
  }
  const auto first = testing::read_jsonl(dir / "s.jsonl").front();
  EXPECT_TRUE(first.contains("legal_san"));
  EXPECT_EQ(first["optimal_san"], chess::canonical_san(samples[0].state, samples[0].optimal_move));
}

TEST(Dataset, ReadRejectsIllegalOptimalMove) {
  testing::TempDir dir;
  std::ofstream(dir / "bad.jsonl") << R"({"puzzle_id":"x","ply_index":0,"fen":"rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1","optimal_san":"e5","optimal_uci":"e2e5","solver_side":"w","is_solver_move":true,"rating":1000})"
                                   << "\n";
  EXPECT_THROW(read_samples(dir / "bad.jsonl"), ValidationError);
  EXPECT_THROW(read_samples(dir / "missing.jsonl"), IoError);
}

}  // namespace
}  // namespace chessrl::puzzle
