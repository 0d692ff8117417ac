// Serial reference vs OpenMP kernels. Each benchmark takes the execution
// mode as its argument: 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <memory>

#include "chessrl/chess/movegen.hpp"
#include "chessrl/chess/notation.hpp"
#include "chessrl/critic/heuristic.hpp"
#include "chessrl/eval/eval.hpp"
#include "chessrl/grpo/fixture.hpp"
#include "chessrl/grpo/trainer.hpp"
#include "chessrl/parallel/kernels.hpp"
#include "chessrl/prompt/output_parser.hpp"
#include "chessrl/service/service.hpp"

namespace {

using namespace chessrl;

constexpr const char* kKiwipete = "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1";

parallel::Exec mode(const benchmark::State& state) {
  return state.range(0) == 0 ? parallel::Exec::Serial : parallel::Exec::Parallel;
}

const grpo::LinearOracleFixture& fixture() {
  static const auto fx = grpo::make_linear_oracle_fixture(grpo::FixtureOptions{});
  return fx;
}

void BM_Perft(benchmark::State& state) {
  const auto pos = chess::parse_fen(kKiwipete);
  for (auto _ : state) benchmark::DoNotOptimize(parallel::perft(pos, 4, mode(state)));
}
BENCHMARK(BM_Perft)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ScoreAll(benchmark::State& state) {
  const auto pos = chess::parse_fen(kKiwipete);
  const critic::HeuristicCritic critic(2);
  for (auto _ : state) benchmark::DoNotOptimize(critic.score_all(pos, mode(state)));
}
BENCHMARK(BM_ScoreAll)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// Synthetic one-move puzzles from the fixture positions: the recorded reply
// is the table's best move, so the critic agent has real work per ply.
void BM_EvalPuzzles(benchmark::State& state) {
  const auto& fx = fixture();
  std::vector<puzzle::Puzzle> puzzles;
  for (std::size_t i = 0; i < fx.samples.size(); ++i) {
    const auto& s = fx.samples[i];
    const auto legal = chess::legal_moves(s.state);
    // Any legal first move works as the setup; the solver answer follows it.
    const auto after = chess::apply_move(s.state, legal[0].move);
    const auto replies = chess::legal_moves(after);
    if (replies.empty()) continue;
    puzzle::Puzzle p;
    p.id = "b" + std::to_string(i);
    p.initial_fen = chess::to_fen(s.state);
    p.moves = {legal[0].uci, replies[0].uci};
    p.rating = 1500;
    puzzles.push_back(std::move(p));
  }
  const eval::CriticGreedyAgent agent(std::make_shared<critic::HeuristicCritic>(1));
  eval::EvalConfig cfg;
  cfg.exec = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(eval::eval_puzzles(agent, puzzles, cfg));
}
BENCHMARK(BM_EvalPuzzles)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TrainerStep(benchmark::State& state) {
  const auto& fx = fixture();
  grpo::TrainConfig cfg;
  cfg.exec = mode(state);
  cfg.eval_every = 0;
  cfg.initial_theta = fx.prior;
  grpo::Trainer tr(fx.samples, reward::preset("dense"), std::make_shared<critic::TableCritic>(fx.table), cfg);
  tr.step();  // warms the per-sample caches
  for (auto _ : state) benchmark::DoNotOptimize(tr.step());
}
BENCHMARK(BM_TrainerStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ServiceScoreBatch(benchmark::State& state) {
  service::ServiceConfig cfg;
  cfg.backends["heuristic"].depth = 1;
  cfg.exec = mode(state);
  const service::RewardService svc(cfg);
  service::ScoreRequest req;
  const auto& fx = fixture();
  for (std::size_t i = 0; i < 512; ++i) {
    const auto& s = fx.samples[i % fx.samples.size()];
    const auto legal = chess::legal_moves(s.state);
    req.items.push_back({chess::to_fen(s.state), std::nullopt,
                         prompt::format_answer("Checking the candidates.", legal[i % legal.size()].san), "default"});
  }
  for (auto _ : state) benchmark::DoNotOptimize(svc.score_batch(req));
}
BENCHMARK(BM_ServiceScoreBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
