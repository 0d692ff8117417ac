#include "commands.hpp"

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "chessrl/chess/movegen.hpp"
#include "chessrl/chess/notation.hpp"
#include "chessrl/critic/oracle.hpp"
#include "chessrl/critic/registry.hpp"
#include "chessrl/errors.hpp"
#include "chessrl/eval/diag.hpp"
#include "chessrl/eval/eval.hpp"
#include "chessrl/grpo/features.hpp"
#include "chessrl/grpo/fixture.hpp"
#include "chessrl/grpo/trainer.hpp"
#include "chessrl/parallel/kernels.hpp"
#include "chessrl/prompt/prompt.hpp"
#include "chessrl/puzzle/dataset.hpp"
#include "chessrl/puzzle/puzzle.hpp"
#include "chessrl/rng.hpp"
#include "chessrl/service/service.hpp"

namespace chessrl::cli {
namespace {

/// "-" is the command's record stream; anything else is a file.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
    } else {
      file_.open(path);
      if (!file_) throw IoError("cannot write " + path);
      stream_ = &file_;
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<nlohmann::json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<puzzle::Puzzle> read_puzzles(const std::string& path, parallel::Exec exec, std::size_t* rejected) {
  puzzle::IngestOptions opts;
  opts.exec = exec;
  auto result = puzzle::ingest_csv(std::filesystem::path(path), opts);
  if (rejected != nullptr) *rejected = result.errors.size();
  return std::move(result.puzzles);
}

grpo::Theta read_theta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    const auto j = nlohmann::json::parse(in);
    auto theta = (j.is_object() ? j.at("theta") : j).get<grpo::Theta>();
    if (theta.size() != grpo::kFeatureDim)
      throw ValidationError(path + ": theta must have " + std::to_string(grpo::kFeatureDim) + " entries");
    return theta;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_theta(const std::string& path, const grpo::Theta& theta) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  nlohmann::ordered_json j;
  j["features"] = grpo::feature_names();
  j["theta"] = theta;
  out << j.dump(2) << '\n';
}

std::vector<chess::Position> pool_positions(const std::string& csv, parallel::Exec exec) {
  std::vector<chess::Position> pool;
  if (csv.empty()) return pool;
  for (const auto& p : read_puzzles(csv, exec, nullptr)) pool.push_back(chess::parse_fen(p.initial_fen));
  return pool;
}

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw UsageError(flag + " is required");
}

int level_rank(const std::string& level) {
  if (level == "error") return 0;
  if (level == "warn") return 1;
  if (level == "info") return 2;
  return 3;
}

}  // namespace

void Commands::log(const std::string& level, const std::string& message) const {
  if (level_rank(level) <= level_rank(g_.log_level)) err_ << "chessrl: " << level << ": " << message << '\n';
}

std::shared_ptr<const critic::Backend> Commands::backend(
    const BackendFlags& f, const std::vector<puzzle::PositionSample>* oracle_samples) const {
  if (f.kind == "none") return nullptr;
  if (f.kind == "oracle") {
    if (oracle_samples == nullptr) throw UsageError("the oracle backend is not available here");
    return std::make_shared<critic::OracleCritic>(critic::OracleCritic::from_samples(*oracle_samples));
  }
  critic::BackendConfig cfg;
  cfg.kind = f.kind;
  cfg.depth = f.depth;
  cfg.engine_cmd = f.engine;
  cfg.movetime_ms = f.movetime_ms;
  cfg.pool_size = f.pool_size;
  cfg.table_path = f.table;
  return critic::make_backend(cfg);
}

void Commands::add_backend_options(CLI::App* cmd, BackendFlags& f, const std::string& default_kind,
                                   const std::vector<std::string>& kinds) {
  f.kind = default_kind;
  cmd->add_option("--backend", f.kind, "Critic backend")->check(CLI::IsMember(kinds));
  cmd->add_option("--depth", f.depth, "Search depth of the heuristic critic")->check(CLI::Range(0, 8));
  cmd->add_option("--engine", f.engine, "UCI engine command line (uci backend)");
  cmd->add_option("--movetime", f.movetime_ms, "Engine time per query in ms")->check(CLI::PositiveNumber);
  cmd->add_option("--pool-size", f.pool_size, "Engine processes (uci backend)")->check(CLI::PositiveNumber);
  cmd->add_option("--table", f.table, "Value table JSONL (table backend)");
}

void Commands::register_all(CLI::App& app) {
  auto* ingest = app.add_subcommand("ingest", "Validate a puzzle CSV and write the accepted rows");
  ingest->add_option("--in", ingest_.in, "Puzzle CSV");
  ingest->add_option("--out", ingest_.out, "Accepted puzzles as CSV ('-' for stdout)");
  ingest->add_option("--errors", ingest_.errors, "Rejected rows as JSONL");
  ingest->add_flag("--rating-filter", ingest_.rating_filter, "Keep only ratings in [min-rating, max-rating]");
  ingest->add_option("--min-rating", ingest_.min_rating, "Lowest rating kept by --rating-filter");
  ingest->add_option("--max-rating", ingest_.max_rating, "Highest rating kept by --rating-filter");

  auto* decompose = app.add_subcommand("decompose", "Split puzzles into position-move samples");
  decompose->add_option("--in", decompose_.in, "Puzzle CSV");
  decompose->add_option("--out", decompose_.out, "Samples as JSONL ('-' for stdout)");
  decompose->add_option("--mode", decompose_.mode, "Which plies become samples")
      ->check(CLI::IsMember({"all-moves", "solver-only"}));
  decompose->add_flag("--shuffle", decompose_.shuffle, "Seeded shuffle of the samples");
  decompose->add_flag("--include-legal", decompose_.include_legal, "Add the legal SAN list to each record");
  decompose->add_option("--manifest", decompose_.manifest, "Dataset manifest JSON");

  auto* render = app.add_subcommand("render", "Render prompts for samples or a single FEN");
  render->add_option("--in", render_.in, "Samples JSONL");
  render->add_option("--fen", render_.fen, "Single position (or 'start'); prints the bare prompt");
  render->add_option("--out", render_.out, "Output ('-' for stdout)");
  render->add_option("--prompt", render_.prompt, "Prompt config id, e.g. fen-san-legal or fenpgn-uci-nolegal");
  render->add_option("--template", render_.template_path, "Template file with {{placeholders}}");

  auto* score = app.add_subcommand("score", "Score completions with the reward engine");
  score->add_option("--in", score_.in, "JSONL items {fen, optimal_san?, raw_output, prompt_cfg_id?}");
  score->add_option("--out", score_.out, "Scores as JSONL ('-' for stdout)");
  score->add_option("--preset", score_.preset, "Reward preset")
      ->check(CLI::IsMember(reward::preset_names()));
  add_backend_options(score, score_.backend, "heuristic", {"heuristic", "uci", "table", "oracle"});

  auto* train = app.add_subcommand("train", "GRPO training of the linear toy policy");
  train->add_option("--samples", train_.samples, "Training samples JSONL");
  train->add_option("--eval-samples", train_.eval_samples, "Evaluation samples JSONL (default: training set)");
  train->add_option("--preset", train_.preset, "Reward preset")->check(CLI::IsMember(reward::preset_names()));
  add_backend_options(train, train_.backend, "oracle", {"heuristic", "uci", "table", "oracle", "none"});
  train->add_option("--steps", train_.steps, "Total updates");
  train->add_option("--batch", train_.batch, "Positions per update")->check(CLI::PositiveNumber);
  train->add_option("--group", train_.group, "Rollouts per position")->check(CLI::PositiveNumber);
  train->add_option("--temperature", train_.temperature, "Sampling temperature")->check(CLI::PositiveNumber);
  train->add_option("--clip", train_.clip, "PPO clip ratio")->check(CLI::NonNegativeNumber);
  train->add_option("--kl", train_.kl, "KL penalty coefficient")->check(CLI::NonNegativeNumber);
  train->add_option("--entropy", train_.entropy, "Entropy bonus coefficient")->check(CLI::NonNegativeNumber);
  train->add_option("--optimizer", train_.optimizer, "Optimizer")->check(CLI::IsMember({"sgd", "adamw"}));
  train->add_option("--lr", train_.lr, "Learning rate")->check(CLI::PositiveNumber);
  train->add_option("--grad-clip", train_.grad_clip, "Gradient norm clip (0 disables)")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--weight-decay", train_.weight_decay, "AdamW weight decay")->check(CLI::NonNegativeNumber);
  train->add_option("--eval-every", train_.eval_every, "Greedy-accuracy evaluation period (0 = final only)");
  train->add_option("--stop-at", train_.stop_at, "Stop once greedy accuracy reaches this (0 = never)")
      ->check(CLI::Range(0.0, 1.0));
  train->add_option("--prompt", train_.prompt, "Prompt config id; sets the answer notation");
  train->add_option("--initial-theta", train_.initial_theta, "Starting parameters JSON");
  train->add_option("--metrics", train_.metrics, "Metrics JSONL ('-' for stdout)");
  train->add_option("--checkpoint", train_.checkpoint, "Write a checkpoint here at the end");
  train->add_option("--resume", train_.resume, "Resume from a checkpoint");
  train->add_option("--theta-out", train_.theta_out, "Write the final parameters JSON");
  train->add_option("--save-config", train_.save_config, "Write the effective training config JSON");

  auto* eval = app.add_subcommand("eval", "Strict sequential puzzle accuracy of an agent");
  eval->add_option("--puzzles", eval_.puzzles, "Puzzle CSV");
  eval->add_option("--agent", eval_.agent, "Agent")
      ->check(CLI::IsMember({"oracle", "random", "critic", "policy", "transcript"}));
  eval->add_option("--theta", eval_.theta, "Parameters JSON for the policy agent");
  eval->add_option("--transcripts", eval_.transcripts, "JSONL {task_id, ply, raw_output} for the transcript agent");
  add_backend_options(eval, eval_.backend, "heuristic", {"heuristic", "uci", "table"});
  eval->add_option("--prompt", eval_.prompt, "Prompt config id");
  eval->add_option("--bucket-width", eval_.bucket_width, "Rating bucket width")->check(CLI::PositiveNumber);
  eval->add_option("--max-failures", eval_.max_failures, "Failure transcripts kept in the report");
  eval->add_option("--out", eval_.out, "Report JSON ('-' for stdout)");

  auto* diag = app.add_subcommand("diag", "Diagnostic task generation and grading");
  diag->require_subcommand(1);
  auto* bs = diag->add_subcommand("board-state", "Generate board-state tasks (predict the FEN after k moves)");
  bs->add_option("--count", board_state_.count, "Tasks");
  bs->add_option("--k", board_state_.k, "Moves per task (0 = uniform in 1..5)")->check(CLI::Range(0, 5));
  bs->add_option("--pool", board_state_.pool, "Puzzle CSV of start positions (default: random midgames)");
  bs->add_option("--out", board_state_.out, "Task JSONL ('-' for stdout)");
  auto* tc = diag->add_subcommand("two-candidate", "Generate two-candidate move-selection tasks");
  tc->add_option("--count", two_candidate_.count, "Draws (skipped draws emit nothing)");
  tc->add_option("--margin", two_candidate_.margin, "Minimum critic value gap")->check(CLI::Range(0.0, 1.0));
  tc->add_option("--pool", two_candidate_.pool, "Puzzle CSV of positions (default: random midgames)");
  tc->add_option("--out", two_candidate_.out, "Task JSONL ('-' for stdout)");
  add_backend_options(tc, two_candidate_.backend, "heuristic", {"heuristic", "uci", "table"});
  auto* grade = diag->add_subcommand("grade", "Grade transcripts against task answer keys");
  grade->add_option("--keys", grade_.keys, "Task JSONL written by board-state / two-candidate");
  grade->add_option("--transcripts", grade_.transcripts, "JSONL {task_id, raw_output}");
  grade->add_option("--out", grade_.out, "Report JSON ('-' for stdout)");
  auto* fixture = diag->add_subcommand("fixture", "Write the linear-oracle training fixture");
  fixture->add_option("--count", fixture_.count, "Positions");
  fixture->add_option("--min-legal", fixture_.min_legal, "Minimum legal moves per position");
  fixture->add_option("--margin", fixture_.margin, "Gap between best and second hidden score");
  fixture->add_option("--sharpness", fixture_.sharpness, "Value sharpness");
  fixture->add_option("--prior-scale", fixture_.prior_scale, "Starting policy is -scale times the hidden weights");
  fixture->add_option("--samples-out", fixture_.samples_out, "Samples JSONL");
  fixture->add_option("--table-out", fixture_.table_out, "Value table JSONL");
  fixture->add_option("--prior-out", fixture_.prior_out, "Starting parameters JSON");

  serve_cmd_ = app.add_subcommand("serve", "Run the HTTP reward service");
  serve_cmd_->add_option("--bind", serve_.bind, "host:port (port 0 picks a free port)");
  serve_cmd_->add_option("--service-config", serve_.service_config, "Service config JSON (flags override it)");
  serve_cmd_->add_option("--preset", serve_.preset, "Default reward preset")
      ->check(CLI::IsMember(reward::preset_names()));
  serve_cmd_->add_option("--max-batch", serve_.max_batch, "Largest /v1/score batch")->check(CLI::PositiveNumber);
  serve_cmd_->add_option("--http-threads", serve_.http_threads, "Request worker threads")
      ->check(CLI::PositiveNumber);
  serve_cmd_->add_option("--timeout-ms", serve_.timeout_ms, "Socket read/write timeout")
      ->check(CLI::PositiveNumber);
  serve_cmd_->add_option("--access-log", serve_.access_log, "Access log JSONL ('-' for stderr)");
  add_backend_options(serve_cmd_, serve_.backend, "heuristic", {"heuristic", "uci", "table"});

  auto* perft = app.add_subcommand("perft", "Count leaf nodes of the legal move tree");
  perft->add_option("--fen", perft_.fen, "Position, or 'start'");
  perft->add_option("--depth", perft_.depth, "Depth in plies")->check(CLI::Range(0, 8));
  perft->add_flag("--divide", perft_.divide, "Print the count below each root move");
}

int Commands::dispatch(CLI::App& app) {
  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  if (name == "ingest") return run_ingest();
  if (name == "decompose") return run_decompose();
  if (name == "render") return run_render();
  if (name == "score") return run_score();
  if (name == "train") return run_train();
  if (name == "eval") return run_eval();
  if (name == "serve") return run_serve();
  if (name == "perft") return run_perft();
  const std::string sub = cmd->get_subcommands().front()->get_name();
  if (sub == "board-state") return run_diag_board_state();
  if (sub == "two-candidate") return run_diag_two_candidate();
  if (sub == "grade") return run_diag_grade();
  return run_diag_fixture();
}

int Commands::run_ingest() {
  require(ingest_.in, "--in");
  puzzle::IngestOptions opts;
  opts.exec = g_.exec();
  if (ingest_.rating_filter) opts.rating_filter = puzzle::RatingFilter{ingest_.min_rating, ingest_.max_rating};
  const auto result = puzzle::ingest_csv(std::filesystem::path(ingest_.in), opts);
  {
    Output out(ingest_.out, out_);
    puzzle::write_csv(*out, result.puzzles);
  }
  if (!ingest_.errors.empty()) {
    Output errs(ingest_.errors, out_);
    for (const auto& e : result.errors) {
      nlohmann::ordered_json j;
      j["row"] = e.row;
      j["puzzle_id"] = e.puzzle_id;
      j["category"] = e.category;
      j["message"] = e.message;
      *errs << j.dump() << '\n';
    }
  }
  nlohmann::ordered_json summary{{"rows", result.rows},
                                 {"accepted", result.puzzles.size()},
                                 {"rejected", result.errors.size()},
                                 {"filtered_out", result.filtered_out}};
  if (ingest_.out == "-") log("info", "ingest " + summary.dump());
  else out_ << summary.dump() << '\n';
  return 0;
}

int Commands::run_decompose() {
  require(decompose_.in, "--in");
  std::size_t rejected = 0;
  const auto puzzles = read_puzzles(decompose_.in, g_.exec(), &rejected);
  if (rejected > 0) log("warn", std::to_string(rejected) + " invalid puzzle rows skipped");
  puzzle::BuildOptions opts;
  opts.mode = puzzle::parse_decompose_mode(decompose_.mode);
  opts.seed = g_.seed;
  opts.include_legal_san = decompose_.include_legal;
  opts.exec = g_.exec();
  puzzle::DatasetManifest manifest;
  auto samples = puzzle::assemble_dataset(puzzles, opts, &manifest);
  if (!decompose_.shuffle) samples = puzzle::decompose_all(puzzles, opts.mode, opts.exec);
  {
    Output out(decompose_.out, out_);
    for (const auto& s : samples) *out << puzzle::to_record(s, decompose_.include_legal).dump() << '\n';
  }
  if (!decompose_.manifest.empty()) {
    Output m(decompose_.manifest, out_);
    *m << manifest.to_json().dump(2) << '\n';
  }
  log("info", "decompose: " + std::to_string(puzzles.size()) + " puzzles, " + std::to_string(samples.size()) +
                  " samples");
  return 0;
}

int Commands::run_render() {
  if (render_.in.empty() == render_.fen.empty()) throw UsageError("give exactly one of --in or --fen");
  const auto cfg = prompt::parse_config_id(render_.prompt);
  Output out(render_.out, out_);
  if (!render_.fen.empty()) {
    if (!render_.template_path.empty()) throw UsageError("--template applies to --in samples only");
    *out << prompt::render_prompt(chess::parse_fen(render_.fen == "start" ? std::string(chess::kStartFen) : render_.fen), cfg);
    return 0;
  }
  std::optional<prompt::PromptTemplate> tmpl;
  if (!render_.template_path.empty()) tmpl = prompt::PromptTemplate::load(render_.template_path);
  const auto samples = puzzle::read_samples(render_.in);
  const auto prompts = parallel::map_index<std::string>(g_.exec(), samples.size(), [&](std::size_t i) {
    return tmpl ? prompt::render_prompt(samples[i], cfg, *tmpl) : prompt::render_prompt(samples[i], cfg);
  });
  for (std::size_t i = 0; i < samples.size(); ++i) {
    nlohmann::ordered_json j;
    j["puzzle_id"] = samples[i].puzzle_id;
    j["ply_index"] = samples[i].ply_index;
    j["prompt_cfg_id"] = prompt::config_id(cfg);
    j["prompt"] = prompts[i];
    *out << j.dump() << '\n';
  }
  return 0;
}

int Commands::run_score() {
  require(score_.in, "--in");
  service::ServiceConfig cfg;
  cfg.exec = g_.exec();
  cfg.default_preset = score_.preset;
  cfg.backends.clear();
  if (score_.backend.kind == "oracle") {
    cfg.default_backend = "oracle";
  } else {
    critic::BackendConfig b;
    b.kind = score_.backend.kind;
    b.depth = score_.backend.depth;
    b.engine_cmd = score_.backend.engine;
    b.movetime_ms = score_.backend.movetime_ms;
    b.pool_size = score_.backend.pool_size;
    b.table_path = score_.backend.table;
    cfg.backends[b.kind] = b;
    cfg.default_backend = b.kind;
  }
  service::ScoreRequest req;
  std::size_t lineno = 0;
  for (const auto& row : read_jsonl(score_.in)) {
    ++lineno;
    try {
      auto one = service::ScoreRequest::from_json(nlohmann::json{{"items", nlohmann::json::array({row})}});
      req.items.push_back(std::move(one.items.front()));
    } catch (const SchemaError& e) {
      throw ValidationError(score_.in + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.max_batch = std::max<std::size_t>(req.items.size(), 1);
  const service::RewardService svc(cfg);
  const auto resp = svc.score_batch(req);
  Output out(score_.out, out_);
  std::size_t failed = 0;
  for (const auto& item : resp.items_json()) {
    failed += item["ok"].get<bool>() ? 0 : 1;
    *out << item.dump() << '\n';
  }
  log("info", "score: " + std::to_string(resp.items.size()) + " items, " + std::to_string(failed) + " failed, " +
                  std::to_string(resp.latency_ms) + " ms");
  return 0;
}

int Commands::run_train() {
  require(train_.samples, "--samples");
  const auto samples = puzzle::read_samples(train_.samples);
  std::vector<puzzle::PositionSample> eval_samples;
  if (!train_.eval_samples.empty()) eval_samples = puzzle::read_samples(train_.eval_samples);

  grpo::TrainConfig cfg;
  cfg.steps = train_.steps;
  cfg.batch_size = train_.batch;
  cfg.group_size = train_.group;
  cfg.temperature = train_.temperature;
  cfg.clip_ratio = train_.clip;
  cfg.kl_coef = train_.kl;
  cfg.entropy_coef = train_.entropy;
  cfg.optimizer.kind = train_.optimizer;
  cfg.optimizer.lr = train_.lr;
  cfg.optimizer.grad_clip = train_.grad_clip;
  cfg.optimizer.weight_decay = train_.weight_decay;
  cfg.seed = g_.seed;
  cfg.eval_every = train_.eval_every;
  if (train_.stop_at > 0.0) cfg.stop_at_accuracy = train_.stop_at;
  cfg.prompt = prompt::parse_config_id(train_.prompt);
  cfg.exec = g_.exec();
  if (!train_.initial_theta.empty()) cfg.initial_theta = read_theta(train_.initial_theta);
  if (!train_.save_config.empty()) {
    Output c(train_.save_config, out_);
    *c << cfg.to_json().dump(2) << '\n';
  }

  std::vector<puzzle::PositionSample> oracle_set = samples;
  oracle_set.insert(oracle_set.end(), eval_samples.begin(), eval_samples.end());
  grpo::Trainer trainer(samples, reward::preset(train_.preset), backend(train_.backend, &oracle_set), cfg);
  if (!eval_samples.empty()) trainer.set_eval_samples(eval_samples);
  if (!train_.resume.empty()) trainer.restore(grpo::Checkpoint::load(train_.resume));

  Output metrics(train_.metrics, out_);
  const auto result = trainer.run(&*metrics);
  if (!train_.checkpoint.empty()) trainer.checkpoint().save(train_.checkpoint);
  if (!train_.theta_out.empty()) write_theta(train_.theta_out, result.theta);

  std::string summary = "train: " + std::to_string(trainer.steps_done()) + " steps";
  if (!result.log.empty() && result.log.back().eval_accuracy)
    summary += ", greedy accuracy " + std::to_string(*result.log.back().eval_accuracy);
  log("info", summary);
  if (result.halted) {
    log("error", "training halted: " + result.halt_reason);
    throw NonFiniteGradient(result.halt_reason);
  }
  return 0;
}

int Commands::run_eval() {
  require(eval_.puzzles, "--puzzles");
  std::size_t rejected = 0;
  const auto puzzles = read_puzzles(eval_.puzzles, g_.exec(), &rejected);
  if (rejected > 0) log("warn", std::to_string(rejected) + " invalid puzzle rows skipped");

  std::unique_ptr<eval::Agent> agent;
  if (eval_.agent == "oracle") {
    agent = std::make_unique<eval::OracleAgent>(puzzles);
  } else if (eval_.agent == "random") {
    agent = std::make_unique<eval::RandomAgent>(g_.seed);
  } else if (eval_.agent == "critic") {
    agent = std::make_unique<eval::CriticGreedyAgent>(backend(eval_.backend, nullptr));
  } else if (eval_.agent == "policy") {
    require(eval_.theta, "--theta");
    agent = std::make_unique<eval::PolicyAgent>(read_theta(eval_.theta));
  } else {
    require(eval_.transcripts, "--transcripts");
    agent = std::make_unique<eval::TranscriptAgent>(eval::TranscriptAgent::load(eval_.transcripts));
  }

  eval::EvalConfig cfg;
  cfg.prompt = prompt::parse_config_id(eval_.prompt);
  cfg.bucket_width = eval_.bucket_width;
  cfg.max_failures = eval_.max_failures;
  cfg.exec = g_.exec();
  const auto report = eval::eval_puzzles(*agent, puzzles, cfg);
  Output out(eval_.out, out_);
  *out << report.to_json().dump() << '\n';
  if (tables_) err_ << report.format_table();
  return 0;
}

int Commands::run_diag_board_state() {
  const auto pool = pool_positions(board_state_.pool, g_.exec());
  std::vector<eval::BoardStateTask> tasks;
  if (board_state_.k == 0) {
    tasks = eval::gen_board_state_tasks(board_state_.count, g_.seed, pool, g_.exec());
  } else {
    for (std::size_t i = 0; i < board_state_.count; ++i) {
      std::mt19937_64 rng(mix_seed(g_.seed, i));
      char id[32];
      std::snprintf(id, sizeof id, "bs-%06zu", i);
      tasks.push_back(eval::gen_board_state_task(rng, board_state_.k, pool, id));
    }
  }
  Output out(board_state_.out, out_);
  std::size_t unverified = 0;
  for (const auto& t : tasks) {
    unverified += eval::verify(t) ? 0 : 1;
    *out << eval::to_record(t).dump() << '\n';
  }
  log("info", "board-state: " + std::to_string(tasks.size()) + " tasks, " + std::to_string(unverified) +
                  " failed replay");
  if (unverified > 0) throw ValidationError(std::to_string(unverified) + " tasks failed to replay");
  return 0;
}

int Commands::run_diag_two_candidate() {
  const auto pool = pool_positions(two_candidate_.pool, g_.exec());
  const auto critic = backend(two_candidate_.backend, nullptr);
  const auto tasks =
      eval::gen_two_candidate_tasks(two_candidate_.count, g_.seed, pool, *critic, two_candidate_.margin, g_.exec());
  Output out(two_candidate_.out, out_);
  for (const auto& t : tasks) *out << eval::to_record(t).dump() << '\n';
  log("info", "two-candidate: " + std::to_string(tasks.size()) + " of " + std::to_string(two_candidate_.count) +
                  " draws met the margin");
  return 0;
}

int Commands::run_diag_grade() {
  require(grade_.keys, "--keys");
  require(grade_.transcripts, "--transcripts");
  const auto report = eval::grade_transcripts(grade_.transcripts, grade_.keys);
  Output out(grade_.out, out_);
  *out << report.to_json().dump() << '\n';
  if (tables_) err_ << report.format_table();
  return 0;
}

int Commands::run_diag_fixture() {
  require(fixture_.samples_out, "--samples-out");
  require(fixture_.table_out, "--table-out");
  grpo::FixtureOptions opts;
  opts.count = fixture_.count;
  opts.seed = g_.seed;
  opts.min_legal = fixture_.min_legal;
  opts.margin = fixture_.margin;
  opts.sharpness = fixture_.sharpness;
  opts.prior_scale = fixture_.prior_scale;
  const auto fx = grpo::make_linear_oracle_fixture(opts);
  puzzle::write_samples(fixture_.samples_out, fx.samples);
  {
    Output t(fixture_.table_out, out_);
    critic::TableCritic::write(fx.table, *t);
  }
  if (!fixture_.prior_out.empty()) write_theta(fixture_.prior_out, fx.prior);
  out_ << nlohmann::ordered_json{{"samples", fx.samples.size()},
                                 {"samples_out", fixture_.samples_out},
                                 {"table_out", fixture_.table_out},
                                 {"hidden_weights", fx.hidden_weights}}
              .dump()
       << '\n';
  return 0;
}

int Commands::run_serve() {
  service::ServiceConfig cfg =
      serve_.service_config.empty() ? service::ServiceConfig{} : service::ServiceConfig::load(serve_.service_config);
  auto given = [&](const char* flag) { return serve_cmd_->get_option(flag)->count() > 0; };
  if (given("--bind") || serve_.service_config.empty()) std::tie(cfg.host, cfg.port) = service::parse_bind(serve_.bind);
  if (given("--preset")) cfg.default_preset = serve_.preset;
  if (given("--max-batch")) cfg.max_batch = serve_.max_batch;
  if (given("--http-threads")) cfg.http_threads = serve_.http_threads;
  if (given("--timeout-ms")) cfg.request_timeout_ms = serve_.timeout_ms;
  if (given("--backend")) {
    cfg.default_backend = serve_.backend.kind;
    cfg.backends[cfg.default_backend].kind = serve_.backend.kind;
  }
  auto& b = cfg.backends[cfg.default_backend];
  if (given("--depth")) b.depth = serve_.backend.depth;
  if (given("--engine")) b.engine_cmd = serve_.backend.engine;
  if (given("--movetime")) b.movetime_ms = serve_.backend.movetime_ms;
  if (given("--pool-size")) b.pool_size = serve_.backend.pool_size;
  if (given("--table")) b.table_path = serve_.backend.table;
  cfg.exec = g_.exec();
  cfg.validate();

  std::ofstream log_file;
  std::ostream* access = &err_;
  if (serve_.access_log != "-") {
    log_file.open(serve_.access_log, std::ios::app);
    if (!log_file) throw IoError("cannot write " + serve_.access_log);
    access = &log_file;
  }

  // SIGINT/SIGTERM are handled by a dedicated thread via sigwait; the mask
  // is set before any server thread exists so they all inherit it.
  struct SignalMask {
    sigset_t set;
    SignalMask() {
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
    }
    ~SignalMask() { pthread_sigmask(SIG_UNBLOCK, &set, nullptr); }
  } mask;

  const service::RewardService svc(cfg);
  service::HttpServer server(svc, access);
  const int port = server.bind(cfg.host, cfg.port);
  out_ << nlohmann::ordered_json{{"listening", cfg.host + ":" + std::to_string(port)},
                                 {"version", service::version()},
                                 {"backends", svc.backend_ids()}}
              .dump()
       << std::endl;

  std::atomic<bool> signalled{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&mask.set, &sig);
    signalled = true;
    server.stop();
  });
  server.listen();
  if (!signalled) pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  log("info", "serve: stopped");
  return 0;
}

int Commands::run_perft() {
  const auto pos = chess::parse_fen(perft_.fen == "start" ? std::string(chess::kStartFen) : perft_.fen);
  if (perft_.divide && perft_.depth > 0) {
    std::uint64_t total = 0;
    for (const auto& nm : chess::legal_moves(pos)) {
      const auto n = parallel::perft(chess::apply_move(pos, nm.move), perft_.depth - 1, g_.exec());
      total += n;
      out_ << chess::uci_of(nm.move) << ": " << n << '\n';
    }
    out_ << total << '\n';
    return 0;
  }
  out_ << parallel::perft(pos, perft_.depth, g_.exec()) << '\n';
  return 0;
}

}  // namespace chessrl::cli
