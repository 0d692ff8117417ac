#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chessrl/critic/critic.hpp"
#include "chessrl/parallel/exec.hpp"
#include "chessrl/puzzle/sample.hpp"

namespace chessrl::cli {

/// Bad invocation detected after parsing (exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string log_level = "info";
  std::string config;

  parallel::Exec exec() const { return threads == 1 ? parallel::Exec::Serial : parallel::Exec::Parallel; }
};

struct BackendFlags {
  std::string kind;
  int depth = 2;
  std::string engine;
  int movetime_ms = 50;
  int pool_size = 1;
  std::string table;
};

class Commands {
 public:
  Commands(Globals& globals, std::ostream& out, std::ostream& err, bool tables)
      : g_(globals), out_(out), err_(err), tables_(tables) {}

  void register_all(CLI::App& app);
  int dispatch(CLI::App& app);

 private:
  void log(const std::string& level, const std::string& message) const;
  /// "oracle" needs the samples it grades against; "none" gives null.
  std::shared_ptr<const critic::Backend> backend(const BackendFlags& flags,
                                                 const std::vector<puzzle::PositionSample>* oracle_samples) const;
  static void add_backend_options(CLI::App* cmd, BackendFlags& flags, const std::string& default_kind,
                                  const std::vector<std::string>& kinds);

  int run_ingest();
  int run_decompose();
  int run_render();
  int run_score();
  int run_train();
  int run_eval();
  int run_diag_board_state();
  int run_diag_two_candidate();
  int run_diag_grade();
  int run_diag_fixture();
  int run_serve();
  int run_perft();

  Globals& g_;
  std::ostream& out_;
  std::ostream& err_;
  bool tables_;

  struct {
    std::string in, out = "-", errors;
    bool rating_filter = false;
    int min_rating = 200, max_rating = 2800;
  } ingest_;
  struct {
    std::string in, out = "-", mode = "all-moves", manifest;
    bool shuffle = false, include_legal = false;
  } decompose_;
  struct {
    std::string in, fen, out = "-", prompt = "default", template_path;
  } render_;
  struct {
    std::string in, out = "-", preset = "dense";
    BackendFlags backend;
  } score_;
  struct {
    std::string samples, eval_samples, preset = "dense", metrics = "-", checkpoint, resume, theta_out, initial_theta,
        save_config, optimizer = "adamw", prompt = "default";
    std::size_t steps = 150, batch = 128, group = 8, eval_every = 10;
    double temperature = 1.0, clip = 0.2, kl = 1e-3, entropy = 1e-3, lr = 1e-2, grad_clip = 1.0, weight_decay = 0.0,
           stop_at = 0.0;
    BackendFlags backend;
  } train_;
  struct {
    std::string puzzles, agent = "oracle", theta, transcripts, out = "-", prompt = "default";
    int bucket_width = 200;
    std::size_t max_failures = 50;
    BackendFlags backend;
  } eval_;
  struct {
    std::size_t count = 1000;
    int k = 0;
    std::string pool, out = "-";
  } board_state_;
  struct {
    std::size_t count = 1000;
    double margin = 0.2;
    std::string pool, out = "-";
    BackendFlags backend;
  } two_candidate_;
  struct {
    std::string keys, transcripts, out = "-";
  } grade_;
  struct {
    std::size_t count = 200, min_legal = 10;
    double margin = 0.25, sharpness = 2.0, prior_scale = 0.3;
    std::string samples_out, table_out, prior_out;
  } fixture_;
  struct {
    std::string bind = "127.0.0.1:8080", service_config, access_log = "-", preset = "dense";
    std::size_t max_batch = 512;
    int http_threads = 8, timeout_ms = 30000;
    BackendFlags backend;
  } serve_;
  struct {
    std::string fen = "start";
    int depth = 4;
    bool divide = false;
  } perft_;

  CLI::App* serve_cmd_ = nullptr;
};

}  // namespace chessrl::cli
