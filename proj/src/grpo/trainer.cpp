#include "chessrl/grpo/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "chessrl/chess/notation.hpp"
#include "chessrl/errors.hpp"
#include "chessrl/puzzle/dataset.hpp"
#include "chessrl/rng.hpp"

namespace chessrl::grpo {
namespace {

// The toy policy always emits the same well-formed English reasoning.
constexpr const char* kToyThink = "Toy policy move.";

void validate(const TrainConfig& c) {
  if (c.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (c.group_size == 0) throw ConfigError("group_size must be positive");
  if (!(c.temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(c.clip_ratio >= 0.0)) throw ConfigError("clip_ratio must be non-negative");
  if (!(c.optimizer.lr > 0.0)) throw ConfigError("lr must be positive");
  if (c.optimizer.kind != "sgd" && c.optimizer.kind != "adamw")
    throw ConfigError("unknown optimizer '" + c.optimizer.kind + "'");
}

}  // namespace

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["steps"] = steps;
  j["batch_size"] = batch_size;
  j["group_size"] = group_size;
  j["temperature"] = temperature;
  j["clip_ratio"] = clip_ratio;
  j["kl_coef"] = kl_coef;
  j["entropy_coef"] = entropy_coef;
  j["optimizer"] = optimizer.kind;
  j["lr"] = optimizer.lr;
  j["grad_clip"] = optimizer.grad_clip;
  j["weight_decay"] = optimizer.weight_decay;
  j["seed"] = seed;
  j["eval_every"] = eval_every;
  j["initial_theta"] = initial_theta ? nlohmann::ordered_json(*initial_theta) : nullptr;
  j["stop_at_accuracy"] = stop_at_accuracy ? nlohmann::ordered_json(*stop_at_accuracy) : nullptr;
  j["prompt"] = prompt::config_id(prompt);
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "steps") c.steps = v.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "group_size") c.group_size = v.get<std::size_t>();
      else if (key == "temperature") c.temperature = v.get<double>();
      else if (key == "clip_ratio") c.clip_ratio = v.get<double>();
      else if (key == "kl_coef") c.kl_coef = v.get<double>();
      else if (key == "entropy_coef") c.entropy_coef = v.get<double>();
      else if (key == "optimizer") c.optimizer.kind = v.get<std::string>();
      else if (key == "lr") c.optimizer.lr = v.get<double>();
      else if (key == "grad_clip") c.optimizer.grad_clip = v.get<double>();
      else if (key == "weight_decay") c.optimizer.weight_decay = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "eval_every") c.eval_every = v.get<std::size_t>();
      else if (key == "initial_theta") {
        if (v.is_null()) c.initial_theta.reset();
        else c.initial_theta = v.get<Theta>();
      } else if (key == "stop_at_accuracy") {
        if (v.is_null()) c.stop_at_accuracy.reset();
        else c.stop_at_accuracy = v.get<double>();
      } else if (key == "prompt") c.prompt = prompt::parse_config_id(v.get<std::string>());
      else throw ConfigError("unknown train config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  validate(c);
  return c;
}

nlohmann::ordered_json MetricsRecord::to_json() const {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["mean_reward"] = mean_reward;
  j["surrogate"] = surrogate;
  j["kl"] = kl;
  j["entropy"] = entropy;
  j["grad_norm"] = grad_norm;
  if (eval_accuracy) j["eval_accuracy"] = *eval_accuracy;
  if (expected_reward) j["expected_reward"] = *expected_reward;
  if (error) j["error"] = *error;
  return j;
}

nlohmann::ordered_json Checkpoint::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "chessrl-grpo-checkpoint/1";
  j["step"] = step;
  j["seed"] = seed;
  j["theta"] = theta;
  j["ref_theta"] = ref_theta;
  j["optimizer"] = {{"t", optimizer.t}, {"m", optimizer.m}, {"v", optimizer.v}};
  return j;
}

Checkpoint Checkpoint::from_json(const nlohmann::json& j) {
  Checkpoint c;
  try {
    if (j.at("format") != "chessrl-grpo-checkpoint/1") throw ValidationError("unsupported checkpoint format");
    c.step = j.at("step").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.theta = j.at("theta").get<Theta>();
    c.ref_theta = j.at("ref_theta").get<Theta>();
    c.optimizer.t = j.at("optimizer").at("t").get<std::uint64_t>();
    c.optimizer.m = j.at("optimizer").at("m").get<Theta>();
    c.optimizer.v = j.at("optimizer").at("v").get<Theta>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint: ") + e.what());
  }
  if (c.theta.size() != kFeatureDim || c.ref_theta.size() != kFeatureDim)
    throw ValidationError("checkpoint theta has the wrong dimension");
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

struct Trainer::Prepared {
  std::once_flag once;
  chess::MoveList moves;
  std::vector<Features> feats;
  std::vector<double> rewards;
  std::size_t optimal = 0;
};

Trainer::Trainer(std::vector<puzzle::PositionSample> samples, reward::RewardPreset preset,
                 std::shared_ptr<const critic::Backend> backend, TrainConfig cfg)
    : samples_(std::move(samples)), preset_(std::move(preset)), backend_(std::move(backend)), cfg_(std::move(cfg)) {
  validate(cfg_);
  if (samples_.empty()) throw ConfigError("training set is empty");
  if (preset_.weights.lambda_dense != 0.0 && !backend_)
    throw ConfigError("preset '" + preset_.name + "' needs a critic backend");
  theta_ = cfg_.initial_theta.value_or(Theta(kFeatureDim, 0.0));
  if (theta_.size() != kFeatureDim) throw ConfigError("initial_theta has the wrong dimension");
  ref_theta_ = theta_;
  train_cache_.resize(samples_.size());
  for (auto& p : train_cache_) p = std::make_unique<Prepared>();
}

Trainer::~Trainer() = default;

void Trainer::set_eval_samples(std::vector<puzzle::PositionSample> samples) {
  eval_samples_ = std::move(samples);
  separate_eval_ = true;
  eval_cache_.clear();
  eval_cache_.resize(eval_samples_.size());
  for (auto& p : eval_cache_) p = std::make_unique<Prepared>();
}

const Trainer::Prepared& Trainer::prepared(const std::vector<puzzle::PositionSample>& set,
                                           std::vector<std::unique_ptr<Prepared>>& cache, std::size_t i) const {
  Prepared& p = *cache[i];
  std::call_once(p.once, [&] {
    const auto& s = set[i];
    p.moves = chess::legal_moves(s.state);
    if (p.moves.empty()) throw NoLegalMoves("no legal moves in " + chess::to_fen(s.state));
    p.feats = feature_matrix(s.state, p.moves);
    const reward::RewardTarget target = reward::target_of(s);
    p.rewards.resize(p.moves.size());
    for (std::size_t a = 0; a < p.moves.size(); ++a) {
      const auto& nm = p.moves[a];
      if (nm.move == s.optimal_move) p.optimal = a;
      const std::string answer = cfg_.prompt.notation == prompt::MoveNotation::San ? nm.san : nm.uci;
      p.rewards[a] = reward::score(target, prompt::format_answer(kToyThink, answer), preset_, cfg_.prompt,
                                   backend_.get())
                         .total;
    }
  });
  return p;
}

const std::vector<double>& Trainer::action_rewards(std::size_t i) const {
  return prepared(samples_, train_cache_, i).rewards;
}

const std::vector<std::size_t>& Trainer::epoch_permutation(std::uint64_t epoch) const {
  std::lock_guard lock(perm_mu_);
  auto it = perms_.find(epoch);
  if (it != perms_.end()) return it->second;
  while (perms_.size() > 2) perms_.erase(perms_.begin());
  std::vector<std::size_t> perm(samples_.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  puzzle::seeded_shuffle(perm, mix_seed(cfg_.seed, 0xE90C0000ULL + epoch));
  return perms_.emplace(epoch, std::move(perm)).first->second;
}

std::vector<std::size_t> Trainer::batch_indices(std::size_t step) const {
  const std::size_t n = samples_.size();
  std::vector<std::size_t> out(cfg_.batch_size);
  for (std::size_t j = 0; j < cfg_.batch_size; ++j) {
    const std::size_t k = step * cfg_.batch_size + j;
    out[j] = epoch_permutation(k / n)[k % n];
  }
  return out;
}

MetricsRecord Trainer::step() {
  const auto idx = batch_indices(step_);
  const ObjectiveConfig obj{cfg_.temperature, cfg_.clip_ratio, cfg_.kl_coef, cfg_.entropy_coef};

  auto batch = parallel::map_index<GroupBatch>(cfg_.exec, idx.size(), [&](std::size_t j) {
    const Prepared& p = prepared(samples_, train_cache_, idx[j]);
    std::mt19937_64 rng(mix_seed(mix_seed(cfg_.seed, step_), j));
    GroupBatch g{p.feats, sample_group(theta_, p.feats, cfg_.group_size, cfg_.temperature, rng)};
    g.rollout.sample_index = idx[j];
    for (std::size_t a : g.rollout.actions) g.rollout.rewards.push_back(p.rewards[a]);
    g.rollout.advantages = compute_advantages(g.rollout.rewards);
    return g;
  });

  MetricsRecord rec;
  try {
    const StepMetrics m = grpo_step(theta_, ref_theta_, batch, obj, cfg_.optimizer, opt_state_);
    rec.mean_reward = m.mean_reward;
    rec.surrogate = m.terms.surrogate;
    rec.kl = m.terms.kl;
    rec.entropy = m.terms.entropy;
    rec.grad_norm = m.grad_norm;
    consecutive_failures_ = 0;
  } catch (const NonFiniteGradient& e) {
    rec.error = std::string("NonFiniteGradient: ") + e.what();
    ++consecutive_failures_;
  }
  ++step_;
  rec.step = step_;
  if ((cfg_.eval_every != 0 && step_ % cfg_.eval_every == 0) || step_ == cfg_.steps) {
    rec.eval_accuracy = greedy_accuracy();
    rec.expected_reward = expected_reward();
  }
  return rec;
}

double Trainer::greedy_accuracy() const {
  const auto& set = separate_eval_ ? eval_samples_ : samples_;
  auto& cache = separate_eval_ ? eval_cache_ : train_cache_;
  const auto hits = parallel::map_index<int>(cfg_.exec, set.size(), [&](std::size_t i) {
    const Prepared& p = prepared(set, cache, i);
    return greedy_action(theta_, p.feats) == p.optimal ? 1 : 0;
  });
  return set.empty() ? 0.0 : static_cast<double>(std::accumulate(hits.begin(), hits.end(), 0)) /
                                 static_cast<double>(set.size());
}

double Trainer::expected_reward() const {
  const auto& set = separate_eval_ ? eval_samples_ : samples_;
  auto& cache = separate_eval_ ? eval_cache_ : train_cache_;
  const auto values = parallel::map_index<double>(cfg_.exec, set.size(), [&](std::size_t i) {
    const Prepared& p = prepared(set, cache, i);
    const auto pi = softmax_policy(theta_, p.feats, cfg_.temperature);
    double e = 0.0;
    for (std::size_t a = 0; a < pi.size(); ++a) e += pi[a] * p.rewards[a];
    return e;
  });
  double sum = 0.0;
  for (double v : values) sum += v;
  return set.empty() ? 0.0 : sum / static_cast<double>(set.size());
}

TrainResult Trainer::run(std::ostream* metrics_out, const std::function<void(const MetricsRecord&)>& on_step) {
  TrainResult result;
  while (step_ < cfg_.steps) {
    MetricsRecord rec = step();
    if (metrics_out) *metrics_out << rec.to_json().dump() << '\n';
    if (on_step) on_step(rec);
    result.log.push_back(rec);
    ++result.steps_run;
    if (consecutive_failures_ >= 3) {
      result.halted = true;
      result.halt_reason = "NonFiniteGradient on 3 consecutive steps";
      break;
    }
    if (cfg_.stop_at_accuracy && rec.eval_accuracy && *rec.eval_accuracy >= *cfg_.stop_at_accuracy) break;
  }
  result.theta = theta_;
  return result;
}

Checkpoint Trainer::checkpoint() const { return {step_, cfg_.seed, theta_, ref_theta_, opt_state_}; }

void Trainer::restore(const Checkpoint& ckpt) {
  if (ckpt.seed != cfg_.seed)
    throw ConfigError("checkpoint seed " + std::to_string(ckpt.seed) + " does not match run seed " +
                      std::to_string(cfg_.seed));
  if (ckpt.theta.size() != kFeatureDim || ckpt.ref_theta.size() != kFeatureDim)
    throw ConfigError("checkpoint theta has the wrong dimension");
  step_ = ckpt.step;
  theta_ = ckpt.theta;
  ref_theta_ = ckpt.ref_theta;
  opt_state_ = ckpt.optimizer;
  consecutive_failures_ = 0;
}

TrainResult train(const std::vector<puzzle::PositionSample>& samples, const reward::RewardPreset& preset,
                  std::shared_ptr<const critic::Backend> backend, const TrainConfig& cfg, std::ostream* metrics_out) {
  Trainer t(samples, preset, std::move(backend), cfg);
  return t.run(metrics_out);
}

}  // namespace chessrl::grpo
