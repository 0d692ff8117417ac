#include "chessrl/grpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chessrl/errors.hpp"
#include "chessrl/rng.hpp"

namespace chessrl::grpo {
namespace {

double dot(const Theta& theta, const Features& phi) {
  double s = 0.0;
  for (std::size_t k = 0; k < kFeatureDim; ++k) s += theta[k] * phi[k];
  return s;
}

void check_dim(const Theta& theta) {
  if (theta.size() != kFeatureDim)
    throw ConfigError("theta has " + std::to_string(theta.size()) + " entries, expected " +
                      std::to_string(kFeatureDim));
}

}  // namespace

std::vector<double> softmax_policy(const Theta& theta, std::span<const Features> feats, double temperature) {
  check_dim(theta);
  if (feats.empty()) throw NoLegalMoves("empty action set");
  std::vector<double> z(feats.size());
  for (std::size_t i = 0; i < feats.size(); ++i) z[i] = dot(theta, feats[i]) / temperature;
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

std::vector<double> policy_distribution(const Theta& theta, const chess::Position& pos, double temperature) {
  const auto moves = chess::legal_moves(pos);
  if (moves.empty()) throw NoLegalMoves("no legal moves in " + chess::to_fen(pos));
  const auto feats = feature_matrix(pos, moves);
  return softmax_policy(theta, feats, temperature);
}

std::size_t greedy_action(const Theta& theta, std::span<const Features> feats) {
  check_dim(theta);
  if (feats.empty()) throw NoLegalMoves("empty action set");
  std::size_t best = 0;
  double best_z = dot(theta, feats[0]);
  for (std::size_t i = 1; i < feats.size(); ++i) {
    const double z = dot(theta, feats[i]);
    if (z > best_z) {
      best = i;
      best_z = z;
    }
  }
  return best;
}

GroupRollout sample_group(const Theta& theta, std::span<const Features> feats, std::size_t group_size,
                          double temperature, std::mt19937_64& rng) {
  const auto p = softmax_policy(theta, feats, temperature);
  GroupRollout g;
  g.actions.reserve(group_size);
  g.logprobs_old.reserve(group_size);
  for (std::size_t n = 0; n < group_size; ++n) {
    const double u = unit_uniform(rng);
    double acc = 0.0;
    std::size_t a = p.size() - 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (u < acc) {
        a = i;
        break;
      }
    }
    g.actions.push_back(a);
    g.logprobs_old.push_back(std::log(p[a]));
  }
  return g;
}

std::vector<double> compute_advantages(const std::vector<double>& rewards) {
  const std::size_t n = rewards.size();
  std::vector<double> adv(n, 0.0);
  if (n < 2) return adv;
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; })) return adv;
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) adv[i] = (rewards[i] - mean) / (sd + kAdvantageEps);
  return adv;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) kl += p[i] * (std::log(p[i]) - std::log(q[i]));
  return std::max(kl, 0.0);
}

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

namespace {

std::size_t rollout_count(std::span<const GroupBatch> batch) {
  std::size_t n = 0;
  for (const auto& g : batch) n += g.rollout.actions.size();
  return n;
}

double clipped_term(double ratio, double adv, double eps) {
  return std::min(ratio * adv, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv);
}

}  // namespace

ObjectiveTerms objective(const Theta& theta, const Theta& ref_theta, std::span<const GroupBatch> batch,
                         const ObjectiveConfig& cfg) {
  ObjectiveTerms t;
  if (batch.empty()) return t;
  const double n = static_cast<double>(std::max<std::size_t>(rollout_count(batch), 1));
  const double m = static_cast<double>(batch.size());
  for (const auto& g : batch) {
    const auto p = softmax_policy(theta, g.feats, cfg.temperature);
    const auto q = softmax_policy(ref_theta, g.feats, cfg.temperature);
    const auto& r = g.rollout;
    for (std::size_t i = 0; i < r.actions.size(); ++i) {
      const double ratio = p[r.actions[i]] / std::exp(r.logprobs_old[i]);
      t.surrogate += clipped_term(ratio, r.advantages[i], cfg.clip_ratio) / n;
    }
    t.kl += kl_divergence(p, q) / m;
    t.entropy += entropy(p) / m;
  }
  t.objective = t.surrogate - cfg.kl_coef * t.kl + cfg.entropy_coef * t.entropy;
  return t;
}

Theta objective_gradient(const Theta& theta, const Theta& ref_theta, std::span<const GroupBatch> batch,
                         const ObjectiveConfig& cfg) {
  check_dim(theta);
  Theta grad(kFeatureDim, 0.0);
  if (batch.empty()) return grad;
  const double n = static_cast<double>(std::max<std::size_t>(rollout_count(batch), 1));
  const double m = static_cast<double>(batch.size());
  const double eps = cfg.clip_ratio;
  for (const auto& g : batch) {
    const auto p = softmax_policy(theta, g.feats, cfg.temperature);
    const auto q = softmax_policy(ref_theta, g.feats, cfg.temperature);
    const std::size_t L = p.size();
    std::vector<double> dz(L, 0.0);  // d objective / d logit

    const auto& r = g.rollout;
    for (std::size_t i = 0; i < r.actions.size(); ++i) {
      const double adv = r.advantages[i];
      if (adv == 0.0) continue;
      const std::size_t a = r.actions[i];
      const double ratio = p[a] / std::exp(r.logprobs_old[i]);
      const bool active = adv > 0.0 ? ratio <= 1.0 + eps : ratio >= 1.0 - eps;
      if (!active) continue;
      const double coef = adv * ratio / n;
      for (std::size_t b = 0; b < L; ++b) dz[b] -= coef * p[b];
      dz[a] += coef;
    }

    const double kl = kl_divergence(p, q);
    const double h = entropy(p);
    for (std::size_t b = 0; b < L; ++b) {
      if (p[b] == 0.0) continue;  // both terms vanish in the limit
      const double logp = std::log(p[b]);
      dz[b] -= cfg.kl_coef / m * p[b] * (logp - std::log(q[b]) - kl);
      dz[b] -= cfg.entropy_coef / m * p[b] * (logp + h);
    }
    for (std::size_t b = 0; b < L; ++b)
      for (std::size_t k = 0; k < kFeatureDim; ++k) grad[k] += dz[b] * g.feats[b][k] / cfg.temperature;
  }
  return grad;
}

StepMetrics grpo_step(Theta& theta, const Theta& ref_theta, std::span<const GroupBatch> batch,
                      const ObjectiveConfig& obj, const OptimizerConfig& opt, OptimizerState& state) {
  StepMetrics metrics;
  metrics.terms = objective(theta, ref_theta, batch, obj);
  const Theta grad = objective_gradient(theta, ref_theta, batch, obj);
  double sq = 0.0;
  for (double g : grad) {
    if (!std::isfinite(g)) throw NonFiniteGradient("non-finite gradient entry");
    sq += g * g;
  }
  metrics.grad_norm = std::sqrt(sq);
  if (!std::isfinite(metrics.terms.objective)) throw NonFiniteGradient("non-finite objective");

  double total_reward = 0.0;
  std::size_t count = 0;
  for (const auto& g : batch)
    for (double r : g.rollout.rewards) {
      total_reward += r;
      ++count;
    }
  metrics.mean_reward = count ? total_reward / static_cast<double>(count) : 0.0;

  const double scale =
      opt.grad_clip > 0.0 && metrics.grad_norm > opt.grad_clip ? opt.grad_clip / metrics.grad_norm : 1.0;
  if (opt.kind == "sgd") {
    for (std::size_t k = 0; k < kFeatureDim; ++k) theta[k] += opt.lr * scale * grad[k];
  } else if (opt.kind == "adamw") {
    if (state.m.size() != kFeatureDim) state.m.assign(kFeatureDim, 0.0);
    if (state.v.size() != kFeatureDim) state.v.assign(kFeatureDim, 0.0);
    ++state.t;
    const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      const double g = scale * grad[k];
      state.m[k] = opt.beta1 * state.m[k] + (1.0 - opt.beta1) * g;
      state.v[k] = opt.beta2 * state.v[k] + (1.0 - opt.beta2) * g * g;
      theta[k] += opt.lr * (state.m[k] / c1) / (std::sqrt(state.v[k] / c2) + opt.adam_eps) -
                  opt.lr * opt.weight_decay * theta[k];
    }
  } else {
    throw ConfigError("unknown optimizer '" + opt.kind + "'");
  }
  return metrics;
}

}  // namespace chessrl::grpo
