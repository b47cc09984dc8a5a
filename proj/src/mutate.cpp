#include "gpo/mutate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gpo/parallel.hpp"

namespace gpo {

void PpoState::adapt(double kl) {
  if (kl > 1.5 * target_kl)
    beta *= 2.0;
  else if (kl < target_kl / 1.5)
    beta /= 2.0;
  beta = std::clamp(beta, beta_min, beta_max);
}

namespace {

struct Prepared {
  Matrix obs;
  Matrix actions;
  Matrix old_mean;
  Matrix old_log_std;
  Vec old_log_prob;
  const Vec* advantages = nullptr;
  int n = 0;
};

Prepared prepare(const UpdateBatch& ub) {
  if (!ub.batch) throw std::invalid_argument("update batch without rollouts");
  const Batch& b = *ub.batch;
  if (static_cast<std::int64_t>(ub.advantages.size()) != b.transitions)
    throw ShapeError("advantage count does not match batch transitions");
  return Prepared{b.observations(), b.actions(), b.means(),        b.log_stds(),
                  b.log_probs(),    &ub.advantages, static_cast<int>(b.transitions)};
}

std::vector<Prepared> prepare_all(std::span<const UpdateBatch> batches) {
  if (batches.empty()) throw std::invalid_argument("policy update needs at least one batch");
  std::vector<Prepared> out;
  out.reserve(batches.size());
  for (const auto& b : batches) out.push_back(prepare(b));
  return out;
}

struct Evaluation {
  double objective = 0.0;
  Vec gradient;
};

// Importance-weighted surrogate plus the KL penalty on batches[0].
Evaluation evaluate(const GaussianPolicy& pi, const std::vector<Prepared>& prepared, double beta) {
  const int act = pi.act_dim();
  Evaluation ev;
  ev.gradient.assign(pi.param_count(), 0.0);
  Vec inv_std(act), inv_var(act);
  for (int d = 0; d < act; ++d) {
    inv_std[d] = std::exp(-pi.log_std[d]);
    inv_var[d] = std::exp(-2.0 * pi.log_std[d]);
  }
  // the surrogate averages over every shared transition; the KL penalty over the own batch only
  std::int64_t pooled = 0;
  for (const Prepared& p : prepared) pooled += p.n;
  const double inv_pooled = pooled > 0 ? 1.0 / static_cast<double>(pooled) : 0.0;
  for (std::size_t j = 0; j < prepared.size(); ++j) {
    const Prepared& p = prepared[j];
    if (p.n == 0) continue;
    const double inv_n = 1.0 / p.n;
    Mlp::Tape tape;
    const Matrix mu = pi.mean_net.forward(p.obs, &tape);
    Matrix d_mean(act, p.n);
    Vec d_log_std(act, 0.0);
    const Vec& adv = *p.advantages;
    for (int t = 0; t < p.n; ++t) {
      // Same expression order as gauss_log_prob so ratios are exactly 1 at pi_old.
      double lp = 0.0;
      for (int d = 0; d < act; ++d) {
        const double z = (p.actions(d, t) - mu(d, t)) * std::exp(-pi.log_std[d]);
        lp += -0.5 * z * z - pi.log_std[d] - kHalfLog2Pi;
      }
      const double ratio = std::exp(lp - p.old_log_prob[t]);
      const double w = ratio * adv[t] * inv_pooled;
      ev.objective += w;
      for (int d = 0; d < act; ++d) {
        const double z = (p.actions(d, t) - mu(d, t)) * inv_std[d];
        d_mean(d, t) += w * z * inv_std[d];
        d_log_std[d] += w * (z * z - 1.0);
      }
    }
    if (j == 0 && beta != 0.0) {
      for (int t = 0; t < p.n; ++t) {
        for (int d = 0; d < act; ++d) {
          const double old_var = std::exp(2.0 * p.old_log_std(d, t));
          const double dm = p.old_mean(d, t) - mu(d, t);
          const double kl = pi.log_std[d] - p.old_log_std(d, t) + (old_var + dm * dm) * 0.5 * inv_var[d] - 0.5;
          ev.objective -= beta * kl * inv_n;
          d_mean(d, t) -= beta * inv_n * (-dm) * inv_var[d];
          d_log_std[d] -= beta * inv_n * (1.0 - (old_var + dm * dm) * inv_var[d]);
        }
      }
    }
    const Vec g = pi.gradient(tape, d_mean, d_log_std);
    for (std::size_t k = 0; k < g.size(); ++k) ev.gradient[k] += g[k];
  }
  return ev;
}

void check_finite(const Vec& g, const char* where, int step) {
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!std::isfinite(g[k])) {
      std::ostringstream msg;
      msg << where << ": non-finite policy gradient at parameter " << k << " (step " << step << ")";
      throw NumericalError(msg.str());
    }
  }
}

}  // namespace

double surrogate_objective(const GaussianPolicy& policy, std::span<const UpdateBatch> batches, double beta) {
  return evaluate(policy, prepare_all(batches), beta).objective;
}

Vec surrogate_gradient(const GaussianPolicy& policy, std::span<const UpdateBatch> batches, double beta) {
  return evaluate(policy, prepare_all(batches), beta).gradient;
}

Vec score_function_gradient(const GaussianPolicy& pi, const UpdateBatch& ub) {
  const Prepared p = prepare(ub);
  const int act = pi.act_dim();
  Mlp::Tape tape;
  const Matrix mu = pi.mean_net.forward(p.obs, &tape);
  Matrix d_mean(act, p.n);
  Vec d_log_std(act, 0.0);
  for (int t = 0; t < p.n; ++t) {
    const double a = (*p.advantages)[t] / p.n;
    for (int d = 0; d < act; ++d) {
      const double var = std::exp(2.0 * pi.log_std[d]);
      const double diff = p.actions(d, t) - mu(d, t);
      d_mean(d, t) = a * diff / var;
      d_log_std[d] += a * (diff * diff / var - 1.0);
    }
  }
  return pi.gradient(tape, d_mean, d_log_std);
}

double mean_kl_from_behavior(const GaussianPolicy& policy, const Batch& own) {
  if (own.transitions == 0) return 0.0;
  const Matrix mu = policy.mean_net.forward(own.observations());
  double total = 0.0;
  int col = 0;
  for (const Trajectory& t : own.trajectories) {
    for (const Step& s : t.steps) {
      total += gauss_kl(DiagGaussian{s.mean, s.log_std}, DiagGaussian{mu.column(col), policy.log_std});
      ++col;
    }
  }
  return total / static_cast<double>(own.transitions);
}

PpoResult ppo_update(const GaussianPolicy& policy, std::span<const UpdateBatch> batches, PpoState state,
                     AdamState& adam, int epochs) {
  const auto prepared = prepare_all(batches);
  PpoResult res{policy, state, 0.0};
  Vec flat = policy.flatten();
  for (int e = 0; e < epochs; ++e) {
    Evaluation ev = evaluate(res.policy, prepared, state.beta);
    check_finite(ev.gradient, "ppo_update", e);
    for (double& g : ev.gradient) g = -g;
    adam_step(adam, flat, ev.gradient);
    res.policy.unflatten(flat);
  }
  res.mean_kl = mean_kl_from_behavior(res.policy, *batches[0].batch);
  res.state.adapt(res.mean_kl);
  return res;
}

GaussianPolicy a2c_update(const GaussianPolicy& policy, std::span<const UpdateBatch> batches, AdamState& adam) {
  const auto prepared = prepare_all(batches);
  Evaluation ev = evaluate(policy, prepared, 0.0);
  check_finite(ev.gradient, "a2c_update", 0);
  for (double& g : ev.gradient) g = -g;
  Vec flat = policy.flatten();
  adam_step(adam, flat, ev.gradient);
  GaussianPolicy out = policy;
  out.unflatten(flat);
  return out;
}

SimilaritySets similarity_sets(std::span<const GaussianPolicy> policies,
                               std::span<const std::shared_ptr<const Batch>> probes, double epsilon) {
  const int m = static_cast<int>(policies.size());
  if (static_cast<int>(probes.size()) != m) throw std::invalid_argument("similarity_sets: one probe batch per policy required");
  SimilaritySets out;
  out.sets.resize(m);
  out.kl.assign(m, std::vector<double>(m, 0.0));
  for (int i = 0; i < m; ++i) {
    if (!probes[i]) throw std::invalid_argument("similarity_sets: missing probe batch for policy " + std::to_string(i));
    const Matrix states = probes[i]->observations();
    const int n = states.cols();
    const Matrix mu_i = policies[i].mean_net.forward(states);
    for (int j = 0; j < m; ++j) {
      if (j != i && n > 0) {
        const Matrix mu_j = policies[j].mean_net.forward(states);
        double total = 0.0;
        for (int t = 0; t < n; ++t)
          total += gauss_kl(DiagGaussian{mu_i.column(t), policies[i].log_std},
                            DiagGaussian{mu_j.column(t), policies[j].log_std});
        out.kl[i][j] = total / n;
      }
      if (j == i || out.kl[i][j] < epsilon) out.sets[i].push_back(j);
    }
  }
  return out;
}

MutationReport mutate_population(Population& pop, const Env& env_proto, const MutationConfig& cfg,
                                 std::int64_t transitions_per_policy, std::uint64_t seed, int round) {
  const int m = static_cast<int>(pop.members.size());
  if (m == 0) throw std::invalid_argument("mutate_population: empty population");
  if (cfg.batch_size < 1) throw std::invalid_argument("mutate_population: batch size must be positive");

  std::vector<std::unique_ptr<Env>> envs;
  for (int i = 0; i < m; ++i) envs.push_back(env_proto.clone());
  for (int i = 0; i < m; ++i) {
    Member& mb = pop.members[i];
    if (!mb.critic) {
      Rng rng = make_rng(seed, {kCriticTag, static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(i)});
      mb.critic = make_critic(mb.policy.obs_dim(), rng);
    }
    if (!mb.adam) mb.adam = AdamState::for_size(mb.policy.param_count(), cfg.policy_lr);
  }

  MutationReport report;
  SimilaritySets sets;
  sets.sets.resize(m);
  for (int i = 0; i < m; ++i) sets.sets[i] = {i};

  std::int64_t remaining = transitions_per_policy;
  std::vector<UpdateBatch> prepared(m);
  std::vector<double> kls(m, 0.0);
  for (int iter = 0; remaining > 0; ++iter) {
    const std::int64_t want = std::min(cfg.batch_size, remaining);
    parallel_for(m, [&](int i) {
      Member& mb = pop.members[i];
      const auto r = static_cast<std::uint64_t>(round);
      const auto ii = static_cast<std::uint64_t>(i);
      const auto it = static_cast<std::uint64_t>(iter);
      Rng rng = make_rng(seed, {kCollectTag, r, ii, it});
      auto batch = std::make_shared<Batch>(collect(mb.policy, *envs[i], want, cfg.horizon, rng, want, mb.id));
      Rng critic_rng = make_rng(seed, {kCriticTag, r, ii, it});
      mb.critic = fit_critic(*mb.critic, *batch, cfg.critic, critic_rng);
      prepared[i] = UpdateBatch{batch, advantages(*batch, *mb.critic, cfg.gamma, cfg.normalize_advantages,
                                                  cfg.critic.bootstrap)};
    });
    remaining -= want;

    if (iter == 0 && cfg.share && m > 1) {
      std::vector<GaussianPolicy> policies;
      std::vector<std::shared_ptr<const Batch>> probes;
      for (int i = 0; i < m; ++i) {
        policies.push_back(pop.members[i].policy);
        probes.push_back(prepared[i].batch);
      }
      sets = similarity_sets(policies, probes, cfg.epsilon);
    }

    parallel_for(m, [&](int i) {
      Member& mb = pop.members[i];
      std::vector<UpdateBatch> list{prepared[i]};
      for (int j : sets.sets[i])
        if (j != i) list.push_back(prepared[j]);
      if (cfg.algo == MutationAlgo::ppo) {
        PpoResult res = ppo_update(mb.policy, list, mb.ppo, *mb.adam, cfg.ppo_epochs);
        mb.policy = std::move(res.policy);
        mb.ppo = res.state;
        kls[i] = res.mean_kl;
      } else {
        mb.policy = a2c_update(mb.policy, list, *mb.adam);
        kls[i] = mean_kl_from_behavior(mb.policy, *prepared[i].batch);
      }
    });

    for (int i = 0; i < m; ++i) {
      Member& mb = pop.members[i];
      mb.last_batch = prepared[i].batch;
      mb.mean_return = mb.last_batch->mean_return();
      report.records.push_back(MutationRecord{round, iter, mb.id, mb.mean_return, mb.last_batch->std_error_return(),
                                              mb.last_batch->transitions, kls[i], mb.ppo.beta,
                                              static_cast<int>(sets.sets[i].size()) - 1});
    }
    ++report.iterations;
  }
  for (const auto& e : envs) report.transitions += e->step_calls();
  return report;
}

}  // namespace gpo
