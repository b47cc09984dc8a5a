#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "gpo/envs.hpp"
#include "gpo/nn.hpp"

namespace gpo {

enum class EpisodeEnd {
  terminal,  // the environment reported done before the horizon
  horizon,   // cut at the collection horizon
  budget,    // cut because the transition cap was reached
};

struct Step {
  Vec observation;
  Vec action;  // unclipped sample; the environment clips internally
  double reward = 0.0;
  double log_prob = 0.0;
  Vec mean;
  Vec log_std;
};

struct Trajectory {
  std::vector<Step> steps;
  EpisodeEnd end = EpisodeEnd::terminal;
  Vec final_observation;  // observation after the last step

  int length() const { return static_cast<int>(steps.size()); }
  double total_return() const;
  bool complete() const { return end != EpisodeEnd::budget; }
};

/// Rollouts of one policy plus the parameter snapshot that generated them.
struct Batch {
  std::vector<Trajectory> trajectories;
  std::int64_t transitions = 0;
  int policy_id = 0;
  GaussianPolicy snapshot;

  /// Mean/std-error of undiscounted returns over complete episodes (all
  /// episodes when none is complete).
  double mean_return() const;
  double std_error_return() const;
  std::vector<double> episode_returns() const;

  Matrix observations() const;
  Matrix actions() const;
  Matrix means() const;
  Matrix log_stds() const;
  Vec log_probs() const;
};

/// Starts whole episodes until at least `min_transitions` have been taken.
/// Episodes end on env termination or at `horizon`. With `max_transitions`
/// > 0 the total never exceeds it and the episode in progress at the cap is
/// marked EpisodeEnd::budget.
Batch collect(const GaussianPolicy& policy, Env& env, std::int64_t min_transitions, int horizon,
              Rng& rng, std::int64_t max_transitions = 0, int policy_id = 0);

/// R_t = r_t + gamma R_{t+1}, with R_T = bootstrap.
Vec discounted_returns(std::span<const double> rewards, double gamma, double bootstrap = 0.0);

/// How episodes cut at the horizon are bootstrapped. Budget cuts always use
/// the critic; terminal states always use 0.
enum class HorizonBootstrap { zero, critic };

/// Discounted-return targets for every step of the batch, in batch order.
Vec return_targets(const Batch& batch, const Mlp& critic, double gamma, HorizonBootstrap mode);

struct CriticFitOptions {
  double gamma = 0.99;
  int epochs = 10;
  int minibatch = 64;
  double lr = 5e-4;
  HorizonBootstrap bootstrap = HorizonBootstrap::zero;
};

Mlp make_critic(int obs_dim, Rng& rng);
double critic_mse(const Mlp& critic, const Matrix& states, std::span<const double> targets);
/// Gradient of critic_mse w.r.t. the flat critic parameters.
Vec critic_mse_gradient(const Mlp& critic, const Matrix& states, std::span<const double> targets);

/// Minibatch Adam regression of V(s_t) onto the return targets. Keeps the
/// epoch-end snapshot with the lowest training MSE, the input included.
Mlp fit_critic(const Mlp& critic, const Batch& batch, const CriticFitOptions& options, Rng& rng);

/// A_t = R_t - V(s_t); optionally standardized over the batch (std floor 1e-8).
Vec advantages(const Batch& batch, const Mlp& critic, double gamma, bool normalize,
               HorizonBootstrap mode = HorizonBootstrap::zero);

/// Columns: episode,t,obs_0..,act_0..,reward,logp
void write_batch_csv(std::ostream& out, const Batch& batch);

}  // namespace gpo
