#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpo/envs.hpp"
#include "gpo/nn.hpp"
#include "gpo/rollout.hpp"

namespace gpo {

enum class ParentLabel : int { x = 0, y = 1 };

/// States from the kept parent trajectories, labeled with the parent that
/// visited them and weighted by the min-max normalized trajectory return.
struct WeightedStateSet {
  std::vector<Vec> states;
  std::vector<ParentLabel> labels;
  std::vector<double> weights;
  int kept_trajectories = 0;

  std::size_t size() const { return states.size(); }
  bool has_both_labels() const;
};

/// Pools both parents' trajectories, keeps the top ceil(keep_fraction * N) by
/// total return and weights each state by its trajectory's normalized return
/// (all 1 when the kept returns are equal). Trajectories cut by the batch
/// budget are left out unless nothing else is available.
WeightedStateSet build_selector_dataset(const Batch& batch_x, const Batch& batch_y, double keep_fraction);

struct SelectorTrainOptions {
  int epochs = 100;
  int minibatch = 64;
  double lr = 5e-4;
};

Mlp make_selector(int obs_dim, Rng& rng);
/// -mean_s[ w_s log p(label_s | s) ] with p from binary_head(selector(s)).
double selector_loss(const Mlp& selector, const WeightedStateSet& data);
Vec selector_loss_gradient(const Mlp& selector, const WeightedStateSet& data);
/// Minibatch Adam on selector_loss starting from `init`.
Mlp train_selector(const Mlp& init, const WeightedStateSet& data, const SelectorTrainOptions& options, Rng& rng);

/// Gates between two parents with a binary selector.
struct HierarchicalPolicy {
  Mlp selector;
  GaussianPolicy parent_x;
  GaussianPolicy parent_y;

  /// p(parent = x | s)
  double prob_x(std::span<const double> state) const;
  /// Samples a parent from the selector, then an action from that parent.
  Vec act(std::span<const double> state, Rng& rng) const;
  /// Hard-gated imitation target: the distribution of the more probable
  /// parent, ties (p_x = 0.5) going to parent x.
  DiagGaussian expert_dist(std::span<const double> state) const;
  /// expert_dist for every column of `states` (means act_dim x N, shared
  /// log-std per column).
  void expert_targets(const Matrix& states, Matrix& means, Matrix& log_stds) const;
};

struct DaggerOptions {
  std::int64_t expert_transitions = 5000;
  std::int64_t student_transitions = 500;  // per iteration
  int iterations = 10;
  int epochs = 10;
  int minibatch = 64;
  double lr = 5e-4;
  int horizon = 512;

  std::int64_t total_transitions() const { return expert_transitions + student_transitions * iterations; }
};

struct DaggerIterationStats {
  int iteration = 0;
  std::int64_t expert_states = 0;
  std::int64_t student_states = 0;
  double loss = 0.0;
};

struct DistillResult {
  GaussianPolicy child;
  std::int64_t transitions = 0;
  std::vector<DaggerIterationStats> iterations;
};

/// Mean over states of KL(child(.|s) || target(.|s)), child first.
double distill_loss(const GaussianPolicy& child, const Matrix& states, const Matrix& target_means,
                    const Matrix& target_log_stds);
Vec distill_loss_gradient(const GaussianPolicy& child, const Matrix& states, const Matrix& target_means,
                          const Matrix& target_log_stds);

/// Exactly `count` transitions of `actor` in env, starting episodes as needed
/// and cutting the last one at the count. Returns the visited states.
template <class Actor>
std::vector<Vec> sample_states(const Actor& actor, Env& env, std::int64_t count, int horizon, Rng& rng) {
  std::vector<Vec> states;
  states.reserve(count);
  while (static_cast<std::int64_t>(states.size()) < count) {
    auto [state, obs] = env.reset(rng);
    for (int t = 0; t < horizon && static_cast<std::int64_t>(states.size()) < count; ++t) {
      Vec a = actor(obs, rng);
      StepResult r = env.step(state, a);
      states.push_back(std::move(obs));
      state = std::move(r.state);
      obs = std::move(r.observation);
      if (r.done) break;
    }
  }
  return states;
}

/// DAgger: expert rollouts from the hierarchical policy, then per iteration
/// student rollouts relabeled by expert_dist and appended to the aggregate
/// set, followed by minibatch Adam on distill_loss.
DistillResult dagger_distill(const HierarchicalPolicy& expert, Env& env, const GaussianPolicy& child_init,
                             const DaggerOptions& options, Rng& rng);

enum class CrossoverMode { state, best_parent, layer_swap };

std::string to_string(CrossoverMode mode);
CrossoverMode crossover_mode_from_string(const std::string& s);

/// Parameter-space crossover. best_parent copies the parent with the higher
/// return (x on ties). layer_swap copies each linear layer whole from a
/// uniformly chosen parent, redrawing assignments that take every layer from
/// one parent; the log-std travels with the output layer.
GaussianPolicy parameter_crossover(const GaussianPolicy& px, const GaussianPolicy& py, CrossoverMode mode,
                                   double return_x, double return_y, Rng& rng);

struct CrossoverOptions {
  CrossoverMode mode = CrossoverMode::state;
  double keep_fraction = 0.6;
  SelectorTrainOptions selector{};
  DaggerOptions dagger{};
};

struct CrossoverResult {
  GaussianPolicy child;
  std::int64_t transitions = 0;
  std::vector<DaggerIterationStats> dagger;
  bool single_label = false;  // selector data came from one parent only
};

/// Offspring of two parents using their cached mutation batches. In state
/// mode: selector dataset, selector training, then DAgger distillation into a
/// child initialized from the higher-return parent.
CrossoverResult crossover(const GaussianPolicy& px, const GaussianPolicy& py, const Batch& batch_x,
                          const Batch& batch_y, Env& env, const CrossoverOptions& options, Rng& rng);

}  // namespace gpo
