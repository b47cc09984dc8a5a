#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpo/envs.hpp"
#include "gpo/nn.hpp"
#include "gpo/rollout.hpp"

namespace gpo {

/// Adaptive KL-penalty weight. After each update: KL > 1.5 target doubles
/// beta, KL < target / 1.5 halves it, clamped to [beta_min, beta_max].
struct PpoState {
  double beta = 1.0;
  double target_kl = 0.01;
  double beta_min = 1e-4;
  double beta_max = 1e4;

  void adapt(double observed_kl);
};

/// A batch prepared for a policy-gradient step: the rollouts (whose snapshot
/// is the behavior policy pi_old for the importance ratios) and their
/// precomputed advantages.
struct UpdateBatch {
  std::shared_ptr<const Batch> batch;
  Vec advantages;
};

/// Mean over the pooled transitions of all batches of pi(a|s) / pi_old_j(a|s) * A_t
/// (j the batch a transition came from), minus beta * mean over batches[0] of
/// KL(pi_old_0(.|s) || pi(.|s)). batches[0] is the updating policy's own batch.
/// With equal batch sizes this is the per-batch sum of means divided by the
/// number of batches.
double surrogate_objective(const GaussianPolicy& policy, std::span<const UpdateBatch> batches, double beta);
/// Gradient of surrogate_objective w.r.t. the flat policy parameters.
Vec surrogate_gradient(const GaussianPolicy& policy, std::span<const UpdateBatch> batches, double beta);
/// mean_t[ grad log pi(a|s) * A_t ] over one batch (the plain score-function form).
Vec score_function_gradient(const GaussianPolicy& policy, const UpdateBatch& batch);
/// Mean KL(pi_old || policy) over the states of `own`, pi_old taken from the
/// stored behavior distributions.
double mean_kl_from_behavior(const GaussianPolicy& policy, const Batch& own);

struct PpoResult {
  GaussianPolicy policy;
  PpoState state;
  double mean_kl = 0.0;
};

/// `epochs` full-batch Adam ascent steps on the surrogate, then beta adaptation.
PpoResult ppo_update(const GaussianPolicy& policy, std::span<const UpdateBatch> batches, PpoState state,
                     AdamState& adam, int epochs);

/// One Adam ascent step on the importance-weighted policy gradient.
GaussianPolicy a2c_update(const GaussianPolicy& policy, std::span<const UpdateBatch> batches, AdamState& adam);

struct SimilaritySets {
  std::vector<std::vector<int>> sets;  // sets[i] ascending, always contains i
  std::vector<std::vector<double>> kl;  // kl[i][j] estimate of KL[pi_i, pi_j]
};

/// KL[pi_i, pi_j] is the mean closed-form KL between the two policies' action
/// distributions over the states of probe_batches[i]; S_i = {j : KL < epsilon} + {i}.
SimilaritySets similarity_sets(std::span<const GaussianPolicy> policies,
                               std::span<const std::shared_ptr<const Batch>> probe_batches, double epsilon);

enum class MutationAlgo { ppo, a2c };

struct MutationConfig {
  MutationAlgo algo = MutationAlgo::ppo;
  std::int64_t batch_size = 2048;
  int horizon = 512;
  double gamma = 0.99;
  bool share = true;
  double epsilon = 0.05;
  int ppo_epochs = 10;
  double policy_lr = 3e-4;
  PpoState ppo_init{};
  CriticFitOptions critic{};
  bool normalize_advantages = true;
};

struct Member {
  int id = 0;
  GaussianPolicy policy;
  std::optional<Mlp> critic;  // fitted lazily on the first mutation batch
  std::optional<AdamState> adam;
  PpoState ppo;
  std::shared_ptr<const Batch> last_batch;
  double mean_return = 0.0;
};

struct Population {
  std::vector<Member> members;
};

struct MutationRecord {
  int round = 0;
  int iteration = 0;
  int policy_id = 0;
  double mean_return = 0.0;
  double std_error = 0.0;
  std::int64_t transitions = 0;  // consumed by this policy in this iteration
  double mean_kl = 0.0;
  double beta = 0.0;
  int shared_with_count = 0;
};

struct MutationReport {
  std::vector<MutationRecord> records;
  std::int64_t transitions = 0;
  int iterations = 0;  // policy-gradient iterations per policy
};

/// Runs policy-gradient iterations on every member in lockstep until each has
/// consumed exactly `transitions_per_policy` env steps (batches of batch_size,
/// the last one capped). Similarity sets are computed from the first batch of
/// the round, before any update. Each member's final batch is cached in
/// last_batch.
MutationReport mutate_population(Population& population, const Env& env_proto, const MutationConfig& config,
                                 std::int64_t transitions_per_policy, std::uint64_t seed, int round);

}  // namespace gpo
