#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpo/crossover.hpp"
#include "gpo/mutate.hpp"
#include "gpo/select.hpp"

namespace gpo {

enum class SelectMode { fitness, random };

std::string to_string(MutationAlgo algo);
MutationAlgo mutation_algo_from_string(const std::string& s);
std::string to_string(SelectMode mode);
SelectMode select_mode_from_string(const std::string& s);

struct GpoConfig {
  std::string env = "pointnav";
  int pop = 4;
  int rounds = 4;
  MutationAlgo algo = MutationAlgo::ppo;
  int iterations = 10;  // mutation iterations per round (sets the default budget)
  std::int64_t batch = 2048;
  int horizon = 512;
  double gamma = 0.99;
  double policy_lr = 3e-4;
  int ppo_epochs = 10;
  double epsilon = 0.05;
  double target_kl = 0.01;
  double critic_lr = 5e-4;
  int critic_epochs = 10;
  HorizonBootstrap bootstrap = HorizonBootstrap::zero;

  double keep_fraction = 0.6;
  int selector_epochs = 100;
  std::int64_t dagger_expert = 5000;
  std::int64_t dagger_student = 500;
  int dagger_iterations = 10;
  int dagger_epochs = 10;

  double alpha_perf = 1.0;
  double alpha_div = 0.0;
  std::optional<double> alpha_div_final;  // linear anneal over rounds when set
  bool symmetric_kl = true;

  CrossoverMode crossover = CrossoverMode::state;
  SelectMode select = SelectMode::fitness;
  bool share = true;

  /// Per-policy transition budget; 0 derives rounds * (iterations * batch +
  /// DAgger transitions per child).
  std::int64_t budget = 0;
  // a stuck episode costs ~500 against ~-5 for a solved one, so the mean
  // needs many episodes to rank policies reliably
  int eval_episodes = 100;
  bool eval_deterministic = false;

  std::uint64_t seed = 1;
  std::string out = "gpo_out";

  // crossover-demo
  int pretrain_iterations = 100;  // long enough for both region experts to converge
  // scale-sweep
  std::vector<int> sweep_pops{2, 4, 8};

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
  MutationConfig mutation() const;
  CrossoverOptions crossover_options() const;
  /// Env transitions one crossover consumes in the configured mode.
  std::int64_t crossover_transitions() const;
  std::int64_t per_policy_budget() const;
  /// Mutation transitions per policy for each GPO round (remainder in the last).
  std::vector<std::int64_t> round_budgets() const;
  FitnessWeights weights(int round) const;
};

struct EvalResult {
  double mean_return = 0.0;
  double std_error = 0.0;
  std::int64_t transitions = 0;
};

/// Whole episodes on a private env copy; these transitions are reported
/// separately from the training budget.
EvalResult evaluate_policy(const GaussianPolicy& policy, const Env& env_proto, int episodes, int horizon, Rng& rng,
                           bool deterministic = false);

/// 1 + (value - reference) / |reference|: equals value / reference for a
/// positive reference, and stays monotone in value when returns are negative.
double relative_score(double value, double reference);

struct RunRecord {
  int round = 0;
  int iteration = 0;
  std::string phase;  // mutate | crossover | final
  int policy_id = 0;
  double mean_return = 0.0;
  double std_error = 0.0;
  std::int64_t transitions = 0;  // cumulative training transitions of the run
};

struct SelectionRecord {
  int round = 0;
  int rank = 0;
  int i = 0;
  int j = 0;
  double f_perf = 0.0;
  double f_div = 0.0;
  double score = 0.0;
};

struct CrossoverRecord {
  int round = 0;
  int parent_x_id = 0;
  int parent_y_id = 0;
  int child_id = 0;
  double parent_x_return = 0.0;
  double parent_y_return = 0.0;
  double child_return = 0.0;
  std::int64_t transitions_used = 0;
};

struct RunLog {
  std::string mode;  // gpo | single | joint
  std::vector<RunRecord> records;
  std::vector<SelectionRecord> selections;
  std::vector<CrossoverRecord> crossovers;
  std::vector<MutationRecord> mutations;

  std::vector<int> final_ids;
  std::vector<GaussianPolicy> final_policies;
  std::vector<EvalResult> final_eval;

  std::int64_t transitions = 0;       // training transitions (instrumented counters)
  std::int64_t eval_transitions = 0;  // evaluation episodes, outside the budget
  int iterations_per_policy = 0;      // policy-gradient iterations per policy
  std::int64_t step_batch = 0;        // batch size of each policy-gradient step

  int best_index() const;
  double best_return() const;
};

RunLog gpo_run(const GpoConfig& config);
RunLog single_run(const GpoConfig& config);
RunLog joint_run(const GpoConfig& config);

struct AblationEntry {
  std::string name;  // Base, Base+C, ..., GPO, Single
  bool c = false, s = false, m = false;
  RunLog log;
  double normalized = 0.0;  // relative_score(best_return, GPO best_return)
};

/// The eight {C, S, M} toggle combinations plus Single. C: state-space vs
/// best-parent crossover; S: fitness vs random selection; M: sharing on/off.
std::vector<AblationEntry> ablation_matrix(const GpoConfig& config);
GpoConfig ablation_config(const GpoConfig& base, bool c, bool s, bool m);

struct ScalePoint {
  std::string variant;  // fixed-batch | fixed-total
  int pop = 0;
  std::int64_t batch = 0;
  RunLog log;
};

/// GPO over config.sweep_pops. fixed-batch keeps the per-policy batch (total
/// grows with m); fixed-total scales the batch by pop / m.
std::vector<ScalePoint> scale_sweep(const GpoConfig& config);

struct CrossoverDemo {
  GaussianPolicy parent_x, parent_y, child_state, child_swap;
  EvalResult eval_x, eval_y, eval_state, eval_swap;
  std::int64_t pretrain_transitions = 0;
  std::int64_t crossover_transitions = 0;
  std::vector<Batch> state_dumps;  // parent_x, parent_y, child_state, child_swap

  double best_parent_return() const;
};

/// Pretrains parents on the left and right PointNav regions, then crosses
/// them over on the full task with the state-space and layer-swap operators.
CrossoverDemo crossover_demo(const GpoConfig& config);

// Output writers. Every CSV has a header row and a fixed column order.
void write_runlog_csv(std::ostream& out, const RunLog& log);
void write_selection_csv(std::ostream& out, const RunLog& log);
void write_crossover_csv(std::ostream& out, const RunLog& log);
void write_mutation_csv(std::ostream& out, const RunLog& log);
void write_final_csv(std::ostream& out, const RunLog& log);
/// runlog/selection/crossover/mutation/final CSVs, policy_<id>.bin and
/// states_<id>.csv (one deterministic evaluation rollout per final policy).
void write_run(const std::string& dir, const RunLog& log, const GpoConfig& config);

}  // namespace gpo
