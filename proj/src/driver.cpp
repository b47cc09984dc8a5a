#include "gpo/driver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "gpo/parallel.hpp"

namespace gpo {

namespace {

const std::vector<int> kHidden{64, 64};
constexpr int kDumpEpisodes = 10;  // state-visitation dumps stay small

std::string bad_field(const std::string& field, const std::string& why) {
  return "invalid config: " + field + " " + why;
}

std::uint64_t u64(std::int64_t v) { return static_cast<std::uint64_t>(v); }

}  // namespace

std::string to_string(MutationAlgo algo) { return algo == MutationAlgo::ppo ? "ppo" : "a2c"; }

MutationAlgo mutation_algo_from_string(const std::string& s) {
  if (s == "ppo") return MutationAlgo::ppo;
  if (s == "a2c") return MutationAlgo::a2c;
  throw std::invalid_argument("invalid algo '" + s + "' (expected one of: ppo, a2c)");
}

std::string to_string(SelectMode mode) { return mode == SelectMode::fitness ? "fitness" : "random"; }

SelectMode select_mode_from_string(const std::string& s) {
  if (s == "fitness") return SelectMode::fitness;
  if (s == "random") return SelectMode::random;
  throw std::invalid_argument("invalid select mode '" + s + "' (expected one of: fitness, random)");
}

void GpoConfig::validate() const {
  if (!is_known_env(env)) make_env(env);  // throws with the valid names
  if (pop < 1) throw std::invalid_argument(bad_field("pop", "must be >= 1"));
  if (rounds < 1) throw std::invalid_argument(bad_field("rounds", "must be >= 1"));
  if (iterations < 1) throw std::invalid_argument(bad_field("iterations", "must be >= 1"));
  if (batch < 1) throw std::invalid_argument(bad_field("batch", "must be >= 1"));
  if (horizon < 1) throw std::invalid_argument(bad_field("horizon", "must be >= 1"));
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument(bad_field("gamma", "must lie in (0, 1]"));
  if (!(policy_lr > 0.0)) throw std::invalid_argument(bad_field("policy_lr", "must be positive"));
  if (!(critic_lr > 0.0)) throw std::invalid_argument(bad_field("critic_lr", "must be positive"));
  if (ppo_epochs < 1) throw std::invalid_argument(bad_field("ppo_epochs", "must be >= 1"));
  if (critic_epochs < 0) throw std::invalid_argument(bad_field("critic_epochs", "must be >= 0"));
  if (!(epsilon >= 0.0)) throw std::invalid_argument(bad_field("epsilon", "must be >= 0"));
  if (!(target_kl > 0.0)) throw std::invalid_argument(bad_field("target_kl", "must be positive"));
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw std::invalid_argument(bad_field("keep_fraction", "must lie in (0, 1]"));
  if (selector_epochs < 0) throw std::invalid_argument(bad_field("selector_epochs", "must be >= 0"));
  if (dagger_expert < 0 || dagger_student < 0 || dagger_iterations < 0 || dagger_epochs < 0)
    throw std::invalid_argument(bad_field("dagger_*", "must be >= 0"));
  if (crossover == CrossoverMode::state && dagger_expert + dagger_student * dagger_iterations == 0)
    throw std::invalid_argument(bad_field("dagger_*", "give state crossover no data"));
  if (budget < 0) throw std::invalid_argument(bad_field("budget", "must be >= 0"));
  if (eval_episodes < 1) throw std::invalid_argument(bad_field("eval_episodes", "must be >= 1"));
  if (pretrain_iterations < 1) throw std::invalid_argument(bad_field("pretrain_iterations", "must be >= 1"));
  for (int p : sweep_pops)
    if (p < 2) throw std::invalid_argument(bad_field("sweep_pops", "entries must be >= 2"));
  const auto rb = round_budgets();
  if (std::any_of(rb.begin(), rb.end(), [](std::int64_t v) { return v < 1; }))
    throw std::invalid_argument(bad_field("budget", "leaves no mutation transitions after crossover"));
}

MutationConfig GpoConfig::mutation() const {
  MutationConfig m;
  m.algo = algo;
  m.batch_size = batch;
  m.horizon = horizon;
  m.gamma = gamma;
  m.share = share;
  m.epsilon = epsilon;
  m.ppo_epochs = ppo_epochs;
  m.policy_lr = policy_lr;
  m.ppo_init.target_kl = target_kl;
  m.critic.gamma = gamma;
  m.critic.epochs = critic_epochs;
  m.critic.lr = critic_lr;
  m.critic.bootstrap = bootstrap;
  return m;
}

CrossoverOptions GpoConfig::crossover_options() const {
  CrossoverOptions o;
  o.mode = crossover;
  o.keep_fraction = keep_fraction;
  o.selector.epochs = selector_epochs;
  o.dagger.expert_transitions = dagger_expert;
  o.dagger.student_transitions = dagger_student;
  o.dagger.iterations = dagger_iterations;
  o.dagger.epochs = dagger_epochs;
  o.dagger.horizon = horizon;
  return o;
}

std::int64_t GpoConfig::crossover_transitions() const {
  return crossover == CrossoverMode::state ? crossover_options().dagger.total_transitions() : 0;
}

std::int64_t GpoConfig::per_policy_budget() const {
  if (budget > 0) return budget;
  // independent of the crossover mode so that ablation arms share one budget
  return rounds * (iterations * batch + crossover_options().dagger.total_transitions());
}

std::vector<std::int64_t> GpoConfig::round_budgets() const {
  const std::int64_t mutation_total = per_policy_budget() - rounds * crossover_transitions();
  std::vector<std::int64_t> out(rounds, mutation_total / rounds);
  out.back() += mutation_total % rounds;
  return out;
}

FitnessWeights GpoConfig::weights(int round) const {
  double div = alpha_div;
  if (alpha_div_final && rounds > 1) div = alpha_div + (*alpha_div_final - alpha_div) * round / (rounds - 1);
  return {alpha_perf, div};
}

EvalResult evaluate_policy(const GaussianPolicy& policy, const Env& env_proto, int episodes, int horizon, Rng& rng,
                           bool deterministic) {
  if (episodes < 1) throw std::invalid_argument("evaluate_policy: episodes must be >= 1");
  auto env = env_proto.clone();
  std::vector<double> returns;
  for (int e = 0; e < episodes; ++e) {
    auto [state, obs] = env->reset(rng);
    double ret = 0.0;
    for (int t = 0; t < horizon; ++t) {
      const DiagGaussian d = policy.distribution(obs);
      const Vec a = deterministic ? d.mean : gauss_sample(d, rng);
      StepResult r = env->step(state, a);
      ret += r.reward;
      state = std::move(r.state);
      obs = std::move(r.observation);
      if (r.done) break;
    }
    returns.push_back(ret);
  }
  EvalResult res;
  const double n = static_cast<double>(returns.size());
  for (double r : returns) res.mean_return += r / n;
  if (returns.size() > 1) {
    double ss = 0.0;
    for (double r : returns) ss += (r - res.mean_return) * (r - res.mean_return);
    res.std_error = std::sqrt(ss / (n - 1) / n);
  }
  res.transitions = env->step_calls();
  return res;
}

double relative_score(double value, double reference) {
  if (reference == 0.0) throw std::domain_error("relative_score: zero reference");
  return 1.0 + (value - reference) / std::abs(reference);
}

int RunLog::best_index() const {
  if (final_eval.empty()) throw std::logic_error("RunLog: no final evaluation");
  int best = 0;
  for (int i = 1; i < static_cast<int>(final_eval.size()); ++i)
    if (final_eval[i].mean_return > final_eval[best].mean_return) best = i;
  return best;
}

double RunLog::best_return() const { return final_eval.at(best_index()).mean_return; }

namespace {

Population initial_population(int m, const Env& env, std::uint64_t seed) {
  Population pop;
  for (int i = 0; i < m; ++i) {
    Rng rng = make_rng(seed, {kInitTag, u64(i)});
    Member mb;
    mb.id = i;
    mb.policy = GaussianPolicy::create(env.spec().obs_dim, env.spec().act_dim, kHidden, rng);
    pop.members.push_back(std::move(mb));
  }
  return pop;
}

// Appends per-iteration mutation rows; `base` is the run's transition count
// before this mutation phase.
void log_mutation(RunLog& log, const MutationReport& rep, std::int64_t base, int m) {
  std::int64_t cum = base;
  int current_iter = -1;
  for (const MutationRecord& r : rep.records) {
    if (r.iteration != current_iter) {
      current_iter = r.iteration;
      // every member consumes the same capped batch in an iteration
      cum += r.transitions * m;
    }
    log.records.push_back(RunRecord{r.round, r.iteration, "mutate", r.policy_id, r.mean_return, r.std_error, cum});
  }
  log.mutations.insert(log.mutations.end(), rep.records.begin(), rep.records.end());
}

void final_evaluation(RunLog& log, const Population& pop, const Env& env, const GpoConfig& cfg, int round) {
  for (int i = 0; i < static_cast<int>(pop.members.size()); ++i) {
    const Member& mb = pop.members[i];
    // common random numbers across runs: keyed by position, not policy id
    Rng rng = make_rng(cfg.seed, {kEvalTag, 0, u64(i)});
    EvalResult ev = evaluate_policy(mb.policy, env, cfg.eval_episodes, cfg.horizon, rng, cfg.eval_deterministic);
    log.eval_transitions += ev.transitions;
    log.final_ids.push_back(mb.id);
    log.final_policies.push_back(mb.policy);
    log.final_eval.push_back(ev);
    log.records.push_back(RunRecord{round, 0, "final", mb.id, ev.mean_return, ev.std_error, log.transitions});
  }
}

Matrix probe_states(const Batch& a, const Batch& b) {
  const Matrix oa = a.observations();
  const Matrix ob = b.observations();
  Matrix out(oa.rows(), oa.cols() + ob.cols());
  for (int r = 0; r < oa.rows(); ++r) {
    std::copy_n(oa.row(r), oa.cols(), out.row(r));
    std::copy_n(ob.row(r), ob.cols(), out.row(r) + oa.cols());
  }
  return out;
}

}  // namespace

RunLog gpo_run(const GpoConfig& cfg) {
  cfg.validate();
  if (cfg.pop < 2) throw std::invalid_argument("invalid config: pop must be >= 2 for gpo");
  const auto env = make_env(cfg.env, cfg.horizon);
  const MutationConfig mcfg = cfg.mutation();
  const CrossoverOptions xopt = cfg.crossover_options();
  const auto budgets = cfg.round_budgets();
  const int m = cfg.pop;

  RunLog log;
  log.mode = "gpo";
  log.step_batch = cfg.batch;
  Population pop = initial_population(m, *env, cfg.seed);
  int next_id = m;

  for (int r = 0; r < cfg.rounds; ++r) {
    MutationReport rep;
    try {
      rep = mutate_population(pop, *env, mcfg, budgets[r], cfg.seed, r);
    } catch (const std::exception& e) {
      throw std::runtime_error("round " + std::to_string(r) + ", mutation: " + e.what());
    }
    log_mutation(log, rep, log.transitions, m);
    log.transitions += rep.transitions;
    log.iterations_per_policy += rep.iterations;

    FitnessTable table;
    for (const Member& mb : pop.members) table.returns.push_back(mb.mean_return);
    const FitnessWeights w = cfg.weights(r);
    if (w.div != 0.0) {
      table.diversity.assign(m, std::vector<double>(m, 0.0));
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
          const Matrix probes = probe_states(*pop.members[i].last_batch, *pop.members[j].last_batch);
          table.diversity[i][j] = table.diversity[j][i] =
              diversity_fitness(pop.members[i].policy, pop.members[j].policy, probes, cfg.symmetric_kl);
        }
    }
    const int count = std::min(m, couple_count(m));
    std::vector<Couple> couples;
    if (cfg.select == SelectMode::fitness) {
      couples = select_couples(table, w, count);
    } else {
      Rng rng = make_rng(cfg.seed, {kSelectTag, u64(r)});
      couples = random_couples(table, w, count, rng);
    }
    for (int k = 0; k < static_cast<int>(couples.size()); ++k) {
      const Couple& c = couples[k];
      log.selections.push_back(SelectionRecord{r, k, pop.members[c.i].id, pop.members[c.j].id, c.f_perf, c.f_div,
                                               c.score});
    }

    // m children, cycling through the couples when there are fewer than m
    std::vector<CrossoverResult> results(m);
    std::vector<EvalResult> evals(3 * m);
    parallel_for(m, [&](int k) {
      const Couple& c = couples[k % couples.size()];
      const Member& x = pop.members[c.i];
      const Member& y = pop.members[c.j];
      auto child_env = env->clone();
      Rng rng = make_rng(cfg.seed, {kCrossoverTag, u64(r), u64(k)});
      try {
        results[k] = crossover(x.policy, y.policy, *x.last_batch, *y.last_batch, *child_env, xopt, rng);
      } catch (const std::exception& e) {
        throw std::runtime_error("round " + std::to_string(r) + ", crossover of policies " + std::to_string(x.id) +
                                 " and " + std::to_string(y.id) + ": " + e.what());
      }
      results[k].transitions = child_env->step_calls();
      const GaussianPolicy* three[3] = {&x.policy, &y.policy, &results[k].child};
      for (int q = 0; q < 3; ++q) {
        Rng er = make_rng(cfg.seed, {kEvalTag, 1, u64(r), u64(k)});
        evals[3 * k + q] = evaluate_policy(*three[q], *env, cfg.eval_episodes, cfg.horizon, er, cfg.eval_deterministic);
      }
    });

    Population children;
    for (int k = 0; k < m; ++k) {
      const Couple& c = couples[k % couples.size()];
      log.transitions += results[k].transitions;
      for (int q = 0; q < 3; ++q) log.eval_transitions += evals[3 * k + q].transitions;
      Member child;
      child.id = next_id++;
      child.policy = std::move(results[k].child);
      // the value function and KL weight carry over from the stronger parent,
      // whose parameters also seed the child in every crossover mode but layer-swap
      const Member& base = pop.members[c.i].mean_return >= pop.members[c.j].mean_return ? pop.members[c.i]
                                                                                          : pop.members[c.j];
      child.critic = base.critic;
      child.ppo = base.ppo;
      log.crossovers.push_back(CrossoverRecord{r, pop.members[c.i].id, pop.members[c.j].id, child.id,
                                               evals[3 * k].mean_return, evals[3 * k + 1].mean_return,
                                               evals[3 * k + 2].mean_return, results[k].transitions});
      log.records.push_back(RunRecord{r, 0, "crossover", child.id, evals[3 * k + 2].mean_return,
                                      evals[3 * k + 2].std_error, log.transitions});
      children.members.push_back(std::move(child));
    }
    pop = std::move(children);
  }
  final_evaluation(log, pop, *env, cfg, cfg.rounds);
  return log;
}

namespace {

RunLog mutation_only(const GpoConfig& cfg, const std::string& mode, int members, std::int64_t batch,
                     std::int64_t budget) {
  const auto env = make_env(cfg.env, cfg.horizon);
  MutationConfig mcfg = cfg.mutation();
  mcfg.share = false;
  mcfg.batch_size = batch;
  RunLog log;
  log.mode = mode;
  log.step_batch = batch;
  Population pop = initial_population(members, *env, cfg.seed);
  MutationReport rep;
  try {
    rep = mutate_population(pop, *env, mcfg, budget, cfg.seed, 0);
  } catch (const std::exception& e) {
    throw std::runtime_error(mode + " run: " + e.what());
  }
  log_mutation(log, rep, 0, members);
  log.transitions = rep.transitions;
  log.iterations_per_policy = rep.iterations;
  final_evaluation(log, pop, *env, cfg, 0);
  return log;
}

}  // namespace

RunLog single_run(const GpoConfig& cfg) {
  cfg.validate();
  return mutation_only(cfg, "single", cfg.pop, cfg.batch, cfg.per_policy_budget());
}

RunLog joint_run(const GpoConfig& cfg) {
  cfg.validate();
  return mutation_only(cfg, "joint", 1, cfg.pop * cfg.batch, cfg.pop * cfg.per_policy_budget());
}

GpoConfig ablation_config(const GpoConfig& base, bool c, bool s, bool m) {
  GpoConfig cfg = base;
  cfg.crossover = c ? CrossoverMode::state : CrossoverMode::best_parent;
  cfg.select = s ? SelectMode::fitness : SelectMode::random;
  cfg.share = m;
  return cfg;
}

std::vector<AblationEntry> ablation_matrix(const GpoConfig& config) {
  std::vector<AblationEntry> out;
  for (int mask = 0; mask < 8; ++mask) {
    const bool c = mask & 4, s = mask & 2, m = mask & 1;
    std::string name = "Base";
    if (m) name += "+M";
    if (c) name += "+C";
    if (s) name += "+S";
    if (mask == 7) name = "GPO";
    out.push_back(AblationEntry{name, c, s, m, gpo_run(ablation_config(config, c, s, m)), 0.0});
  }
  out.push_back(AblationEntry{"Single", false, false, false, single_run(config), 0.0});
  const double ref = out[7].log.best_return();
  for (AblationEntry& e : out) e.normalized = relative_score(e.log.best_return(), ref);
  return out;
}

std::vector<ScalePoint> scale_sweep(const GpoConfig& config) {
  std::vector<ScalePoint> out;
  for (const char* variant : {"fixed-batch", "fixed-total"}) {
    for (int m : config.sweep_pops) {
      GpoConfig cfg = config;
      cfg.pop = m;
      if (std::string(variant) == "fixed-total") {
        cfg.batch = std::max<std::int64_t>(1, config.batch * config.pop / m);
        // keep the per-policy budget as a fraction of the reference total
        cfg.budget = config.per_policy_budget() * config.pop / m;
      }
      out.push_back(ScalePoint{variant, m, cfg.batch, gpo_run(cfg)});
    }
  }
  return out;
}

double CrossoverDemo::best_parent_return() const { return std::max(eval_x.mean_return, eval_y.mean_return); }

CrossoverDemo crossover_demo(const GpoConfig& cfg) {
  cfg.validate();
  CrossoverDemo demo;
  const auto full = make_env("pointnav", cfg.horizon);
  const char* regions[2] = {"pointnav:left", "pointnav:right"};
  MutationConfig mcfg = cfg.mutation();
  mcfg.share = false;

  Member parents[2];
  for (int p = 0; p < 2; ++p) {
    const auto env = make_env(regions[p], cfg.horizon);
    Population pop;
    Rng rng = make_rng(cfg.seed, {kPretrainTag, u64(p)});
    pop.members.push_back(Member{});
    pop.members[0].id = p;
    pop.members[0].policy = GaussianPolicy::create(env->spec().obs_dim, env->spec().act_dim, kHidden, rng);
    MutationReport rep = mutate_population(pop, *env, mcfg, cfg.pretrain_iterations * cfg.batch, cfg.seed, p);
    demo.pretrain_transitions += rep.transitions;
    parents[p] = std::move(pop.members[0]);
  }
  demo.parent_x = parents[0].policy;
  demo.parent_y = parents[1].policy;

  CrossoverOptions opt = cfg.crossover_options();
  opt.mode = CrossoverMode::state;
  auto env = full->clone();
  Rng xr = make_rng(cfg.seed, {kCrossoverTag, 0, 0});
  CrossoverResult state_child =
      crossover(demo.parent_x, demo.parent_y, *parents[0].last_batch, *parents[1].last_batch, *env, opt, xr);
  demo.crossover_transitions = env->step_calls();
  demo.child_state = std::move(state_child.child);
  Rng sr = make_rng(cfg.seed, {kCrossoverTag, 0, 1});
  demo.child_swap = parameter_crossover(demo.parent_x, demo.parent_y, CrossoverMode::layer_swap,
                                        parents[0].mean_return, parents[1].mean_return, sr);

  const GaussianPolicy* four[4] = {&demo.parent_x, &demo.parent_y, &demo.child_state, &demo.child_swap};
  EvalResult* evals[4] = {&demo.eval_x, &demo.eval_y, &demo.eval_state, &demo.eval_swap};
  for (int q = 0; q < 4; ++q) {
    Rng er = make_rng(cfg.seed, {kEvalTag, 2});
    *evals[q] = evaluate_policy(*four[q], *full, cfg.eval_episodes, cfg.horizon, er, cfg.eval_deterministic);
    Rng dr = make_rng(cfg.seed, {kEvalTag, 3});
    Batch dump;
    dump.policy_id = q;
    dump.snapshot = *four[q];
    for (int e = 0; e < std::min(cfg.eval_episodes, kDumpEpisodes); ++e) {
      Batch one = collect(*four[q], *env, 1, cfg.horizon, dr, 0, q);
      dump.transitions += one.transitions;
      dump.trajectories.push_back(std::move(one.trajectories.front()));
    }
    demo.state_dumps.push_back(std::move(dump));
  }
  return demo;
}

void write_runlog_csv(std::ostream& out, const RunLog& log) {
  out.precision(17);
  out << "round,iteration,phase,policy_id,mean_return,std_error,transitions\n";
  for (const RunRecord& r : log.records)
    out << r.round << ',' << r.iteration << ',' << r.phase << ',' << r.policy_id << ',' << r.mean_return << ','
        << r.std_error << ',' << r.transitions << '\n';
}

void write_selection_csv(std::ostream& out, const RunLog& log) {
  out.precision(17);
  out << "round,rank,i,j,f_perf,f_div,score\n";
  for (const SelectionRecord& s : log.selections)
    out << s.round << ',' << s.rank << ',' << s.i << ',' << s.j << ',' << s.f_perf << ',' << s.f_div << ','
        << s.score << '\n';
}

void write_crossover_csv(std::ostream& out, const RunLog& log) {
  out.precision(17);
  out << "round,parent_x_id,parent_y_id,child_id,parent_x_return,parent_y_return,child_return,transitions_used\n";
  for (const CrossoverRecord& c : log.crossovers)
    out << c.round << ',' << c.parent_x_id << ',' << c.parent_y_id << ',' << c.child_id << ',' << c.parent_x_return
        << ',' << c.parent_y_return << ',' << c.child_return << ',' << c.transitions_used << '\n';
}

void write_mutation_csv(std::ostream& out, const RunLog& log) {
  out.precision(17);
  out << "round,iteration,policy_id,mean_return,std_error,transitions,mean_kl,beta,shared_with\n";
  for (const MutationRecord& r : log.mutations)
    out << r.round << ',' << r.iteration << ',' << r.policy_id << ',' << r.mean_return << ',' << r.std_error << ','
        << r.transitions << ',' << r.mean_kl << ',' << r.beta << ',' << r.shared_with_count << '\n';
}

void write_final_csv(std::ostream& out, const RunLog& log) {
  out.precision(17);
  out << "mode,policy_id,mean_return,std_error,best,train_transitions,eval_transitions,iterations,step_batch\n";
  const int best = log.best_index();
  for (int i = 0; i < static_cast<int>(log.final_ids.size()); ++i)
    out << log.mode << ',' << log.final_ids[i] << ',' << log.final_eval[i].mean_return << ','
        << log.final_eval[i].std_error << ',' << (i == best ? 1 : 0) << ',' << log.transitions << ','
        << log.eval_transitions << ',' << log.iterations_per_policy << ',' << log.step_batch << '\n';
}

void write_run(const std::string& dir, const RunLog& log, const GpoConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    return f;
  };
  {
    auto f = open("runlog.csv");
    write_runlog_csv(f, log);
  }
  {
    auto f = open("selection.csv");
    write_selection_csv(f, log);
  }
  {
    auto f = open("crossover.csv");
    write_crossover_csv(f, log);
  }
  {
    auto f = open("mutation.csv");
    write_mutation_csv(f, log);
  }
  {
    auto f = open("final.csv");
    write_final_csv(f, log);
  }
  const auto env = make_env(cfg.env, cfg.horizon);
  for (int i = 0; i < static_cast<int>(log.final_ids.size()); ++i) {
    const std::string id = std::to_string(log.final_ids[i]);
    save_policy((fs::path(dir) / ("policy_" + id + ".bin")).string(), log.final_policies[i]);
    auto e = env->clone();
    Rng rng = make_rng(cfg.seed, {kEvalTag, 4, u64(i)});
    auto f = open("states_" + id + ".csv");
    write_batch_csv(f, collect(log.final_policies[i], *e, 1, cfg.horizon, rng, 0, log.final_ids[i]));
  }
}

}  // namespace gpo
