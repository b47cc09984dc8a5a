#include "gpo/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "gpo/config.hpp"
#include "gpo/driver.hpp"

namespace gpo {

namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

void write_echo(const fs::path& dir, const GpoConfig& cfg) {
  fs::create_directories(dir);
  auto f = open_out(dir / "config.echo");
  f << config_echo(cfg);
}

void run_single_mode(const std::string& mode, const GpoConfig& cfg, std::ostream& out) {
  RunLog log = mode == "gpo" ? gpo_run(cfg) : mode == "single" ? single_run(cfg) : joint_run(cfg);
  write_echo(cfg.out, cfg);
  write_run(cfg.out, log, cfg);
  out << mode << ": best policy " << log.final_ids[log.best_index()] << " mean return " << std::setprecision(6)
      << log.best_return() << " after " << log.transitions << " transitions -> " << cfg.out << '\n';
}

void run_ablation(const GpoConfig& cfg, std::ostream& out) {
  auto entries = ablation_matrix(cfg);
  write_echo(cfg.out, cfg);
  auto f = open_out(fs::path(cfg.out) / "ablation.csv");
  f.precision(17);
  f << "name,C,S,M,best_return,normalized,transitions\n";
  for (const AblationEntry& e : entries) {
    f << e.name << ',' << e.c << ',' << e.s << ',' << e.m << ',' << e.log.best_return() << ',' << e.normalized << ','
      << e.log.transitions << '\n';
    GpoConfig arm = e.name == "Single" ? cfg : ablation_config(cfg, e.c, e.s, e.m);
    write_run((fs::path(cfg.out) / e.name).string(), e.log, arm);
    out << std::setw(12) << std::left << e.name << " normalized " << std::setprecision(4) << e.normalized << '\n';
  }
}

void run_scale_sweep(const GpoConfig& cfg, std::ostream& out) {
  auto points = scale_sweep(cfg);
  write_echo(cfg.out, cfg);
  auto f = open_out(fs::path(cfg.out) / "scale.csv");
  f.precision(17);
  f << "variant,pop,batch,transitions,best_return,mean_final_return\n";
  for (const ScalePoint& p : points) {
    double mean = 0.0;
    for (const EvalResult& e : p.log.final_eval) mean += e.mean_return / static_cast<double>(p.log.final_eval.size());
    f << p.variant << ',' << p.pop << ',' << p.batch << ',' << p.log.transitions << ',' << p.log.best_return() << ','
      << mean << '\n';
    GpoConfig point = cfg;
    point.pop = p.pop;
    point.batch = p.batch;
    write_run((fs::path(cfg.out) / (p.variant + "_m" + std::to_string(p.pop))).string(), p.log, point);
    out << p.variant << " m=" << p.pop << " best " << std::setprecision(6) << p.log.best_return() << '\n';
  }
}

void run_crossover_demo(const GpoConfig& cfg, std::ostream& out) {
  CrossoverDemo demo = crossover_demo(cfg);
  const fs::path dir(cfg.out);
  write_echo(dir, cfg);
  const char* names[4] = {"parent_x", "parent_y", "child_state", "child_layer_swap"};
  const GaussianPolicy* policies[4] = {&demo.parent_x, &demo.parent_y, &demo.child_state, &demo.child_swap};
  const EvalResult* evals[4] = {&demo.eval_x, &demo.eval_y, &demo.eval_state, &demo.eval_swap};
  for (int q = 0; q < 4; ++q) {
    save_policy((dir / (std::string("policy_") + names[q] + ".bin")).string(), *policies[q]);
    auto f = open_out(dir / (std::string("states_") + names[q] + ".csv"));
    write_batch_csv(f, demo.state_dumps[q]);
  }
  const double ref = demo.eval_x.mean_return;
  auto f = open_out(dir / "crossover.csv");
  f.precision(17);
  f << "operator,parent_x_return,parent_y_return,child_return,parent_x_norm,parent_y_norm,child_norm,"
       "transitions_used\n";
  const std::pair<const char*, int> rows[2] = {{"state", 2}, {"layer-swap", 3}};
  for (auto [op, q] : rows)
    f << op << ',' << demo.eval_x.mean_return << ',' << demo.eval_y.mean_return << ',' << evals[q]->mean_return << ','
      << 1.0 << ',' << relative_score(demo.eval_y.mean_return, ref) << ','
      << relative_score(evals[q]->mean_return, ref) << ',' << (q == 2 ? demo.crossover_transitions : 0) << '\n';
  out << "crossover-demo: parents " << std::setprecision(6) << demo.eval_x.mean_return << " / "
      << demo.eval_y.mean_return << ", state child " << demo.eval_state.mean_return << ", layer-swap child "
      << demo.eval_swap.mean_return << " -> " << cfg.out << '\n';
}

}  // namespace

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Genetic policy optimization experiments", "gpo"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::vector<std::string> sets;
  bool no_share = false;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gpo", "run genetic policy optimization"},
      {"single", "independent policies, best one reported"},
      {"joint", "one policy with a pop-times larger batch"},
      {"ablate", "the crossover/selection/sharing ablation matrix plus Single"},
      {"crossover-demo", "state-space vs layer-swap crossover of two region experts"},
      {"scale-sweep", "population-size sweep, fixed batch and fixed total"}};
  // flag values land in `values` and are applied through set_config_value
  // so that every source of configuration is validated the same way
  static const std::vector<std::pair<std::string, std::string>> flags = {
      {"--env", "env"},     {"--pop", "pop"},       {"--rounds", "rounds"},       {"--algo", "algo"},
      {"--seed", "seed"},   {"--out", "out"},       {"--crossover", "crossover"}, {"--select", "select"},
      {"--iters", "iterations"}, {"--batch", "batch"}};
  std::vector<std::string> values(flags.size());
  std::vector<CLI::Option*> options;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "key=value config file");
    for (std::size_t i = 0; i < flags.size(); ++i)
      options.push_back(sub->add_option(flags[i].first, values[i], "overrides " + flags[i].second)
                            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast));
    sub->add_flag("--no-share", no_share, "disable data sharing during mutation");
    sub->add_option("--set", sets, "extra key=value overrides");
  }

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "gpo: error: " << e.what() << '\n';
    return 2;
  }

  const std::string mode = app.get_subcommands().front()->get_name();
  GpoConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config_file(config_path);
    for (std::size_t k = 0; k < options.size(); ++k)
      if (options[k]->count() > 0) set_config_value(cfg, flags[k % flags.size()].second, values[k % flags.size()]);
    if (no_share) cfg.share = false;
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
      set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
  } catch (const std::exception& e) {
    err << "gpo: error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (mode == "gpo" || mode == "single" || mode == "joint") run_single_mode(mode, cfg, out);
    else if (mode == "ablate") run_ablation(cfg, out);
    else if (mode == "scale-sweep") run_scale_sweep(cfg, out);
    else run_crossover_demo(cfg, out);
  } catch (const std::exception& e) {
    err << "gpo: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace gpo
