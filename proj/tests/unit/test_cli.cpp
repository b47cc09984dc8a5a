#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "gpo/cli.hpp"
#include "gpo/config.hpp"

using namespace gpo;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kTiny = {
    "--set", "iterations=2",     "--set", "batch=64",          "--set", "horizon=32",
    "--set", "ppo_epochs=2",     "--set", "critic_epochs=2",   "--set", "selector_epochs=2",
    "--set", "dagger_expert=100", "--set", "dagger_student=20", "--set", "dagger_iterations=2",
    "--set", "dagger_epochs=2",  "--set", "eval_episodes=2",   "--set", "pretrain_iterations=2",
    "--set", "sweep_pops=2,3"};

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = parse_and_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> tiny_args(const std::string& mode, const fs::path& dir, std::vector<std::string> extra = {}) {
  std::vector<std::string> a{mode, "--pop", "3", "--rounds", "2", "--seed", "3", "--out", dir.string()};
  a.insert(a.end(), kTiny.begin(), kTiny.end());
  a.insert(a.end(), extra.begin(), extra.end());
  return a;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream f(e.path(), std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    files[fs::relative(e.path(), dir).string()] = s.str();
  }
  return files;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gpo_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("bad algo names the value and the valid set") {
  const auto o = run({"gpo", "--algo", "ppq"});
  CHECK(o.code == 2);
  CHECK(o.err.find("ppq") != std::string::npos);
  CHECK(o.err.find("ppo") != std::string::npos);
  CHECK(o.err.find("a2c") != std::string::npos);
  CHECK(o.err.rfind("gpo: error: ", 0) == 0);
  CHECK(std::count(o.err.begin(), o.err.end(), '\n') == 1);
}

TEST_CASE("configuration errors") {
  auto o = run({"gpo", "--set", "warp=9"});
  CHECK(o.code == 2);
  CHECK(o.err.find("unknown config key 'warp'") != std::string::npos);

  o = run({"gpo", "--pop", "many"});
  CHECK(o.code == 2);
  CHECK(o.err.find("many") != std::string::npos);
  CHECK(o.err.find("pop") != std::string::npos);

  o = run({"gpo", "--env", ""});
  CHECK(o.code == 2);
  CHECK(o.err.find("missing env name") != std::string::npos);

  o = run({"gpo", "--env", "hopper"});
  CHECK(o.code == 2);
  CHECK(o.err.find("hopper") != std::string::npos);

  o = run({"gpo", "--crossover", "uniform"});
  CHECK(o.code == 2);
  CHECK(o.err.find("layer-swap") != std::string::npos);

  o = run({"gpo", "--set", "noequals"});
  CHECK(o.code == 2);

  o = run({"teleport"});
  CHECK(o.code == 2);
  o = run({});
  CHECK(o.code == 2);

  const fs::path cfg = scratch("bad.cfg");
  {
    std::ofstream f(cfg);
    f << "# comment\npop = 4\n\ngamma = lots\n";
  }
  o = run({"gpo", "-c", cfg.string()});
  CHECK(o.code == 2);
  CHECK(o.err.find(":4:") != std::string::npos);
  CHECK(o.err.find("gamma") != std::string::npos);
  o = run({"gpo", "-c", (fs::temp_directory_path() / "gpo_no_such_file.cfg").string()});
  CHECK(o.code == 2);
  fs::remove(cfg);
}

TEST_CASE("config echo round trip") {
  GpoConfig c;
  c.env = "pendulum";
  c.pop = 7;
  c.alpha_div_final = 0.25;
  c.crossover = CrossoverMode::layer_swap;
  c.share = false;
  c.gamma = 0.1 + 0.2;  // not exactly representable in short decimal
  c.sweep_pops = {2, 5};
  const std::string echo = config_echo(c);
  GpoConfig back;
  std::istringstream in(echo);
  parse_config(in, back);
  CHECK(config_echo(back) == echo);
  CHECK(back.gamma == c.gamma);
  CHECK(back.alpha_div_final == c.alpha_div_final);
  CHECK(back.sweep_pops == c.sweep_pops);
  CHECK(back.crossover == CrossoverMode::layer_swap);
  for (const auto& k : config_keys()) CHECK(echo.find(k + "=") != std::string::npos);
}

TEST_CASE("gpo writes its outputs and reproduces them byte for byte") {
  const fs::path dir = scratch("gpo");
  auto o = run(tiny_args("gpo", dir));
  REQUIRE_MESSAGE(o.code == 0, o.err);
  for (const char* f : {"config.echo", "runlog.csv", "selection.csv", "crossover.csv", "mutation.csv", "final.csv"})
    CHECK(fs::exists(dir / f));
  CHECK(fs::exists(dir / "policy_6.bin"));
  CHECK(fs::exists(dir / "states_6.csv"));
  const auto first = snapshot(dir);
  fs::remove_all(dir);
  o = run(tiny_args("gpo", dir));
  REQUIRE(o.code == 0);
  CHECK(snapshot(dir) == first);

  // the echo is a valid config file that reproduces the run
  const fs::path again = scratch("gpo_again");
  fs::copy_file(dir / "config.echo", fs::temp_directory_path() / "gpo_test_cli_echo.cfg",
                fs::copy_options::overwrite_existing);
  o = run({"gpo", "-c", (fs::temp_directory_path() / "gpo_test_cli_echo.cfg").string(), "--out", again.string()});
  REQUIRE(o.code == 0);
  auto a = snapshot(again), b = snapshot(dir);
  a.erase("config.echo");
  b.erase("config.echo");
  CHECK(a == b);
  fs::remove_all(dir);
  fs::remove_all(again);
}

TEST_CASE("every subcommand is deterministic") {
  for (const std::string mode : {"single", "joint", "crossover-demo", "scale-sweep", "ablate"}) {
    const fs::path dir = scratch(mode);
    auto o = run(tiny_args(mode, dir, mode == "scale-sweep" ? std::vector<std::string>{"--rounds", "1"}
                                                            : std::vector<std::string>{}));
    REQUIRE_MESSAGE(o.code == 0, mode << ": " << o.err);
    const auto first = snapshot(dir);
    CHECK(first.size() > 2);
    fs::remove_all(dir);
    o = run(tiny_args(mode, dir, mode == "scale-sweep" ? std::vector<std::string>{"--rounds", "1"}
                                                       : std::vector<std::string>{}));
    REQUIRE(o.code == 0);
    CHECK_MESSAGE(snapshot(dir) == first, mode);
    if (mode == "crossover-demo") {
      CHECK(first.count("crossover.csv"));
      CHECK(first.count("policy_child_state.bin"));
      CHECK(first.count("states_child_layer_swap.csv"));
    }
    if (mode == "ablate") {
      CHECK(first.count("ablation.csv"));
      CHECK(first.count("GPO/final.csv"));
      CHECK(first.count("Base+M+C/final.csv"));
    }
    if (mode == "scale-sweep") {
      CHECK(first.count("scale.csv"));
      CHECK(first.count("fixed-total_m2/final.csv"));
    }
    fs::remove_all(dir);
  }
}

TEST_CASE("flags override the config file, --set overrides flags") {
  const fs::path cfg = scratch("order.cfg");
  {
    std::ofstream f(cfg);
    f << "pop = 5\nseed = 9\n";
  }
  const fs::path dir = scratch("order");
  auto args = tiny_args("single", dir, {"-c", cfg.string(), "--set", "seed=11"});
  auto o = run(args);
  REQUIRE(o.code == 0);
  std::ifstream echo(dir / "config.echo");
  GpoConfig back;
  parse_config(echo, back);
  CHECK(back.pop == 3);
  CHECK(back.seed == 11);
  fs::remove_all(dir);
  fs::remove(cfg);
}

TEST_CASE("the binary exits nonzero with a one-line diagnostic") {
  const fs::path err = fs::temp_directory_path() / "gpo_test_cli_stderr.txt";
  const std::string cmd = std::string(GPO_BINARY) + " gpo --algo ppq 2> " + err.string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);
  std::ifstream f(err);
  std::string line, rest;
  std::getline(f, line);
  CHECK(line.find("ppq") != std::string::npos);
  CHECK_FALSE(std::getline(f, rest));
  fs::remove(err);

  const int help = std::system((std::string(GPO_BINARY) + " --help > /dev/null").c_str());
  CHECK(WEXITSTATUS(help) == 0);
}
