#include "gpo/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gpo {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void malformed(const std::string& key, const std::string& value, const std::string& what) {
  throw std::invalid_argument("malformed value '" + value + "' for key '" + key + "' (expected " + what + ")");
}

template <class T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) malformed(key, v, "an integer");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  // strtod rather than from_chars: GCC 11 lacks the floating-point overloads
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) malformed(key, v, "a number");
  return d;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  malformed(key, v, "one of: true, false, on, off, 1, 0");
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

struct Field {
  std::function<void(GpoConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const GpoConfig&)> get;
};

template <class T>
Field int_field(T GpoConfig::*m) {
  return {[m](GpoConfig& c, const std::string& k, const std::string& v) { c.*m = parse_int<T>(k, v); },
          [m](const GpoConfig& c) { return std::to_string(c.*m); }};
}

Field double_field(double GpoConfig::*m) {
  return {[m](GpoConfig& c, const std::string& k, const std::string& v) { c.*m = parse_double(k, v); },
          [m](const GpoConfig& c) { return fmt(c.*m); }};
}

Field bool_field(bool GpoConfig::*m) {
  return {[m](GpoConfig& c, const std::string& k, const std::string& v) { c.*m = parse_bool(k, v); },
          [m](const GpoConfig& c) { return std::string(c.*m ? "true" : "false"); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"env",
       {[](GpoConfig& c, const std::string&, const std::string& v) {
          if (v.empty()) throw std::invalid_argument("missing env name");
          if (!is_known_env(v)) make_env(v);
          c.env = v;
        },
        [](const GpoConfig& c) { return c.env; }}},
      {"pop", int_field(&GpoConfig::pop)},
      {"rounds", int_field(&GpoConfig::rounds)},
      {"algo",
       {[](GpoConfig& c, const std::string&, const std::string& v) { c.algo = mutation_algo_from_string(v); },
        [](const GpoConfig& c) { return to_string(c.algo); }}},
      {"iterations", int_field(&GpoConfig::iterations)},
      {"batch", int_field(&GpoConfig::batch)},
      {"horizon", int_field(&GpoConfig::horizon)},
      {"gamma", double_field(&GpoConfig::gamma)},
      {"policy_lr", double_field(&GpoConfig::policy_lr)},
      {"ppo_epochs", int_field(&GpoConfig::ppo_epochs)},
      {"epsilon", double_field(&GpoConfig::epsilon)},
      {"target_kl", double_field(&GpoConfig::target_kl)},
      {"critic_lr", double_field(&GpoConfig::critic_lr)},
      {"critic_epochs", int_field(&GpoConfig::critic_epochs)},
      {"bootstrap",
       {[](GpoConfig& c, const std::string& k, const std::string& v) {
          if (v == "zero") c.bootstrap = HorizonBootstrap::zero;
          else if (v == "critic") c.bootstrap = HorizonBootstrap::critic;
          else malformed(k, v, "one of: zero, critic");
        },
        [](const GpoConfig& c) { return std::string(c.bootstrap == HorizonBootstrap::zero ? "zero" : "critic"); }}},
      {"keep_fraction", double_field(&GpoConfig::keep_fraction)},
      {"selector_epochs", int_field(&GpoConfig::selector_epochs)},
      {"dagger_expert", int_field(&GpoConfig::dagger_expert)},
      {"dagger_student", int_field(&GpoConfig::dagger_student)},
      {"dagger_iterations", int_field(&GpoConfig::dagger_iterations)},
      {"dagger_epochs", int_field(&GpoConfig::dagger_epochs)},
      {"alpha_perf", double_field(&GpoConfig::alpha_perf)},
      {"alpha_div", double_field(&GpoConfig::alpha_div)},
      {"alpha_div_final",
       {[](GpoConfig& c, const std::string& k, const std::string& v) {
          if (v == "none") c.alpha_div_final.reset();
          else c.alpha_div_final = parse_double(k, v);
        },
        [](const GpoConfig& c) { return c.alpha_div_final ? fmt(*c.alpha_div_final) : std::string("none"); }}},
      {"symmetric_kl", bool_field(&GpoConfig::symmetric_kl)},
      {"crossover",
       {[](GpoConfig& c, const std::string&, const std::string& v) { c.crossover = crossover_mode_from_string(v); },
        [](const GpoConfig& c) { return to_string(c.crossover); }}},
      {"select",
       {[](GpoConfig& c, const std::string&, const std::string& v) { c.select = select_mode_from_string(v); },
        [](const GpoConfig& c) { return to_string(c.select); }}},
      {"share", bool_field(&GpoConfig::share)},
      {"budget", int_field(&GpoConfig::budget)},
      {"eval_episodes", int_field(&GpoConfig::eval_episodes)},
      {"eval_deterministic", bool_field(&GpoConfig::eval_deterministic)},
      {"seed", int_field(&GpoConfig::seed)},
      {"out",
       {[](GpoConfig& c, const std::string& k, const std::string& v) {
          if (v.empty()) malformed(k, v, "a directory");
          c.out = v;
        },
        [](const GpoConfig& c) { return c.out; }}},
      {"pretrain_iterations", int_field(&GpoConfig::pretrain_iterations)},
      {"sweep_pops",
       {[](GpoConfig& c, const std::string& k, const std::string& v) {
          std::vector<int> pops;
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) pops.push_back(parse_int<int>(k, trim(item)));
          if (pops.empty()) malformed(k, v, "a comma-separated list of population sizes");
          c.sweep_pops = pops;
        },
        [](const GpoConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.sweep_pops.size(); ++i) s += (i ? "," : "") + std::to_string(c.sweep_pops[i]);
          return s;
        }}},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_config_value(GpoConfig& config, const std::string& key, const std::string& value) {
  for (const auto& [name, f] : fields()) {
    if (name == key) {
      f.set(config, key, value);
      return;
    }
  }
  std::string valid;
  for (const auto& k : config_keys()) valid += (valid.empty() ? "" : ", ") + k;
  throw std::invalid_argument("unknown config key '" + key + "' (valid keys: " + valid + ")");
}

void parse_config(std::istream& in, GpoConfig& config, const std::string& source) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    try {
      set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

GpoConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  GpoConfig cfg;
  parse_config(in, cfg, path);
  return cfg;
}

std::string config_echo(const GpoConfig& config) {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + "=" + f.get(config) + "\n";
  return out;
}

}  // namespace gpo
