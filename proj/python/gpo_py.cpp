// Python bindings: configuration, the run modes, and the small numeric pieces
// that are handy from notebooks.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "gpo/cli.hpp"
#include "gpo/config.hpp"
#include "gpo/driver.hpp"
#include "gpo/rollout.hpp"
#include "gpo/select.hpp"

namespace py = pybind11;
using namespace gpo;

namespace {

GpoConfig make_config(const std::map<std::string, std::string>& values) {
  GpoConfig c;
  for (const auto& [k, v] : values) set_config_value(c, k, v);
  c.validate();
  return c;
}

py::dict summarize(const RunLog& log) {
  std::ostringstream runlog, final_csv;
  write_runlog_csv(runlog, log);
  write_final_csv(final_csv, log);
  std::vector<double> finals;
  for (const auto& e : log.final_eval) finals.push_back(e.mean_return);
  py::dict d;
  d["mode"] = log.mode;
  d["transitions"] = log.transitions;
  d["eval_transitions"] = log.eval_transitions;
  d["iterations_per_policy"] = log.iterations_per_policy;
  d["step_batch"] = log.step_batch;
  d["final_ids"] = log.final_ids;
  d["final_returns"] = finals;
  d["best_return"] = log.best_return();
  d["runlog_csv"] = runlog.str();
  d["final_csv"] = final_csv.str();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Genetic policy optimization core";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("config_keys", &config_keys);
  m.def(
      "config_echo", [](const std::map<std::string, std::string>& values) { return config_echo(make_config(values)); },
      py::arg("values") = std::map<std::string, std::string>{});
  m.def(
      "budget", [](const std::map<std::string, std::string>& values) { return make_config(values).per_policy_budget(); },
      py::arg("values") = std::map<std::string, std::string>{}, "per-policy transition budget");

  auto run_mode = [](RunLog (*fn)(const GpoConfig&)) {
    return [fn](const std::map<std::string, std::string>& values) {
      const GpoConfig c = make_config(values);
      RunLog log;
      {
        py::gil_scoped_release release;
        log = fn(c);
      }
      return summarize(log);
    };
  };
  m.def("gpo_run", run_mode(&gpo_run), py::arg("values") = std::map<std::string, std::string>{});
  m.def("single_run", run_mode(&single_run), py::arg("values") = std::map<std::string, std::string>{});
  m.def("joint_run", run_mode(&joint_run), py::arg("values") = std::map<std::string, std::string>{});

  m.def(
      "main",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = parse_and_dispatch(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      "run the command line in-process; returns (exit code, stdout, stderr)");

  m.def(
      "gauss_log_prob",
      [](const Vec& mean, const Vec& log_std, const Vec& a) { return gauss_log_prob(DiagGaussian{mean, log_std}, a); },
      py::arg("mean"), py::arg("log_std"), py::arg("action"));
  m.def(
      "gauss_kl",
      [](const Vec& mp, const Vec& lp, const Vec& mq, const Vec& lq) {
        return gauss_kl(DiagGaussian{mp, lp}, DiagGaussian{mq, lq});
      },
      py::arg("mean_p"), py::arg("log_std_p"), py::arg("mean_q"), py::arg("log_std_q"));
  m.def(
      "gauss_entropy", [](const Vec& mean, const Vec& log_std) { return gauss_entropy(DiagGaussian{mean, log_std}); },
      py::arg("mean"), py::arg("log_std"));

  m.def(
      "discounted_returns",
      [](const Vec& rewards, double gamma, double bootstrap) { return discounted_returns(rewards, gamma, bootstrap); },
      py::arg("rewards"), py::arg("gamma"), py::arg("bootstrap") = 0.0);

  m.def(
      "select_couples",
      [](const std::vector<double>& returns, const std::vector<std::vector<double>>& diversity, double perf,
         double div, int count) {
        std::vector<std::pair<int, int>> out;
        for (const Couple& c : select_couples(FitnessTable{returns, diversity}, FitnessWeights{perf, div}, count))
          out.emplace_back(c.i, c.j);
        return out;
      },
      py::arg("returns"), py::arg("diversity") = std::vector<std::vector<double>>{}, py::arg("perf") = 1.0,
      py::arg("div") = 0.0, py::arg("count") = 0);

  m.def("relative_score", &relative_score, py::arg("value"), py::arg("reference"));
}
