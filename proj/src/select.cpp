#include "gpo/select.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace gpo {

double performance_fitness(double rx, double ry) { return rx + ry; }

double diversity_fitness(const GaussianPolicy& px, const GaussianPolicy& py, const Matrix& probes, bool symmetric) {
  if (probes.cols() == 0) throw std::invalid_argument("diversity_fitness: empty probe set");
  if (px.obs_dim() != probes.rows() || py.obs_dim() != probes.rows() || px.act_dim() != py.act_dim())
    throw ShapeError("diversity_fitness: policy and probe dimensions differ");
  const Matrix mx = px.mean_net.forward(probes);
  const Matrix my = py.mean_net.forward(probes);
  const int n = probes.cols();
  DiagGaussian a{Vec(px.act_dim()), px.log_std}, b{Vec(py.act_dim()), py.log_std};
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int d = 0; d < a.dim(); ++d) {
      a.mean[d] = mx(d, j);
      b.mean[d] = my(d, j);
    }
    sum += symmetric ? 0.5 * (gauss_kl(a, b) + gauss_kl(b, a)) : gauss_kl(a, b);
  }
  return sum / n;
}

namespace {

std::vector<Couple> score_all(const FitnessTable& t, FitnessWeights w) {
  const int m = t.size();
  const bool use_div = w.div != 0.0;
  if (use_div && static_cast<int>(t.diversity.size()) != m)
    throw std::invalid_argument("select: diversity weight is non-zero but the diversity table is missing");
  std::vector<Couple> all;
  all.reserve(couple_count(m));
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      Couple c{i, j, performance_fitness(t.returns[i], t.returns[j]), 0.0, 0.0};
      if (!t.diversity.empty()) c.f_div = t.diversity.at(i).at(j);
      c.score = w.perf * c.f_perf + (use_div ? w.div * c.f_div : 0.0);
      all.push_back(c);
    }
  return all;
}

void check_count(int m, int count) {
  if (m < 2) throw std::invalid_argument("select: population needs at least 2 policies");
  if (count < 0 || count > couple_count(m))
    throw std::invalid_argument("select: count " + std::to_string(count) + " exceeds the " +
                                std::to_string(couple_count(m)) + " available couples");
}

}  // namespace

std::vector<Couple> select_couples(const FitnessTable& table, FitnessWeights weights, int count) {
  check_count(table.size(), count);
  std::vector<Couple> all = score_all(table, weights);
  // all is generated in lexicographic order, so a stable sort keeps that order among ties
  std::stable_sort(all.begin(), all.end(), [](const Couple& a, const Couple& b) { return a.score > b.score; });
  all.resize(count);
  return all;
}

std::vector<Couple> random_couples(const FitnessTable& table, FitnessWeights weights, int count, Rng& rng) {
  check_count(table.size(), count);
  std::vector<Couple> all = score_all(table, weights);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(count);
  return all;
}

}  // namespace gpo
