#pragma once

#include <vector>

#include "gpo/nn.hpp"
#include "gpo/rng.hpp"

namespace gpo {

struct Couple {
  int i = 0;  // i < j
  int j = 0;
  double f_perf = 0.0;
  double f_div = 0.0;
  double score = 0.0;
};

double performance_fitness(double mean_return_x, double mean_return_y);

/// Mean closed-form KL between the two policies' action distributions over
/// the probe states (columns). symmetric: 0.5 * (KL(x||y) + KL(y||x)).
double diversity_fitness(const GaussianPolicy& px, const GaussianPolicy& py, const Matrix& probe_states,
                         bool symmetric = true);

struct FitnessWeights {
  double perf = 1.0;
  double div = 0.0;
};

/// Per-policy mean returns plus an optional symmetric m x m diversity table
/// (may be left empty when the diversity weight is zero).
struct FitnessTable {
  std::vector<double> returns;
  std::vector<std::vector<double>> diversity;

  int size() const { return static_cast<int>(returns.size()); }
};

/// Scores all C(m,2) couples and returns the top `count` by score (descending),
/// ties broken by lexicographic (i, j). Throws when count > C(m,2).
std::vector<Couple> select_couples(const FitnessTable& table, FitnessWeights weights, int count);

/// `count` distinct couples drawn uniformly at random (scores filled in for logging).
std::vector<Couple> random_couples(const FitnessTable& table, FitnessWeights weights, int count, Rng& rng);

inline int couple_count(int m) { return m * (m - 1) / 2; }

}  // namespace gpo
