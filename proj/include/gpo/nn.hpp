#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpo/rng.hpp"

namespace gpo {

using Vec = std::vector<double>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix. Batched network data is stored feature-major:
/// one row per feature, one column per sample.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  Vec column(int c) const;
  void set_column(int c, std::span<const double> v);
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// Fixed-topology perceptron: tanh at hidden layers, identity at the output.
///
/// Parameters live in one flat vector. For each layer in order the block is
/// the weight matrix (out x in, row-major) followed by the bias (out).
class Mlp {
 public:
  /// Activations kept from a batched forward pass, consumed by backward().
  struct Tape {
    std::vector<Matrix> activations;  // [0] = input, [l+1] = output of layer l
  };

  Mlp() = default;
  /// All-zero parameters.
  explicit Mlp(std::vector<int> layer_sizes);
  /// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
  static Mlp glorot(std::vector<int> layer_sizes, Rng& rng);

  static std::size_t param_count(std::span<const int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  std::size_t param_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  /// Copy of the flat parameter vector.
  Vec flatten() const { return params_; }
  void unflatten(std::span<const double> flat);

  /// Offset of layer l's weight block inside the flat vector; the bias follows
  /// at offset + out * in.
  std::size_t layer_offset(int layer) const { return offsets_.at(layer); }

  Vec forward(std::span<const double> input) const;
  /// Columns of `input` are samples. Each column is computed with the same
  /// operation order regardless of batch size, so a sample's output is
  /// bit-identical whether evaluated alone or inside a batch.
  Matrix forward(const Matrix& input, Tape* tape = nullptr) const;

  /// Gradient of sum_n <upstream[:, n], output[:, n]> w.r.t. the flat parameters.
  Vec backward(const Tape& tape, const Matrix& upstream) const;
  Vec backward(std::span<const double> input, std::span<const double> upstream) const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  void init_offsets();

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  Vec params_;
};

struct AdamState {
  Vec m;
  Vec v;
  std::int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_size(std::size_t n, double lr);
};

/// One bias-corrected Adam descent step on `params` (minimizes).
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad);

/// Per-state action distribution; standard deviations are kept as logs so
/// they stay positive under any update.
struct DiagGaussian {
  Vec mean;
  Vec log_std;

  int dim() const { return static_cast<int>(mean.size()); }
  double std(int i) const;
};

double gauss_log_prob(const DiagGaussian& d, std::span<const double> action);
double gauss_kl(const DiagGaussian& p, const DiagGaussian& q);
double gauss_entropy(const DiagGaussian& d);
Vec gauss_sample(const DiagGaussian& d, Rng& rng);

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

struct Binary2 {
  std::array<double, 2> probs{0.5, 0.5};
};

Binary2 binary_head(std::span<const double> logits);

/// Gaussian policy: the mean is an Mlp of the observation and the log-std is a
/// free, state-independent vector. Flat layout: mean-net params then log-std.
struct GaussianPolicy {
  Mlp mean_net;
  Vec log_std;

  static GaussianPolicy create(int obs_dim, int act_dim, std::span<const int> hidden, Rng& rng);

  int obs_dim() const { return mean_net.input_dim(); }
  int act_dim() const { return mean_net.output_dim(); }
  std::size_t param_count() const { return mean_net.param_count() + log_std.size(); }
  Vec flatten() const;
  void unflatten(std::span<const double> flat);

  DiagGaussian distribution(std::span<const double> obs) const;

  /// Flat gradient from per-sample mean gradients (act_dim x N, taken through
  /// `tape`) and the log-std gradient.
  Vec gradient(const Mlp::Tape& tape, const Matrix& d_mean, std::span<const double> d_log_std) const;

  friend bool operator==(const GaussianPolicy&, const GaussianPolicy&) = default;
};

// Binary snapshot format, all little-endian:
//   u32 layer count L, then L x i32 layer sizes, then the flat parameter
//   vector as f64. A policy file appends the log-std after the mean-net
//   parameters (act_dim extra values).
void save_mlp(std::ostream& out, const Mlp& net);
Mlp load_mlp(std::istream& in);
void save_policy(std::ostream& out, const GaussianPolicy& policy);
GaussianPolicy load_policy(std::istream& in);
void save_policy(const std::string& path, const GaussianPolicy& policy);
GaussianPolicy load_policy(const std::string& path);

}  // namespace gpo
