#include "gpo/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

namespace gpo {
namespace {

constexpr int kTile = 16;

// tanh(x) for the hidden layers. Branch-free so it vectorizes, and every
// lane computes exactly what the scalar path computes. Relative error is a
// few ulp: an odd Taylor series below 0.2, 1 - 2/(e^{2|x|} + 1) above, with
// e^y from a Cody-Waite reduction and a degree-13 polynomial.
inline double tanh_kernel(double x) {
  const double ax = std::min(std::abs(x), 19.5);  // tanh rounds to 1 beyond ~19.06
  // small branch
  const double x2 = x * x;
  double p = 18888466084.0 / 194896477400625.0;
  p = p * x2 - 443861162.0 / 1856156927625.0;
  p = p * x2 + 6404582.0 / 10854718875.0;
  p = p * x2 - 929569.0 / 638512875.0;
  p = p * x2 + 21844.0 / 6081075.0;
  p = p * x2 - 1382.0 / 155925.0;
  p = p * x2 + 62.0 / 2835.0;
  p = p * x2 - 17.0 / 315.0;
  p = p * x2 + 2.0 / 15.0;
  p = p * x2 - 1.0 / 3.0;
  const double small = x + x * (x2 * p);
  // large branch: e^y, y = 2|x| = k ln2 + r
  const double y = 2.0 * ax;
  constexpr double kShift = 6755399441055744.0;  // 1.5 * 2^52 rounds to nearest
  const double kf = (y * 1.4426950408889634074 + kShift) - kShift;
  const double r = (y - kf * 6.93147180369123816490e-01) - kf * 1.90821492927058770002e-10;
  double e = 1.0 / 6227020800.0;
  e = e * r + 1.0 / 479001600.0;
  e = e * r + 1.0 / 39916800.0;
  e = e * r + 1.0 / 3628800.0;
  e = e * r + 1.0 / 362880.0;
  e = e * r + 1.0 / 40320.0;
  e = e * r + 1.0 / 5040.0;
  e = e * r + 1.0 / 720.0;
  e = e * r + 1.0 / 120.0;
  e = e * r + 1.0 / 24.0;
  e = e * r + 1.0 / 6.0;
  e = e * r + 0.5;
  e = e * r + 1.0;
  e = e * r + 1.0;
  // 2^k: k + 1023 lands in the low mantissa bits of kf + 2^52 + 1023
  e *= std::bit_cast<double>(std::bit_cast<std::uint64_t>(kf + 4503599627371519.0) << 52);
  const double large = std::copysign(1.0 - 2.0 / (e + 1.0), x);
  return ax < 0.2 ? small : large;
}

using v8 = double __attribute__((vector_size(64)));

inline v8 load8(const double* p) {
  v8 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store8(double* p, v8 v) { std::memcpy(p, &v, sizeof v); }

// z[:, j0 .. j0+16) = act(W x + b) for one full column tile, accumulators in
// registers. Per column the arithmetic is b + w_0 x_0 + w_1 x_1 + ..., the
// same sequence dense_tail() performs, so a sample's result does not depend
// on its position in the batch.
void dense_tile(const double* w, const double* b, const Matrix& x, Matrix& z, int in, int out, int j0,
                bool hidden) {
  int o = 0;
  for (; o + 2 <= out; o += 2) {
    const double* w0 = w + static_cast<std::size_t>(o) * in;
    const double* w1 = w0 + in;
    v8 a0 = v8{} + b[o], a1 = a0, c0 = v8{} + b[o + 1], c1 = c0;
    for (int k = 0; k < in; ++k) {
      const double* xr = x.row(k) + j0;
      const v8 x0 = load8(xr), x1 = load8(xr + 8);
      a0 += w0[k] * x0;
      a1 += w0[k] * x1;
      c0 += w1[k] * x0;
      c1 += w1[k] * x1;
    }
    double* z0 = z.row(o) + j0;
    double* z1 = z.row(o + 1) + j0;
    store8(z0, a0);
    store8(z0 + 8, a1);
    store8(z1, c0);
    store8(z1 + 8, c1);
    if (hidden)
      for (int j = 0; j < kTile; ++j) {
        z0[j] = tanh_kernel(z0[j]);
        z1[j] = tanh_kernel(z1[j]);
      }
  }
  for (; o < out; ++o) {
    const double* w0 = w + static_cast<std::size_t>(o) * in;
    v8 a0 = v8{} + b[o], a1 = a0;
    for (int k = 0; k < in; ++k) {
      const double* xr = x.row(k) + j0;
      a0 += w0[k] * load8(xr);
      a1 += w0[k] * load8(xr + 8);
    }
    double* z0 = z.row(o) + j0;
    store8(z0, a0);
    store8(z0 + 8, a1);
    if (hidden)
      for (int j = 0; j < kTile; ++j) z0[j] = tanh_kernel(z0[j]);
  }
}

void dense_tail(const double* w, const double* b, const Matrix& x, Matrix& z, int in, int out, int j0, int len,
                bool hidden) {
  for (int o = 0; o < out; ++o) {
    const double* wr = w + static_cast<std::size_t>(o) * in;
    double* zr = z.row(o) + j0;
    for (int j = 0; j < len; ++j) {
      double acc = b[o];
      for (int k = 0; k < in; ++k) acc += wr[k] * x(k, j0 + j);
      zr[j] = hidden ? tanh_kernel(acc) : acc;
    }
  }
}

inline double hsum(v8 v) { return ((v[0] + v[4]) + (v[1] + v[5])) + ((v[2] + v[6]) + (v[3] + v[7])); }

// g[r][c] = <a_r, b_c> over n columns for rows r in {ra, ra+1} of A and
// c in {cb, cb+1} of B; with one row/column when the pair runs off the end.
void dot_block(const Matrix& a, int ra, int na, const Matrix& b, int cb, int nb, double out[2][2]) {
  const int n = a.cols();
  v8 acc[2][2] = {};
  int j = 0;
  for (; j + 8 <= n; j += 8) {
    const v8 b0 = load8(b.row(cb) + j);
    const v8 b1 = nb > 1 ? load8(b.row(cb + 1) + j) : v8{};
    for (int r = 0; r < na; ++r) {
      const v8 av = load8(a.row(ra + r) + j);
      acc[r][0] += av * b0;
      acc[r][1] += av * b1;
    }
  }
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      double s = hsum(acc[r][c]);
      if (r < na && c < nb)
        for (int t = j; t < n; ++t) s += a(ra + r, t) * b(cb + c, t);
      out[r][c] = s;
    }
}

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw ShapeError("mlp needs at least an input and an output size");
  for (int s : sizes)
    if (s < 1) throw ShapeError("mlp layer sizes must be positive");
}

}  // namespace

Vec Matrix::column(int c) const {
  Vec out(rows_);
  for (int r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::set_column(int c, std::span<const double> v) {
  if (static_cast<int>(v.size()) != rows_) throw ShapeError("column length mismatch");
  for (int r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  check_sizes(sizes_);
  init_offsets();
  params_.assign(param_count(sizes_), 0.0);
}

Mlp Mlp::glorot(std::vector<int> layer_sizes, Rng& rng) {
  Mlp net(std::move(layer_sizes));
  for (int l = 0; l < net.num_layers(); ++l) {
    const int in = net.sizes_[l];
    const int out = net.sizes_[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    double* w = net.params_.data() + net.offsets_[l];
    for (int i = 0; i < in * out; ++i) w[i] = uniform(rng, -limit, limit);
  }
  return net;
}

std::size_t Mlp::param_count(std::span<const int> layer_sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    n += static_cast<std::size_t>(layer_sizes[l + 1]) * (layer_sizes[l] + 1);
  return n;
}

void Mlp::init_offsets() {
  offsets_.clear();
  std::size_t off = 0;
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(off);
    off += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
}

void Mlp::unflatten(std::span<const double> flat) {
  if (flat.size() != params_.size())
    throw ShapeError("flat parameter vector has " + std::to_string(flat.size()) +
                     " entries, expected " + std::to_string(params_.size()));
  std::copy(flat.begin(), flat.end(), params_.begin());
}

Vec Mlp::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_dim())
    throw ShapeError("input has " + std::to_string(input.size()) + " entries, expected " +
                     std::to_string(input_dim()));
  Matrix x(input_dim(), 1);
  x.set_column(0, input);
  return forward(x).column(0);
}

Matrix Mlp::forward(const Matrix& input, Tape* tape) const {
  if (input.rows() != input_dim())
    throw ShapeError("input has " + std::to_string(input.rows()) + " rows, expected " +
                     std::to_string(input_dim()));
  const int n = input.cols();
  if (tape) {
    tape->activations.clear();
    tape->activations.reserve(sizes_.size());
    tape->activations.push_back(input);
  }
  Matrix cur;
  const Matrix* x = &input;
  for (int l = 0; l < num_layers(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* b = w + static_cast<std::size_t>(out) * in;
    const bool hidden = l + 1 < num_layers();
    Matrix z(out, n);
    int j0 = 0;
    for (; j0 + kTile <= n; j0 += kTile) dense_tile(w, b, *x, z, in, out, j0, hidden);
    if (j0 < n) dense_tail(w, b, *x, z, in, out, j0, n - j0, hidden);
    if (tape) {
      tape->activations.push_back(std::move(z));
      x = &tape->activations.back();
    } else {
      cur = std::move(z);
      x = &cur;
    }
  }
  return tape ? tape->activations.back() : cur;
}

Vec Mlp::backward(const Tape& tape, const Matrix& upstream) const {
  if (tape.activations.size() != sizes_.size())
    throw ShapeError("tape does not match network depth");
  const int n = tape.activations.front().cols();
  if (upstream.rows() != output_dim() || upstream.cols() != n)
    throw ShapeError("upstream gradient shape mismatch");
  Vec grad(params_.size(), 0.0);
  Matrix delta = upstream;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const Matrix& a_in = tape.activations[l];
    const Matrix& a_out = tape.activations[l + 1];
    if (l + 1 < num_layers()) {
      for (int o = 0; o < out; ++o) {
        double* dr = delta.row(o);
        const double* ar = a_out.row(o);
        for (int j = 0; j < n; ++j) dr[j] *= 1.0 - ar[j] * ar[j];
      }
    }
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + static_cast<std::size_t>(out) * in;
    for (int o = 0; o < out; o += 2) {
      const int no = std::min(2, out - o);
      for (int k = 0; k < in; k += 2) {
        const int nk = std::min(2, in - k);
        double g[2][2];
        dot_block(delta, o, no, a_in, k, nk, g);
        for (int r = 0; r < no; ++r)
          for (int c = 0; c < nk; ++c) gw[static_cast<std::size_t>(o + r) * in + k + c] = g[r][c];
      }
      for (int r = 0; r < no; ++r) {
        const double* dr = delta.row(o + r);
        v8 acc{};
        int j = 0;
        for (; j + 8 <= n; j += 8) acc += load8(dr + j);
        double s = hsum(acc);
        for (; j < n; ++j) s += dr[j];
        gb[o + r] = s;
      }
    }
    if (l == 0) break;
    // prev = W^T delta, one 16-column tile at a time with register accumulators
    const double* w = params_.data() + offsets_[l];
    Matrix prev(in, n);
    int j0 = 0;
    for (; j0 + kTile <= n; j0 += kTile) {
      for (int k = 0; k < in; ++k) {
        v8 a0{}, a1{};
        for (int o = 0; o < out; ++o) {
          const double wk = w[static_cast<std::size_t>(o) * in + k];
          const double* dr = delta.row(o) + j0;
          a0 += wk * load8(dr);
          a1 += wk * load8(dr + 8);
        }
        store8(prev.row(k) + j0, a0);
        store8(prev.row(k) + j0 + 8, a1);
      }
    }
    for (int k = 0; k < in; ++k)
      for (int j = j0; j < n; ++j) {
        double acc = 0.0;
        for (int o = 0; o < out; ++o) acc += w[static_cast<std::size_t>(o) * in + k] * delta(o, j);
        prev(k, j) = acc;
      }
    delta = std::move(prev);
  }
  return grad;
}

Vec Mlp::backward(std::span<const double> input, std::span<const double> upstream) const {
  if (static_cast<int>(input.size()) != input_dim() ||
      static_cast<int>(upstream.size()) != output_dim())
    throw ShapeError("backward input/upstream length mismatch");
  Matrix x(input_dim(), 1);
  x.set_column(0, input);
  Tape tape;
  forward(x, &tape);
  Matrix up(output_dim(), 1);
  up.set_column(0, upstream);
  return backward(tape, up);
}

AdamState AdamState::for_size(std::size_t n, double lr) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(AdamState& s, std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size() || s.m.size() != params.size() || s.v.size() != params.size())
    throw ShapeError("adam: parameter, gradient and moment sizes differ");
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grad[i];
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    const double mhat = s.m[i] / c1;
    const double vhat = s.v[i] / c2;
    params[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

double DiagGaussian::std(int i) const { return std::exp(log_std[i]); }

double gauss_log_prob(const DiagGaussian& d, std::span<const double> action) {
  if (static_cast<int>(action.size()) != d.dim()) throw ShapeError("action dimension mismatch");
  double lp = 0.0;
  for (int i = 0; i < d.dim(); ++i) {
    const double z = (action[i] - d.mean[i]) * std::exp(-d.log_std[i]);
    lp += -0.5 * z * z - d.log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

double gauss_kl(const DiagGaussian& p, const DiagGaussian& q) {
  if (p.dim() != q.dim()) throw ShapeError("kl: dimension mismatch");
  double kl = 0.0;
  for (int i = 0; i < p.dim(); ++i) {
    const double var_p = std::exp(2.0 * p.log_std[i]);
    const double var_q = std::exp(2.0 * q.log_std[i]);
    const double dm = p.mean[i] - q.mean[i];
    kl += q.log_std[i] - p.log_std[i] + (var_p + dm * dm) / (2.0 * var_q) - 0.5;
  }
  return kl;
}

double gauss_entropy(const DiagGaussian& d) {
  double h = 0.0;
  for (int i = 0; i < d.dim(); ++i) h += 0.5 + kHalfLog2Pi + d.log_std[i];
  return h;
}

Vec gauss_sample(const DiagGaussian& d, Rng& rng) {
  Vec a(d.dim());
  for (int i = 0; i < d.dim(); ++i) a[i] = d.mean[i] + d.std(i) * standard_normal(rng);
  return a;
}

Binary2 binary_head(std::span<const double> logits) {
  if (logits.size() != 2) throw ShapeError("binary head expects 2 logits");
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double p0 = e0 / (e0 + e1);
  return Binary2{{p0, 1.0 - p0}};
}

GaussianPolicy GaussianPolicy::create(int obs_dim, int act_dim, std::span<const int> hidden,
                                      Rng& rng) {
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(act_dim);
  return GaussianPolicy{Mlp::glorot(std::move(sizes), rng), Vec(act_dim, 0.0)};
}

Vec GaussianPolicy::flatten() const {
  Vec flat = mean_net.flatten();
  flat.insert(flat.end(), log_std.begin(), log_std.end());
  return flat;
}

void GaussianPolicy::unflatten(std::span<const double> flat) {
  if (flat.size() != param_count()) throw ShapeError("policy flat vector length mismatch");
  const std::size_t n = mean_net.param_count();
  mean_net.unflatten(flat.first(n));
  std::copy(flat.begin() + n, flat.end(), log_std.begin());
}

DiagGaussian GaussianPolicy::distribution(std::span<const double> obs) const {
  return DiagGaussian{mean_net.forward(obs), log_std};
}

Vec GaussianPolicy::gradient(const Mlp::Tape& tape, const Matrix& d_mean,
                             std::span<const double> d_log_std) const {
  if (d_log_std.size() != log_std.size()) throw ShapeError("log-std gradient length mismatch");
  Vec g = mean_net.backward(tape, d_mean);
  g.insert(g.end(), d_log_std.begin(), d_log_std.end());
  return g;
}

// ---- serialization ----

namespace {

static_assert(std::endian::native == std::endian::little, "snapshot format assumes little-endian host");

template <class T>
void write_le(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_le(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("snapshot truncated");
  return v;
}

void write_snapshot(std::ostream& out, const std::vector<int>& sizes, std::span<const double> flat) {
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(sizes.size()));
  for (int s : sizes) write_le<std::int32_t>(out, s);
  for (double v : flat) write_le<double>(out, v);
  if (!out) throw std::runtime_error("snapshot write failed");
}

std::pair<std::vector<int>, Vec> read_snapshot(std::istream& in) {
  const auto count = read_le<std::uint32_t>(in);
  if (count < 2 || count > 64) throw std::runtime_error("snapshot header has invalid layer count");
  std::vector<int> sizes(count);
  for (auto& s : sizes) s = read_le<std::int32_t>(in);
  Vec flat;
  double v;
  while (in.read(reinterpret_cast<char*>(&v), sizeof(double))) flat.push_back(v);
  if (in.gcount() != 0) throw std::runtime_error("snapshot has a partial trailing value");
  return {std::move(sizes), std::move(flat)};
}

}  // namespace

void save_mlp(std::ostream& out, const Mlp& net) {
  write_snapshot(out, net.layer_sizes(), net.params());
}

Mlp load_mlp(std::istream& in) {
  auto [sizes, flat] = read_snapshot(in);
  Mlp net(sizes);
  net.unflatten(flat);
  return net;
}

void save_policy(std::ostream& out, const GaussianPolicy& policy) {
  write_snapshot(out, policy.mean_net.layer_sizes(), policy.flatten());
}

GaussianPolicy load_policy(std::istream& in) {
  auto [sizes, flat] = read_snapshot(in);
  GaussianPolicy p{Mlp(sizes), Vec(sizes.back(), 0.0)};
  p.unflatten(flat);
  return p;
}

void save_policy(const std::string& path, const GaussianPolicy& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_policy(out, policy);
}

GaussianPolicy load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_policy(in);
}

}  // namespace gpo
