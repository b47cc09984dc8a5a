#include "gpo/crossover.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gpo {

bool WeightedStateSet::has_both_labels() const {
  bool x = false, y = false;
  for (ParentLabel l : labels) (l == ParentLabel::x ? x : y) = true;
  return x && y;
}

WeightedStateSet build_selector_dataset(const Batch& batch_x, const Batch& batch_y, double keep_fraction) {
  if (batch_x.trajectories.empty() || batch_y.trajectories.empty())
    throw std::invalid_argument("build_selector_dataset: both parent batches must be non-empty");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw std::invalid_argument("build_selector_dataset: keep_fraction must lie in (0, 1]");

  struct Entry {
    double ret;
    ParentLabel label;
    const Trajectory* traj;
  };
  auto pool_of = [&](bool complete_only) {
    std::vector<Entry> pool;
    for (const Trajectory& t : batch_x.trajectories)
      if (!complete_only || t.complete()) pool.push_back({t.total_return(), ParentLabel::x, &t});
    for (const Trajectory& t : batch_y.trajectories)
      if (!complete_only || t.complete()) pool.push_back({t.total_return(), ParentLabel::y, &t});
    return pool;
  };
  std::vector<Entry> pool = pool_of(true);
  if (pool.empty()) pool = pool_of(false);

  std::stable_sort(pool.begin(), pool.end(), [](const Entry& a, const Entry& b) { return a.ret > b.ret; });
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(pool.size()) - 1e-9)));
  pool.resize(std::min(keep, pool.size()));

  const double hi = pool.front().ret;
  const double lo = pool.back().ret;
  WeightedStateSet out;
  out.kept_trajectories = static_cast<int>(pool.size());
  for (const Entry& e : pool) {
    const double w = hi > lo ? (e.ret - lo) / (hi - lo) : 1.0;
    for (const Step& s : e.traj->steps) {
      out.states.push_back(s.observation);
      out.labels.push_back(e.label);
      out.weights.push_back(w);
    }
  }
  if (out.states.empty()) throw std::runtime_error("build_selector_dataset: no states left after filtering");
  return out;
}

Mlp make_selector(int obs_dim, Rng& rng) { return Mlp::glorot({obs_dim, 32, 32, 2}, rng); }

namespace {

Matrix stack(const std::vector<Vec>& states, std::span<const int> idx) {
  Matrix m(static_cast<int>(states.front().size()), static_cast<int>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) m.set_column(static_cast<int>(j), states[idx[j]]);
  return m;
}

std::vector<int> iota_n(std::size_t n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// Loss and gradient over the samples `idx`, normalized by idx.size().
std::pair<double, Vec> selector_objective(const Mlp& sel, const WeightedStateSet& data, std::span<const int> idx) {
  Mlp::Tape tape;
  const Matrix logits = sel.forward(stack(data.states, idx), &tape);
  const int n = static_cast<int>(idx.size());
  Matrix up(2, n);
  double loss = 0.0;
  for (int j = 0; j < n; ++j) {
    const int k = static_cast<int>(data.labels[idx[j]]);
    const double w = data.weights[idx[j]];
    const double mx = std::max(logits(0, j), logits(1, j));
    const double lse = mx + std::log(std::exp(logits(0, j) - mx) + std::exp(logits(1, j) - mx));
    loss -= w * (logits(k, j) - lse);
    for (int c = 0; c < 2; ++c) {
      const double p = std::exp(logits(c, j) - lse);
      up(c, j) = w * (p - (c == k ? 1.0 : 0.0)) / n;
    }
  }
  return {loss / n, sel.backward(tape, up)};
}

}  // namespace

double selector_loss(const Mlp& selector, const WeightedStateSet& data) {
  if (data.size() == 0) return 0.0;
  const auto idx = iota_n(data.size());
  return selector_objective(selector, data, idx).first;
}

Vec selector_loss_gradient(const Mlp& selector, const WeightedStateSet& data) {
  const auto idx = iota_n(data.size());
  return selector_objective(selector, data, idx).second;
}

Mlp train_selector(const Mlp& init, const WeightedStateSet& data, const SelectorTrainOptions& opt, Rng& rng) {
  if (data.size() == 0) throw std::invalid_argument("train_selector: empty dataset");
  if (init.output_dim() != 2) throw ShapeError("selector must output 2 logits");
  Mlp net = init;
  AdamState adam = AdamState::for_size(net.param_count(), opt.lr);
  auto order = iota_n(data.size());
  const int n = static_cast<int>(order.size());
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n; start += opt.minibatch) {
      const int len = std::min(opt.minibatch, n - start);
      auto [loss, grad] = selector_objective(net, data, std::span<const int>(order).subspan(start, len));
      if (!std::isfinite(loss)) throw NumericalError("train_selector: non-finite loss at epoch " + std::to_string(epoch));
      adam_step(adam, net.params(), grad);
    }
  }
  return net;
}

double HierarchicalPolicy::prob_x(std::span<const double> state) const {
  return binary_head(selector.forward(state)).probs[0];
}

Vec HierarchicalPolicy::act(std::span<const double> state, Rng& rng) const {
  const double px = prob_x(state);
  std::bernoulli_distribution pick_x(px);
  const GaussianPolicy& parent = pick_x(rng) ? parent_x : parent_y;
  return gauss_sample(parent.distribution(state), rng);
}

DiagGaussian HierarchicalPolicy::expert_dist(std::span<const double> state) const {
  return prob_x(state) >= 0.5 ? parent_x.distribution(state) : parent_y.distribution(state);
}

void HierarchicalPolicy::expert_targets(const Matrix& states, Matrix& means, Matrix& log_stds) const {
  const int n = states.cols();
  const int act = parent_x.act_dim();
  const Matrix logits = selector.forward(states);
  const Matrix mx = parent_x.mean_net.forward(states);
  const Matrix my = parent_y.mean_net.forward(states);
  means = Matrix(act, n);
  log_stds = Matrix(act, n);
  for (int j = 0; j < n; ++j) {
    const double l[2] = {logits(0, j), logits(1, j)};
    const bool use_x = binary_head(l).probs[0] >= 0.5;
    for (int d = 0; d < act; ++d) {
      means(d, j) = use_x ? mx(d, j) : my(d, j);
      log_stds(d, j) = use_x ? parent_x.log_std[d] : parent_y.log_std[d];
    }
  }
}

namespace {

std::pair<double, Vec> distill_objective(const GaussianPolicy& child, const Matrix& states, const Matrix& tm,
                                         const Matrix& tls) {
  const int n = states.cols();
  const int act = child.act_dim();
  Mlp::Tape tape;
  const Matrix mu = child.mean_net.forward(states, &tape);
  Matrix d_mean(act, n);
  Vec d_log_std(act, 0.0);
  double loss = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int d = 0; d < act; ++d) {
      const double var_c = std::exp(2.0 * child.log_std[d]);
      const double inv_var_t = std::exp(-2.0 * tls(d, j));
      const double dm = mu(d, j) - tm(d, j);
      loss += tls(d, j) - child.log_std[d] + (var_c + dm * dm) * 0.5 * inv_var_t - 0.5;
      d_mean(d, j) = dm * inv_var_t / n;
      d_log_std[d] += (var_c * inv_var_t - 1.0) / n;
    }
  }
  return {loss / n, child.gradient(tape, d_mean, d_log_std)};
}

}  // namespace

double distill_loss(const GaussianPolicy& child, const Matrix& states, const Matrix& tm, const Matrix& tls) {
  if (states.cols() == 0) return 0.0;
  return distill_objective(child, states, tm, tls).first;
}

Vec distill_loss_gradient(const GaussianPolicy& child, const Matrix& states, const Matrix& tm, const Matrix& tls) {
  return distill_objective(child, states, tm, tls).second;
}

DistillResult dagger_distill(const HierarchicalPolicy& expert, Env& env, const GaussianPolicy& child_init,
                             const DaggerOptions& opt, Rng& rng) {
  if (child_init.mean_net.layer_sizes() != expert.parent_x.mean_net.layer_sizes())
    throw ShapeError("dagger_distill: child architecture differs from the parents'");
  const std::int64_t calls_before = env.step_calls();
  DistillResult res{child_init, 0, {}};
  AdamState adam = AdamState::for_size(child_init.param_count(), opt.lr);

  std::vector<Vec> states;
  if (opt.expert_transitions > 0) {
    auto expert_act = [&](const Vec& s, Rng& r) { return expert.act(s, r); };
    states = sample_states(expert_act, env, opt.expert_transitions, opt.horizon, rng);
  }
  const std::int64_t expert_count = static_cast<std::int64_t>(states.size());
  const int obs_dim = child_init.obs_dim();
  const int act_dim = child_init.act_dim();
  Matrix all_states(obs_dim, 0), target_means(act_dim, 0), target_log_stds(act_dim, 0);

  for (int it = 1; it <= opt.iterations; ++it) {
    if (opt.student_transitions > 0) {
      auto student_act = [&](const Vec& s, Rng& r) { return gauss_sample(res.child.distribution(s), r); };
      auto fresh = sample_states(student_act, env, opt.student_transitions, opt.horizon, rng);
      states.insert(states.end(), std::make_move_iterator(fresh.begin()), std::make_move_iterator(fresh.end()));
    }
    const int n = static_cast<int>(states.size());
    all_states = Matrix(obs_dim, n);
    for (int j = 0; j < n; ++j) all_states.set_column(j, states[j]);
    expert.expert_targets(all_states, target_means, target_log_stds);

    std::vector<int> order = iota_n(n);
    Vec flat = res.child.flatten();
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (int start = 0; start < n; start += opt.minibatch) {
        const int len = std::min(opt.minibatch, n - start);
        Matrix xs(obs_dim, len), tm(act_dim, len), tl(act_dim, len);
        for (int j = 0; j < len; ++j) {
          const int k = order[start + j];
          for (int r = 0; r < obs_dim; ++r) xs(r, j) = all_states(r, k);
          for (int d = 0; d < act_dim; ++d) {
            tm(d, j) = target_means(d, k);
            tl(d, j) = target_log_stds(d, k);
          }
        }
        auto [loss, grad] = distill_objective(res.child, xs, tm, tl);
        if (!std::isfinite(loss)) throw NumericalError("dagger_distill: non-finite loss in iteration " + std::to_string(it));
        adam_step(adam, flat, grad);
        res.child.unflatten(flat);
      }
    }
    res.iterations.push_back(DaggerIterationStats{it, expert_count, n - expert_count,
                                                  distill_loss(res.child, all_states, target_means, target_log_stds)});
  }
  res.transitions = env.step_calls() - calls_before;
  return res;
}

std::string to_string(CrossoverMode mode) {
  switch (mode) {
    case CrossoverMode::state: return "state";
    case CrossoverMode::best_parent: return "best-parent";
    case CrossoverMode::layer_swap: return "layer-swap";
  }
  return "?";
}

CrossoverMode crossover_mode_from_string(const std::string& s) {
  if (s == "state") return CrossoverMode::state;
  if (s == "best-parent") return CrossoverMode::best_parent;
  if (s == "layer-swap") return CrossoverMode::layer_swap;
  throw std::invalid_argument("invalid crossover mode '" + s + "' (expected one of: state, best-parent, layer-swap)");
}

GaussianPolicy parameter_crossover(const GaussianPolicy& px, const GaussianPolicy& py, CrossoverMode mode,
                                   double return_x, double return_y, Rng& rng) {
  if (px.mean_net.layer_sizes() != py.mean_net.layer_sizes())
    throw ShapeError("parameter_crossover: parent architectures differ");
  switch (mode) {
    case CrossoverMode::best_parent:
      return return_y > return_x ? py : px;
    case CrossoverMode::layer_swap: {
      const int layers = px.mean_net.num_layers();
      std::vector<int> from_y(layers);
      std::bernoulli_distribution coin(0.5);
      while (true) {
        for (int& f : from_y) f = coin(rng) ? 1 : 0;
        const int ys = std::accumulate(from_y.begin(), from_y.end(), 0);
        if (layers == 1 || (ys != 0 && ys != layers)) break;
      }
      GaussianPolicy child = px;
      const auto& sizes = px.mean_net.layer_sizes();
      for (int l = 0; l < layers; ++l) {
        if (!from_y[l]) continue;
        const std::size_t off = px.mean_net.layer_offset(l);
        const std::size_t len = static_cast<std::size_t>(sizes[l + 1]) * (sizes[l] + 1);
        std::copy_n(py.mean_net.params().begin() + off, len, child.mean_net.params().begin() + off);
      }
      if (from_y.back()) child.log_std = py.log_std;
      return child;
    }
    case CrossoverMode::state:
      break;
  }
  throw std::invalid_argument("parameter_crossover: state mode is not a parameter-space crossover");
}

CrossoverResult crossover(const GaussianPolicy& px, const GaussianPolicy& py, const Batch& batch_x,
                          const Batch& batch_y, Env& env, const CrossoverOptions& opt, Rng& rng) {
  const double rx = batch_x.mean_return();
  const double ry = batch_y.mean_return();
  CrossoverResult res;
  if (opt.mode != CrossoverMode::state) {
    res.child = parameter_crossover(px, py, opt.mode, rx, ry, rng);
    return res;
  }
  const WeightedStateSet data = build_selector_dataset(batch_x, batch_y, opt.keep_fraction);
  res.single_label = !data.has_both_labels();
  Mlp selector = make_selector(px.obs_dim(), rng);
  selector = train_selector(selector, data, opt.selector, rng);
  HierarchicalPolicy h{std::move(selector), px, py};
  const GaussianPolicy& init = ry > rx ? py : px;
  DistillResult d = dagger_distill(h, env, init, opt.dagger, rng);
  res.child = std::move(d.child);
  res.transitions = d.transitions;
  res.dagger = std::move(d.iterations);
  return res;
}

}  // namespace gpo
