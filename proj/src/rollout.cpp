#include "gpo/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace gpo {

double Trajectory::total_return() const {
  double r = 0.0;
  for (const Step& s : steps) r += s.reward;
  return r;
}

std::vector<double> Batch::episode_returns() const {
  std::vector<double> out;
  for (const Trajectory& t : trajectories)
    if (t.complete()) out.push_back(t.total_return());
  if (out.empty())
    for (const Trajectory& t : trajectories) out.push_back(t.total_return());
  return out;
}

double Batch::mean_return() const {
  const auto r = episode_returns();
  if (r.empty()) return 0.0;
  return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
}

double Batch::std_error_return() const {
  const auto r = episode_returns();
  if (r.size() < 2) return 0.0;
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
  double ss = 0.0;
  for (double x : r) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(r.size() - 1)) / std::sqrt(static_cast<double>(r.size()));
}

namespace {

template <class Get>
Matrix gather(const Batch& b, int rows, Get get) {
  Matrix m(rows, static_cast<int>(b.transitions));
  int c = 0;
  for (const Trajectory& t : b.trajectories)
    for (const Step& s : t.steps) m.set_column(c++, get(s));
  return m;
}

}  // namespace

Matrix Batch::observations() const {
  return gather(*this, snapshot.obs_dim(), [](const Step& s) -> const Vec& { return s.observation; });
}
Matrix Batch::actions() const {
  return gather(*this, snapshot.act_dim(), [](const Step& s) -> const Vec& { return s.action; });
}
Matrix Batch::means() const {
  return gather(*this, snapshot.act_dim(), [](const Step& s) -> const Vec& { return s.mean; });
}
Matrix Batch::log_stds() const {
  return gather(*this, snapshot.act_dim(), [](const Step& s) -> const Vec& { return s.log_std; });
}
Vec Batch::log_probs() const {
  Vec out;
  out.reserve(transitions);
  for (const Trajectory& t : trajectories)
    for (const Step& s : t.steps) out.push_back(s.log_prob);
  return out;
}

Batch collect(const GaussianPolicy& policy, Env& env, std::int64_t min_transitions, int horizon,
              Rng& rng, std::int64_t max_transitions, int policy_id) {
  if (min_transitions < 1) throw std::invalid_argument("collect: min_transitions must be >= 1");
  if (horizon < 1) throw std::invalid_argument("collect: horizon must be >= 1");
  if (policy.obs_dim() != env.spec().obs_dim || policy.act_dim() != env.spec().act_dim)
    throw ShapeError("collect: policy dimensions do not match " + env.spec().name);
  const std::int64_t cap = max_transitions > 0 ? max_transitions : INT64_MAX;
  if (cap < min_transitions) min_transitions = cap;

  Batch batch;
  batch.policy_id = policy_id;
  batch.snapshot = policy;
  while (batch.transitions < min_transitions) {
    Trajectory traj;
    auto [state, obs] = env.reset(rng);
    while (true) {
      Step st;
      DiagGaussian d = policy.distribution(obs);
      st.action = gauss_sample(d, rng);
      st.log_prob = gauss_log_prob(d, st.action);
      st.observation = std::move(obs);
      st.mean = std::move(d.mean);
      st.log_std = std::move(d.log_std);
      StepResult r = env.step(state, st.action);
      st.reward = r.reward;
      traj.steps.push_back(std::move(st));
      ++batch.transitions;
      state = std::move(r.state);
      obs = std::move(r.observation);
      if (r.done) {
        traj.end = EpisodeEnd::terminal;
        break;
      }
      if (traj.length() >= horizon) {
        traj.end = EpisodeEnd::horizon;
        break;
      }
      if (batch.transitions >= cap) {
        traj.end = EpisodeEnd::budget;
        break;
      }
    }
    traj.final_observation = std::move(obs);
    batch.trajectories.push_back(std::move(traj));
  }
  return batch;
}

Vec discounted_returns(std::span<const double> rewards, double gamma, double bootstrap) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  Vec out(rewards.size());
  double next = bootstrap;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    next = rewards[i] + gamma * next;
    out[i] = next;
  }
  return out;
}

Vec return_targets(const Batch& batch, const Mlp& critic, double gamma, HorizonBootstrap mode) {
  Vec out;
  out.reserve(batch.transitions);
  for (const Trajectory& t : batch.trajectories) {
    double bootstrap = 0.0;
    if (t.end == EpisodeEnd::budget || (t.end == EpisodeEnd::horizon && mode == HorizonBootstrap::critic))
      bootstrap = critic.forward(t.final_observation)[0];
    Vec rewards;
    rewards.reserve(t.steps.size());
    for (const Step& s : t.steps) rewards.push_back(s.reward);
    const Vec r = discounted_returns(rewards, gamma, bootstrap);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

Mlp make_critic(int obs_dim, Rng& rng) { return Mlp::glorot({obs_dim, 32, 32, 1}, rng); }

double critic_mse(const Mlp& critic, const Matrix& states, std::span<const double> targets) {
  const Matrix v = critic.forward(states);
  double s = 0.0;
  for (int j = 0; j < states.cols(); ++j) {
    const double e = v(0, j) - targets[j];
    s += e * e;
  }
  return states.cols() > 0 ? s / states.cols() : 0.0;
}

Vec critic_mse_gradient(const Mlp& critic, const Matrix& states, std::span<const double> targets) {
  const int n = states.cols();
  if (static_cast<int>(targets.size()) != n) throw ShapeError("critic_mse_gradient: one target per state required");
  Mlp::Tape tape;
  const Matrix v = critic.forward(states, &tape);
  Matrix up(1, n);
  for (int j = 0; j < n; ++j) up(0, j) = 2.0 * (v(0, j) - targets[j]) / n;
  return critic.backward(tape, up);
}

Mlp fit_critic(const Mlp& critic, const Batch& batch, const CriticFitOptions& opt, Rng& rng) {
  if (batch.transitions == 0) throw std::invalid_argument("fit_critic: empty batch");
  if (critic.output_dim() != 1) throw ShapeError("critic must have a scalar output");
  const Matrix states = batch.observations();
  const Vec targets = return_targets(batch, critic, opt.gamma, opt.bootstrap);
  const int n = states.cols();

  Mlp net = critic;
  Mlp best = critic;
  double best_mse = critic_mse(critic, states, targets);
  AdamState adam = AdamState::for_size(net.param_count(), opt.lr);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n; start += opt.minibatch) {
      const int len = std::min(opt.minibatch, n - start);
      Matrix x(states.rows(), len);
      Vec y(len);
      for (int j = 0; j < len; ++j) {
        for (int r = 0; r < states.rows(); ++r) x(r, j) = states(r, order[start + j]);
        y[j] = targets[order[start + j]];
      }
      adam_step(adam, net.params(), critic_mse_gradient(net, x, y));
    }
    const double mse = critic_mse(net, states, targets);
    if (!std::isfinite(mse)) throw NumericalError("fit_critic: non-finite loss");
    if (mse < best_mse) {
      best_mse = mse;
      best = net;
    }
  }
  return best;
}

Vec advantages(const Batch& batch, const Mlp& critic, double gamma, bool normalize, HorizonBootstrap mode) {
  if (critic.input_dim() != batch.snapshot.obs_dim()) throw ShapeError("critic/observation dimension mismatch");
  Vec adv = return_targets(batch, critic, gamma, mode);
  const Matrix v = critic.forward(batch.observations());
  for (std::size_t i = 0; i < adv.size(); ++i) adv[i] -= v(0, static_cast<int>(i));
  if (normalize && !adv.empty()) {
    const double n = static_cast<double>(adv.size());
    const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : adv) ss += (a - mean) * (a - mean);
    const double sd = std::max(std::sqrt(ss / n), 1e-8);
    for (double& a : adv) a = (a - mean) / sd;
  }
  return adv;
}

void write_batch_csv(std::ostream& out, const Batch& batch) {
  const int od = batch.snapshot.obs_dim();
  const int ad = batch.snapshot.act_dim();
  out << "episode,t";
  for (int i = 0; i < od; ++i) out << ",obs_" << i;
  for (int i = 0; i < ad; ++i) out << ",act_" << i;
  out << ",reward,logp\n";
  out.precision(17);
  for (std::size_t e = 0; e < batch.trajectories.size(); ++e) {
    const Trajectory& t = batch.trajectories[e];
    for (int k = 0; k < t.length(); ++k) {
      const Step& s = t.steps[k];
      out << e << ',' << k;
      for (double v : s.observation) out << ',' << v;
      for (double v : s.action) out << ',' << v;
      out << ',' << s.reward << ',' << s.log_prob << '\n';
    }
  }
}

}  // namespace gpo
