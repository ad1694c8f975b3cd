#include "qaparse/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qaparse {

using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

std::string to_string(Arch arch) {
  switch (arch) {
    case Arch::LinearRelu: return "linear";
    case Arch::Recurrent: return "lstm";
    case Arch::BiRecurrent: return "bilstm";
  }
  throw std::logic_error("unreachable arch");
}

Arch arch_from_string(const std::string& s) {
  if (s == "linear") return Arch::LinearRelu;
  if (s == "lstm") return Arch::Recurrent;
  if (s == "bilstm") return Arch::BiRecurrent;
  throw std::runtime_error("unknown architecture: '" + s + "' (expected linear|lstm|bilstm)");
}

namespace {

template <class P, class Fn>
void visit_tensors_impl(P& p, Fn&& fn) {
  switch (p.arch) {
    case Arch::LinearRelu:
      fn(p.w1);
      fn(p.b1);
      break;
    case Arch::Recurrent:
      fn(p.cell.wx);
      fn(p.cell.wh);
      fn(p.cell.b);
      break;
    case Arch::BiRecurrent:
      fn(p.fwd.wx);
      fn(p.fwd.wh);
      fn(p.fwd.b);
      fn(p.bwd.wx);
      fn(p.bwd.wh);
      fn(p.bwd.b);
      break;
  }
  fn(p.wout);
  fn(p.bout);
}

void quantize(PolicyParams& p) {
  visit_tensors_impl(p, [](auto& m) {
    double* d = m.data();
    for (std::ptrdiff_t i = 0; i < m.size(); ++i)
      d[i] = static_cast<double>(static_cast<float>(d[i]));
  });
}

Vector3d softmax3(const Vector3d& z) {
  Vector3d e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

Vector3d one_hot(Action a) {
  Vector3d v = Vector3d::Zero();
  v[static_cast<int>(a)] = 1.0;
  return v;
}

VectorXd pack_input(const PolicyParams& p, const State& s) {
  const int w = 2 * p.h + 1;
  if (static_cast<int>(s.window.size()) != w)
    throw std::invalid_argument("state window does not match the policy's h");
  VectorXd x(p.state_dim());
  for (int j = 0; j < w; ++j) {
    if (s.window[j].size() != p.dim)
      throw std::invalid_argument("state word vectors do not match the policy's dim");
    x.segment(static_cast<Eigen::Index>(j) * p.dim, p.dim) = s.window[j];
  }
  x.tail(3) = one_hot(s.prev_action);
  return x;
}

struct LstmStepCache {
  VectorXd x, h_prev, c_prev;
  VectorXd i, f, g, o, c, tanh_c, h;
};

LstmStepCache lstm_step(const LstmParams& p, const VectorXd& x, const VectorXd& h_prev,
                        const VectorXd& c_prev) {
  const Eigen::Index H = h_prev.size();
  VectorXd z = p.wx * x + p.wh * h_prev + p.b;
  LstmStepCache s;
  s.x = x;
  s.h_prev = h_prev;
  s.c_prev = c_prev;
  s.i = (1.0 / (1.0 + (-z.head(H).array()).exp())).matrix();
  s.f = (1.0 / (1.0 + (-z.segment(H, H).array()).exp())).matrix();
  s.g = z.segment(2 * H, H).array().tanh().matrix();
  s.o = (1.0 / (1.0 + (-z.tail(H).array()).exp())).matrix();
  s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
  s.tanh_c = s.c.array().tanh().matrix();
  s.h = s.o.cwiseProduct(s.tanh_c);
  return s;
}

// dh/dc on entry hold the gradients wrt this step's h and c; on exit they
// hold the gradients wrt h_prev and c_prev.
void lstm_backward(const LstmParams& p, const LstmStepCache& s, VectorXd& dh, VectorXd& dc,
                   LstmParams& grad) {
  const Eigen::Index H = dh.size();
  VectorXd d_o = dh.cwiseProduct(s.tanh_c);
  dc += dh.cwiseProduct(s.o).cwiseProduct(
      (1.0 - s.tanh_c.array().square()).matrix());
  VectorXd d_i = dc.cwiseProduct(s.g);
  VectorXd d_f = dc.cwiseProduct(s.c_prev);
  VectorXd d_g = dc.cwiseProduct(s.i);
  VectorXd dz(4 * H);
  dz.head(H) = d_i.cwiseProduct(s.i).cwiseProduct((1.0 - s.i.array()).matrix());
  dz.segment(H, H) = d_f.cwiseProduct(s.f).cwiseProduct((1.0 - s.f.array()).matrix());
  dz.segment(2 * H, H) = d_g.cwiseProduct((1.0 - s.g.array().square()).matrix());
  dz.tail(H) = d_o.cwiseProduct(s.o).cwiseProduct((1.0 - s.o.array()).matrix());
  grad.wx.noalias() += dz * s.x.transpose();
  grad.wh.noalias() += dz * s.h_prev.transpose();
  grad.b += dz;
  dh.noalias() = p.wh.transpose() * dz;
  dc = dc.cwiseProduct(s.f);
}

struct EpisodeTape {
  std::vector<VectorXd> inputs;              // packed state vectors
  std::vector<VectorXd> z1;                  // linear: pre-activation
  std::vector<VectorXd> hidden;              // activation fed to the output layer
  std::vector<LstmStepCache> rec;            // recurrent: one per step
  std::vector<std::vector<LstmStepCache>> bi_fwd, bi_bwd;  // per step, per window pos
  std::vector<Vector3d> probs;
};

EpisodeTape forward_episode(const PolicyParams& p, const std::vector<State>& states) {
  if (states.empty()) throw std::invalid_argument("empty episode");
  EpisodeTape tape;
  const auto n = states.size();
  switch (p.arch) {
    case Arch::LinearRelu: {
      for (const State& s : states) {
        VectorXd x = pack_input(p, s);
        VectorXd z1 = p.w1 * x + p.b1;
        VectorXd h = z1.cwiseMax(0.0);
        tape.probs.push_back(softmax3(p.wout * h + p.bout));
        tape.inputs.push_back(std::move(x));
        tape.z1.push_back(std::move(z1));
        tape.hidden.push_back(std::move(h));
      }
      break;
    }
    case Arch::Recurrent: {
      VectorXd h = VectorXd::Zero(p.hidden), c = VectorXd::Zero(p.hidden);
      for (const State& s : states) {
        VectorXd x = pack_input(p, s);
        LstmStepCache step = lstm_step(p.cell, x, h, c);
        h = step.h;
        c = step.c;
        tape.probs.push_back(softmax3(p.wout * h + p.bout));
        tape.rec.push_back(std::move(step));
      }
      break;
    }
    case Arch::BiRecurrent: {
      const int w = 2 * p.h + 1;
      tape.bi_fwd.resize(n);
      tape.bi_bwd.resize(n);
      for (std::size_t t = 0; t < n; ++t) {
        const State& s = states[t];
        if (static_cast<int>(s.window.size()) != w)
          throw std::invalid_argument("state window does not match the policy's h");
        VectorXd hf = VectorXd::Zero(p.hidden), cf = VectorXd::Zero(p.hidden);
        for (int j = 0; j < w; ++j) {
          tape.bi_fwd[t].push_back(lstm_step(p.fwd, s.window[j], hf, cf));
          hf = tape.bi_fwd[t].back().h;
          cf = tape.bi_fwd[t].back().c;
        }
        VectorXd hb = VectorXd::Zero(p.hidden), cb = VectorXd::Zero(p.hidden);
        for (int j = w - 1; j >= 0; --j) {
          tape.bi_bwd[t].push_back(lstm_step(p.bwd, s.window[j], hb, cb));
          hb = tape.bi_bwd[t].back().h;
          cb = tape.bi_bwd[t].back().c;
        }
        VectorXd u(2 * p.hidden + 3);
        u.head(p.hidden) = hf;
        u.segment(p.hidden, p.hidden) = hb;
        u.tail(3) = one_hot(s.prev_action);
        tape.probs.push_back(softmax3(p.wout * u + p.bout));
        tape.hidden.push_back(std::move(u));
      }
      break;
    }
  }
  return tape;
}

PolicyParams backward_episode(const PolicyParams& p, const EpisodeTape& tape,
                              const std::vector<Vector3d>& dlogits) {
  PolicyParams g = zeros_like(p);
  const auto n = dlogits.size();
  switch (p.arch) {
    case Arch::LinearRelu: {
      for (std::size_t t = 0; t < n; ++t) {
        g.wout.noalias() += dlogits[t] * tape.hidden[t].transpose();
        g.bout += dlogits[t];
        VectorXd da = p.wout.transpose() * dlogits[t];
        VectorXd dz = (tape.z1[t].array() > 0.0).select(da, 0.0);
        g.w1.noalias() += dz * tape.inputs[t].transpose();
        g.b1 += dz;
      }
      break;
    }
    case Arch::Recurrent: {
      VectorXd dh_carry = VectorXd::Zero(p.hidden), dc_carry = VectorXd::Zero(p.hidden);
      for (std::size_t ti = n; ti-- > 0;) {
        g.wout.noalias() += dlogits[ti] * tape.rec[ti].h.transpose();
        g.bout += dlogits[ti];
        VectorXd dh = p.wout.transpose() * dlogits[ti] + dh_carry;
        VectorXd dc = dc_carry;
        lstm_backward(p.cell, tape.rec[ti], dh, dc, g.cell);
        dh_carry = dh;
        dc_carry = dc;
      }
      break;
    }
    case Arch::BiRecurrent: {
      for (std::size_t t = 0; t < n; ++t) {
        g.wout.noalias() += dlogits[t] * tape.hidden[t].transpose();
        g.bout += dlogits[t];
        VectorXd du = p.wout.transpose() * dlogits[t];
        VectorXd dh = du.head(p.hidden);
        VectorXd dc = VectorXd::Zero(p.hidden);
        for (std::size_t j = tape.bi_fwd[t].size(); j-- > 0;)
          lstm_backward(p.fwd, tape.bi_fwd[t][j], dh, dc, g.fwd);
        dh = du.segment(p.hidden, p.hidden);
        dc.setZero();
        for (std::size_t j = tape.bi_bwd[t].size(); j-- > 0;)
          lstm_backward(p.bwd, tape.bi_bwd[t][j], dh, dc, g.bwd);
      }
      break;
    }
  }
  return g;
}

double safe_log(double p) { return std::log(std::max(p, 1e-300)); }

}  // namespace

std::vector<std::pair<double*, std::ptrdiff_t>> tensor_views(PolicyParams& p) {
  std::vector<std::pair<double*, std::ptrdiff_t>> views;
  visit_tensors_impl(p, [&](auto& m) { views.emplace_back(m.data(), m.size()); });
  return views;
}

std::vector<std::pair<const double*, std::ptrdiff_t>> tensor_views(const PolicyParams& p) {
  std::vector<std::pair<const double*, std::ptrdiff_t>> views;
  visit_tensors_impl(p, [&](const auto& m) { views.emplace_back(m.data(), m.size()); });
  return views;
}

PolicyParams zeros_like(const PolicyParams& p) {
  PolicyParams z = p;
  visit_tensors_impl(z, [](auto& m) { m.setZero(); });
  return z;
}

PolicyParams init_policy(Arch arch, int h, int dim, int hidden, std::uint64_t seed) {
  if (h < 0) throw std::invalid_argument("h must be non-negative");
  if (dim <= 0) throw std::invalid_argument("dim must be positive");
  if (hidden <= 0) throw std::invalid_argument("hidden_dim must be positive");
  PolicyParams p;
  p.arch = arch;
  p.h = h;
  p.dim = dim;
  p.hidden = hidden;
  p.seed = seed;
  const int sdim = p.state_dim();
  auto lstm_shape = [&](LstmParams& c, int in) {
    c.wx.setZero(4 * hidden, in);
    c.wh.setZero(4 * hidden, hidden);
    c.b.setZero(4 * hidden);
  };
  switch (arch) {
    case Arch::LinearRelu:
      p.w1.setZero(hidden, sdim);
      p.b1.setZero(hidden);
      p.wout.setZero(3, hidden);
      break;
    case Arch::Recurrent:
      lstm_shape(p.cell, sdim);
      p.wout.setZero(3, hidden);
      break;
    case Arch::BiRecurrent:
      lstm_shape(p.fwd, dim);
      lstm_shape(p.bwd, dim);
      p.wout.setZero(3, 2 * hidden + 3);
      break;
  }
  p.bout.setZero(3);

  // Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per weight matrix; biases 0.
  std::mt19937_64 rng(seed);
  visit_tensors_impl(p, [&](auto& m) {
    if (m.cols() < 2) return;  // bias vectors stay zero
    double bound = 1.0 / std::sqrt(static_cast<double>(m.cols()));
    double* d = m.data();
    for (std::ptrdiff_t i = 0; i < m.size(); ++i) {
      double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      d[i] = (2.0 * u - 1.0) * bound;
    }
  });
  quantize(p);
  return p;
}

ActionDist forward(const PolicyParams& params, const State& state, RecurrentContext* ctx) {
  if (params.arch != Arch::Recurrent) {
    std::vector<State> one{state};
    return {forward_episode(params, one).probs[0]};
  }
  RecurrentContext local;
  RecurrentContext* c = ctx ? ctx : &local;
  if (state.t == 0 || c->h.size() != params.hidden) {
    c->h = VectorXd::Zero(params.hidden);
    c->c = VectorXd::Zero(params.hidden);
  }
  VectorXd x = pack_input(params, state);
  LstmStepCache step = lstm_step(params.cell, x, c->h, c->c);
  c->h = step.h;
  c->c = step.c;
  return {softmax3(params.wout * step.h + params.bout)};
}

namespace {

Action sample_action(const Vector3d& probs, std::mt19937_64& rng) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double cum = 0.0;
  for (int a = 0; a < 3; ++a) {
    cum += probs[a];
    if (u < cum) return static_cast<Action>(a);
  }
  return Action::Entity;
}

Action greedy_action(const Vector3d& probs) {
  int best = 0;
  for (int a = 1; a < 3; ++a)
    if (probs[a] > probs[best]) best = a;  // ties keep the lower action
  return static_cast<Action>(best);
}

}  // namespace

Episode rollout(const PolicyParams& params, const QAPair& qa, const EmbeddingStore& store,
                const EnvConfig& cfg, RolloutMode mode, std::mt19937_64* rng) {
  if (mode == RolloutMode::Sample && rng == nullptr)
    throw std::invalid_argument("sampling rollout needs a generator");
  if (store.dim() != params.dim)
    throw std::invalid_argument("embedding store dim does not match the policy");
  if (cfg.h != params.h)
    throw std::invalid_argument("environment h does not match the policy");
  if (cfg.gamma <= 0.0 || cfg.gamma > 1.0)
    throw std::invalid_argument("gamma must be in (0,1]");

  Episode ep;
  ep.qa = qa;
  const int n = static_cast<int>(qa.tokens.size());
  RecurrentContext ctx;
  State s = make_state(qa, store, 0, Action::None, params.h);
  for (int t = 0; t < n; ++t) {
    ActionDist dist = forward(params, s, &ctx);
    Action a = mode == RolloutMode::Greedy ? greedy_action(dist.probs)
                                           : sample_action(dist.probs, *rng);
    ep.states.push_back(s);
    ep.actions.push_back(a);
    ep.log_data.push_back(dist.probs);
    StepResult sr = step(qa, store, cfg, s, a);
    if (sr.done) break;
    s = std::move(sr.next);
  }
  std::vector<PhraseMention> phrases = extract_phrases(ep.actions, qa.tokens);
  ep.reward = episode_reward(phrases, qa.items, cfg, store);
  ep.returns = discounted_returns(ep.reward, n, cfg.gamma);
  return ep;
}

UpdateStats ReinforceUpdater::update(PolicyParams& params,
                                     const std::vector<Episode>& episodes) const {
  if (episodes.empty()) throw std::invalid_argument("no episodes to update from");

  PolicyParams grads = zeros_like(params);
  double reward_sum = 0.0;
  for (const Episode& ep : episodes) {
    const auto n = ep.states.size();
    if (n == 0 || ep.actions.size() != n || ep.log_data.size() != n || ep.returns.size() != n)
      throw std::invalid_argument("episode is incomplete");
    reward_sum += ep.reward;

    EpisodeTape tape = forward_episode(params, ep.states);
    std::vector<Vector3d> dlogits(n);
    for (std::size_t t = 0; t < n; ++t) {
      if ((tape.probs[t] - ep.log_data[t]).cwiseAbs().maxCoeff() > 1e-8)
        throw std::runtime_error("stale episode: action distribution no longer matches params");
      double scale = cfg_.use_baseline
                         ? std::pow(cfg_.gamma, static_cast<double>(n - 1 - t)) * baseline_
                         : 0.0;
      double coeff = ep.returns[t] - scale;
      const Vector3d& p = tape.probs[t];
      Vector3d dl = coeff * (one_hot(ep.actions[t]) - p);
      if (cfg_.entropy_bonus > 0.0) {
        double entropy = 0.0;
        for (int a = 0; a < 3; ++a) entropy -= p[a] * safe_log(p[a]);
        for (int a = 0; a < 3; ++a)
          dl[a] += cfg_.entropy_bonus * (-p[a] * (safe_log(p[a]) + entropy));
      }
      dlogits[t] = dl;
    }
    PolicyParams g = backward_episode(params, tape, dlogits);
    auto acc = tensor_views(grads);
    auto add = tensor_views(std::as_const(g));
    for (std::size_t i = 0; i < acc.size(); ++i)
      for (std::ptrdiff_t j = 0; j < acc[i].second; ++j) acc[i].first[j] += add[i].first[j];
  }

  const double inv_m = 1.0 / static_cast<double>(episodes.size());
  double sq_norm = 0.0;
  auto gv = tensor_views(grads);
  auto pv = tensor_views(params);
  for (std::size_t i = 0; i < gv.size(); ++i) {
    for (std::ptrdiff_t j = 0; j < gv[i].second; ++j) {
      double g = gv[i].first[j] * inv_m;
      sq_norm += g * g;
      pv[i].first[j] += cfg_.lr * g;
    }
  }
  quantize(params);

  UpdateStats stats;
  stats.mean_reward = reward_sum * inv_m;
  stats.grad_norm = std::sqrt(sq_norm);
  if (cfg_.use_baseline)
    baseline_ = cfg_.baseline_momentum * baseline_ +
                (1.0 - cfg_.baseline_momentum) * stats.mean_reward;
  stats.baseline = baseline_;
  return stats;
}

double grad_check(const PolicyParams& params, const Episode& episode, double eps) {
  const auto n = episode.states.size();
  if (n == 0) throw std::invalid_argument("episode has no steps");

  EpisodeTape tape = forward_episode(params, episode.states);
  std::vector<Vector3d> dlogits(n);
  for (std::size_t t = 0; t < n; ++t)
    dlogits[t] = one_hot(episode.actions[t]) - tape.probs[t];
  PolicyParams analytic = backward_episode(params, tape, dlogits);

  PolicyParams work = params;
  auto wv = tensor_views(work);
  auto av = tensor_views(std::as_const(analytic));
  auto loglik = [&]() {
    EpisodeTape t2 = forward_episode(work, episode.states);
    double ll = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      ll += safe_log(t2.probs[t][static_cast<int>(episode.actions[t])]);
    return ll;
  };

  double max_rel = 0.0;
  for (std::size_t i = 0; i < wv.size(); ++i) {
    for (std::ptrdiff_t j = 0; j < wv[i].second; ++j) {
      double saved = wv[i].first[j];
      wv[i].first[j] = saved + eps;
      double lp = loglik();
      wv[i].first[j] = saved - eps;
      double lm = loglik();
      wv[i].first[j] = saved;
      double fd = (lp - lm) / (2.0 * eps);
      double ga = av[i].first[j];
      double denom = std::max(std::abs(fd), std::abs(ga));
      if (denom < 1e-7) continue;  // both effectively zero
      max_rel = std::max(max_rel, std::abs(fd - ga) / denom);
    }
  }
  return max_rel;
}

namespace {

constexpr char kPolicyMagic[4] = {'Q', 'A', 'P', 'L'};
constexpr std::uint32_t kPolicyVersion = 1;

template <class T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error(std::string("policy file truncated reading ") + what);
  return v;
}

}  // namespace

void save_policy(const PolicyParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write policy file: " + path);
  out.write(kPolicyMagic, 4);
  write_pod(out, kPolicyVersion);
  write_pod(out, static_cast<std::uint8_t>(params.arch));
  write_pod(out, static_cast<std::int32_t>(params.h));
  write_pod(out, static_cast<std::int32_t>(params.dim));
  write_pod(out, static_cast<std::int32_t>(params.hidden));
  write_pod(out, params.seed);
  for (const auto& [data, size] : tensor_views(params)) {
    write_pod(out, static_cast<std::uint64_t>(size));
    for (std::ptrdiff_t i = 0; i < size; ++i)
      write_pod(out, static_cast<float>(data[i]));
  }
  if (!out) throw std::runtime_error("short write to policy file: " + path);
}

PolicyParams load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open policy file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kPolicyMagic, 4) != 0)
    throw std::runtime_error("not a policy file: " + path);
  auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kPolicyVersion)
    throw std::runtime_error("unsupported policy file version " + std::to_string(version));
  auto arch = static_cast<Arch>(read_pod<std::uint8_t>(in, "arch"));
  if (arch != Arch::LinearRelu && arch != Arch::Recurrent && arch != Arch::BiRecurrent)
    throw std::runtime_error("corrupt policy file: bad architecture tag");
  auto h = read_pod<std::int32_t>(in, "h");
  auto dim = read_pod<std::int32_t>(in, "dim");
  auto hidden = read_pod<std::int32_t>(in, "hidden");
  auto seed = read_pod<std::uint64_t>(in, "seed");

  PolicyParams p = init_policy(arch, h, dim, hidden, seed);
  for (auto& [data, size] : tensor_views(p)) {
    auto stored = read_pod<std::uint64_t>(in, "tensor header");
    if (stored != static_cast<std::uint64_t>(size))
      throw std::runtime_error("corrupt policy file: tensor size mismatch");
    for (std::ptrdiff_t i = 0; i < size; ++i)
      data[i] = static_cast<double>(read_pod<float>(in, "tensor data"));
  }
  return p;
}

}  // namespace qaparse
