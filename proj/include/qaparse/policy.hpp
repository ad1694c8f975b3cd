#pragma once

#include "qaparse/mdp_env.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qaparse {

enum class Arch { LinearRelu, Recurrent, BiRecurrent };

std::string to_string(Arch arch);
Arch arch_from_string(const std::string& s);

struct ActionDist {
  Eigen::Vector3d probs;  // non-negative, sums to 1
};

// One LSTM cell; gate rows are stacked [input; forget; candidate; output].
struct LstmParams {
  Eigen::MatrixXd wx;  // 4H x in
  Eigen::MatrixXd wh;  // 4H x H
  Eigen::VectorXd b;   // 4H
};

// Weights of the three-layer policy network. All math runs in double;
// coefficients are kept at float precision so checkpoint files (32-bit
// floats) round-trip exactly.
struct PolicyParams {
  Arch arch = Arch::Recurrent;
  int h = 1;       // window half-size
  int dim = 0;     // word-vector dimension d
  int hidden = 0;  // hidden layer width
  std::uint64_t seed = 0;

  Eigen::MatrixXd w1;  // LinearRelu: hidden x state_dim
  Eigen::VectorXd b1;
  LstmParams cell;     // Recurrent: input = state_dim
  LstmParams fwd;      // BiRecurrent: input = dim, run over the window
  LstmParams bwd;
  Eigen::MatrixXd wout;  // 3 x (arch-dependent)
  Eigen::VectorXd bout;  // 3

  int state_dim() const { return (2 * h + 1) * dim + 3; }
};

// Tensors in declared order (the order of the checkpoint file).
std::vector<std::pair<double*, std::ptrdiff_t>> tensor_views(PolicyParams& p);
std::vector<std::pair<const double*, std::ptrdiff_t>> tensor_views(const PolicyParams& p);

PolicyParams zeros_like(const PolicyParams& p);

// Hidden state carried across one episode by the recurrent architecture.
struct RecurrentContext {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

PolicyParams init_policy(Arch arch, int h, int dim, int hidden, std::uint64_t seed);

// Action distribution for one state. The recurrent architecture reads and
// updates ctx (reset at t=0); a null ctx behaves like a fresh episode start.
ActionDist forward(const PolicyParams& params, const State& state,
                   RecurrentContext* ctx = nullptr);

enum class RolloutMode { Sample, Greedy };

// Walks the question left to right. Sample draws from the action
// distribution with the provided generator; Greedy takes the argmax with
// ties broken toward the lower action value.
Episode rollout(const PolicyParams& params, const QAPair& qa, const EmbeddingStore& store,
                const EnvConfig& cfg, RolloutMode mode, std::mt19937_64* rng = nullptr);

struct TrainConfig {
  double lr = 0.05;
  double gamma = 1.0;
  int epochs = 300;
  int batch_episodes = 8;
  bool use_baseline = true;        // moving-average reward baseline
  double baseline_momentum = 0.9;  // in [0,1)
  double entropy_bonus = 0.01;
};

struct UpdateStats {
  double mean_reward = 0.0;
  double grad_norm = 0.0;
  double baseline = 0.0;
};

// Policy-gradient ascent on (return - baseline)-weighted log-likelihood plus
// an optional entropy bonus. Holds the moving-average baseline between
// batches.
class ReinforceUpdater {
 public:
  explicit ReinforceUpdater(TrainConfig cfg) : cfg_(cfg) {
    if (cfg.baseline_momentum < 0.0 || cfg.baseline_momentum >= 1.0)
      throw std::invalid_argument("baseline momentum must be in [0,1)");
    if (cfg.entropy_bonus < 0.0)
      throw std::invalid_argument("entropy bonus must be non-negative");
  }

  // Episodes must have been produced under the current params; a log-prob
  // mismatch beyond tolerance is an error.
  UpdateStats update(PolicyParams& params, const std::vector<Episode>& episodes) const;

  double baseline() const { return baseline_; }
  void set_baseline(double b) { baseline_ = b; }
  const TrainConfig& config() const { return cfg_; }

 private:
  TrainConfig cfg_;
  mutable double baseline_ = 0.0;
};

// Max relative error between the analytic gradient of sum_t log pi(a_t|s_t)
// and central finite differences with step eps.
double grad_check(const PolicyParams& params, const Episode& episode, double eps);

// Binary checkpoint: magic, version, arch tag, dims, seed, then tensors in
// declared order as little-endian 32-bit floats.
void save_policy(const PolicyParams& params, const std::string& path);
PolicyParams load_policy(const std::string& path);

}  // namespace qaparse
