#pragma once

#include "qaparse/corpus.hpp"
#include "qaparse/similarity.hpp"

#include <Eigen/Core>

#include <vector>

namespace qaparse {

// Word label chosen by the agent at each step.
enum class Action : int { None = 0, Relation = 1, Entity = 2 };

// Sliding window of 2h+1 word vectors centered on the current word, plus the
// previously chosen action. Positions beyond the question bounds are
// zero-vector padded.
struct State {
  std::vector<Eigen::VectorXd> window;
  Action prev_action = Action::None;
  int t = 0;
};

// Maximal run of consecutive tokens sharing one non-zero label. The span is
// inclusive on both ends.
struct PhraseMention {
  std::string text;  // original-case surfaces joined by single spaces
  Action label = Action::Entity;
  int start = 0;
  int end = 0;
};

struct Episode {
  QAPair qa;
  std::vector<Action> actions;           // length n
  double reward = 0.0;                   // in [0,1]
  std::vector<double> returns;           // per step, gamma-discounted
  std::vector<Eigen::Vector3d> log_data; // per-step action distributions
  std::vector<State> states;             // states visited, cached for updates
};

struct EnvConfig {
  int h = 1;
  double gamma = 1.0;  // in (0,1]
  SimilarityConfig entity_sim{SimKind::Lev, 0.5, true};
  SimilarityConfig relation_sim{SimKind::Combined, 0.5, true};

  const SimilarityConfig& sim_for(Action label) const {
    return label == Action::Entity ? entity_sim : relation_sim;
  }
};

State make_state(const QAPair& qa, const EmbeddingStore& store, int t, Action prev, int h);

struct StepResult {
  bool done = false;
  State next;  // valid only when !done
};

// Deterministic transition: same (state, action) always yields the same
// successor. Episodes end after the last word; no intermediate reward.
StepResult step(const QAPair& qa, const EmbeddingStore& store, const EnvConfig& cfg,
                const State& state, Action action);

std::vector<PhraseMention> extract_phrases(const std::vector<Action>& actions,
                                           const std::vector<Token>& tokens);

// Best similarity against the same-label items of the formal query; 0 when
// no item carries the phrase's label.
double score_phrase(const PhraseMention& phrase, const std::vector<LinkedItem>& items,
                    const EnvConfig& cfg, const EmbeddingStore& store);

// Mean phrase score; 0 when no phrase was predicted.
double episode_reward(const std::vector<PhraseMention>& phrases,
                      const std::vector<LinkedItem>& items, const EnvConfig& cfg,
                      const EmbeddingStore& store);

// Terminal reward propagated backward: return at step t is gamma^(n-1-t) * r.
std::vector<double> discounted_returns(double r, int n, double gamma);

}  // namespace qaparse
