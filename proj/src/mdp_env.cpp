#include "qaparse/mdp_env.hpp"

#include <cmath>
#include <stdexcept>

namespace qaparse {

State make_state(const QAPair& qa, const EmbeddingStore& store, int t, Action prev, int h) {
  const int n = static_cast<int>(qa.tokens.size());
  if (t < 0 || t >= n) throw std::out_of_range("state index outside question");
  if (h < 0) throw std::invalid_argument("window half-size must be non-negative");
  State s;
  s.t = t;
  s.prev_action = prev;
  s.window.reserve(2 * h + 1);
  for (int j = t - h; j <= t + h; ++j) {
    if (j < 0 || j >= n)
      s.window.push_back(Eigen::VectorXd::Zero(store.dim()));
    else
      s.window.push_back(embed(store, qa.tokens[j]));
  }
  return s;
}

StepResult step(const QAPair& qa, const EmbeddingStore& store, const EnvConfig&,
                const State& state, Action action) {
  const int n = static_cast<int>(qa.tokens.size());
  if (state.t < 0 || state.t >= n) throw std::out_of_range("cannot step a terminal state");
  StepResult r;
  if (state.t == n - 1) {
    r.done = true;
    return r;
  }
  r.done = false;
  int h = (static_cast<int>(state.window.size()) - 1) / 2;
  r.next = make_state(qa, store, state.t + 1, action, h);
  return r;
}

std::vector<PhraseMention> extract_phrases(const std::vector<Action>& actions,
                                           const std::vector<Token>& tokens) {
  if (actions.size() != tokens.size())
    throw std::invalid_argument("actions and tokens differ in length");
  std::vector<PhraseMention> phrases;
  const int n = static_cast<int>(actions.size());
  int i = 0;
  while (i < n) {
    if (actions[i] == Action::None) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && actions[j + 1] == actions[i]) ++j;
    PhraseMention p;
    p.label = actions[i];
    p.start = i;
    p.end = j;
    for (int k = i; k <= j; ++k) {
      if (k > i) p.text += ' ';
      p.text += tokens[k].surface;
    }
    phrases.push_back(std::move(p));
    i = j + 1;
  }
  return phrases;
}

double score_phrase(const PhraseMention& phrase, const std::vector<LinkedItem>& items,
                    const EnvConfig& cfg, const EmbeddingStore& store) {
  if (phrase.label == Action::None)
    throw std::invalid_argument("phrase must carry an entity or relation label");
  const SimilarityConfig& sim = cfg.sim_for(phrase.label);
  double best = 0.0;  // no same-label item in the query scores 0
  for (const LinkedItem& item : items) {
    if (static_cast<int>(item.label) != static_cast<int>(phrase.label)) continue;
    best = std::max(best, similarity(sim, phrase.text, item.title, store));
  }
  return best;
}

double episode_reward(const std::vector<PhraseMention>& phrases,
                      const std::vector<LinkedItem>& items, const EnvConfig& cfg,
                      const EmbeddingStore& store) {
  if (phrases.empty()) return 0.0;
  double sum = 0.0;
  for (const PhraseMention& p : phrases) sum += score_phrase(p, items, cfg, store);
  return sum / static_cast<double>(phrases.size());
}

std::vector<double> discounted_returns(double r, int n, double gamma) {
  if (n < 1) throw std::invalid_argument("episode length must be at least 1");
  std::vector<double> returns(n);
  for (int t = 0; t < n; ++t) returns[t] = std::pow(gamma, n - 1 - t) * r;
  return returns;
}

}  // namespace qaparse
