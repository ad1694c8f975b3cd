#include "qaparse/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace qaparse {

int lev_distance(std::string_view a, std::string_view b) {
  const std::size_t n = b.size();
  std::vector<int> row(n + 1);
  for (std::size_t j = 0; j <= n; ++j) row[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= n; ++j) {
      int cur = row[j];
      int sub = diag + (a[i - 1] != b[j - 1]);
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
      diag = cur;
    }
  }
  return row[n];
}

double sim_lev(std::string_view a, std::string_view b) {
  std::size_t m = std::max(a.size(), b.size());
  if (m == 0) return 1.0;
  return 1.0 - static_cast<double>(lev_distance(a, b)) / static_cast<double>(m);
}

namespace {

// Mean of the phrase's word vectors; lookups go through the store's OOV
// policy via case-folded words.
Eigen::VectorXd phrase_vector(const std::string& phrase, const EmbeddingStore& store) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(store.dim());
  std::istringstream in(phrase);
  std::string word;
  int count = 0;
  while (in >> word) {
    sum += store.lookup(case_fold(word));
    ++count;
  }
  if (count > 0) sum /= static_cast<double>(count);
  return sum;
}

}  // namespace

double sim_emb(const std::string& a, const std::string& b, const EmbeddingStore& store) {
  Eigen::VectorXd va = phrase_vector(a, store);
  Eigen::VectorXd vb = phrase_vector(b, store);
  double na = va.norm(), nb = vb.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  double cos = va.dot(vb) / (na * nb);
  return std::max(0.0, std::min(1.0, cos));
}

double similarity(const SimilarityConfig& cfg, const std::string& a, const std::string& b,
                  const EmbeddingStore& store) {
  const std::string fa = cfg.case_fold ? case_fold(a) : a;
  const std::string fb = cfg.case_fold ? case_fold(b) : b;
  switch (cfg.kind) {
    case SimKind::Lev:
      return sim_lev(fa, fb);
    case SimKind::Emb:
      return sim_emb(fa, fb, store);
    case SimKind::Combined: {
      double w = cfg.combine_weight;
      if (w < 0.0 || w > 1.0) throw std::invalid_argument("combine_weight must be in [0,1]");
      return w * sim_lev(fa, fb) + (1.0 - w) * sim_emb(fa, fb, store);
    }
  }
  throw std::logic_error("unreachable similarity kind");
}

}  // namespace qaparse
