#pragma once

#include "qaparse/corpus.hpp"

#include <string>
#include <string_view>

namespace qaparse {

enum class SimKind { Lev, Emb, Combined };

struct SimilarityConfig {
  SimKind kind = SimKind::Lev;
  double combine_weight = 0.5;  // weight of the string term in Combined
  bool case_fold = true;
};

// Unit-cost insert/delete/substitute edit distance.
int lev_distance(std::string_view a, std::string_view b);

// 1 - lev/max(|a|,|b|); two empty strings compare as identical.
double sim_lev(std::string_view a, std::string_view b);

// Cosine of the mean word vectors of the two phrases, clamped to [0,1].
// A phrase whose mean vector has zero norm scores 0.
double sim_emb(const std::string& a, const std::string& b, const EmbeddingStore& store);

double similarity(const SimilarityConfig& cfg, const std::string& a, const std::string& b,
                  const EmbeddingStore& store);

}  // namespace qaparse
