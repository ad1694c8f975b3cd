#pragma once

#include "qaparse/corpus.hpp"

#include <cstdint>

namespace qaparse {

struct ToyCorpus {
  KnowledgeBase kb;
  std::vector<QAPair> pairs;
};

// Deterministic template-built corpus for desk-scale experiments. Every
// question carries one relation item and one entity item whose titles exist
// verbatim in the knowledge base; at least 20% of entity titles are
// multi-word.
ToyCorpus generate_toy_corpus(std::uint64_t seed, int n_entities, int n_relations,
                              int n_questions);

}  // namespace qaparse
