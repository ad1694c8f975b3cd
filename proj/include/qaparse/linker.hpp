#pragma once

#include "qaparse/corpus.hpp"
#include "qaparse/mdp_env.hpp"
#include "qaparse/similarity.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace qaparse {

enum class CaseMode { Preserve, Fold };

std::string to_string(CaseMode mode);
CaseMode case_mode_from_string(const std::string& s);

enum class IndexKind { EntityIndex, RelationIndex };

// Character trigram multiset of '^'-prefixed, '$'-suffixed text.
std::map<std::string, int> trigrams(const std::string& s, CaseMode mode);

// Inverted index from character trigrams to the KG labels containing them.
struct TrigramIndex {
  IndexKind kind = IndexKind::EntityIndex;
  CaseMode case_mode = CaseMode::Fold;
  // trigram -> postings sorted by uri; counts are per-label multiplicities.
  std::map<std::string, std::vector<std::pair<std::string, int>>> postings;
  std::map<std::string, long long> doc_lengths;  // uri -> total trigram count
  std::map<std::string, std::string> labels;     // uri -> label string
};

TrigramIndex build_index(const KnowledgeBase& kb, IndexKind kind, CaseMode mode);

struct Candidate {
  std::string uri;
  std::string kg_label;
  double retrieval_score = 0.0;
  double rank_score = 0.0;
};

// Candidates scored by IDF-weighted trigram overlap, idf(t) =
// ln(1 + docs/df(t)), shared counts taken with multiplicity, normalized by
// sqrt(doc_length). Items sharing no trigram score 0. Top-k with
// deterministic ties (uri ascending).
std::vector<Candidate> retrieve(const TrigramIndex& index, const std::string& mention, int k);

// Union of existing with the relations on edges incident to the entity;
// added candidates carry retrieval_score 0.
std::vector<Candidate> expand_relations(const KnowledgeBase& kb, const Candidate& top_entity,
                                        std::vector<Candidate> existing);

// rank_score = similarity(mention, kg_label); sorted descending, ties by
// uri, truncated to k.
std::vector<Candidate> rank(std::vector<Candidate> candidates, const std::string& mention,
                            const SimilarityConfig& sim_cfg, const EmbeddingStore& store, int k);

struct MentionLinks {
  PhraseMention mention;
  std::vector<Candidate> candidates;  // ranked, length <= k
};

struct LinkResult {
  std::string qa_id;
  std::vector<MentionLinks> mentions;
};

struct LinkConfig {
  SimilarityConfig entity_sim{SimKind::Lev, 0.5, true};
  SimilarityConfig relation_sim{SimKind::Combined, 0.5, true};
  int retrieve_pool = 32;  // candidates pulled from the index before ranking

  const SimilarityConfig& sim_for(Action label) const {
    return label == Action::Entity ? entity_sim : relation_sim;
  }
};

// Full two-step linking for one labeled question: group phrases, retrieve
// per mention, expand relation candidates with the one-hop neighborhood of
// each entity mention's top candidate, then rank.
LinkResult link(const std::vector<Token>& tokens, const std::vector<Action>& actions,
                const TrigramIndex& entity_index, const TrigramIndex& relation_index,
                const KnowledgeBase& kb, const EmbeddingStore& store, const LinkConfig& cfg,
                int k);

// Versioned binary index files.
void save_index(const TrigramIndex& index, const std::string& path);
TrigramIndex load_index(const std::string& path);

// One JSON record per question: {"id", "mentions": [{mention, span, label,
// candidates: [{uri, score}]}]}.
void write_link_results(const std::vector<LinkResult>& results, const std::string& path);

}  // namespace qaparse
