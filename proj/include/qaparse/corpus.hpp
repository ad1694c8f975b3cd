#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace qaparse {

// Label of a knowledge-graph item referenced by a formal query. The numeric
// values match the word-label encoding used by the parser (entity=2,
// relation=1, none=0).
enum class ItemLabel : int { Relation = 1, Entity = 2 };

std::string to_string(ItemLabel label);
ItemLabel item_label_from_string(const std::string& s);

struct Token {
  std::string surface;
  std::string normalized;  // case-folded surface (or surface verbatim in case-sensitive mode)
  int index = 0;           // 0-based position within the question

  bool operator==(const Token& other) const = default;
};

struct LinkedItem {
  std::string title;
  std::string uri;
  ItemLabel label = ItemLabel::Entity;

  bool operator==(const LinkedItem& other) const = default;
  auto operator<=>(const LinkedItem& other) const = default;
};

// A question paired with the linked items of its formal query. The items are
// the source of distant supervision: there are no gold per-word labels.
struct QAPair {
  std::string id;
  std::vector<Token> tokens;      // length n >= 1
  std::vector<LinkedItem> items;  // sorted, deduplicated, size >= 1

  std::string question() const;  // token surfaces joined by single spaces
  bool operator==(const QAPair& other) const = default;
};

struct KnowledgeBase {
  struct Edge {
    std::string subject;
    std::string relation;
    std::string object;
  };

  std::map<std::string, std::string> entities;   // uri -> label string
  std::map<std::string, std::string> relations;  // uri -> label string
  std::vector<Edge> edges;                       // may be empty
};

// ASCII lowercasing. Non-ASCII bytes pass through untouched.
std::string case_fold(const std::string& s);

// Whitespace split with leading/trailing punctuation stripped (apostrophes
// are kept) and a trailing possessive "'s" detached as its own token.
// Throws std::runtime_error("no tokens") when nothing survives.
std::vector<Token> tokenize(const std::string& text, bool fold_case = true);

struct DatasetLoadResult {
  std::vector<QAPair> pairs;
  int skipped_itemless = 0;  // records without linked items are not fatal
};

// One JSON record per line: {"id": ..., "question": ..., "items": [...]}.
DatasetLoadResult load_dataset(const std::string& path, bool fold_case = true);
void save_dataset(const std::vector<QAPair>& pairs, const std::string& path);

// Entity/relation label files are two-column TSV (uri, label); the edge file
// is three-column TSV (subject, relation, object). Edges must reference
// known uris.
KnowledgeBase load_kb(const std::string& entities_path,
                      const std::string& relations_path,
                      const std::string& edges_path = "");
void save_kb(const KnowledgeBase& kb, const std::string& entities_path,
             const std::string& relations_path, const std::string& edges_path);

enum class OovPolicy { ZeroVector, HashBucket };

// Word-vector table with a total lookup: out-of-vocabulary words resolve to
// the zero vector or to a deterministic per-bucket pseudo-random vector.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(int dim, OovPolicy policy = OovPolicy::ZeroVector,
                          int n_buckets = 4096);

  // Text format: one line per word, "word v1 v2 ... vd".
  static EmbeddingStore load(const std::string& path,
                             OovPolicy policy = OovPolicy::ZeroVector,
                             int n_buckets = 4096);

  int dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  OovPolicy policy() const { return policy_; }

  void insert(const std::string& word, Eigen::VectorXd vec);
  bool contains(const std::string& word) const;

  // Never fails; OOV is resolved by the configured policy.
  Eigen::VectorXd lookup(const std::string& word) const;

 private:
  int dim_;
  OovPolicy policy_;
  int n_buckets_;
  std::map<std::string, Eigen::VectorXd> vectors_;
};

Eigen::VectorXd embed(const EmbeddingStore& store, const Token& token);

// FNV-1a, used for stable bucket assignment across runs and platforms.
std::uint64_t fnv1a64(const std::string& s);

}  // namespace qaparse
