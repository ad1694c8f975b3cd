#include "qaparse/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qaparse {

using nlohmann::json;

std::string to_string(ItemLabel label) {
  return label == ItemLabel::Entity ? "entity" : "relation";
}

ItemLabel item_label_from_string(const std::string& s) {
  if (s == "entity") return ItemLabel::Entity;
  if (s == "relation") return ItemLabel::Relation;
  throw std::runtime_error("unknown item label: '" + s + "'");
}

std::string QAPair::question() const {
  std::string out;
  for (const Token& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t.surface;
  }
  return out;
}

std::string case_fold(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

namespace {

bool strippable_punct(char c) {
  // Apostrophes stay attached so possessive tokens survive re-tokenization.
  return std::ispunct(static_cast<unsigned char>(c)) && c != '\'';
}

void emit(std::vector<Token>& out, const std::string& surface, bool fold) {
  Token t;
  t.surface = surface;
  t.normalized = fold ? case_fold(surface) : surface;
  t.index = static_cast<int>(out.size());
  out.push_back(std::move(t));
}

}  // namespace

std::vector<Token> tokenize(const std::string& text, bool fold_case) {
  std::vector<Token> out;
  std::istringstream in(text);
  std::string chunk;
  while (in >> chunk) {
    std::size_t b = 0, e = chunk.size();
    while (b < e && strippable_punct(chunk[b])) ++b;
    while (e > b && strippable_punct(chunk[e - 1])) --e;
    std::string word = chunk.substr(b, e - b);
    if (word.empty()) continue;
    bool possessive = word.size() > 2 && (word.ends_with("'s") || word.ends_with("'S"));
    if (possessive) {
      emit(out, word.substr(0, word.size() - 2), fold_case);
      emit(out, word.substr(word.size() - 2), fold_case);
    } else {
      emit(out, word, fold_case);
    }
  }
  if (out.empty()) throw std::runtime_error("no tokens");
  return out;
}

namespace {

std::vector<LinkedItem> canonical_items(std::vector<LinkedItem> items) {
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  return items;
}

QAPair pair_from_record(const json& rec, bool fold_case) {
  QAPair qa;
  qa.id = rec.at("id").get<std::string>();
  qa.tokens = tokenize(rec.at("question").get<std::string>(), fold_case);
  std::vector<LinkedItem> items;
  for (const json& it : rec.at("items")) {
    items.push_back({it.at("title").get<std::string>(),
                     it.at("uri").get<std::string>(),
                     item_label_from_string(it.at("label").get<std::string>())});
  }
  qa.items = canonical_items(std::move(items));
  return qa;
}

}  // namespace

DatasetLoadResult load_dataset(const std::string& path, bool fold_case) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);

  DatasetLoadResult result;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    std::string id = "?";
    try {
      rec = json::parse(line);
      if (rec.contains("id") && rec["id"].is_string()) id = rec["id"];
      if (rec.at("items").empty()) {
        ++result.skipped_itemless;
        continue;
      }
      result.pairs.push_back(pair_from_record(rec, fold_case));
    } catch (const std::exception& e) {
      throw std::runtime_error("malformed record (id=" + id + ", line " +
                               std::to_string(line_no) + "): " + e.what());
    }
  }
  if (result.pairs.empty() && result.skipped_itemless == 0)
    throw std::runtime_error("dataset is empty: " + path);
  return result;
}

void save_dataset(const std::vector<QAPair>& pairs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  for (const QAPair& qa : pairs) {
    json items = json::array();
    for (const LinkedItem& it : qa.items)
      items.push_back({{"title", it.title}, {"uri", it.uri}, {"label", to_string(it.label)}});
    json rec{{"id", qa.id}, {"question", qa.question()}, {"items", items}};
    out << rec.dump() << '\n';
  }
}

namespace {

std::map<std::string, std::string> load_label_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open KG label file: " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 'uri<TAB>label'");
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

}  // namespace

KnowledgeBase load_kb(const std::string& entities_path,
                      const std::string& relations_path,
                      const std::string& edges_path) {
  KnowledgeBase kb;
  kb.entities = load_label_tsv(entities_path);
  kb.relations = load_label_tsv(relations_path);
  if (!edges_path.empty()) {
    std::ifstream in(edges_path);
    if (!in) throw std::runtime_error("cannot open KG edge file: " + edges_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream row(line);
      KnowledgeBase::Edge e;
      if (!std::getline(row, e.subject, '\t') || !std::getline(row, e.relation, '\t') ||
          !std::getline(row, e.object, '\t'))
        throw std::runtime_error(edges_path + ":" + std::to_string(line_no) +
                                 ": expected 'subject<TAB>relation<TAB>object'");
      if (!kb.relations.contains(e.relation))
        throw std::runtime_error(edges_path + ":" + std::to_string(line_no) +
                                 ": unknown relation uri " + e.relation);
      if (!kb.entities.contains(e.subject) || !kb.entities.contains(e.object))
        throw std::runtime_error(edges_path + ":" + std::to_string(line_no) +
                                 ": edge references unknown entity");
      kb.edges.push_back(std::move(e));
    }
  }
  return kb;
}

void save_kb(const KnowledgeBase& kb, const std::string& entities_path,
             const std::string& relations_path, const std::string& edges_path) {
  auto write_labels = [](const std::map<std::string, std::string>& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write KG file: " + path);
    for (const auto& [uri, label] : m) out << uri << '\t' << label << '\n';
  };
  write_labels(kb.entities, entities_path);
  write_labels(kb.relations, relations_path);
  if (!edges_path.empty()) {
    std::ofstream out(edges_path);
    if (!out) throw std::runtime_error("cannot write KG file: " + edges_path);
    for (const auto& e : kb.edges)
      out << e.subject << '\t' << e.relation << '\t' << e.object << '\n';
  }
}

EmbeddingStore::EmbeddingStore(int dim, OovPolicy policy, int n_buckets)
    : dim_(dim), policy_(policy), n_buckets_(n_buckets) {
  if (dim <= 0) throw std::invalid_argument("embedding dim must be positive");
  if (policy == OovPolicy::HashBucket && n_buckets <= 0)
    throw std::invalid_argument("bucket count must be positive");
}

EmbeddingStore EmbeddingStore::load(const std::string& path, OovPolicy policy, int n_buckets) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  std::string line;
  int dim = -1;
  std::map<std::string, Eigen::VectorXd> vectors;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string word;
    row >> word;
    std::vector<double> values;
    double v;
    while (row >> v) values.push_back(v);
    if (values.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": no vector components");
    if (dim < 0) dim = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != dim)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(dim) + " components, got " +
                               std::to_string(values.size()));
    vectors[word] = Eigen::Map<Eigen::VectorXd>(values.data(), dim);
  }
  if (dim < 0) throw std::runtime_error("embedding file is empty: " + path);
  EmbeddingStore store(dim, policy, n_buckets);
  store.vectors_ = std::move(vectors);
  return store;
}

void EmbeddingStore::insert(const std::string& word, Eigen::VectorXd vec) {
  if (vec.size() != dim_)
    throw std::invalid_argument("vector for '" + word + "' has wrong dimension");
  vectors_[word] = std::move(vec);
}

bool EmbeddingStore::contains(const std::string& word) const {
  return vectors_.contains(word);
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Eigen::VectorXd EmbeddingStore::lookup(const std::string& word) const {
  auto it = vectors_.find(word);
  if (it != vectors_.end()) return it->second;
  if (policy_ == OovPolicy::ZeroVector) return Eigen::VectorXd::Zero(dim_);
  // Bucket vectors are regenerated on demand so lookups stay lock-free and
  // bit-identical across calls.
  std::uint64_t bucket = fnv1a64(word) % static_cast<std::uint64_t>(n_buckets_);
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull ^ (bucket * 0x2545f4914f6cdd1dull) ^
                      (static_cast<std::uint64_t>(dim_) << 32));
  Eigen::VectorXd v(dim_);
  for (int i = 0; i < dim_; ++i) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
    v[i] = u - 0.5;
  }
  return v;
}

Eigen::VectorXd embed(const EmbeddingStore& store, const Token& token) {
  return store.lookup(token.normalized);
}

}  // namespace qaparse
