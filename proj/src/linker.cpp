#include "qaparse/linker.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qaparse {

std::string to_string(CaseMode mode) {
  return mode == CaseMode::Fold ? "fold" : "preserve";
}

CaseMode case_mode_from_string(const std::string& s) {
  if (s == "fold") return CaseMode::Fold;
  if (s == "preserve") return CaseMode::Preserve;
  throw std::runtime_error("unknown case mode: '" + s + "' (expected fold|preserve)");
}

std::map<std::string, int> trigrams(const std::string& s, CaseMode mode) {
  std::map<std::string, int> out;
  if (s.empty()) return out;
  std::string padded = "^" + (mode == CaseMode::Fold ? case_fold(s) : s) + "$";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) ++out[padded.substr(i, 3)];
  return out;
}

TrigramIndex build_index(const KnowledgeBase& kb, IndexKind kind, CaseMode mode) {
  TrigramIndex index;
  index.kind = kind;
  index.case_mode = mode;
  const auto& docs = kind == IndexKind::EntityIndex ? kb.entities : kb.relations;
  for (const auto& [uri, label] : docs) {
    auto grams = trigrams(label, mode);
    long long total = 0;
    for (const auto& [t, count] : grams) {
      index.postings[t].emplace_back(uri, count);
      total += count;
    }
    index.doc_lengths[uri] = total;
    index.labels[uri] = label;
  }
  // Map iteration already visits uris in ascending order, so postings come
  // out sorted.
  return index;
}

std::vector<Candidate> retrieve(const TrigramIndex& index, const std::string& mention, int k) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  const auto grams = trigrams(mention, index.case_mode);
  const double n_docs = static_cast<double>(index.doc_lengths.size());

  // Accumulate per uri over the mention's trigrams in ascending order; the
  // brute-force oracle sums in the same order, so scores match bit for bit.
  std::map<std::string, double> acc;
  for (const auto& [t, m_count] : grams) {
    auto it = index.postings.find(t);
    if (it == index.postings.end()) continue;
    double idf = std::log(1.0 + n_docs / static_cast<double>(it->second.size()));
    for (const auto& [uri, d_count] : it->second)
      acc[uri] += static_cast<double>(std::min(m_count, d_count)) * idf;
  }

  std::vector<Candidate> out;
  out.reserve(index.doc_lengths.size());
  for (const auto& [uri, len] : index.doc_lengths) {
    Candidate c;
    c.uri = uri;
    c.kg_label = index.labels.at(uri);
    auto it = acc.find(uri);
    if (it != acc.end() && len > 0)
      c.retrieval_score = it->second / std::sqrt(static_cast<double>(len));
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.retrieval_score != b.retrieval_score) return a.retrieval_score > b.retrieval_score;
    return a.uri < b.uri;
  });
  if (static_cast<int>(out.size()) > k) out.resize(k);
  return out;
}

std::vector<Candidate> expand_relations(const KnowledgeBase& kb, const Candidate& top_entity,
                                        std::vector<Candidate> existing) {
  for (const auto& edge : kb.edges) {
    if (edge.subject != top_entity.uri && edge.object != top_entity.uri) continue;
    bool present = std::any_of(existing.begin(), existing.end(),
                               [&](const Candidate& c) { return c.uri == edge.relation; });
    if (present) continue;
    Candidate c;
    c.uri = edge.relation;
    auto it = kb.relations.find(edge.relation);
    c.kg_label = it == kb.relations.end() ? std::string() : it->second;
    existing.push_back(std::move(c));
  }
  return existing;
}

std::vector<Candidate> rank(std::vector<Candidate> candidates, const std::string& mention,
                            const SimilarityConfig& sim_cfg, const EmbeddingStore& store,
                            int k) {
  for (Candidate& c : candidates)
    c.rank_score = similarity(sim_cfg, mention, c.kg_label, store);
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.rank_score != b.rank_score) return a.rank_score > b.rank_score;
    return a.uri < b.uri;
  });
  if (k >= 0 && static_cast<int>(candidates.size()) > k) candidates.resize(k);
  return candidates;
}

LinkResult link(const std::vector<Token>& tokens, const std::vector<Action>& actions,
                const TrigramIndex& entity_index, const TrigramIndex& relation_index,
                const KnowledgeBase& kb, const EmbeddingStore& store, const LinkConfig& cfg,
                int k) {
  LinkResult result;
  std::vector<PhraseMention> phrases = extract_phrases(actions, tokens);
  if (phrases.empty()) return result;

  int pool = std::max(cfg.retrieve_pool, k);
  std::vector<std::vector<Candidate>> retrieved(phrases.size());
  std::vector<Candidate> top_entities;  // per entity mention, best retrieval hit
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    const TrigramIndex& index =
        phrases[i].label == Action::Entity ? entity_index : relation_index;
    retrieved[i] = retrieve(index, phrases[i].text, pool);
    if (phrases[i].label == Action::Entity && !retrieved[i].empty() &&
        retrieved[i].front().retrieval_score > 0.0)
      top_entities.push_back(retrieved[i].front());
  }

  for (std::size_t i = 0; i < phrases.size(); ++i) {
    std::vector<Candidate> cands = std::move(retrieved[i]);
    if (phrases[i].label == Action::Relation) {
      for (const Candidate& e : top_entities) cands = expand_relations(kb, e, cands);
    }
    MentionLinks links;
    links.mention = phrases[i];
    links.candidates = rank(std::move(cands), phrases[i].text, cfg.sim_for(phrases[i].label),
                            store, k);
    result.mentions.push_back(std::move(links));
  }
  return result;
}

namespace {

constexpr char kIndexMagic[4] = {'Q', 'I', 'D', 'X'};
constexpr std::uint32_t kIndexVersion = 1;

template <class T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error(std::string("index file truncated reading ") + what);
  return v;
}

void write_str(std::ofstream& out, const std::string& s) {
  write_pod(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::ifstream& in, const char* what) {
  auto len = read_pod<std::uint32_t>(in, what);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw std::runtime_error(std::string("index file truncated reading ") + what);
  return s;
}

}  // namespace

void save_index(const TrigramIndex& index, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write index file: " + path);
  out.write(kIndexMagic, 4);
  write_pod(out, kIndexVersion);
  write_pod(out, static_cast<std::uint8_t>(index.kind));
  write_pod(out, static_cast<std::uint8_t>(index.case_mode));

  // Document table; postings refer to uris by position in it.
  write_pod(out, static_cast<std::uint64_t>(index.doc_lengths.size()));
  std::map<std::string, std::uint32_t> doc_ids;
  for (const auto& [uri, len] : index.doc_lengths) {
    doc_ids.emplace(uri, static_cast<std::uint32_t>(doc_ids.size()));
    write_str(out, uri);
    write_str(out, index.labels.at(uri));
    write_pod(out, static_cast<std::int64_t>(len));
  }
  write_pod(out, static_cast<std::uint64_t>(index.postings.size()));
  for (const auto& [trigram, posts] : index.postings) {
    write_str(out, trigram);
    write_pod(out, static_cast<std::uint64_t>(posts.size()));
    for (const auto& [uri, count] : posts) {
      write_pod(out, doc_ids.at(uri));
      write_pod(out, static_cast<std::int32_t>(count));
    }
  }
  if (!out) throw std::runtime_error("short write to index file: " + path);
}

TrigramIndex load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open index file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kIndexMagic, 4) != 0)
    throw std::runtime_error("not an index file: " + path);
  auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kIndexVersion)
    throw std::runtime_error("unsupported index file version " + std::to_string(version));

  TrigramIndex index;
  index.kind = static_cast<IndexKind>(read_pod<std::uint8_t>(in, "kind"));
  index.case_mode = static_cast<CaseMode>(read_pod<std::uint8_t>(in, "case mode"));
  auto n_docs = read_pod<std::uint64_t>(in, "doc count");
  std::vector<std::string> uris;
  uris.reserve(n_docs);
  for (std::uint64_t i = 0; i < n_docs; ++i) {
    std::string uri = read_str(in, "uri");
    std::string label = read_str(in, "label");
    auto len = read_pod<std::int64_t>(in, "doc length");
    index.doc_lengths[uri] = len;
    index.labels[uri] = label;
    uris.push_back(std::move(uri));
  }
  auto n_trigrams = read_pod<std::uint64_t>(in, "trigram count");
  for (std::uint64_t i = 0; i < n_trigrams; ++i) {
    std::string t = read_str(in, "trigram");
    auto n_posts = read_pod<std::uint64_t>(in, "posting count");
    auto& posts = index.postings[t];
    posts.reserve(n_posts);
    for (std::uint64_t j = 0; j < n_posts; ++j) {
      auto doc_id = read_pod<std::uint32_t>(in, "posting doc");
      auto count = read_pod<std::int32_t>(in, "posting count");
      if (doc_id >= uris.size()) throw std::runtime_error("corrupt index file: bad doc id");
      posts.emplace_back(uris[doc_id], count);
    }
  }
  return index;
}

void write_link_results(const std::vector<LinkResult>& results, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write link results: " + path);
  for (const LinkResult& r : results) {
    nlohmann::json mentions = nlohmann::json::array();
    for (const MentionLinks& m : r.mentions) {
      nlohmann::json cands = nlohmann::json::array();
      for (const Candidate& c : m.candidates)
        cands.push_back({{"uri", c.uri}, {"score", c.rank_score}});
      mentions.push_back({{"mention", m.mention.text},
                          {"span", {m.mention.start, m.mention.end}},
                          {"label", m.mention.label == Action::Entity ? "entity" : "relation"},
                          {"candidates", cands}});
    }
    out << nlohmann::json{{"id", r.qa_id}, {"mentions", mentions}}.dump() << '\n';
  }
}

}  // namespace qaparse
