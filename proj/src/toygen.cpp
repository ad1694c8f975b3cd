#include "qaparse/toygen.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

namespace qaparse {

namespace {

const char* kFirstNames[] = {
    "Barack",  "Ada",    "Marie",   "Alan",   "Grace",   "Nikola",    "Albert", "Rosa",
    "Isaac",   "Emmy",   "Linus",   "Edsger", "Sofia",   "Katherine", "Dorothy", "Leonhard",
    "Carl",    "Max",    "Lise",    "Niels",  "Erwin",   "Paul",      "Richard", "Enrico",
    "Hideki",  "Rachel", "George",  "Mary",   "Srinivasa", "Hedy"};

const char* kLastNames[] = {
    "Obama",    "Lovelace", "Curie",   "Turing",  "Hopper",   "Tesla",   "Einstein",
    "Parks",    "Newton",   "Noether", "Pauling", "Dijkstra", "Johnson", "Vaughan",
    "Euler",    "Gauss",    "Planck",  "Meitner", "Bohr",     "Dirac",   "Feynman",
    "Fermi",    "Yukawa",   "Carson",  "Boole",   "Somerville", "Lamarr", "Ramanujan",
    "Kepler",   "Darwin"};

const char* kRelations[] = {
    "spouse",   "mayor",    "capital",  "author",    "founder",  "director", "president",
    "parent",   "anthem",   "currency", "leader",    "architect", "composer", "editor",
    "publisher", "developer", "successor", "predecessor", "employer", "inventor", "owner",
    "chairman", "coach",    "captain",  "governor",  "sibling",  "mentor",   "patron",
    "teacher",  "rival"};

const char* kTemplates[] = {
    "who is the %R of %E",  "what is the %R of %E", "name the %R of %E",
    "%R of %E",             "who was the %R of %E", "tell me the %R of %E",
    "give the %R of %E",
};

std::string slug(const std::string& name) {
  std::string s = case_fold(name);
  for (char& c : s)
    if (c == ' ') c = '_';
  return s;
}

std::size_t draw(std::mt19937_64& rng, std::size_t n) { return rng() % n; }

}  // namespace

ToyCorpus generate_toy_corpus(std::uint64_t seed, int n_entities, int n_relations,
                              int n_questions) {
  if (n_entities < 1 || n_relations < 1 || n_questions < 1)
    throw std::invalid_argument("toy corpus counts must be at least 1");

  std::mt19937_64 rng(seed ^ 0x7177617273650a01ull);
  ToyCorpus corpus;

  // Entities; the leading quarter is forced multi-word so small corpora keep
  // the multi-word share above 20%.
  std::set<std::string> used;
  std::vector<std::string> entity_names, entity_uris;
  const std::size_t n_first = std::size(kFirstNames), n_last = std::size(kLastNames);
  for (int i = 0; i < n_entities; ++i) {
    bool multi = i < (n_entities + 3) / 4 || draw(rng, 100) < 40;
    std::string name;
    for (int attempt = 0; attempt < 64; ++attempt) {
      name = multi ? std::string(kFirstNames[draw(rng, n_first)]) + " " +
                         kLastNames[draw(rng, n_last)]
                   : std::string(kLastNames[draw(rng, n_last)]);
      if (!used.contains(name)) break;
    }
    if (used.contains(name)) name += " " + std::to_string(i);
    used.insert(name);
    std::string uri = "ent:" + slug(name);
    corpus.kb.entities[uri] = name;
    entity_names.push_back(name);
    entity_uris.push_back(uri);
  }

  std::vector<std::string> relation_names, relation_uris;
  for (int i = 0; i < n_relations; ++i) {
    std::string name = i < static_cast<int>(std::size(kRelations))
                           ? kRelations[i]
                           : "relation" + std::to_string(i);
    std::string uri = "rel:" + slug(name);
    corpus.kb.relations[uri] = name;
    relation_names.push_back(name);
    relation_uris.push_back(uri);
  }

  std::set<std::tuple<std::string, std::string, std::string>> edge_set;
  auto add_edge = [&](const std::string& s, const std::string& r, const std::string& o) {
    if (edge_set.emplace(s, r, o).second) corpus.kb.edges.push_back({s, r, o});
  };

  for (int q = 0; q < n_questions; ++q) {
    std::size_t e = draw(rng, entity_names.size());
    std::size_t r = draw(rng, relation_names.size());
    const std::string& tmpl = kTemplates[draw(rng, std::size(kTemplates))];

    std::string text;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
      if (tmpl[i] == '%' && i + 1 < tmpl.size() && tmpl[i + 1] == 'R') {
        text += relation_names[r];
        ++i;
      } else if (tmpl[i] == '%' && i + 1 < tmpl.size() && tmpl[i + 1] == 'E') {
        text += entity_names[e];
        ++i;
      } else {
        text += tmpl[i];
      }
    }

    QAPair qa;
    char id[16];
    std::snprintf(id, sizeof(id), "toy-%04d", q);
    qa.id = id;
    qa.tokens = tokenize(text);
    qa.items = {{relation_names[r], relation_uris[r], ItemLabel::Relation},
                {entity_names[e], entity_uris[e], ItemLabel::Entity}};
    std::sort(qa.items.begin(), qa.items.end());
    corpus.pairs.push_back(std::move(qa));

    // The question's fact becomes an edge, so one-hop expansion can find the
    // relation from the entity.
    add_edge(entity_uris[e], relation_uris[r], entity_uris[draw(rng, entity_uris.size())]);
  }

  // Noise edges.
  for (int i = 0; i < n_questions / 2; ++i)
    add_edge(entity_uris[draw(rng, entity_uris.size())],
             relation_uris[draw(rng, relation_uris.size())],
             entity_uris[draw(rng, entity_uris.size())]);

  return corpus;
}

}  // namespace qaparse
