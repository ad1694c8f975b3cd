#include "qaparse/evalkit.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace qaparse {

std::optional<int> item_hit(const std::vector<Candidate>& result_list, const LinkedItem& gold) {
  for (std::size_t i = 0; i < result_list.size(); ++i)
    if (result_list[i].uri == gold.uri) return static_cast<int>(i) + 1;
  return std::nullopt;
}

namespace {

bool label_matches(Action a, ItemLabel l) { return static_cast<int>(a) == static_cast<int>(l); }

struct GoldOutcome {
  const LinkedItem* gold = nullptr;
  int rank = 0;         // position of the gold uri in the paired list, 0 = miss
  int mention_idx = -1; // index into result.mentions, -1 = unpaired
};

// Greedy gold<->mention pairing for one question and label, computed on the
// full candidate lists so it is stable across k: top-1 matches claim their
// mention first, remaining golds take the unpaired mention holding their uri
// at the best rank (earliest mention on ties).
std::vector<GoldOutcome> gold_outcomes(const LinkResult& result,
                                       const std::vector<LinkedItem>& items, ItemLabel label) {
  std::vector<GoldOutcome> out;
  std::vector<bool> taken(result.mentions.size(), false);
  for (const LinkedItem& g : items) {
    if (g.label != label) continue;
    out.push_back({&g, 0, -1});
  }
  for (GoldOutcome& o : out) {
    for (std::size_t m = 0; m < result.mentions.size(); ++m) {
      const MentionLinks& links = result.mentions[m];
      if (taken[m] || !label_matches(links.mention.label, label)) continue;
      if (!links.candidates.empty() && links.candidates.front().uri == o.gold->uri) {
        taken[m] = true;
        o.rank = 1;
        o.mention_idx = static_cast<int>(m);
        break;
      }
    }
  }
  for (GoldOutcome& o : out) {
    if (o.rank != 0) continue;
    int best_rank = 0, best_m = -1;
    for (std::size_t m = 0; m < result.mentions.size(); ++m) {
      const MentionLinks& links = result.mentions[m];
      if (taken[m] || !label_matches(links.mention.label, label)) continue;
      auto hit = item_hit(links.candidates, *o.gold);
      if (hit && (best_m < 0 || *hit < best_rank)) {
        best_rank = *hit;
        best_m = static_cast<int>(m);
      }
    }
    if (best_m >= 0) {
      taken[best_m] = true;
      o.rank = best_rank;
      o.mention_idx = best_m;
    }
  }
  return out;
}

void check_alignment(std::span<const LinkResult> results, std::span<const QAPair> golds) {
  if (results.size() != golds.size())
    throw std::invalid_argument("results and gold questions differ in count");
  for (std::size_t i = 0; i < results.size(); ++i)
    if (!results[i].qa_id.empty() && results[i].qa_id != golds[i].id)
      throw std::invalid_argument("result/gold id mismatch at position " + std::to_string(i) +
                                  ": " + results[i].qa_id + " vs " + golds[i].id);
}

}  // namespace

double accuracy(std::span<const LinkResult> results, std::span<const QAPair> golds,
                ItemLabel label) {
  check_alignment(results, golds);
  long long hits = 0, total = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (const GoldOutcome& o : gold_outcomes(results[i], golds[i].items, label)) {
      ++total;
      if (o.rank == 1) ++hits;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

double mrr_at_k(std::span<const LinkResult> results, std::span<const QAPair> golds,
                ItemLabel label, int k) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  check_alignment(results, golds);
  double sum = 0.0;
  long long total = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (const GoldOutcome& o : gold_outcomes(results[i], golds[i].items, label)) {
      ++total;
      if (o.rank >= 1 && o.rank <= k) sum += 1.0 / static_cast<double>(o.rank);
    }
  }
  return total == 0 ? 0.0 : sum / static_cast<double>(total);
}

double recall_proxy_at_k(std::span<const LinkResult> results, std::span<const QAPair> golds,
                         int k) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  check_alignment(results, golds);
  if (results.empty()) return 0.0;
  long long covered = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    bool all = true;
    for (ItemLabel label : {ItemLabel::Entity, ItemLabel::Relation}) {
      for (const GoldOutcome& o : gold_outcomes(results[i], golds[i].items, label))
        if (o.rank < 1 || o.rank > k) all = false;
    }
    if (all) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(results.size());
}

bool mrr_monotonicity_check(std::span<const LinkResult> results, std::span<const QAPair> golds,
                            ItemLabel label, int k_max) {
  double prev = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    double m = mrr_at_k(results, golds, label, k);
    if (m < prev - 1e-12) return false;
    prev = m;
  }
  return true;
}

EvalReport evaluate(std::span<const LinkResult> results, std::span<const QAPair> golds, int k,
                    CaseMode case_mode) {
  EvalReport r;
  r.entity_accuracy = accuracy(results, golds, ItemLabel::Entity);
  r.relation_accuracy = accuracy(results, golds, ItemLabel::Relation);
  r.entity_mrr = mrr_at_k(results, golds, ItemLabel::Entity, k);
  r.relation_mrr = mrr_at_k(results, golds, ItemLabel::Relation, k);
  r.recall_at_k = recall_proxy_at_k(results, golds, k);
  r.n_questions = static_cast<int>(results.size());
  r.k = k;
  r.case_mode = case_mode;
  return r;
}

std::string report_table(const EvalReport& report) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "questions          %d\n"
                "k                  %d\n"
                "case mode          %s\n"
                "entity accuracy    %.4f\n"
                "relation accuracy  %.4f\n"
                "entity mrr@%-2d      %.4f\n"
                "relation mrr@%-2d    %.4f\n"
                "recall@%-2d          %.4f\n",
                report.n_questions, report.k, to_string(report.case_mode).c_str(),
                report.entity_accuracy, report.relation_accuracy, report.k, report.entity_mrr,
                report.k, report.relation_mrr, report.k, report.recall_at_k);
  return buf;
}

std::string report_json(const EvalReport& report) {
  nlohmann::json j{{"n_questions", report.n_questions},
                   {"k", report.k},
                   {"case_mode", to_string(report.case_mode)},
                   {"entity_accuracy", report.entity_accuracy},
                   {"relation_accuracy", report.relation_accuracy},
                   {"entity_mrr", report.entity_mrr},
                   {"relation_mrr", report.relation_mrr},
                   {"recall_at_k", report.recall_at_k}};
  return j.dump(2);
}

void write_breakdown(std::span<const LinkResult> results, std::span<const QAPair> golds, int k,
                     const std::string& path) {
  check_alignment(results, golds);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write breakdown file: " + path);
  for (std::size_t i = 0; i < results.size(); ++i) {
    nlohmann::json items = nlohmann::json::array();
    for (ItemLabel label : {ItemLabel::Entity, ItemLabel::Relation}) {
      for (const GoldOutcome& o : gold_outcomes(results[i], golds[i].items, label)) {
        nlohmann::json rec{{"uri", o.gold->uri},
                           {"label", to_string(label)},
                           {"rank", o.rank},
                           {"hit_at_k", o.rank >= 1 && o.rank <= k}};
        if (o.mention_idx >= 0)
          rec["mention"] = results[i].mentions[o.mention_idx].mention.text;
        items.push_back(std::move(rec));
      }
    }
    out << nlohmann::json{{"id", golds[i].id}, {"items", items}}.dump() << '\n';
  }
}

}  // namespace qaparse
