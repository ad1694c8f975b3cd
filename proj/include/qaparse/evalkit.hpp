#pragma once

#include "qaparse/corpus.hpp"
#include "qaparse/linker.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qaparse {

struct EvalReport {
  double entity_accuracy = 0.0;
  double relation_accuracy = 0.0;
  double entity_mrr = 0.0;
  double relation_mrr = 0.0;
  double recall_at_k = 0.0;
  int n_questions = 0;
  int k = 1;
  CaseMode case_mode = CaseMode::Fold;

  bool operator==(const EvalReport&) const = default;
};

// 1-based position of the gold uri in a ranked candidate list.
std::optional<int> item_hit(const std::vector<Candidate>& result_list, const LinkedItem& gold);

// Fraction of gold items of the label whose paired mention's top candidate
// is the gold uri. Golds are paired greedily with mentions: exact top-1
// matches first, then remaining golds take the unpaired mention holding
// their uri at the best rank.
double accuracy(std::span<const LinkResult> results, std::span<const QAPair> golds,
                ItemLabel label);

// Mean reciprocal rank over gold items (miss or rank beyond k counts 0),
// under the same pairing as accuracy.
double mrr_at_k(std::span<const LinkResult> results, std::span<const QAPair> golds,
                ItemLabel label, int k);

// Fraction of questions whose every gold item (both labels) appears in its
// paired mention's top-k list.
double recall_proxy_at_k(std::span<const LinkResult> results, std::span<const QAPair> golds,
                         int k);

bool mrr_monotonicity_check(std::span<const LinkResult> results, std::span<const QAPair> golds,
                            ItemLabel label, int k_max);

EvalReport evaluate(std::span<const LinkResult> results, std::span<const QAPair> golds, int k,
                    CaseMode case_mode);

std::string report_table(const EvalReport& report);
std::string report_json(const EvalReport& report);

// Per-question pairing detail for manual error analysis, one JSON record per
// question.
void write_breakdown(std::span<const LinkResult> results, std::span<const QAPair> golds, int k,
                     const std::string& path);

}  // namespace qaparse
