#pragma once

#include "qaparse/corpus.hpp"
#include "qaparse/evalkit.hpp"
#include "qaparse/linker.hpp"
#include "qaparse/policy.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qaparse {

// Everything a command needs, loadable from a JSON config file with
// command-line flags taking precedence.
struct RunConfig {
  // paths
  std::string dataset;        // training questions (jsonl)
  std::string test_dataset;   // evaluation questions (jsonl)
  std::string entities_path;  // KG entity labels (tsv)
  std::string relations_path; // KG relation labels (tsv)
  std::string edges_path;     // KG edges (tsv), optional
  std::string embeddings;     // word vectors (text), optional
  std::string index_prefix;   // index files <prefix>.ent.idx / <prefix>.rel.idx
  std::string policy_path;    // policy checkpoint
  std::string out_dir;        // gen-toy output directory
  std::string log_path;       // training log
  std::string report_json;    // eval report copy, optional
  std::string breakdown;      // per-question eval breakdown, optional
  std::string links_out;      // link-result records, optional

  // model and training knobs
  int h = 1;
  Arch arch = Arch::Recurrent;
  double gamma = 1.0;
  double lr = 0.2;
  int epochs = 300;
  int batch_episodes = 8;
  int hidden = 32;
  int dim = 16;  // word-vector dimension when no embedding file is given
  double entropy_bonus = 0.01;
  bool baseline = true;
  double baseline_momentum = 0.9;

  // linking and evaluation knobs
  int k = 5;
  CaseMode case_mode = CaseMode::Fold;
  double combine_weight = 0.5;
  int retrieve_pool = 32;

  // corpus knobs
  std::uint64_t seed = 1;
  int oov_buckets = 4096;
  int toy_entities = 10;
  int toy_relations = 6;
  int toy_questions = 100;
  int toy_test = 20;
};

void apply_config_file(RunConfig& cfg, const std::string& path);

std::string entity_index_path(const RunConfig& cfg);
std::string relation_index_path(const RunConfig& cfg);

// Word vectors from cfg.embeddings, or an empty hash-bucket store of
// cfg.dim when no file is given (every word then gets a deterministic
// pseudo-random vector, which is what toy training runs on).
EmbeddingStore open_store(const RunConfig& cfg);

EnvConfig env_config(const RunConfig& cfg);
LinkConfig link_config(const RunConfig& cfg);

// gen-toy: writes train/test datasets plus KG files into cfg.out_dir.
void run_gen_toy(const RunConfig& cfg, std::ostream& out);

// index: builds and saves entity and relation trigram indices.
void run_index(const RunConfig& cfg, std::ostream& out);

struct TrainResult {
  PolicyParams best;          // best-mean-reward checkpoint (saved)
  double best_reward = -1.0;
  int best_epoch = 0;
  std::vector<std::string> log_lines;  // "epoch mean_reward grad_norm"
};

// train: REINFORCE over the dataset; logs one line per epoch and keeps the
// best-reward checkpoint. Console output additionally reports wall time;
// the log file stays byte-reproducible for equal seeds.
TrainResult run_train(const RunConfig& cfg, std::ostream& out);

// Greedy rollouts + linking + metrics against in-memory artifacts; the
// building block behind eval and the ablation grid.
EvalReport evaluate_policy(const PolicyParams& params, const std::vector<QAPair>& questions,
                           const KnowledgeBase& kb, const TrigramIndex& entity_index,
                           const TrigramIndex& relation_index, const EmbeddingStore& store,
                           const RunConfig& cfg, std::vector<LinkResult>* results_out = nullptr);

// eval: greedy rollouts + linking + metrics on cfg.test_dataset.
EvalReport run_eval(const RunConfig& cfg, std::ostream& out);

// link: label and link one question.
LinkResult run_link(const RunConfig& cfg, const std::string& question, std::ostream& out);

struct AblationCell {
  int h = 0;
  Arch arch = Arch::Recurrent;
  int runs = 0;
  double entity_mrr_mean = 0.0, entity_mrr_se = 0.0;
  double relation_mrr_mean = 0.0, relation_mrr_se = 0.0;
};

// ablation: grid over window sizes and architectures, repeated over seeds;
// reports MRR mean and standard error per cell.
std::vector<AblationCell> run_ablation(const RunConfig& cfg, const std::vector<int>& h_values,
                                       const std::vector<Arch>& archs, int n_seeds,
                                       std::ostream& out);

}  // namespace qaparse
