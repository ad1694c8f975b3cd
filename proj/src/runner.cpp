#include "qaparse/runner.hpp"

#include "qaparse/toygen.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qaparse {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + salt * 0x9e3779b97f4a7c15ull;
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

}  // namespace

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  for (const auto& [key, value] : j.items()) {
    if (key == "dataset") cfg.dataset = value;
    else if (key == "test_dataset") cfg.test_dataset = value;
    else if (key == "entities") cfg.entities_path = value;
    else if (key == "relations") cfg.relations_path = value;
    else if (key == "edges") cfg.edges_path = value;
    else if (key == "embeddings") cfg.embeddings = value;
    else if (key == "index_prefix") cfg.index_prefix = value;
    else if (key == "policy") cfg.policy_path = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "log") cfg.log_path = value;
    else if (key == "report_json") cfg.report_json = value;
    else if (key == "breakdown") cfg.breakdown = value;
    else if (key == "links_out") cfg.links_out = value;
    else if (key == "h") cfg.h = value;
    else if (key == "arch") cfg.arch = arch_from_string(value);
    else if (key == "gamma") cfg.gamma = value;
    else if (key == "lr") cfg.lr = value;
    else if (key == "epochs") cfg.epochs = value;
    else if (key == "batch_episodes") cfg.batch_episodes = value;
    else if (key == "hidden") cfg.hidden = value;
    else if (key == "dim") cfg.dim = value;
    else if (key == "entropy_bonus") cfg.entropy_bonus = value;
    else if (key == "baseline") cfg.baseline = value;
    else if (key == "baseline_momentum") cfg.baseline_momentum = value;
    else if (key == "k") cfg.k = value;
    else if (key == "case_mode") cfg.case_mode = case_mode_from_string(value);
    else if (key == "combine_weight") cfg.combine_weight = value;
    else if (key == "retrieve_pool") cfg.retrieve_pool = value;
    else if (key == "seed") cfg.seed = value;
    else if (key == "oov_buckets") cfg.oov_buckets = value;
    else if (key == "toy_entities") cfg.toy_entities = value;
    else if (key == "toy_relations") cfg.toy_relations = value;
    else if (key == "toy_questions") cfg.toy_questions = value;
    else if (key == "toy_test") cfg.toy_test = value;
    else throw std::runtime_error("unknown config key: " + key);
  }
}

std::string entity_index_path(const RunConfig& cfg) { return cfg.index_prefix + ".ent.idx"; }
std::string relation_index_path(const RunConfig& cfg) { return cfg.index_prefix + ".rel.idx"; }

EmbeddingStore open_store(const RunConfig& cfg) {
  if (!cfg.embeddings.empty())
    return EmbeddingStore::load(cfg.embeddings, OovPolicy::ZeroVector, cfg.oov_buckets);
  return EmbeddingStore(cfg.dim, OovPolicy::HashBucket, cfg.oov_buckets);
}

EnvConfig env_config(const RunConfig& cfg) {
  EnvConfig env;
  env.h = cfg.h;
  env.gamma = cfg.gamma;
  bool fold = cfg.case_mode == CaseMode::Fold;
  env.entity_sim = {SimKind::Lev, cfg.combine_weight, fold};
  env.relation_sim = {SimKind::Combined, cfg.combine_weight, fold};
  return env;
}

LinkConfig link_config(const RunConfig& cfg) {
  LinkConfig lc;
  bool fold = cfg.case_mode == CaseMode::Fold;
  lc.entity_sim = {SimKind::Lev, cfg.combine_weight, fold};
  lc.relation_sim = {SimKind::Combined, cfg.combine_weight, fold};
  lc.retrieve_pool = cfg.retrieve_pool;
  return lc;
}

void run_gen_toy(const RunConfig& cfg, std::ostream& out) {
  if (cfg.out_dir.empty()) throw std::runtime_error("gen-toy needs an output directory");
  if (cfg.toy_test >= cfg.toy_questions)
    throw std::runtime_error("test split must be smaller than the question count");
  std::filesystem::create_directories(cfg.out_dir);

  ToyCorpus corpus =
      generate_toy_corpus(cfg.seed, cfg.toy_entities, cfg.toy_relations, cfg.toy_questions);
  std::vector<QAPair> train(corpus.pairs.begin(), corpus.pairs.end() - cfg.toy_test);
  std::vector<QAPair> test(corpus.pairs.end() - cfg.toy_test, corpus.pairs.end());

  auto path = [&](const char* name) { return (std::filesystem::path(cfg.out_dir) / name).string(); };
  save_dataset(train, path("train.jsonl"));
  save_dataset(test, path("test.jsonl"));
  save_kb(corpus.kb, path("entities.tsv"), path("relations.tsv"), path("edges.tsv"));

  std::ofstream meta(path("meta.json"), std::ios::trunc);
  meta << nlohmann::json{{"seed", cfg.seed},
                         {"entities", cfg.toy_entities},
                         {"relations", cfg.toy_relations},
                         {"questions", cfg.toy_questions},
                         {"test", cfg.toy_test}}
              .dump(2)
       << '\n';

  out << "toy corpus: " << corpus.kb.entities.size() << " entities, "
      << corpus.kb.relations.size() << " relations, " << corpus.kb.edges.size() << " edges\n"
      << "train questions: " << train.size() << "  test questions: " << test.size() << "\n"
      << "written to " << cfg.out_dir << "\n";
}

void run_index(const RunConfig& cfg, std::ostream& out) {
  if (cfg.index_prefix.empty()) throw std::runtime_error("index needs an output prefix");
  KnowledgeBase kb = load_kb(cfg.entities_path, cfg.relations_path, cfg.edges_path);
  TrigramIndex ent = build_index(kb, IndexKind::EntityIndex, cfg.case_mode);
  TrigramIndex rel = build_index(kb, IndexKind::RelationIndex, cfg.case_mode);
  save_index(ent, entity_index_path(cfg));
  save_index(rel, relation_index_path(cfg));
  out << "entity index: " << ent.doc_lengths.size() << " items, " << ent.postings.size()
      << " trigrams -> " << entity_index_path(cfg) << "\n"
      << "relation index: " << rel.doc_lengths.size() << " items, " << rel.postings.size()
      << " trigrams -> " << relation_index_path(cfg) << "\n";
}

TrainResult run_train(const RunConfig& cfg, std::ostream& out) {
  if (cfg.batch_episodes < 1) throw std::invalid_argument("batch size must be at least 1");
  DatasetLoadResult data = load_dataset(cfg.dataset);
  if (data.skipped_itemless > 0)
    out << "warning: skipped " << data.skipped_itemless << " records without linked items\n";
  const auto& pairs = data.pairs;

  EmbeddingStore store = open_store(cfg);
  EnvConfig env = env_config(cfg);
  PolicyParams params = init_policy(cfg.arch, cfg.h, store.dim(), cfg.hidden, cfg.seed);

  TrainConfig tc;
  tc.lr = cfg.lr;
  tc.gamma = cfg.gamma;
  tc.epochs = cfg.epochs;
  tc.batch_episodes = cfg.batch_episodes;
  tc.use_baseline = cfg.baseline;
  tc.baseline_momentum = cfg.baseline_momentum;
  tc.entropy_bonus = cfg.entropy_bonus;
  ReinforceUpdater updater(tc);

  out << "training on " << pairs.size() << " questions: arch " << to_string(cfg.arch) << ", h "
      << cfg.h << ", hidden " << cfg.hidden << ", dim " << store.dim() << ", seed " << cfg.seed
      << "\n";

  std::mt19937_64 rollout_rng(mix_seed(cfg.seed, 1));
  std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 2));
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  result.best = params;

  const auto t0 = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng() % i]);

    double reward_sum = 0.0, grad_norm_sum = 0.0;
    int n_updates = 0;
    std::vector<Episode> batch;
    batch.reserve(cfg.batch_episodes);
    for (std::size_t idx : order) {
      batch.push_back(rollout(params, pairs[idx], store, env, RolloutMode::Sample, &rollout_rng));
      reward_sum += batch.back().reward;
      if (static_cast<int>(batch.size()) == cfg.batch_episodes) {
        grad_norm_sum += updater.update(params, batch).grad_norm;
        ++n_updates;
        batch.clear();
      }
    }
    if (!batch.empty()) {
      grad_norm_sum += updater.update(params, batch).grad_norm;
      ++n_updates;
      batch.clear();
    }

    double mean_reward = reward_sum / static_cast<double>(pairs.size());
    double grad_norm = n_updates > 0 ? grad_norm_sum / n_updates : 0.0;
    if (std::isnan(mean_reward) || std::isnan(grad_norm))
      throw std::runtime_error("training diverged: mean reward is NaN at epoch " +
                               std::to_string(epoch));

    result.log_lines.push_back(fmt("%d %.6f %.6f", epoch, mean_reward, grad_norm));
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << result.log_lines.back() << fmt(" wall_s %.3f", wall) << "\n";

    if (mean_reward > result.best_reward) {
      result.best_reward = mean_reward;
      result.best_epoch = epoch;
      result.best = params;
    }
  }

  if (!cfg.policy_path.empty()) {
    save_policy(result.best, cfg.policy_path);
    out << "saved checkpoint (epoch " << result.best_epoch << ", mean reward "
        << fmt("%.4f", std::max(result.best_reward, 0.0)) << ") to " << cfg.policy_path << "\n";
  }
  if (!cfg.log_path.empty()) {
    std::ofstream log(cfg.log_path, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write training log: " + cfg.log_path);
    for (const std::string& line : result.log_lines) log << line << '\n';
  }
  return result;
}

EvalReport evaluate_policy(const PolicyParams& params, const std::vector<QAPair>& questions,
                           const KnowledgeBase& kb, const TrigramIndex& entity_index,
                           const TrigramIndex& relation_index, const EmbeddingStore& store,
                           const RunConfig& cfg, std::vector<LinkResult>* results_out) {
  RunConfig local = cfg;
  local.h = params.h;
  EnvConfig env = env_config(local);
  LinkConfig lc = link_config(local);

  std::vector<LinkResult> results;
  results.reserve(questions.size());
  for (const QAPair& qa : questions) {
    Episode ep = rollout(params, qa, store, env, RolloutMode::Greedy);
    LinkResult lr = link(qa.tokens, ep.actions, entity_index, relation_index, kb, store, lc,
                         cfg.k);
    lr.qa_id = qa.id;
    results.push_back(std::move(lr));
  }
  EvalReport report = evaluate(results, questions, cfg.k, cfg.case_mode);
  if (results_out) *results_out = std::move(results);
  return report;
}

EvalReport run_eval(const RunConfig& cfg, std::ostream& out) {
  const std::string dataset = cfg.test_dataset.empty() ? cfg.dataset : cfg.test_dataset;
  std::vector<QAPair> questions = load_dataset(dataset).pairs;
  KnowledgeBase kb = load_kb(cfg.entities_path, cfg.relations_path, cfg.edges_path);
  TrigramIndex ent = load_index(entity_index_path(cfg));
  TrigramIndex rel = load_index(relation_index_path(cfg));
  PolicyParams params = load_policy(cfg.policy_path);
  EmbeddingStore store = open_store(cfg);
  if (store.dim() != params.dim)
    throw std::runtime_error("embedding dimension " + std::to_string(store.dim()) +
                             " does not match the policy (" + std::to_string(params.dim) + ")");

  std::vector<LinkResult> results;
  EvalReport report = evaluate_policy(params, questions, kb, ent, rel, store, cfg, &results);
  out << report_table(report);
  if (!cfg.report_json.empty()) {
    std::ofstream j(cfg.report_json, std::ios::trunc);
    if (!j) throw std::runtime_error("cannot write report: " + cfg.report_json);
    nlohmann::json doc = nlohmann::json::parse(report_json(report));
    doc["seed"] = cfg.seed;
    j << doc.dump(2) << '\n';
  }
  if (!cfg.breakdown.empty()) write_breakdown(results, questions, cfg.k, cfg.breakdown);
  if (!cfg.links_out.empty()) write_link_results(results, cfg.links_out);
  return report;
}

LinkResult run_link(const RunConfig& cfg, const std::string& question, std::ostream& out) {
  QAPair qa;
  qa.id = "adhoc";
  qa.tokens = tokenize(question);  // throws "no tokens" on empty input

  KnowledgeBase kb = load_kb(cfg.entities_path, cfg.relations_path, cfg.edges_path);
  TrigramIndex ent = load_index(entity_index_path(cfg));
  TrigramIndex rel = load_index(relation_index_path(cfg));
  PolicyParams params = load_policy(cfg.policy_path);
  EmbeddingStore store = open_store(cfg);

  RunConfig local = cfg;
  local.h = params.h;
  Episode ep = rollout(params, qa, store, env_config(local), RolloutMode::Greedy);
  LinkResult lr =
      link(qa.tokens, ep.actions, ent, rel, kb, store, link_config(local), cfg.k);
  lr.qa_id = qa.id;

  if (lr.mentions.empty()) {
    out << "no mentions found\n";
    return lr;
  }
  for (const MentionLinks& m : lr.mentions) {
    out << (m.mention.label == Action::Entity ? "entity  " : "relation") << "  \""
        << m.mention.text << "\"  [" << m.mention.start << "," << m.mention.end << "]\n";
    for (const Candidate& c : m.candidates)
      out << fmt("    %-30s %.4f\n", c.uri.c_str(), c.rank_score);
  }
  return lr;
}

std::vector<AblationCell> run_ablation(const RunConfig& cfg, const std::vector<int>& h_values,
                                       const std::vector<Arch>& archs, int n_seeds,
                                       std::ostream& out) {
  if (n_seeds < 1) throw std::invalid_argument("ablation needs at least one seed");
  std::vector<QAPair> test = load_dataset(cfg.test_dataset.empty() ? cfg.dataset
                                                                   : cfg.test_dataset)
                                 .pairs;
  KnowledgeBase kb = load_kb(cfg.entities_path, cfg.relations_path, cfg.edges_path);
  TrigramIndex ent = build_index(kb, IndexKind::EntityIndex, cfg.case_mode);
  TrigramIndex rel = build_index(kb, IndexKind::RelationIndex, cfg.case_mode);

  std::vector<AblationCell> cells;
  for (int h : h_values) {
    for (Arch arch : archs) {
      AblationCell cell;
      cell.h = h;
      cell.arch = arch;
      cell.runs = n_seeds;
      std::vector<double> ent_mrr, rel_mrr;
      for (int s = 0; s < n_seeds; ++s) {
        RunConfig sub = cfg;
        sub.h = h;
        sub.arch = arch;
        sub.seed = cfg.seed + static_cast<std::uint64_t>(s);
        sub.policy_path.clear();
        sub.log_path.clear();
        sub.k = 1;  // rank-1 MRR, one point per trained run
        std::ostringstream sink;
        TrainResult tr = run_train(sub, sink);
        EmbeddingStore store = open_store(sub);
        EvalReport rep = evaluate_policy(tr.best, test, kb, ent, rel, store, sub);
        ent_mrr.push_back(rep.entity_mrr);
        rel_mrr.push_back(rep.relation_mrr);
      }
      auto mean_se = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        if (xs.size() < 2) return std::pair{mean, 0.0};
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var /= static_cast<double>(xs.size() - 1);
        return std::pair{mean, std::sqrt(var / static_cast<double>(xs.size()))};
      };
      std::tie(cell.entity_mrr_mean, cell.entity_mrr_se) = mean_se(ent_mrr);
      std::tie(cell.relation_mrr_mean, cell.relation_mrr_se) = mean_se(rel_mrr);
      cells.push_back(cell);
    }
  }

  out << "h  arch     runs  entity_mrr@1        relation_mrr@1\n";
  for (const AblationCell& c : cells)
    out << fmt("%-2d %-8s %-5d %.4f +/- %.4f   %.4f +/- %.4f\n", c.h,
               to_string(c.arch).c_str(), c.runs, c.entity_mrr_mean, c.entity_mrr_se,
               c.relation_mrr_mean, c.relation_mrr_se);
  return cells;
}

}  // namespace qaparse
