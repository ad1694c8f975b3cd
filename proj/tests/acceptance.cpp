// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits with the number of failures.

#include "qaparse/evalkit.hpp"
#include "qaparse/linker.hpp"
#include "qaparse/policy.hpp"
#include "qaparse/runner.hpp"
#include "qaparse/toygen.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace qaparse;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& what, bool ok, const std::string& detail) {
  std::printf("%s  criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", id, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ToyWorkspace {
  fs::path dir;
  RunConfig cfg;
  ToyCorpus corpus;
  std::vector<QAPair> train, test;

  ToyWorkspace() {
    dir = fs::temp_directory_path() / "qaparse_acceptance";
    fs::create_directories(dir);
    corpus = generate_toy_corpus(7, 10, 6, 100);
    train.assign(corpus.pairs.begin(), corpus.pairs.end() - 20);
    test.assign(corpus.pairs.end() - 20, corpus.pairs.end());

    cfg.seed = 7;
    cfg.h = 1;
    cfg.arch = Arch::Recurrent;
    cfg.gamma = 1.0;
    cfg.epochs = 300;
    cfg.dataset = (dir / "train.jsonl").string();
    cfg.test_dataset = (dir / "test.jsonl").string();
    cfg.entities_path = (dir / "entities.tsv").string();
    cfg.relations_path = (dir / "relations.tsv").string();
    cfg.edges_path = (dir / "edges.tsv").string();
    cfg.policy_path = (dir / "policy.bin").string();
    cfg.log_path = (dir / "train.log").string();
    save_dataset(train, cfg.dataset);
    save_dataset(test, cfg.test_dataset);
    save_kb(corpus.kb, cfg.entities_path, cfg.relations_path, cfg.edges_path);
  }
};

// criteria 1, 2, 8 and 9 share one trained policy
void run_training_criteria(ToyWorkspace& ws) {
  std::ostringstream sink;
  auto t0 = std::chrono::steady_clock::now();
  TrainResult tr = run_train(ws.cfg, sink);
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  TrigramIndex ent = build_index(ws.corpus.kb, IndexKind::EntityIndex, CaseMode::Fold);
  TrigramIndex rel = build_index(ws.corpus.kb, IndexKind::RelationIndex, CaseMode::Fold);
  EmbeddingStore store = open_store(ws.cfg);

  EvalReport report_orig =
      evaluate_policy(tr.best, ws.test, ws.corpus.kb, ent, rel, store, ws.cfg);
  report(1, "toy end-to-end convergence",
         report_orig.entity_accuracy >= 0.90 && report_orig.relation_accuracy >= 0.70 &&
             wall < 300.0,
         fmt("entity acc %.3f (need >= 0.90), relation acc %.3f (need >= 0.70), wall %.1fs",
             report_orig.entity_accuracy, report_orig.relation_accuracy, wall));

  // --- criterion 2: brute-force reward optimality on short questions
  {
    EnvConfig env = env_config(ws.cfg);
    std::vector<const QAPair*> shortq;
    for (const QAPair& qa : ws.test)
      if (qa.tokens.size() <= 8 && shortq.size() < 20) shortq.push_back(&qa);
    for (const QAPair& qa : ws.train)
      if (qa.tokens.size() <= 8 && shortq.size() < 20) shortq.push_back(&qa);

    int near_optimal = 0;
    double worst_ratio = 1.0;
    for (const QAPair* qa : shortq) {
      double best = oracle::best_reward_ref(*qa, env, store);
      double got = rollout(tr.best, *qa, store, env, RolloutMode::Greedy).reward;
      double ratio = best > 0.0 ? got / best : 1.0;
      worst_ratio = std::min(worst_ratio, ratio);
      if (got >= 0.95 * best) ++near_optimal;
    }
    report(2, "greedy policy reaches the brute-force reward optimum",
           shortq.size() == 20 && near_optimal >= 18,
           fmt("%d/20 questions within 0.95 of the enumerated maximum, worst ratio %.3f",
               near_optimal, worst_ratio));
  }

  // --- criterion 8: case-fold invariance of the full report
  {
    std::vector<QAPair> lowered;
    for (const QAPair& qa : ws.test) {
      QAPair lc;
      lc.id = qa.id;
      lc.tokens = tokenize(case_fold(qa.question()));
      lc.items = qa.items;
      lowered.push_back(std::move(lc));
    }
    EvalReport report_lc =
        evaluate_policy(tr.best, lowered, ws.corpus.kb, ent, rel, store, ws.cfg);
    report(8, "lowercased evaluation reproduces the fold-mode report",
           report_lc == report_orig,
           fmt("entity acc %.3f vs %.3f, relation acc %.3f vs %.3f, recall %.3f vs %.3f",
               report_lc.entity_accuracy, report_orig.entity_accuracy,
               report_lc.relation_accuracy, report_orig.relation_accuracy,
               report_lc.recall_at_k, report_orig.recall_at_k));
  }

  // --- criterion 9: byte-identical retraining
  {
    RunConfig again = ws.cfg;
    again.policy_path = (ws.dir / "policy_rerun.bin").string();
    again.log_path = (ws.dir / "train_rerun.log").string();
    std::ostringstream sink2;
    run_train(again, sink2);
    bool logs_equal = slurp(ws.cfg.log_path) == slurp(again.log_path);
    bool policies_equal = slurp(ws.cfg.policy_path) == slurp(again.policy_path);
    report(9, "identical seeds give byte-identical logs and checkpoints",
           logs_equal && policies_equal,
           fmt("logs %s, checkpoints %s", logs_equal ? "equal" : "differ",
               policies_equal ? "equal" : "differ"));
  }
}

void run_grad_check_criterion() {
  bool ok = true;
  std::string detail;
  QAPair qa;
  qa.id = "gc";
  qa.tokens = tokenize("who is the spouse of Ada Lovelace");
  qa.items = {{"spouse", "rel:spouse", ItemLabel::Relation},
              {"Ada Lovelace", "ent:ada", ItemLabel::Entity}};
  EmbeddingStore store(4, OovPolicy::HashBucket, 64);
  EnvConfig env;

  for (Arch arch : {Arch::LinearRelu, Arch::Recurrent, Arch::BiRecurrent}) {
    int hidden = arch == Arch::LinearRelu ? 8 : 6;
    PolicyParams p = init_policy(arch, 1, 4, hidden, 17);
    long long n_params = 0;
    for (const auto& [data, size] : tensor_views(p)) n_params += size;

    std::mt19937_64 rng(1234);
    Episode ep = rollout(p, qa, store, env, RolloutMode::Sample, &rng);
    double err = grad_check(p, ep, 1e-5);
    ok = ok && err < 1e-4 && n_params <= 1000;
    detail += fmt("%s %.2e (%lld params)  ", to_string(arch).c_str(), err, n_params);
  }
  report(3, "analytic gradients match finite differences", ok, detail);
}

void run_index_oracle_criterion() {
  std::mt19937_64 rng(2024);
  KnowledgeBase kb;
  std::vector<std::string> labels;
  for (int i = 0; i < 1000; ++i) {
    int words = 1 + static_cast<int>(rng() % 3);
    std::string label;
    for (int w = 0; w < words; ++w) label += (w ? " " : "") + oracle::random_word(rng, 2, 9);
    kb.entities[fmt("syn:%04d", i)] = label;
    labels.push_back(label);
  }
  TrigramIndex index = build_index(kb, IndexKind::EntityIndex, CaseMode::Fold);

  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::string mention;
    if (trial % 2 == 0) {
      mention = labels[rng() % labels.size()];
      for (int edits = 0; edits < 2 && !mention.empty(); ++edits)
        mention[rng() % mention.size()] = static_cast<char>('a' + rng() % 26);
    } else {
      mention = oracle::random_word(rng, 1, 12);
    }
    auto got = retrieve(index, mention, 10);
    auto want = oracle::retrieve_ref(kb.entities, mention, CaseMode::Fold, 10);
    bool equal = got.size() == want.size();
    for (std::size_t i = 0; equal && i < got.size(); ++i)
      equal = got[i].uri == want[i].uri && got[i].retrieval_score == want[i].retrieval_score;
    if (!equal) ++mismatches;
  }
  report(4, "index retrieval equals the brute-force scan exactly", mismatches == 0,
         fmt("%d/100 mentions mismatched over a 1000-label KB", mismatches));
}

void run_phrase_oracle_criterion() {
  std::mt19937_64 rng(3030);
  std::vector<Token> all_tokens = tokenize("w0 w1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11");
  int mismatches = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    int n = 1 + static_cast<int>(rng() % 12);
    std::vector<Token> tokens(all_tokens.begin(), all_tokens.begin() + n);
    std::vector<Action> actions;
    for (int i = 0; i < n; ++i) actions.push_back(static_cast<Action>(rng() % 3));

    auto got = extract_phrases(actions, tokens);
    auto want = oracle::group_runs_ref(actions);
    bool equal = got.size() == want.size();
    for (std::size_t i = 0; equal && i < got.size(); ++i)
      equal = got[i].start == want[i].start && got[i].end == want[i].end &&
              got[i].label == want[i].label;
    if (!equal) ++mismatches;
  }
  report(5, "phrase extraction matches the run-grouping reference", mismatches == 0,
         fmt("%d/10000 random sequences mismatched", mismatches));
}

void run_metric_fixture_criterion() {
  auto gold = [](const std::string& id, std::vector<LinkedItem> items) {
    QAPair qa;
    qa.id = id;
    qa.tokens = tokenize("x");
    qa.items = std::move(items);
    std::sort(qa.items.begin(), qa.items.end());
    return qa;
  };
  auto mention = [](Action label, std::vector<std::string> uris) {
    MentionLinks m;
    m.mention = {"m", label, 0, 0};
    for (const std::string& u : uris) m.candidates.push_back({u, u, 0.0, 0.0});
    return m;
  };

  bool ok = true;
  std::string detail;

  {  // accuracy 1.0
    std::vector<QAPair> golds{gold("q", {{"e", "ent:a", ItemLabel::Entity}})};
    std::vector<LinkResult> results{{"q", {mention(Action::Entity, {"ent:a"})}}};
    ok = ok && accuracy(results, golds, ItemLabel::Entity) == 1.0;
  }
  {  // accuracy 0.0
    std::vector<QAPair> golds{gold("q", {{"e", "ent:a", ItemLabel::Entity}})};
    std::vector<LinkResult> results{{"q", {}}};
    ok = ok && accuracy(results, golds, ItemLabel::Entity) == 0.0;
  }
  {  // accuracy 2/3
    std::vector<QAPair> golds{gold("q", {{"a", "ent:a", ItemLabel::Entity},
                                         {"b", "ent:b", ItemLabel::Entity},
                                         {"c", "ent:c", ItemLabel::Entity}})};
    std::vector<LinkResult> results{{"q",
                                     {mention(Action::Entity, {"ent:a"}),
                                      mention(Action::Entity, {"ent:b"}),
                                      mention(Action::Entity, {"ent:x", "ent:c"})}}};
    double acc = accuracy(results, golds, ItemLabel::Entity);
    ok = ok && std::abs(acc - 2.0 / 3.0) < 1e-12;
    detail += fmt("acc {1, 0, %.4f}  ", acc);
  }
  {  // mrr 1.0 and 0.25
    std::vector<QAPair> golds{gold("q", {{"e", "ent:a", ItemLabel::Entity}})};
    std::vector<LinkResult> top{{"q", {mention(Action::Entity, {"ent:a"})}}};
    std::vector<LinkResult> fourth{
        {"q", {mention(Action::Entity, {"e1", "e2", "e3", "ent:a", "e5"})}}};
    double m1 = mrr_at_k(top, golds, ItemLabel::Entity, 5);
    double m4 = mrr_at_k(fourth, golds, ItemLabel::Entity, 5);
    ok = ok && m1 == 1.0 && m4 == 0.25;
    detail += fmt("mrr {%.2f, %.2f}  ", m1, m4);
  }
  {  // monotonicity over randomized fixtures
    std::mt19937_64 rng(404);
    int monotone = 0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<QAPair> golds;
      std::vector<LinkResult> results;
      for (int q = 0; q < 4; ++q) {
        std::string id = fmt("q%d", q);
        std::string target = fmt("ent:%d", static_cast<int>(rng() % 12));
        golds.push_back(gold(id, {{"e", target, ItemLabel::Entity}}));
        LinkResult r;
        r.qa_id = id;
        int mentions = static_cast<int>(rng() % 3);
        for (int m = 0; m < mentions; ++m) {
          std::vector<std::string> uris;
          for (int i = 0; i < 6; ++i)
            uris.push_back(rng() % 4 == 0 ? target
                                          : fmt("ent:x%d", static_cast<int>(rng() % 40)));
          r.mentions.push_back(mention(Action::Entity, uris));
        }
        results.push_back(std::move(r));
      }
      if (mrr_monotonicity_check(results, golds, ItemLabel::Entity, 6)) ++monotone;
    }
    ok = ok && monotone == 100;
    detail += fmt("monotone %d/100", monotone);
  }
  report(6, "metric fixtures reproduce the expected values", ok, detail);
}

void run_figure_example_criterion() {
  KnowledgeBase kb;
  kb.entities = {{"dbr:Barack_Obama", "Barack Obama"},
                 {"dbr:Michelle_Obama", "Michelle Obama"},
                 {"dbr:Harvard", "Harvard University"}};
  kb.relations = {{"dbp:almaMater", "almaMater"}, {"dbp:spouse", "spouse"}};
  kb.edges = {{"dbr:Barack_Obama", "dbp:spouse", "dbr:Michelle_Obama"},
              {"dbr:Barack_Obama", "dbp:almaMater", "dbr:Harvard"}};

  // word vectors that make "wife" ~ "spouse" and "schools" ~ "almaMater"
  EmbeddingStore store(2, OovPolicy::ZeroVector);
  store.insert("wife", Eigen::Vector2d(1.0, 0.0));
  store.insert("spouse", Eigen::Vector2d(1.0, 0.0));
  store.insert("schools", Eigen::Vector2d(0.0, 1.0));
  store.insert("almamater", Eigen::Vector2d(0.0, 1.0));

  QAPair qa;
  qa.id = "fig";
  qa.tokens = tokenize("What are the schools where Barak Obama's wife has studied");
  qa.items = {{"almaMater", "dbp:almaMater", ItemLabel::Relation},
              {"Barack Obama", "dbr:Barack_Obama", ItemLabel::Entity},
              {"spouse", "dbp:spouse", ItemLabel::Relation}};

  std::vector<Action> actions{Action::None,     Action::None,   Action::None,
                              Action::Relation, Action::None,   Action::Entity,
                              Action::Entity,   Action::None,   Action::Relation,
                              Action::None,     Action::None};

  TrigramIndex ent = build_index(kb, IndexKind::EntityIndex, CaseMode::Fold);
  TrigramIndex rel = build_index(kb, IndexKind::RelationIndex, CaseMode::Fold);
  LinkConfig lc;  // entity Lev, relation Combined w=0.5, fold
  LinkResult links = link(qa.tokens, actions, ent, rel, kb, store, lc, 5);

  bool links_ok = links.mentions.size() == 3 && !links.mentions[0].candidates.empty() &&
                  !links.mentions[1].candidates.empty() &&
                  !links.mentions[2].candidates.empty() &&
                  links.mentions[0].candidates[0].uri == "dbp:almaMater" &&
                  links.mentions[1].candidates[0].uri == "dbr:Barack_Obama" &&
                  links.mentions[2].candidates[0].uri == "dbp:spouse";

  EnvConfig env;  // entity Lev, relation Combined w=0.5
  double reward = episode_reward(extract_phrases(actions, qa.tokens), qa.items, env, store);

  report(7, "reference labeling links to the three target uris with reward >= 0.9",
         links_ok && reward >= 0.9,
         fmt("links %s, episode reward %.4f (need >= 0.9)", links_ok ? "correct" : "wrong",
             reward));
}

}  // namespace

int main() {
  ToyWorkspace ws;
  run_training_criteria(ws);
  run_grad_check_criterion();
  run_index_oracle_criterion();
  run_phrase_oracle_criterion();
  run_metric_fixture_criterion();
  run_figure_example_criterion();

  std::printf("%d/9 criteria passed\n", 9 - g_failures);
  return g_failures;
}
