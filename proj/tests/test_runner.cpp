#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qaparse/runner.hpp"
#include "qaparse/toygen.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qaparse;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small toy workspace shared by the pipeline tests.
struct Workspace {
  fs::path dir;
  RunConfig cfg;

  Workspace() {
    dir = fs::temp_directory_path() / "qaparse_runner_ws";
    fs::create_directories(dir);
    cfg.out_dir = dir.string();
    cfg.seed = 7;
    cfg.toy_entities = 6;
    cfg.toy_relations = 4;
    cfg.toy_questions = 24;
    cfg.toy_test = 6;
    std::ostringstream sink;
    run_gen_toy(cfg, sink);

    cfg.dataset = (dir / "train.jsonl").string();
    cfg.test_dataset = (dir / "test.jsonl").string();
    cfg.entities_path = (dir / "entities.tsv").string();
    cfg.relations_path = (dir / "relations.tsv").string();
    cfg.edges_path = (dir / "edges.tsv").string();
    cfg.index_prefix = (dir / "toy").string();
    cfg.policy_path = (dir / "policy.bin").string();
    cfg.log_path = (dir / "train.log").string();
    cfg.dim = 8;
    cfg.hidden = 12;
    cfg.epochs = 3;
    cfg.batch_episodes = 6;
  }
};

}  // namespace

TEST_CASE("gen-toy writes a reproducible corpus") {
  Workspace ws;
  std::string train1 = slurp(ws.dir / "train.jsonl");
  std::string ents1 = slurp(ws.dir / "entities.tsv");
  CHECK(load_dataset((ws.dir / "train.jsonl").string()).pairs.size() == 18);
  CHECK(load_dataset((ws.dir / "test.jsonl").string()).pairs.size() == 6);

  std::ostringstream sink;
  run_gen_toy(ws.cfg, sink);
  CHECK(slurp(ws.dir / "train.jsonl") == train1);
  CHECK(slurp(ws.dir / "entities.tsv") == ents1);
  CHECK(sink.str().find("train questions: 18") != std::string::npos);

  RunConfig bad = ws.cfg;
  bad.toy_test = bad.toy_questions;
  CHECK_THROWS_AS(run_gen_toy(bad, sink), std::runtime_error);
}

TEST_CASE("index command builds deterministic files") {
  Workspace ws;
  std::ostringstream out1, out2;
  run_index(ws.cfg, out1);
  std::string ent_bytes = slurp(entity_index_path(ws.cfg));
  run_index(ws.cfg, out2);
  CHECK(slurp(entity_index_path(ws.cfg)) == ent_bytes);
  CHECK(out1.str() == out2.str());
  CHECK(out1.str().find("entity index: 6 items") != std::string::npos);

  TrigramIndex ent = load_index(entity_index_path(ws.cfg));
  CHECK(ent.doc_lengths.size() == 6);
  TrigramIndex rel = load_index(relation_index_path(ws.cfg));
  CHECK(rel.doc_lengths.size() == 4);

  RunConfig missing = ws.cfg;
  missing.entities_path = "/nonexistent.tsv";
  std::ostringstream sink;
  CHECK_THROWS_AS(run_index(missing, sink), std::runtime_error);
}

TEST_CASE("train with zero epochs saves the untouched initial policy") {
  Workspace ws;
  ws.cfg.epochs = 0;
  std::ostringstream sink;
  TrainResult result = run_train(ws.cfg, sink);
  CHECK(result.log_lines.empty());

  PolicyParams saved = load_policy(ws.cfg.policy_path);
  PolicyParams fresh = init_policy(ws.cfg.arch, ws.cfg.h, ws.cfg.dim, ws.cfg.hidden, ws.cfg.seed);
  auto a = tensor_views(saved), b = tensor_views(fresh);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::ptrdiff_t j = 0; j < a[i].second; ++j) CHECK(a[i].first[j] == b[i].first[j]);
}

TEST_CASE("training is reproducible and logs one line per epoch") {
  Workspace ws;
  std::ostringstream sink1, sink2;
  run_train(ws.cfg, sink1);
  std::string log1 = slurp(ws.cfg.log_path);
  std::string policy1 = slurp(ws.cfg.policy_path);

  run_train(ws.cfg, sink2);
  CHECK(slurp(ws.cfg.log_path) == log1);
  CHECK(slurp(ws.cfg.policy_path) == policy1);

  int lines = 0;
  std::istringstream in(log1);
  std::string line;
  while (std::getline(in, line)) {
    ++lines;
    int epoch;
    double reward, grad;
    CHECK(std::sscanf(line.c_str(), "%d %lf %lf", &epoch, &reward, &grad) == 3);
    CHECK(epoch == lines);
    CHECK(reward >= 0.0);
    CHECK(reward <= 1.0);
  }
  CHECK(lines == ws.cfg.epochs);

  // a different seed changes the trajectory
  RunConfig other = ws.cfg;
  other.seed = 8;
  std::ostringstream sink3;
  run_train(other, sink3);
  CHECK(slurp(ws.cfg.log_path) != log1);
}

TEST_CASE("eval runs the full pipeline and writes reports") {
  Workspace ws;
  std::ostringstream sink;
  run_index(ws.cfg, sink);
  run_train(ws.cfg, sink);

  ws.cfg.report_json = (ws.dir / "report.json").string();
  ws.cfg.breakdown = (ws.dir / "breakdown.jsonl").string();
  ws.cfg.links_out = (ws.dir / "links.jsonl").string();
  std::ostringstream out;
  EvalReport report = run_eval(ws.cfg, out);

  CHECK(report.n_questions == 6);
  CHECK(report.k == 5);
  for (double v : {report.entity_accuracy, report.relation_accuracy, report.entity_mrr,
                   report.relation_mrr, report.recall_at_k}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(out.str().find("entity accuracy") != std::string::npos);
  CHECK(fs::exists(ws.cfg.report_json));
  CHECK(fs::exists(ws.cfg.breakdown));
  CHECK(fs::exists(ws.cfg.links_out));

  RunConfig missing = ws.cfg;
  missing.policy_path = "/nonexistent/policy.bin";
  CHECK_THROWS_AS(run_eval(missing, sink), std::runtime_error);
}

TEST_CASE("gold-span labelings evaluate to perfect metrics") {
  ToyCorpus toy = generate_toy_corpus(21, 8, 5, 30);
  TrigramIndex ent = build_index(toy.kb, IndexKind::EntityIndex, CaseMode::Fold);
  TrigramIndex rel = build_index(toy.kb, IndexKind::RelationIndex, CaseMode::Fold);
  EmbeddingStore store(8, OovPolicy::HashBucket, 256);
  LinkConfig lc;

  // label each item's title span directly from the gold items
  auto gold_actions = [](const QAPair& qa) {
    std::vector<Action> actions(qa.tokens.size(), Action::None);
    for (const LinkedItem& item : qa.items) {
      std::vector<Token> title = tokenize(item.title);
      for (std::size_t s = 0; s + title.size() <= qa.tokens.size(); ++s) {
        bool match = true;
        for (std::size_t j = 0; j < title.size(); ++j)
          if (qa.tokens[s + j].normalized != title[j].normalized) match = false;
        if (match) {
          for (std::size_t j = 0; j < title.size(); ++j)
            actions[s + j] = static_cast<Action>(item.label);
          break;
        }
      }
    }
    return actions;
  };

  int k = static_cast<int>(toy.kb.entities.size() + toy.kb.relations.size());
  std::vector<LinkResult> results;
  for (const QAPair& qa : toy.pairs) {
    LinkResult r = link(qa.tokens, gold_actions(qa), ent, rel, toy.kb, store, lc, k);
    r.qa_id = qa.id;
    results.push_back(std::move(r));
  }
  EvalReport report = evaluate(results, toy.pairs, k, CaseMode::Fold);
  CHECK(report.entity_accuracy == doctest::Approx(1.0));
  CHECK(report.relation_accuracy == doctest::Approx(1.0));
  CHECK(report.entity_mrr == doctest::Approx(1.0));
  CHECK(report.relation_mrr == doctest::Approx(1.0));
  CHECK(report.recall_at_k == doctest::Approx(1.0));
}

TEST_CASE("link labels a single question") {
  Workspace ws;
  std::ostringstream sink;
  run_index(ws.cfg, sink);
  run_train(ws.cfg, sink);

  // an untrained-ish policy may or may not find mentions; both outputs are
  // well-formed
  std::ostringstream out;
  LinkResult r = run_link(ws.cfg, "who is the spouse of Ada Lovelace", out);
  if (r.mentions.empty())
    CHECK(out.str().find("no mentions found") != std::string::npos);
  else
    CHECK(out.str().find("\"") != std::string::npos);

  CHECK_THROWS_AS(run_link(ws.cfg, "", out), std::runtime_error);
}

TEST_CASE("config file values apply and typos are rejected") {
  fs::path cfg_path = fs::temp_directory_path() / "qaparse_cfg.json";
  std::ofstream(cfg_path) << R"({"h": 2, "arch": "bilstm", "lr": 0.25, "case_mode": "preserve",
                                 "dataset": "/tmp/x.jsonl", "baseline": false})";
  RunConfig cfg;
  apply_config_file(cfg, cfg_path.string());
  CHECK(cfg.h == 2);
  CHECK(cfg.arch == Arch::BiRecurrent);
  CHECK(cfg.lr == 0.25);
  CHECK(cfg.case_mode == CaseMode::Preserve);
  CHECK(cfg.dataset == "/tmp/x.jsonl");
  CHECK(cfg.baseline == false);

  fs::path bad = fs::temp_directory_path() / "qaparse_cfg_bad.json";
  std::ofstream(bad) << R"({"learning_rate": 0.1})";
  CHECK_THROWS_AS(apply_config_file(cfg, bad.string()), std::runtime_error);
}

TEST_CASE("ablation emits one row per grid cell") {
  Workspace ws;
  ws.cfg.epochs = 2;
  std::ostringstream out;
  auto cells = run_ablation(ws.cfg, {0, 1}, {Arch::LinearRelu}, 2, out);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].h == 0);
  CHECK(cells[1].h == 1);
  CHECK(cells[0].runs == 2);
  CHECK(out.str().find("entity_mrr@1") != std::string::npos);

  // deterministic given the seed list
  std::ostringstream out2;
  auto cells2 = run_ablation(ws.cfg, {0, 1}, {Arch::LinearRelu}, 2, out2);
  CHECK(out.str() == out2.str());
}
