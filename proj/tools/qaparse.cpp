// Command-line front end: question labeling and KG linking end to end.
//   gen-toy   write a deterministic synthetic corpus
//   index     build trigram indices over KG labels
//   train     policy-gradient training of the labeler
//   eval      greedy labeling + linking metrics on a test set
//   link      label and link a single question
//   ablation  window-size / architecture grid with repeated seeds

#include "qaparse/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using qaparse::RunConfig;

// --config is consumed by a manual argv pre-scan before CLI11 runs; it is
// registered here only so every subcommand accepts the flag.
void add_config_flag(CLI::App* cmd, std::string& config_path) {
  cmd->add_option("--config", config_path, "JSON config file with defaults")->expected(1);
}

void add_common(CLI::App* cmd, RunConfig& cfg, std::string& arch, std::string& case_mode,
                std::string& config_path) {
  cmd->set_help_flag("--help", "print help");  // frees -h for the window flag
  add_config_flag(cmd, config_path);
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_option("--h", cfg.h, "state window half-size");
  cmd->add_option("--arch", arch, "policy architecture: linear|lstm|bilstm");
  cmd->add_option("--gamma", cfg.gamma, "discount factor in (0,1]");
  cmd->add_option("--lr", cfg.lr, "learning rate");
  cmd->add_option("--epochs", cfg.epochs, "training epochs");
  cmd->add_option("--batch", cfg.batch_episodes, "episodes per update");
  cmd->add_option("--hidden", cfg.hidden, "hidden layer width");
  cmd->add_option("--dim", cfg.dim, "word-vector dim when no embedding file is given");
  cmd->add_option("--entropy", cfg.entropy_bonus, "entropy bonus weight");
  cmd->add_option("--baseline", cfg.baseline, "use a moving-average reward baseline");
  cmd->add_option("--baseline-momentum", cfg.baseline_momentum, "baseline momentum in [0,1)");
  cmd->add_option("--k", cfg.k, "candidate list length");
  cmd->add_option("--case-mode", case_mode, "case handling: fold|preserve");
  cmd->add_option("--combine-weight", cfg.combine_weight,
                  "weight of the string term in the combined similarity");
  cmd->add_option("--retrieve-pool", cfg.retrieve_pool, "retrieval pool size before ranking");
  cmd->add_option("--embeddings", cfg.embeddings, "word-vector text file");
  cmd->add_option("--oov-buckets", cfg.oov_buckets, "hash buckets for unknown words");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;

  // The config file provides defaults; explicit flags override them because
  // CLI11 only writes bound variables for flags that were actually given.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        qaparse::apply_config_file(cfg, argv[i + 1]);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
      }
    }
  }

  std::string arch = qaparse::to_string(cfg.arch);
  std::string case_mode = qaparse::to_string(cfg.case_mode);
  std::string question;
  std::string h_list = "0,1,2";
  std::string arch_list = "linear,lstm,bilstm";
  int ablation_seeds = 3;
  std::string config_path;  // consumed above; registered so CLI11 accepts it

  CLI::App app{"shallow question labeling and knowledge-graph linking"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  app.add_option("--config", config_path, "JSON config file with defaults")
      ->expected(1);

  auto* gen = app.add_subcommand("gen-toy", "write a synthetic toy corpus");
  add_config_flag(gen, config_path);
  gen->add_option("--out-dir", cfg.out_dir, "output directory")->required();
  gen->add_option("--entities", cfg.toy_entities, "entity count");
  gen->add_option("--relations", cfg.toy_relations, "relation count");
  gen->add_option("--questions", cfg.toy_questions, "total question count");
  gen->add_option("--test", cfg.toy_test, "questions reserved for the test split");
  gen->add_option("--seed", cfg.seed, "random seed");

  auto* index = app.add_subcommand("index", "build trigram indices over KG labels");
  add_config_flag(index, config_path);
  index->add_option("--entities", cfg.entities_path, "entity label tsv")->required();
  index->add_option("--relations", cfg.relations_path, "relation label tsv")->required();
  index->add_option("--edges", cfg.edges_path, "edge tsv");
  index->add_option("--out", cfg.index_prefix, "index file prefix")->required();
  index->add_option("--case-mode", case_mode, "case handling: fold|preserve");

  auto* train = app.add_subcommand("train", "train the labeling policy");
  train->add_option("--dataset", cfg.dataset, "training questions (jsonl)")->required();
  train->add_option("--out", cfg.policy_path, "policy checkpoint path")->required();
  train->add_option("--log", cfg.log_path, "training log path");
  add_common(train, cfg, arch, case_mode, config_path);

  auto* eval = app.add_subcommand("eval", "evaluate labeling + linking");
  eval->add_option("--dataset", cfg.test_dataset, "evaluation questions (jsonl)")->required();
  eval->add_option("--entities", cfg.entities_path, "entity label tsv")->required();
  eval->add_option("--relations", cfg.relations_path, "relation label tsv")->required();
  eval->add_option("--edges", cfg.edges_path, "edge tsv");
  eval->add_option("--index", cfg.index_prefix, "index file prefix")->required();
  eval->add_option("--policy", cfg.policy_path, "policy checkpoint")->required();
  eval->add_option("--report-json", cfg.report_json, "write the report as JSON");
  eval->add_option("--breakdown", cfg.breakdown, "write per-question pairing detail");
  eval->add_option("--links-out", cfg.links_out, "write link results (jsonl)");
  add_common(eval, cfg, arch, case_mode, config_path);

  auto* link = app.add_subcommand("link", "label and link one question");
  link->add_option("question", question, "question text")->required();
  link->add_option("--entities", cfg.entities_path, "entity label tsv")->required();
  link->add_option("--relations", cfg.relations_path, "relation label tsv")->required();
  link->add_option("--edges", cfg.edges_path, "edge tsv");
  link->add_option("--index", cfg.index_prefix, "index file prefix")->required();
  link->add_option("--policy", cfg.policy_path, "policy checkpoint")->required();
  add_common(link, cfg, arch, case_mode, config_path);

  auto* ablation = app.add_subcommand("ablation", "window/architecture grid");
  ablation->add_option("--dataset", cfg.dataset, "training questions (jsonl)")->required();
  ablation->add_option("--test-dataset", cfg.test_dataset, "evaluation questions (jsonl)");
  ablation->add_option("--entities", cfg.entities_path, "entity label tsv")->required();
  ablation->add_option("--relations", cfg.relations_path, "relation label tsv")->required();
  ablation->add_option("--edges", cfg.edges_path, "edge tsv");
  ablation->add_option("--h-values", h_list, "comma-separated window half-sizes");
  ablation->add_option("--archs", arch_list, "comma-separated architectures");
  ablation->add_option("--seeds", ablation_seeds, "repeated runs per cell");
  add_common(ablation, cfg, arch, case_mode, config_path);

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.arch = qaparse::arch_from_string(arch);
    cfg.case_mode = qaparse::case_mode_from_string(case_mode);

    if (gen->parsed()) {
      qaparse::run_gen_toy(cfg, std::cout);
    } else if (index->parsed()) {
      qaparse::run_index(cfg, std::cout);
    } else if (train->parsed()) {
      qaparse::run_train(cfg, std::cout);
    } else if (eval->parsed()) {
      qaparse::run_eval(cfg, std::cout);
    } else if (link->parsed()) {
      qaparse::run_link(cfg, question, std::cout);
    } else if (ablation->parsed()) {
      std::vector<int> hs;
      std::stringstream hss(h_list);
      for (std::string part; std::getline(hss, part, ',');) hs.push_back(std::stoi(part));
      std::vector<qaparse::Arch> archs;
      std::stringstream ass(arch_list);
      for (std::string part; std::getline(ass, part, ',');)
        archs.push_back(qaparse::arch_from_string(part));
      qaparse::run_ablation(cfg, hs, archs, ablation_seeds, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
