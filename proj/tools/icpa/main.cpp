#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "icpa/checkpoint.hpp"
#include "icpa/error.hpp"
#include "icpa/graph.hpp"
#include "icpa/parallel.hpp"
#include "icpa/report.hpp"
#include "icpa/synthetic.hpp"
#include "icpa/trainer.hpp"
#include "icpa/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 2;

struct GenerateArgs {
  icpa::SyntheticSpec spec;
  fs::path out = "data";
};

int cmd_generate(const GenerateArgs& a) {
  const auto synth = icpa::generate_synthetic(a.spec);
  fs::create_directories(a.out);
  icpa::write_graph(synth.graph, a.out / "nodes.tsv", a.out / "edges.tsv");
  icpa::write_correspondence(synth.correspondence, a.out / "correspondence.tsv");
  std::size_t edges = 0;
  for (const auto& s : synth.graph.sources) edges += s.edges().size();
  std::cout << "wrote " << synth.graph.total_nodes() << " nodes and " << edges << " edges across "
            << synth.graph.num_sources() << " sources to " << a.out.string() << "\n";
  return 0;
}

struct TrainArgs {
  fs::path data = "data";
  fs::path out = "out";
  std::optional<fs::path> config_file;
  std::optional<fs::path> nu0_cache;
  std::vector<std::size_t> targets;
  std::optional<double> beta;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> ablate;
  bool soo_only = false;
  std::optional<std::size_t> phase1_steps;
  std::optional<std::size_t> phase2_steps;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> projections;
  std::optional<double> learning_rate;
  std::optional<double> eps_pref;
  bool no_checkpoints = false;
};

icpa::TrainConfig resolve_config(const TrainArgs& a) {
  icpa::TrainConfig c;
  if (a.config_file) c = icpa::config_from_json(icpa::read_json_file(*a.config_file), c);
  if (!a.targets.empty()) c.targets = a.targets;
  if (a.beta) c.beta = *a.beta;
  if (a.seed) c.seed = *a.seed;
  if (a.ablate) c.ablation = icpa::ablation_from_string(*a.ablate);
  if (a.soo_only) c.soo_only = true;
  if (a.phase1_steps) c.phase1_steps = *a.phase1_steps;
  if (a.phase2_steps) c.phase2_steps = *a.phase2_steps;
  if (a.batch_size) c.batch_size = *a.batch_size;
  if (a.projections) c.projections = *a.projections;
  if (a.learning_rate) c.learning_rate = *a.learning_rate;
  if (a.eps_pref) c.eps_pref = *a.eps_pref;
  return c;
}

int cmd_train(const TrainArgs& a) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const icpa::TrainConfig config = resolve_config(a);
  const auto graph = icpa::load_graph(a.data / "nodes.tsv", a.data / "edges.tsv");
  config.validate(graph.num_sources());
  const auto t1 = Clock::now();

  icpa::RunOptions options;
  options.nu0_cache = a.nu0_cache;
  icpa::RunArtifacts art = icpa::run_icpa(graph, config, options);
  const auto t2 = Clock::now();

  fs::create_directories(a.out);
  icpa::write_json_file(a.out / "report.json", icpa::report_to_json(art.result));
  if (!a.no_checkpoints) {
    const fs::path dir = a.out / "checkpoints";
    fs::create_directories(dir);
    if (art.phase1_model && art.gate)
      icpa::save_checkpoint(dir / "phase1.json",
                            {{"model", &art.phase1_model->params()}, {"gate", &art.gate->params()}});
    for (std::size_t i = 0; i < art.target_models.size(); ++i)
      icpa::save_checkpoint(
          dir / ("target_" + std::to_string(art.result.targets.at(i).target) + ".json"),
          {{"model", &art.target_models[i].params()}});
  }
  const auto t3 = Clock::now();
  auto secs = [](auto d) { return std::chrono::duration<double>(d).count(); };
  icpa::write_json_file(a.out / "timings.json",
                        {{"load_seconds", secs(t1 - t0)},
                         {"train_seconds", secs(t2 - t1)},
                         {"write_seconds", secs(t3 - t2)},
                         {"threads", icpa::thread_budget()},
                         {"nu0_from_cache", art.nu0_from_cache}});

  const auto& r = art.result;
  for (const auto& t : r.targets) {
    std::printf("target %zu: epsilon =", t.target);
    for (double e : t.epsilon) std::printf(" %+.5f", e);
    std::printf("  (nu0 =");
    for (double v : r.nu0) std::printf(" %.5f", v);
    std::printf(")\n");
  }
  if (r.front) std::printf("front: %zu of %zu points, huf %.6g\n", r.front->front.size(),
                           r.front->population.size(), r.front->huf.volume);
  std::cout << "report written to " << (a.out / "report.json").string() << "\n";
  return 0;
}

struct VerifyArgs {
  std::uint64_t seed = 0;
  std::vector<std::string> faults;
  std::vector<std::string> only;
};

int cmd_verify(const VerifyArgs& a) {
  icpa::verify::Options opt;
  opt.seed = a.seed;
  opt.faults.insert(a.faults.begin(), a.faults.end());
  opt.only.insert(a.only.begin(), a.only.end());
  const auto results = icpa::verify::run_suite(opt);
  std::size_t failed = 0;
  for (const auto& r : results) {
    std::printf("%-4s %-20s %4zu trials %7.2fs  %s\n", r.passed ? "ok" : "FAIL", r.name.c_str(),
                r.trials, r.seconds, r.detail.c_str());
    if (!r.passed) ++failed;
  }
  std::printf("%zu of %zu checks passed\n", results.size() - failed, results.size());
  return failed ? 1 : 0;
}

int cmd_report(const fs::path& path) {
  const auto doc = icpa::read_json_file(path);
  if (doc.value("format", "") != "icpa-report") throw icpa::Error(path.string() + " is not a run report");
  auto num = [](const nlohmann::json& v) { return v.is_null() ? std::nan("") : v.get<double>(); };
  std::printf("sources %zu  categories %zu  seed %llu  ablation %s\n",
              doc.at("num_sources").get<std::size_t>(), doc.at("num_categories").get<std::size_t>(),
              static_cast<unsigned long long>(doc.at("config").at("seed").get<std::uint64_t>()),
              doc.at("config").at("ablation").get<std::string>().c_str());
  std::printf("nu0:");
  for (const auto& v : doc.at("nu0")) std::printf(" %.5f", num(v));
  std::printf("\n");
  for (const auto& t : doc.at("targets")) {
    std::printf("target %zu  epsilon:", t.at("target").get<std::size_t>());
    for (const auto& e : t.at("epsilon")) std::printf(" %+.5f", num(e));
    std::printf("  ndcg %.4f  f %.4f  restricted steps %zu\n", num(t.at("ranking").at("ndcg")),
                num(t.at("ranking").at("f_measure")), t.at("restricted_steps").get<std::size_t>());
  }
  if (!doc.at("front").is_null()) {
    const auto& f = doc.at("front");
    std::printf("front %zu / %zu  huf %.6g  convexity %.3f\n", f.at("front").size(),
                f.at("population").size(), num(f.at("huf").at("volume")), num(f.at("convexity")));
  }
  for (const auto& g : doc.at("gates"))
    std::printf("category %zu  nodes %zu  mean gate %.4f\n", g.at("category").get<std::size_t>(),
                g.at("nodes").get<std::size_t>(), num(g.at("mean")));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-source graph matching with gated sliced alignment and Pareto training"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic multi-source graph");
  generate->add_option("--sources", gen.spec.sources)->check(CLI::Range(1, 64));
  generate->add_option("--categories", gen.spec.categories)->check(CLI::PositiveNumber);
  generate->add_option("--nodes", gen.spec.nodes_per_source, "Nodes per source")->check(CLI::PositiveNumber);
  generate->add_option("--conflict", gen.spec.conflict_rate, "Fraction of conflicted categories")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_option("--density", gen.spec.edge_density)->check(CLI::Range(0.0, 1.0));
  generate->add_option("--clusters", gen.spec.clusters)->check(CLI::PositiveNumber);
  generate->add_option("--partner-ratio", gen.spec.partner_ratio)->check(CLI::Range(0.0, 1.0));
  generate->add_option("--seed", gen.spec.seed);
  generate->add_option("--out", gen.out, "Output directory");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Run baselines, alignment and Pareto training");
  train->add_option("--data", tr.data, "Directory with nodes.tsv and edges.tsv");
  train->add_option("--out", tr.out, "Output directory");
  train->add_option("--config", tr.config_file, "JSON config; flags take precedence")
      ->check(CLI::ExistingFile);
  train->add_option("--target", tr.targets, "Target source (repeatable)");
  train->add_option("--beta", tr.beta, "Alignment weight, must be positive")
      ->check(CLI::PositiveNumber);
  train->add_option("--seed", tr.seed);
  train->add_option("--ablate", tr.ablate)->check(CLI::IsMember({"none", "align", "pareto", "front"}));
  train->add_flag("--soo-only", tr.soo_only, "Train the single-source baselines only");
  train->add_option("--phase1-steps", tr.phase1_steps);
  train->add_option("--phase2-steps", tr.phase2_steps);
  train->add_option("--batch-size", tr.batch_size)->check(CLI::PositiveNumber);
  train->add_option("--projections", tr.projections)->check(CLI::PositiveNumber);
  train->add_option("--lr", tr.learning_rate)->check(CLI::PositiveNumber);
  train->add_option("--eps-pref", tr.eps_pref)->check(CLI::NonNegativeNumber);
  train->add_option("--nu0-cache", tr.nu0_cache, "JSON file caching baseline optima");
  train->add_flag("--no-checkpoints", tr.no_checkpoints);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Cross-check library routines against brute-force oracles");
  verify->add_option("--seed", va.seed);
  verify->add_option("--inject-fault", va.faults, "Corrupt the named check (test hook)");
  verify->add_option("--only", va.only, "Run only the named checks");

  fs::path report_path = "out/report.json";
  auto* report = app.add_subcommand("report", "Summarize a report.json");
  report->add_option("path", report_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*generate) return cmd_generate(gen);
    if (*train) return cmd_train(tr);
    if (*verify) return cmd_verify(va);
    if (*report) return cmd_report(report_path);
  } catch (const icpa::ValidationError& e) {
    std::cerr << "icpa: invalid input: " << e.what() << "\n";
    return kUsageError;
  } catch (const icpa::ParseError& e) {
    std::cerr << "icpa: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "icpa: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
