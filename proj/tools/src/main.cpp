#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "openpref/errors.hpp"

int main(int argc, char** argv) {
  using namespace openpref::cli;

  CLI::App app{"openpref: Bayesian active preference elicitation"};
  app.require_subcommand(1);

  GlobalOptions g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--data-dir", g.data_dir, "Directory for session documents");
  auto* seed_opt = app.add_option("--seed", seed, "Base random seed");
  app.add_option("--client", g.client, "Chat client")->check(CLI::IsMember({"mock", "remote"}));
  app.add_option("--fixtures", g.fixtures, "Mock client fixture directory")->check(CLI::ExistingDirectory);

  FeaturizeOptions fo;
  auto* featurize = app.add_subcommand("featurize", "Extract a ranked feature set for a domain");
  featurize->add_option("--domain", fo.domain, "Domain description");
  featurize->add_option("-d,--dimension", fo.dimension, "Number of features");
  featurize->add_option("-o,--output", fo.output, "Write the feature set here");

  ElicitOptions eo;
  std::size_t turns = 0;
  auto* elicit = app.add_subcommand("elicit", "Interactive elicitation session on the terminal");
  elicit->add_option("--domain", eo.domain, "Domain description");
  elicit->add_option("--strategy", eo.strategy, "eig | self_mapping | lm_pairwise | lm_openended")
      ->check(CLI::IsMember({"eig", "self_mapping", "lm_pairwise", "lm_openended"}));
  auto* turns_opt = elicit->add_option("--turns", turns, "Turn budget");
  elicit->add_option("--features", eo.features_path, "Use this feature set instead of extracting one")
      ->check(CLI::ExistingFile);
  elicit->add_option("--tests", eo.tests_path, "Test cases to predict after elicitation")->check(CLI::ExistingFile);
  elicit->add_option("--export", eo.export_path, "Write the session transcript here");
  elicit->add_option("--resume", eo.resume_id, "Continue an existing session");
  elicit->add_flag("--answer-tests", eo.answer_tests, "Ask for your own answer to each test case");

  SimulateOptions so;
  auto* simulate = app.add_subcommand("simulate", "Run strategies against simulated users");
  simulate->add_option("--strategy", so.strategies, "eig | random_query | lm_pairwise | lm_openended")
      ->check(CLI::IsMember({"eig", "random_query", "lm_pairwise", "lm_openended"}))
      ->capture_default_str();
  simulate->add_option("--seeds", so.seeds, "Number of seeds")->capture_default_str();
  simulate->add_option("--turns", so.turns, "Turns per run")->capture_default_str();
  simulate->add_option("--tests", so.tests, "Synthetic test cases per seed")->capture_default_str();
  simulate->add_option("--particles", so.particles, "Particles in the belief")->capture_default_str();
  simulate->add_option("--dimension", so.dimension, "Feature dimension")->capture_default_str();
  simulate->add_option("--response", so.response_mode, "greedy | sampled")
      ->check(CLI::IsMember({"greedy", "sampled"}))
      ->capture_default_str();
  simulate->add_option("--resample", so.resample, "gaussian_refit | systematic_then_refit | importance_only")
      ->check(CLI::IsMember({"gaussian_refit", "systematic_then_refit", "importance_only"}))
      ->capture_default_str();
  simulate->add_option("--threads", so.threads, "Worker threads (0: all cores)");
  simulate->add_option("--report", so.report_path, "Write a JSON report here");
  simulate->add_option("--csv", so.csv_path, "Write per-turn accuracy rows here");

  EvaluateOptions vo;
  auto* evaluate = app.add_subcommand("evaluate", "Per-turn accuracy and TIDA of a recorded session");
  evaluate->add_option("transcript", vo.transcript_path, "Exported session document")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--tests", vo.tests_path, "Test cases with user answers")->check(CLI::ExistingFile);
  evaluate->add_option("-o,--output", vo.output, "Write metrics JSON here");

  ServeOptions sv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--host", sv.host, "Bind address")->capture_default_str();
  serve->add_option("--port", sv.port, "Port (0: ephemeral)")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed;
  if (*turns_opt) eo.turns = turns;

  try {
    if (*featurize) return run_featurize(g, fo, std::cout);
    if (*elicit) return run_elicit(g, eo, std::cin, std::cout);
    if (*simulate) return run_simulate(g, so, std::cout);
    if (*evaluate) return run_evaluate(g, vo, std::cout);
    if (*serve) return run_serve(g, sv, std::cout);
  } catch (const openpref::Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
