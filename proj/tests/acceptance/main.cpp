// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "openpref/belief.hpp"
#include "openpref/chat_client.hpp"
#include "openpref/errors.hpp"
#include "openpref/experiment.hpp"
#include "openpref/prompts.hpp"
#include "openpref/query_optimizer.hpp"
#include "openpref/serialization.hpp"
#include "openpref/session.hpp"
#include "oracles.hpp"

using namespace openpref;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Paths {
  std::string cli;
  std::string golden;
  std::string data;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(precision);
  ss << v;
  return ss.str();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome eig_correctness() {
  const auto start = Clock::now();
  const auto space = enumerate_queries(10, 2);
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> pick(0, space.size() - 1);
  std::uniform_int_distribution<std::size_t> large(1, 1000);
  std::uniform_int_distribution<std::size_t> small(1, 8);
  double worst_oracle = 0, worst_swap = 0;
  bool in_range = true;
  // Half of the pairs use N <= 8 particles, half N up to 1000.
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = trial % 2 ? small(rng) : large(rng);
    const auto belief = fixtures::random_belief(rng, n, 10);
    const auto& q = space.queries()[pick(rng)];
    const double eig = expected_information_gain(belief, q);
    in_range = in_range && eig >= 0.0 && eig <= 1.0;
    worst_oracle = std::max(worst_oracle, std::abs(eig - static_cast<double>(oracle::mutual_information_bits(belief, q))));
    worst_swap = std::max(worst_swap, std::abs(eig - expected_information_gain(belief, q.swapped())));
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::ostringstream d;
  d << "1000 pairs, range ok=" << in_range << ", max |eig - MI| " << worst_oracle << ", max swap gap " << worst_swap
    << ", " << fmt(secs, 2) << " s";
  return {in_range && worst_oracle <= 1e-9 && worst_swap <= 1e-12 && secs < 30, d.str()};
}

Outcome query_space_cardinality() {
  const auto space = enumerate_queries(10, 2);
  const bool ok = space.options().size() == 45 && space.size() == 990 &&
                  space.options().size() == oracle::n_choose_k(10, 2);
  return {ok, std::to_string(space.options().size()) + " options, " + std::to_string(space.size()) + " queries"};
}

Outcome prior_schedule() {
  const auto start = Clock::now();
  bool exact = importance_scale(0) == 1.2 && importance_scale(9) == 0.12;
  PriorConfig c;
  c.particles = 1000000;
  const auto b = init_prior(10, c, 7);
  double worst = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    double ss = 0;
    for (const auto& p : b.personas) ss += p.weights[i] * p.weights[i];
    const double empirical = std::sqrt(ss / static_cast<double>(b.size()));
    const double expected = std::sqrt(c.base_variance) * importance_scale(i);
    worst = std::max(worst, std::abs(empirical / expected - 1.0));
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::ostringstream d;
  d << "w_0=" << importance_scale(0) << " w_9=" << importance_scale(9) << ", max relative std error "
    << fmt(100 * worst, 3) << "% at 10^6 draws, " << fmt(secs, 2) << " s";
  return {exact && worst < 0.01 && secs < 30, d.str()};
}

Outcome posterior_oracle() {
  const auto start = Clock::now();
  const std::vector<oracle::Observation> obs{
      {{1, 0}, {0, 1}, true}, {{1, 1}, {0, 1}, true}, {{0, 1}, {1, 0}, false},
      {{1, 0}, {1, 1}, false}, {{0.5, 0}, {0, 0.5}, true}};
  PriorConfig pc;
  pc.particles = 20000;
  const auto w = std::array<double, 2>{importance_scale(0), importance_scale(1)};
  const auto grid = oracle::grid_posterior_mean(obs, 101, -6.0, 6.0, std::sqrt(pc.base_variance), w);

  auto run = [&](ResampleMode mode) {
    UpdateConfig uc;
    uc.mode = mode;
    auto belief = init_prior(2, pc, prior_seed(99));
    for (std::size_t t = 0; t < obs.size(); ++t)
      belief = posterior_update(belief, obs[t].a, obs[t].b, obs[t].chose_a ? Choice::a() : Choice::b(),
                                update_seed(99, t), uc);
    const auto mean = summarize(belief).mean;
    return std::max(std::abs(mean[0] - grid[0]), std::abs(mean[1] - grid[1]));
  };
  const double plain = run(ResampleMode::importance_only);
  const double refit = run(ResampleMode::gaussian_refit);
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::ostringstream d;
  d << "grid mean (" << fmt(grid[0]) << ", " << fmt(grid[1]) << "), L-inf importance_only " << fmt(plain)
    << ", gaussian_refit " << fmt(refit) << ", " << fmt(secs, 2) << " s";
  return {plain <= 0.1 && refit < 0.2 && secs < 120, d.str()};
}

struct HeadlineNumbers {
  double eig_final = 0, random_final = 0;
  std::size_t wins = 0, ties = 0, seeds = 0;
  double secs = 0;
};

HeadlineNumbers headline(ResampleMode mode) {
  const auto start = Clock::now();
  ExperimentConfig c;
  c.update.mode = mode;
  std::vector<std::uint64_t> seeds(100);
  std::iota(seeds.begin(), seeds.end(), 0);
  const auto eig = run_experiment(Strategy::eig, c, seeds);
  const auto rnd = run_experiment(Strategy::random_query, c, seeds);
  HeadlineNumbers h;
  h.eig_final = eig.final_accuracy.mean;
  h.random_final = rnd.final_accuracy.mean;
  h.seeds = seeds.size();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    h.wins += eig.runs[i].tida > rnd.runs[i].tida;
    h.ties += eig.runs[i].tida == rnd.runs[i].tida;
  }
  h.secs = std::chrono::duration<double>(Clock::now() - start).count();
  return h;
}

std::string describe(const HeadlineNumbers& h) {
  std::ostringstream d;
  d << "final accuracy eig " << fmt(h.eig_final, 3) << " vs random " << fmt(h.random_final, 3) << " (gap "
    << fmt(h.eig_final - h.random_final, 3) << ", need >= 0.050), TIDA wins " << h.wins << "/" << h.seeds
    << " (need >= 80, ties " << h.ties << "), " << fmt(h.secs, 1) << " s";
  return d.str();
}

Outcome headline_simulation() {
  const auto h = headline(ResampleMode::gaussian_refit);
  const bool ok = h.eig_final - h.random_final >= 0.05 && h.wins * 100 >= 80 * h.seeds && h.secs < 300;
  return {ok, describe(h)};
}

Outcome determinism_and_replay() {
  const auto start = Clock::now();
  fixtures::TempDir dir;
  ServiceConfig config;
  config.data_dir = dir.path();
  config.session.turn_budget = 10;
  auto gateway = std::make_shared<LmGateway>(std::make_shared<MockChatClient>());
  std::mt19937_64 rng(5);
  std::size_t replays = 0, mismatches = 0, crashes = 0, invalid = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    config.session.seed = seed;
    auto svc = std::make_unique<SessionService>(config, gateway);
    const auto id = svc->create_session("", seed % 2 ? SessionStrategy::lm_pairwise : SessionStrategy::eig).id;
    for (int t = 0; t < 10; ++t) {
      svc->next_question(id);
      const Choice answer = rng() % 2 ? Choice::a() : Choice::b();
      // Crash at every persistence stage once per turn, then retry cleanly.
      const char* stage = std::array{"begin", "written", "renamed"}[t % 3];
      svc->store().fault_hook = [stage](std::string_view at) {
        if (at == stage) throw PersistenceError("injected crash");
      };
      try {
        svc->submit_answer(id, answer);
      } catch (const PersistenceError&) {
        ++crashes;
      }
      svc->store().fault_hook = nullptr;
      try {
        SessionService fresh(config, gateway);
        const auto doc = fresh.export_transcript(id);  // load validates invariants
        if (Json(replay_belief(doc)).dump() != doc.at("belief").dump()) ++invalid;
      } catch (const Error&) {
        ++invalid;
      }
      // Reopen from disk so the in-memory copy cannot hide a bad write.
      SessionService reopened(config, gateway);
      if (reopened.snapshot(id).transcript.size() == static_cast<std::size_t>(t)) {
        reopened.next_question(id);
        reopened.submit_answer(id, answer);
      }
      svc = std::make_unique<SessionService>(config, gateway);
    }
    const auto doc = svc->export_transcript(id);
    ++replays;
    if (Json(replay_belief(doc)).dump() != doc.at("belief").dump()) ++mismatches;
    if (doc.at("transcript").size() != 10) ++mismatches;
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::ostringstream d;
  d << replays << " sessions replayed, " << mismatches << " mismatches; " << crashes << " injected crashes, " << invalid
    << " invalid recoveries, " << fmt(secs, 2) << " s";
  return {mismatches == 0 && invalid == 0 && crashes > 0 && secs < 60, d.str()};
}

Outcome mock_end_to_end(const Paths& paths) {
  if (paths.cli.empty()) return {false, "CLI binary not built"};
  fixtures::TempDir dir;
  const auto out = dir.path() / "session.json";
  const auto log = dir.path() / "stdout.txt";
  std::string answers;
  for (int t = 0; t < 10; ++t) answers += t % 3 ? "A\n" : "B\n";
  std::ofstream(dir.path() / "answers.txt") << answers;
  const std::string cmd = "OPENPREF_API_KEY= \"" + paths.cli + "\" --client mock --data-dir \"" +
                          (dir.path() / "sessions").string() + "\" elicit --turns 10 --tests \"" + paths.data +
                          "/news_tests.json\" --export \"" + out.string() + "\" < \"" +
                          (dir.path() / "answers.txt").string() + "\" > \"" + log.string() + "\" 2>&1";
  const auto start = Clock::now();
  const int status = std::system(cmd.c_str());
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (status != 0) return {false, "exit status " + std::to_string(status) + ": " + slurp(log)};
  const auto doc = parse_json(slurp(out));
  const auto turns = doc.at("transcript").size();
  std::size_t predicted = 0;
  for (const auto& p : doc.at("predictions"))
    if (p.contains("prediction") && !p.at("prediction").is_null()) ++predicted;
  const bool replay_ok = Json(replay_belief(doc)).dump() == doc.at("belief").dump();
  std::ostringstream d;
  d << turns << " turns, " << predicted << "/" << doc.at("predictions").size() << " predictions, replay "
    << (replay_ok ? "ok" : "mismatch") << ", " << fmt(secs, 2) << " s";
  return {turns == 10 && predicted == 15 && doc.at("predictions").size() == 15 && replay_ok && secs < 10, d.str()};
}

Outcome prompt_fidelity(const Paths& paths) {
  const auto subs = parse_json(slurp(fs::path(paths.golden) / "substitutions.json"));
  const std::vector<std::string> names{"lm_openended",     "lm_pairwise",     "lm_pairwise_with_features",
                                       "extract_features", "verbalize_query", "lm_predict"};
  std::size_t matched = 0;
  std::string failed;
  for (const auto& name : names) {
    const auto expected = slurp(fs::path(paths.golden) / (name + ".txt"));
    const auto values = subs.at(name).get<std::map<std::string, std::string>>();
    if (!expected.empty() && render_prompt(prompt_name_from_string(name), values) == expected) {
      ++matched;
    } else {
      failed += " " + name;
    }
  }
  return {matched == names.size(), std::to_string(matched) + "/6 templates byte-identical" +
                                       (failed.empty() ? "" : ", mismatched:" + failed)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"openpref acceptance suite"};
  Paths paths;
  bool skip_info = false;
  app.add_option("--cli", paths.cli, "Path to the openpref binary");
  app.add_option("--golden", paths.golden, "Golden prompt directory")->required();
  app.add_option("--data", paths.data, "Test data directory")->required();
  app.add_flag("--skip-info", skip_info, "Skip informational runs");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"eig-correctness", eig_correctness},
      {"query-space-cardinality", query_space_cardinality},
      {"prior-schedule", prior_schedule},
      {"posterior-oracle", posterior_oracle},
      {"headline-simulation", headline_simulation},
      {"determinism-and-replay", determinism_and_replay},
      {"mock-end-to-end", [&] { return mock_end_to_end(paths); }},
      {"prompt-fidelity", [&] { return prompt_fidelity(paths); }},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  if (!skip_info) {
    std::cout << "INFO headline-simulation with importance_only updates: "
              << describe(headline(ResampleMode::importance_only)) << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
