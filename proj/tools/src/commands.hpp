#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace openpref::cli {

struct GlobalOptions {
  std::string config_path;
  std::string data_dir;
  std::optional<std::uint64_t> seed;
  std::string client;  // empty: use the config file (mock by default)
  std::string fixtures;
};

struct FeaturizeOptions {
  std::string domain;
  std::size_t dimension = 0;  // 0: from config
  std::string output;
};

struct ElicitOptions {
  std::string domain;
  std::string strategy = "eig";
  std::optional<std::size_t> turns;
  std::string features_path;
  std::string tests_path;
  std::string export_path;
  std::string resume_id;
  bool answer_tests = false;
};

struct SimulateOptions {
  std::vector<std::string> strategies{"eig", "random_query"};
  std::size_t seeds = 100;
  std::size_t turns = 10;
  std::size_t tests = 15;
  std::size_t particles = 1000;
  std::size_t dimension = 10;
  std::string response_mode = "greedy";
  std::string resample = "gaussian_refit";
  std::size_t threads = 0;
  std::string report_path;
  std::string csv_path;
};

struct EvaluateOptions {
  std::string transcript_path;
  std::string tests_path;
  std::string output;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
};

int run_featurize(const GlobalOptions& g, const FeaturizeOptions& o, std::ostream& out);
int run_elicit(const GlobalOptions& g, const ElicitOptions& o, std::istream& in, std::ostream& out);
int run_simulate(const GlobalOptions& g, const SimulateOptions& o, std::ostream& out);
int run_evaluate(const GlobalOptions& g, const EvaluateOptions& o, std::ostream& out);
int run_serve(const GlobalOptions& g, const ServeOptions& o, std::ostream& out);

}  // namespace openpref::cli
