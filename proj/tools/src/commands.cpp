#include "commands.hpp"

#include <algorithm>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include "openpref/config.hpp"
#include "openpref/errors.hpp"
#include "openpref/experiment.hpp"
#include "openpref/http_api.hpp"
#include "openpref/prompts.hpp"
#include "openpref/serialization.hpp"
#include "openpref/session.hpp"

namespace openpref::cli {

namespace {

using Json = nlohmann::json;

ServiceConfig service_config(const GlobalOptions& g) {
  ServiceConfig c = g.config_path.empty() ? ServiceConfig{} : load_config(g.config_path);
  if (!g.data_dir.empty()) c.data_dir = g.data_dir;
  if (g.seed) c.session.seed = *g.seed;
  if (!g.client.empty()) c.lm.client = g.client;
  if (!g.fixtures.empty()) c.lm.fixture_dir = g.fixtures;
  return c;
}

std::shared_ptr<LmGateway> make_gateway(const ServiceConfig& c) {
  GatewayOptions options;
  options.max_attempts = c.lm.max_attempts;
  return std::make_shared<LmGateway>(make_chat_client(c.lm), options);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str());
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PersistenceError("cannot write " + path);
  out << content;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<Choice> parse_choice_input(const std::string& line) {
  const auto t = trim(line);
  if (t == "A" || t == "a" || t == "1") return Choice{ChoiceValue::A, false};
  if (t == "B" || t == "b" || t == "2") return Choice{ChoiceValue::B, false};
  return std::nullopt;
}

void print_summary(std::ostream& out, const BeliefSummary& summary, const FeatureSet& features) {
  out << "  belief after turn " << summary.turn << " (ESS " << std::fixed << std::setprecision(1)
      << summary.effective_sample_size << "):\n";
  for (std::size_t i = 0; i < features.dimension(); ++i)
    out << "    " << std::showpos << std::setprecision(3) << summary.mean[i] << std::noshowpos << " +/- "
        << summary.std[i] << "  " << features.description(i) << "\n";
  out.unsetf(std::ios::floatfield);
}

// Returns false when the user asked to stop (EOF or "q").
bool ask_one(std::ostream& out, std::istream& in, SessionService& service, const std::string& id,
             const Json& question, SessionStrategy strategy) {
  out << "\nQuestion " << question.at("turn").get<std::size_t>() + 1 << ": " << question.at("text").get<std::string>()
      << "\n";
  if (question.contains("option_a")) {
    out << "  Option A: " << question.at("option_a").get<std::string>() << "\n"
        << "  Option B: " << question.at("option_b").get<std::string>() << "\n";
  }
  for (;;) {
    out << (is_pairwise(strategy) ? "Your choice [A/B, q to stop]: " : "Your answer (q to stop): ") << std::flush;
    std::string line;
    if (!std::getline(in, line)) return false;
    if (trim(line) == "q") return false;
    UserResponse response;
    if (is_pairwise(strategy)) {
      auto choice = parse_choice_input(line);
      if (!choice) {
        out << "Please answer A or B.\n";
        continue;
      }
      response = *choice;
    } else {
      if (trim(line).empty()) continue;
      response = trim(line);
    }
    const auto summary = service.submit_answer(id, response);
    if (updates_belief(strategy)) print_summary(out, summary, service.snapshot(id).features);
    return true;
  }
}

}  // namespace

int run_featurize(const GlobalOptions& g, const FeaturizeOptions& o, std::ostream& out) {
  const auto config = service_config(g);
  auto gateway = make_gateway(config);
  const std::string domain = !o.domain.empty() ? o.domain
                             : !config.domain_description.empty() ? config.domain_description
                                                                  : std::string(kDefaultDomainDescription);
  const std::size_t d = o.dimension ? o.dimension : config.session.dimension;
  const auto features = gateway->extract_features(domain, d);
  const Json doc{{"domain_description", domain}, {"features", features}};
  if (!o.output.empty()) write_file(o.output, doc.dump(2) + "\n");
  for (const auto& f : features.features()) out << f.rank + 1 << ") " << f.description << "\n";
  return 0;
}

int run_elicit(const GlobalOptions& g, const ElicitOptions& o, std::istream& in, std::ostream& out) {
  auto config = service_config(g);
  if (o.turns) config.session.turn_budget = *o.turns;
  SessionService service(config, make_gateway(config));

  std::string id = o.resume_id;
  if (id.empty()) {
    std::optional<FeatureSet> features;
    if (!o.features_path.empty()) {
      const Json doc = read_json_file(o.features_path);
      features = (doc.contains("features") ? doc.at("features") : doc).get<FeatureSet>();
    }
    const auto s = service.create_session(o.domain, session_strategy_from_string(o.strategy), config.session,
                                          std::move(features));
    id = s.id;
    out << "Session " << id << " (" << to_string(s.strategy) << ", " << s.config.turn_budget << " turns)\n";
    out << "Features:\n";
    for (const auto& f : s.features.features()) out << "  " << f.rank + 1 << ") " << f.description << "\n";
  } else {
    out << "Resuming session " << id << "\n";
  }

  const auto strategy = service.snapshot(id).strategy;
  while (service.snapshot(id).phase == Phase::elicitation) {
    const Json payload = service.next_question(id);
    if (payload.at("question").is_null()) break;
    if (!ask_one(out, in, service, id, payload.at("question"), strategy)) {
      service.finish_elicitation(id);
      break;
    }
  }
  out << "\nElicitation finished after " << service.snapshot(id).transcript.size() << " turns.\n";

  if (!o.tests_path.empty()) {
    auto tests = load_test_file(o.tests_path);
    const auto records = service.predict_testcases(id, tests);
    out << "\nPredictions:\n";
    std::vector<Choice> answers;
    bool have_answers = true;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      out << "  " << i + 1 << ". A: " << r.item_a << "\n     B: " << r.item_b << "\n     -> ";
      if (r.prediction) {
        out << "Option " << to_string(r.prediction->choice.value) << " (P(A) = " << std::setprecision(3)
            << r.prediction->probability_a << ")\n";
      } else {
        out << "unevaluated: " << r.error.value_or("unknown") << "\n";
      }
      std::optional<Choice> answer = tests[i].user_answer;
      while (!answer && o.answer_tests) {
        out << "     Which do you prefer? [A/B]: " << std::flush;
        std::string line;
        if (!std::getline(in, line)) break;
        answer = parse_choice_input(line);
      }
      if (answer) {
        answers.push_back(*answer);
      } else {
        have_answers = false;
      }
    }
    if (have_answers) {
      const Json result = service.record_test_answers(id, answers);
      out << "Prediction accuracy: " << result.at("correct") << "/" << result.at("scored") << "\n";
    }
  }

  if (!o.export_path.empty()) {
    write_file(o.export_path, service.export_transcript(id).dump(2) + "\n");
    out << "Transcript written to " << o.export_path << "\n";
  }
  out << "Session id: " << id << "\n";
  return 0;
}

int run_simulate(const GlobalOptions& g, const SimulateOptions& o, std::ostream& out) {
  const auto service = service_config(g);
  ExperimentConfig config;
  config.dimension = o.dimension;
  config.prior = service.session.prior;
  config.prior.particles = o.particles;
  config.update.mode = resample_mode_from_string(o.resample);
  config.turns = o.turns;
  config.test_size = o.tests;
  config.response_mode = response_mode_from_string(o.response_mode);
  config.threads = o.threads;
  config.validate();

  const std::uint64_t base = g.seed.value_or(0);
  std::vector<std::uint64_t> seeds(o.seeds);
  std::iota(seeds.begin(), seeds.end(), base);

  std::shared_ptr<LmGateway> gateway;
  std::vector<ExperimentReport> reports;
  for (const auto& name : o.strategies) {
    const auto strategy = strategy_from_string(name);
    if ((strategy == Strategy::lm_pairwise || strategy == Strategy::lm_openended) && !gateway)
      gateway = make_gateway(service);
    reports.push_back(run_experiment(strategy, config, seeds, gateway.get()));
  }

  out << std::left << std::setw(14) << "strategy" << std::setw(24) << "final accuracy" << "TIDA\n";
  for (const auto& r : reports) {
    std::ostringstream acc, tida;
    acc << std::fixed << std::setprecision(3) << r.final_accuracy.mean << " +/- " << r.final_accuracy.stderr_;
    tida << std::fixed << std::setprecision(3) << r.tida.mean << " +/- " << r.tida.stderr_;
    out << std::left << std::setw(14) << to_string(r.strategy) << std::setw(24) << acc.str() << tida.str() << "\n";
  }
  // Paired comparison against the random baseline; seeds are shared.
  const auto random_it = std::find_if(reports.begin(), reports.end(),
                                      [](const auto& r) { return r.strategy == Strategy::random_query; });
  if (random_it != reports.end()) {
    for (const auto& r : reports) {
      if (r.strategy == Strategy::random_query) continue;
      std::size_t wins = 0;
      for (std::size_t i = 0; i < seeds.size(); ++i)
        if (r.runs[i].tida > random_it->runs[i].tida) ++wins;
      out << to_string(r.strategy) << " vs random_query: accuracy gap " << std::fixed << std::setprecision(3)
          << r.final_accuracy.mean - random_it->final_accuracy.mean << ", TIDA wins " << wins << "/" << seeds.size()
          << "\n";
    }
  }

  if (!o.report_path.empty()) {
    Json doc = Json::array();
    for (const auto& r : reports) doc.push_back(r.to_json());
    write_file(o.report_path, doc.dump(2) + "\n");
  }
  if (!o.csv_path.empty()) {
    std::string csv;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      auto part = reports[i].to_csv();
      if (i > 0) part = part.substr(part.find('\n') + 1);
      csv += part;
    }
    write_file(o.csv_path, csv);
  }
  return 0;
}

int run_evaluate(const GlobalOptions& g, const EvaluateOptions& o, std::ostream& out) {
  const auto config = service_config(g);
  const auto session = read_json_file(o.transcript_path).get<Session>();
  session.validate();

  std::vector<TestCase> tests;
  if (!o.tests_path.empty()) {
    tests = load_test_file(o.tests_path);
  } else {
    for (const auto& p : session.predictions) tests.push_back({p.item_a, p.item_b, {}, {}, p.user_answer});
  }
  if (tests.empty()) throw ValidationError("no test cases: pass --tests or export a session with predictions");
  for (const auto& t : tests)
    if (!t.user_answer) throw ValidationError("every test case needs a user_answer to be scored");

  auto gateway = make_gateway(config);
  AccuracySeries series;
  const auto history = session.history();
  if (updates_belief(session.strategy)) {
    for (auto& t : tests) {
      t.features_a = gateway->featurize_item(t.item_a, session.features);
      t.features_b = gateway->featurize_item(t.item_b, session.features);
    }
    const auto trajectory = replay_trajectory(session);
    for (std::size_t t = 0; t < trajectory.size(); ++t) {
      series.accuracies.push_back(accuracy(trajectory[t], tests));
      series.timestamps.push_back(static_cast<double>(t));
    }
  } else {
    for (std::size_t t = 0; t <= history.size(); ++t) {
      std::size_t scored = 0, correct = 0;
      for (const auto& test : tests) {
        const auto guess =
            gateway->lm_predict(std::span(history).first(t), test.item_a, test.item_b);
        if (!guess) continue;
        ++scored;
        if (guess->guess.same_side(*test.user_answer)) ++correct;
      }
      series.accuracies.push_back(scored ? static_cast<double>(correct) / static_cast<double>(scored) : 0.5);
      series.timestamps.push_back(static_cast<double>(t));
    }
  }

  const double t_score = series.accuracies.size() >= 2 ? tida(series) : 0.0;
  out << "turn  accuracy\n";
  for (std::size_t t = 0; t < series.accuracies.size(); ++t)
    out << std::setw(4) << t << "  " << std::fixed << std::setprecision(3) << series.accuracies[t] << "\n";
  out << "TIDA: " << std::fixed << std::setprecision(3) << t_score << "\n";
  if (!o.output.empty()) {
    const Json doc{{"session_id", session.id},
                   {"strategy", to_string(session.strategy)},
                   {"test_cases", tests.size()},
                   {"accuracies", series.accuracies},
                   {"tida", t_score}};
    write_file(o.output, doc.dump(2) + "\n");
  }
  return 0;
}

int run_serve(const GlobalOptions& g, const ServeOptions& o, std::ostream& out) {
  const auto config = service_config(g);
  auto service = std::make_shared<SessionService>(config, make_gateway(config));
  HttpApi api(service);

  // Block the signals before the server threads start so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  int port = o.port;
  if (port == 0) {
    port = api.bind_to_any_port(o.host);
    if (port < 0) throw ConfigurationError("cannot bind " + o.host);
  } else if (!api.bind(o.host, port)) {
    throw ConfigurationError("cannot bind " + o.host + ":" + std::to_string(port));
  }
  std::thread server([&api] { api.listen_after_bind(); });
  api.wait_until_ready();
  out << "openpref serving on http://" << o.host << ":" << port << " (data in " << config.data_dir.string()
      << ", client " << config.lm.client << ")" << std::endl;

  int received = 0;
  sigwait(&signals, &received);
  api.stop();
  server.join();
  out << "stopped" << std::endl;
  return 0;
}

}  // namespace openpref::cli
