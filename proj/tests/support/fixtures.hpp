#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "openpref/belief.hpp"
#include "openpref/preference_model.hpp"

namespace openpref::fixtures {

inline FeatureSet topic_features(std::size_t d = 10) {
  static const char* topics[] = {"science", "politics", "technology", "sports", "health", "business",
                                 "arts",    "food",     "travel",     "climate", "education", "history"};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < d; ++i) names.push_back(std::string("coverage of ") + topics[i % 12] +
                                                      (i >= 12 ? " " + std::to_string(i) : ""));
  return FeatureSet::from_descriptions(names);
}

/// Arbitrary belief: Gaussian personas with random (possibly very uneven) weights.
inline BeliefState random_belief(std::mt19937_64& rng, std::size_t n, std::size_t d, double scale = 2.0) {
  std::normal_distribution<double> normal(0.0, scale);
  std::exponential_distribution<double> expo(1.0);
  BeliefState b;
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Persona p;
    for (std::size_t j = 0; j < d; ++j) p.weights.push_back(normal(rng));
    b.personas.push_back(std::move(p));
    const double w = std::pow(expo(rng), 3.0);
    b.weights.push_back(w);
    total += w;
  }
  for (auto& w : b.weights) w /= total;
  return b;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("openpref-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace openpref::fixtures
