#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "openpref/preference_model.hpp"

namespace openpref {

/// Particle approximation of the belief over preference weights.
/// Each particle is a persona; weights are normalized.
struct BeliefState {
  std::vector<Persona> personas;
  std::vector<double> weights;
  std::uint64_t turn = 0;
  std::uint64_t rng_seed = 0;

  std::size_t size() const noexcept { return personas.size(); }
  std::size_t dimension() const noexcept { return personas.empty() ? 0 : personas.front().dimension(); }

  /// 1 / sum(w_i^2).
  double effective_sample_size() const;

  /// Throws ValidationError when an invariant is broken (N >= 2, shared d,
  /// finite weights summing to 1 within 1e-9).
  void validate() const;

  bool operator==(const BeliefState&) const = default;
};

struct DiagonalGaussian {
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t dimension() const noexcept { return mean.size(); }
  bool operator==(const DiagonalGaussian&) const = default;
};

inline constexpr double kDefaultStdFloor = 1e-3;

struct PriorConfig {
  std::size_t particles = 1000;
  double base_variance = 1.0;
  double importance_intercept = 1.2;
  double importance_slope = 0.12;
  double weight_floor = 0.01;

  void validate() const;
};

/// How the belief is rejuvenated after reweighting.
enum class ResampleMode {
  gaussian_refit,           // weighted diagonal Gaussian fit, then iid draws
  systematic_then_refit,    // systematic resampling of particles, then refit and draw
  importance_only,          // keep particles, carry weights forward
};

struct UpdateConfig {
  ResampleMode mode = ResampleMode::gaussian_refit;
  double std_floor = kDefaultStdFloor;
};

/// Prior scale for the feature at `rank`: max(intercept - slope * rank, floor).
double importance_scale(int rank, const PriorConfig& config = {});

/// N personas with coordinate i ~ Normal(0, 1) * sqrt(base_variance) * importance_scale(i).
BeliefState init_prior(const FeatureSet& features, const PriorConfig& config, std::uint64_t seed);
BeliefState init_prior(std::size_t dimension, const PriorConfig& config, std::uint64_t seed);

/// Multiplies every weight by the likelihood of `observed` and renormalizes.
BeliefState reweight(const BeliefState& belief, const PairwiseQuery& query, const Choice& observed);

/// Same as above for arbitrary real-valued options (e.g. featurized items).
BeliefState reweight(const BeliefState& belief, std::span<const double> option_a,
                     std::span<const double> option_b, const Choice& observed);

/// Per-coordinate weighted mean and standard deviation of the personas.
DiagonalGaussian refit_gaussian(const BeliefState& belief, double std_floor = kDefaultStdFloor);

/// Draws `n` personas from the Gaussian with uniform weights.
BeliefState resample(const DiagonalGaussian& gaussian, std::size_t n, std::uint64_t seed);

/// Classic systematic resampling over the discrete particle weights.
BeliefState systematic_resample(const BeliefState& belief, std::uint64_t seed);

/// reweight -> rejuvenate (per config.mode) -> turn + 1.
BeliefState posterior_update(const BeliefState& belief, const PairwiseQuery& query,
                             const Choice& observed, std::uint64_t seed,
                             const UpdateConfig& config = {});
BeliefState posterior_update(const BeliefState& belief, std::span<const double> option_a,
                             std::span<const double> option_b, const Choice& observed,
                             std::uint64_t seed, const UpdateConfig& config = {});

struct BeliefSummary {
  std::vector<double> mean;
  std::vector<double> std;
  double effective_sample_size = 0.0;
  std::uint64_t turn = 0;
};

/// Weighted moments without the variance floor.
BeliefSummary summarize(const BeliefState& belief);

/// Seed used for the posterior update that produces turn `turn + 1`.
std::uint64_t update_seed(std::uint64_t session_seed, std::uint64_t turn);
std::uint64_t prior_seed(std::uint64_t session_seed);

}  // namespace openpref
