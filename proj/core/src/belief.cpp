#include "openpref/belief.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "openpref/errors.hpp"
#include "openpref/random.hpp"

namespace openpref {

namespace {

constexpr double kWeightSumTolerance = 1e-9;

std::vector<double> normalized(std::vector<double> w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total))
    throw Error("numerical_error", "particle weights cannot be normalized");
  for (auto& x : w) x /= total;
  return w;
}

BeliefState reweight_impl(const BeliefState& belief, std::span<const double> option_a,
                          std::span<const double> option_b, const Choice& observed) {
  require(option_a.size() == belief.dimension() && option_b.size() == belief.dimension(),
          "reweight: dimension mismatch");
  BeliefState out = belief;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    const double p_a = clamp_probability(choice_probability(belief.personas[i], option_a, option_b));
    out.weights[i] = belief.weights[i] * outcome_probability(p_a, observed);
  }
  out.weights = normalized(std::move(out.weights));
  return out;
}

BeliefState rejuvenate(const BeliefState& reweighted, std::uint64_t seed, const UpdateConfig& config) {
  switch (config.mode) {
    case ResampleMode::gaussian_refit:
      return resample(refit_gaussian(reweighted, config.std_floor), reweighted.size(), seed);
    case ResampleMode::systematic_then_refit: {
      const auto survivors = systematic_resample(reweighted, derive_seed(seed, 1));
      return resample(refit_gaussian(survivors, config.std_floor), reweighted.size(), seed);
    }
    case ResampleMode::importance_only:
      return reweighted;
  }
  throw ContractViolation("unknown resample mode");
}

}  // namespace

double BeliefState::effective_sample_size() const {
  double sq = 0.0;
  for (double w : weights) sq += w * w;
  return 1.0 / sq;
}

void BeliefState::validate() const {
  if (personas.size() < 2) throw ValidationError("belief needs at least 2 personas");
  if (weights.size() != personas.size()) throw ValidationError("one weight per persona required");
  const std::size_t d = dimension();
  if (d == 0) throw ValidationError("personas must be non-empty");
  double total = 0.0;
  for (std::size_t i = 0; i < personas.size(); ++i) {
    if (personas[i].dimension() != d) throw ValidationError("personas must share dimension");
    for (double x : personas[i].weights)
      if (!std::isfinite(x)) throw ValidationError("persona weights must be finite");
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw ValidationError("particle weights must be finite and non-negative");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance)
    throw ValidationError("particle weights must sum to 1");
}

void PriorConfig::validate() const {
  if (particles < 2) throw ConfigurationError("particle count must be at least 2");
  if (!(base_variance > 0.0)) throw ConfigurationError("base variance must be positive");
  if (!(weight_floor > 0.0)) throw ConfigurationError("importance weight floor must be positive");
}

double importance_scale(int rank, const PriorConfig& config) {
  require(rank >= 0, "importance_scale: rank must be non-negative");
  // One rounding, so the default schedule lands on 1.2, 1.08, ..., 0.12 exactly.
  const double w = std::fma(-config.importance_slope, static_cast<double>(rank), config.importance_intercept);
  return std::max(w, config.weight_floor);
}

BeliefState init_prior(std::size_t dimension, const PriorConfig& config, std::uint64_t seed) {
  config.validate();
  require(dimension >= 1, "init_prior: dimension must be positive");
  std::vector<double> scale(dimension);
  for (std::size_t i = 0; i < dimension; ++i)
    scale[i] = std::sqrt(config.base_variance) * importance_scale(static_cast<int>(i), config);

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  BeliefState belief;
  belief.personas.resize(config.particles);
  for (auto& persona : belief.personas) {
    persona.weights.resize(dimension);
    for (std::size_t i = 0; i < dimension; ++i) persona.weights[i] = normal(rng) * scale[i];
  }
  belief.weights.assign(config.particles, 1.0 / static_cast<double>(config.particles));
  belief.turn = 0;
  belief.rng_seed = seed;
  return belief;
}

BeliefState init_prior(const FeatureSet& features, const PriorConfig& config, std::uint64_t seed) {
  return init_prior(features.dimension(), config, seed);
}

BeliefState reweight(const BeliefState& belief, const PairwiseQuery& query, const Choice& observed) {
  const auto a = query.option_a().as_real();
  const auto b = query.option_b().as_real();
  return reweight_impl(belief, a, b, observed);
}

BeliefState reweight(const BeliefState& belief, std::span<const double> option_a,
                     std::span<const double> option_b, const Choice& observed) {
  return reweight_impl(belief, option_a, option_b, observed);
}

DiagonalGaussian refit_gaussian(const BeliefState& belief, double std_floor) {
  const std::size_t d = belief.dimension();
  DiagonalGaussian g{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < belief.size(); ++i)
    for (std::size_t k = 0; k < d; ++k) g.mean[k] += belief.weights[i] * belief.personas[i].weights[k];
  for (std::size_t i = 0; i < belief.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double dev = belief.personas[i].weights[k] - g.mean[k];
      g.std[k] += belief.weights[i] * dev * dev;
    }
  }
  for (auto& s : g.std) s = std::max(std::sqrt(s), std_floor);
  return g;
}

BeliefState resample(const DiagonalGaussian& gaussian, std::size_t n, std::uint64_t seed) {
  require(n >= 2, "resample: need at least 2 particles");
  require(gaussian.mean.size() == gaussian.std.size(), "resample: malformed gaussian");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  BeliefState out;
  out.personas.resize(n);
  for (auto& persona : out.personas) {
    persona.weights.resize(gaussian.dimension());
    for (std::size_t k = 0; k < gaussian.dimension(); ++k)
      persona.weights[k] = gaussian.mean[k] + gaussian.std[k] * normal(rng);
  }
  out.weights.assign(n, 1.0 / static_cast<double>(n));
  out.rng_seed = seed;
  return out;
}

BeliefState systematic_resample(const BeliefState& belief, std::uint64_t seed) {
  const std::size_t n = belief.size();
  Rng rng(seed);
  const double step = 1.0 / static_cast<double>(n);
  double u = std::uniform_real_distribution<double>(0.0, step)(rng);
  BeliefState out;
  out.personas.reserve(n);
  double cumulative = belief.weights[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (u > cumulative && j + 1 < n) cumulative += belief.weights[++j];
    out.personas.push_back(belief.personas[j]);
    u += step;
  }
  out.weights.assign(n, step);
  out.turn = belief.turn;
  out.rng_seed = seed;
  return out;
}

BeliefState posterior_update(const BeliefState& belief, std::span<const double> option_a,
                             std::span<const double> option_b, const Choice& observed,
                             std::uint64_t seed, const UpdateConfig& config) {
  BeliefState next = rejuvenate(reweight_impl(belief, option_a, option_b, observed), seed, config);
  next.turn = belief.turn + 1;
  if (config.mode == ResampleMode::importance_only) next.rng_seed = seed;
  return next;
}

BeliefState posterior_update(const BeliefState& belief, const PairwiseQuery& query,
                             const Choice& observed, std::uint64_t seed, const UpdateConfig& config) {
  const auto a = query.option_a().as_real();
  const auto b = query.option_b().as_real();
  return posterior_update(belief, a, b, observed, seed, config);
}

BeliefSummary summarize(const BeliefState& belief) {
  const auto g = refit_gaussian(belief, 0.0);
  return {g.mean, g.std, belief.effective_sample_size(), belief.turn};
}

std::uint64_t prior_seed(std::uint64_t session_seed) { return derive_seed(session_seed, 0); }

std::uint64_t update_seed(std::uint64_t session_seed, std::uint64_t turn) {
  return derive_seed(session_seed, turn + 1);
}

}  // namespace openpref
