#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace fedrlhf {

/// Ranking of options: element i is the option index placed at rank i,
/// most-preferred first.
using Ranking = std::vector<std::size_t>;

/// What the policy emits for one question.
struct Prediction {
  enum class Kind { kProbabilityVector, kRanking };

  Kind kind = Kind::kProbabilityVector;
  std::vector<double> probs;  // populated iff kind == kProbabilityVector
  Ranking ranking;            // populated iff kind == kRanking

  static Prediction from_probs(std::vector<double> p);
  static Prediction from_ranking(Ranking r);

  std::size_t num_options() const noexcept {
    return kind == Kind::kProbabilityVector ? probs.size() : ranking.size();
  }

  bool operator==(const Prediction&) const = default;
};

enum class MetricKind { kWasserstein, kCosine, kKL, kKendallTau, kBorda, kBinary };

inline constexpr MetricKind kAllMetrics[] = {
    MetricKind::kWasserstein, MetricKind::kCosine, MetricKind::kKL,
    MetricKind::kKendallTau,  MetricKind::kBorda,  MetricKind::kBinary};

/// Distance metrics compare probability vectors; ranking metrics compare
/// rank orders and accept either prediction kind.
bool is_distance_metric(MetricKind kind) noexcept;

/// Lower-case config names: wasserstein, cosine, kl, kendall_tau, borda, binary.
std::string_view metric_name(MetricKind kind) noexcept;
std::optional<MetricKind> parse_metric(std::string_view name) noexcept;

/// A metric in its native scale plus the higher-is-better reward derived
/// from it.
struct MetricValue {
  double raw = 0.0;
  double oriented_reward = 0.0;
};

/// Closed interval containing every oriented reward of `kind`.
struct RewardRange {
  double lo;
  double hi;
};
RewardRange oriented_range(MetricKind kind) noexcept;

/// Normalized 1-Wasserstein distance on unit-spaced ordinal support:
/// sum_k |CDF_y(k) - CDF_p(k)| / (K - 1). Oriented reward is 1 - raw.
MetricValue wasserstein(std::span<const double> y, std::span<const double> p);

/// Cosine similarity; oriented reward equals raw.
MetricValue cosine(std::span<const double> y, std::span<const double> p);

/// Smoothing constant for the prediction side of the KL reward.
inline constexpr double kKlEpsilon = 1e-8;

/// D_KL(p || y~) with y~ = (y + eps) / (1 + K eps) and 0 ln 0 = 0.
/// Oriented reward is exp(-raw).
MetricValue kl_divergence(std::span<const double> y, std::span<const double> p);

/// Options ordered by descending probability; ties keep ascending index.
Ranking to_ranking(std::span<const double> probs);

/// Tau-a over all option pairs of two strict rankings.
MetricValue kendall_tau(std::span<const std::size_t> y_rank,
                        std::span<const std::size_t> p_rank);

/// Position matches weighted K, K-1, ..., 1 from the top, divided by K(K+1)/2.
MetricValue borda(std::span<const std::size_t> y_rank,
                  std::span<const std::size_t> p_rank);

/// 1 if the rankings are identical, else 0.
MetricValue binary(std::span<const std::size_t> y_rank,
                   std::span<const std::size_t> p_rank);

/// Scores `prediction` against the target distribution with metric `kind`.
/// Ranking metrics rank-convert both sides as needed. Throws DomainError if a
/// distance metric is given a ranking-only prediction.
MetricValue evaluate(MetricKind kind, const Prediction& prediction,
                     std::span<const double> target);

/// Validation helpers shared with other modules. Both throw DomainError.
void check_distribution(std::span<const double> v, std::string_view what);
void check_permutation(std::span<const std::size_t> r, std::string_view what);

}  // namespace fedrlhf
