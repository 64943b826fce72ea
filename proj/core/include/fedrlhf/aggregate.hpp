#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedrlhf/fairness.hpp"
#include "fedrlhf/reward_matrix.hpp"

namespace fedrlhf {

/// Per-group running alignment score in [0, 1], updated as an exponential
/// moving average of each group's unit-shifted mean reward.
struct AlignmentHistory {
  std::vector<double> h;
  double decay = 0.9;

  /// All groups start at `initial` (0.5 = no information).
  static AlignmentHistory uniform(std::size_t num_groups, double initial = 0.5,
                                  double decay = 0.9);

  bool operator==(const AlignmentHistory&) const = default;
};

struct AggregationStrategy {
  enum class Kind { kMin, kMax, kAverage, kFixedAlpha, kAdaptiveAlpha };

  Kind kind = Kind::kAverage;
  double alpha = 1.0;          // kFixedAlpha
  double fi_threshold = 0.9;   // kAdaptiveAlpha
  double temperature = 0.1;    // kAdaptiveAlpha

  static AggregationStrategy min() { return {Kind::kMin}; }
  static AggregationStrategy max() { return {Kind::kMax}; }
  static AggregationStrategy average() { return {Kind::kAverage}; }
  static AggregationStrategy fixed_alpha(double a) {
    return {Kind::kFixedAlpha, a};
  }
  static AggregationStrategy adaptive_alpha(double fi_threshold = 0.9,
                                            double temperature = 0.1) {
    return {Kind::kAdaptiveAlpha, 1.0, fi_threshold, temperature};
  }

  /// Throws DomainError on non-finite alpha, threshold outside (0, 1], T <= 0.
  void validate() const;

  /// Short label used in reports and file names, e.g. "adaptive_alpha",
  /// "fixed_alpha_2.5".
  std::string label() const;

  bool operator==(const AggregationStrategy&) const = default;
};

/// Config names: min, max, average, fixed_alpha, adaptive_alpha.
std::optional<AggregationStrategy::Kind> parse_strategy_kind(std::string_view name) noexcept;
std::string_view strategy_kind_name(AggregationStrategy::Kind kind) noexcept;

enum class GateBranch { kAverage, kWeighted };

struct AggregatedReward {
  std::vector<double> per_question;
  std::optional<std::vector<double>> weights_used;
  std::optional<GateBranch> gate_taken;
  std::optional<double> gate_fi;
};

AggregatedReward aggregate_min(const GroupRewardMatrix& matrix);
AggregatedReward aggregate_max(const GroupRewardMatrix& matrix);
AggregatedReward aggregate_average(const GroupRewardMatrix& matrix);

/// Consensus aggregation (1/alpha) log(mean_g exp(alpha r_g)), evaluated with
/// the row max factored out; alpha == 0 gives the arithmetic mean.
AggregatedReward aggregate_fixed_alpha(const GroupRewardMatrix& matrix, double alpha);

/// softmax((1 - h_g) / T). Lower history gets more weight.
std::vector<double> adaptive_weights(const AlignmentHistory& history, double temperature);

/// Averages when the (unit-shifted) fairness index of the matrix reaches
/// `fi_threshold`; otherwise log(mean_g exp(w_g r_g)) with adaptive weights.
AggregatedReward aggregate_adaptive(const GroupRewardMatrix& matrix,
                                    const AlignmentHistory& history,
                                    double fi_threshold, double temperature);

/// Dispatches on `strategy`. `history` is only read by kAdaptiveAlpha.
AggregatedReward aggregate(const GroupRewardMatrix& matrix,
                           const AggregationStrategy& strategy,
                           const AlignmentHistory& history);

/// h_g <- decay * h_g + (1 - decay) * mean_j shift(r_jg), clamped to [0, 1].
AlignmentHistory update_history(const AlignmentHistory& history,
                                const GroupRewardMatrix& matrix);

/// log(mean_i exp(x_i)) with the max factored out.
double log_mean_exp(std::span<const double> x);

}  // namespace fedrlhf
