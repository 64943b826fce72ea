#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedrlhf/metrics.hpp"
#include "fedrlhf/reward_matrix.hpp"

namespace fedrlhf {

struct FairnessReport {
  double fi = 1.0;
  std::vector<double> per_question_cov;
  std::size_t num_questions = 0;
  std::size_t num_groups = 0;

  bool operator==(const FairnessReport&) const = default;
};

/// Lower bound on |mean| in the CoV denominator.
inline constexpr double kCovMeanFloor = 1e-9;

/// Population standard deviation over max(|mean|, 1e-9). Needs >= 2 values.
double coefficient_of_variation(std::span<const double> rewards);

/// Mean over rows of 1 / (1 + CoV^2), computed on the values exactly as they
/// appear in the matrix.
FairnessReport fairness_index(const GroupRewardMatrix& matrix);

/// Maps an oriented reward of `kind` into [0, 1]: (x + 1) / 2 for the metrics
/// whose oriented range is [-1, 1] (cosine, Kendall tau), identity otherwise.
double unit_shift(MetricKind kind, double oriented_reward) noexcept;

/// Copy of `matrix` with unit_shift applied when the matrix names its metric.
GroupRewardMatrix unit_shifted(const GroupRewardMatrix& matrix);

/// FI as used for reporting and for the adaptive-aggregation gate: the
/// fairness index of the unit-shifted matrix.
FairnessReport shifted_fairness_index(const GroupRewardMatrix& matrix);

/// Arithmetic mean computed as x0 + sum(x - x0) / n, which returns x0 exactly
/// when all entries are equal.
double anchored_mean(std::span<const double> values);

}  // namespace fedrlhf
