#include "fedrlhf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedrlhf/error.hpp"

namespace fedrlhf {

namespace {

constexpr double kSumTolerance = 1e-6;

void check_pair(std::span<const double> y, std::span<const double> p, std::string_view what) {
  if (y.size() != p.size()) {
    throw DomainError(std::string(what) + ": length mismatch (" + std::to_string(y.size()) +
                      " vs " + std::to_string(p.size()) + ")");
  }
  check_distribution(y, what);
  check_distribution(p, what);
}

void check_rank_pair(std::span<const std::size_t> a, std::span<const std::size_t> b,
                     std::string_view what) {
  if (a.size() != b.size()) throw DomainError(std::string(what) + ": length mismatch");
  check_permutation(a, what);
  check_permutation(b, what);
}

}  // namespace

Prediction Prediction::from_probs(std::vector<double> p) {
  Prediction out;
  out.kind = Kind::kProbabilityVector;
  out.probs = std::move(p);
  return out;
}

Prediction Prediction::from_ranking(Ranking r) {
  Prediction out;
  out.kind = Kind::kRanking;
  out.ranking = std::move(r);
  return out;
}

bool is_distance_metric(MetricKind kind) noexcept {
  return kind == MetricKind::kWasserstein || kind == MetricKind::kCosine ||
         kind == MetricKind::kKL;
}

std::string_view metric_name(MetricKind kind) noexcept {
  switch (kind) {
    case MetricKind::kWasserstein: return "wasserstein";
    case MetricKind::kCosine: return "cosine";
    case MetricKind::kKL: return "kl";
    case MetricKind::kKendallTau: return "kendall_tau";
    case MetricKind::kBorda: return "borda";
    case MetricKind::kBinary: return "binary";
  }
  return "unknown";
}

std::optional<MetricKind> parse_metric(std::string_view name) noexcept {
  for (MetricKind kind : kAllMetrics) {
    if (metric_name(kind) == name) return kind;
  }
  return std::nullopt;
}

RewardRange oriented_range(MetricKind kind) noexcept {
  switch (kind) {
    case MetricKind::kCosine:
    case MetricKind::kKendallTau:
      return {-1.0, 1.0};
    default:
      return {0.0, 1.0};
  }
}

void check_distribution(std::span<const double> v, std::string_view what) {
  if (v.size() < 2) throw DomainError(std::string(what) + ": need at least 2 options");
  double sum = 0.0;
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) {
      throw DomainError(std::string(what) + ": entries must be finite and non-negative");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw DomainError(std::string(what) + ": entries sum to " + std::to_string(sum));
  }
}

void check_permutation(std::span<const std::size_t> r, std::string_view what) {
  std::vector<bool> seen(r.size(), false);
  for (std::size_t idx : r) {
    if (idx >= r.size() || seen[idx]) {
      throw DomainError(std::string(what) + ": not a permutation of 0..K-1");
    }
    seen[idx] = true;
  }
}

MetricValue wasserstein(std::span<const double> y, std::span<const double> p) {
  check_pair(y, p, "wasserstein");
  const std::size_t k = y.size();
  double cdf_y = 0.0;
  double cdf_p = 0.0;
  double cost = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    cdf_y += y[i];
    cdf_p += p[i];
    cost += std::abs(cdf_y - cdf_p);
  }
  double raw = std::clamp(cost / static_cast<double>(k - 1), 0.0, 1.0);
  return {raw, 1.0 - raw};
}

MetricValue cosine(std::span<const double> y, std::span<const double> p) {
  check_pair(y, p, "cosine");
  double dot = 0.0;
  double ny = 0.0;
  double np = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    dot += y[i] * p[i];
    ny += y[i] * y[i];
    np += p[i] * p[i];
  }
  double raw = std::clamp(dot / (std::sqrt(ny) * std::sqrt(np)), -1.0, 1.0);
  return {raw, raw};
}

MetricValue kl_divergence(std::span<const double> y, std::span<const double> p) {
  check_pair(y, p, "kl_divergence");
  const double k = static_cast<double>(y.size());
  double raw = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (p[i] == 0.0) continue;
    double smoothed = (y[i] + kKlEpsilon) / (1.0 + k * kKlEpsilon);
    raw += p[i] * std::log(p[i] / smoothed);
  }
  // Smoothing can push identical inputs a hair below zero.
  raw = std::max(raw, 0.0);
  return {raw, std::exp(-raw)};
}

Ranking to_ranking(std::span<const double> probs) {
  Ranking order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  return order;
}

MetricValue kendall_tau(std::span<const std::size_t> y_rank, std::span<const std::size_t> p_rank) {
  check_rank_pair(y_rank, p_rank, "kendall_tau");
  const std::size_t k = y_rank.size();
  if (k < 2) throw DomainError("kendall_tau: need at least 2 options");
  // Position of each option in each ranking.
  std::vector<std::size_t> pos_y(k);
  std::vector<std::size_t> pos_p(k);
  for (std::size_t r = 0; r < k; ++r) {
    pos_y[y_rank[r]] = r;
    pos_p[p_rank[r]] = r;
  }
  long long score = 0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      bool y_before = pos_y[a] < pos_y[b];
      bool p_before = pos_p[a] < pos_p[b];
      score += (y_before == p_before) ? 1 : -1;
    }
  }
  double pairs = static_cast<double>(k * (k - 1) / 2);
  double raw = static_cast<double>(score) / pairs;
  return {raw, raw};
}

MetricValue borda(std::span<const std::size_t> y_rank, std::span<const std::size_t> p_rank) {
  check_rank_pair(y_rank, p_rank, "borda");
  const std::size_t k = y_rank.size();
  std::size_t score = 0;
  for (std::size_t r = 0; r < k; ++r) {
    if (y_rank[r] == p_rank[r]) score += k - r;
  }
  double raw = static_cast<double>(score) / static_cast<double>(k * (k + 1) / 2);
  return {raw, raw};
}

MetricValue binary(std::span<const std::size_t> y_rank, std::span<const std::size_t> p_rank) {
  check_rank_pair(y_rank, p_rank, "binary");
  double raw = std::equal(y_rank.begin(), y_rank.end(), p_rank.begin()) ? 1.0 : 0.0;
  return {raw, raw};
}

MetricValue evaluate(MetricKind kind, const Prediction& prediction,
                     std::span<const double> target) {
  if (is_distance_metric(kind)) {
    if (prediction.kind != Prediction::Kind::kProbabilityVector) {
      throw DomainError(std::string(metric_name(kind)) +
                        " needs a probability-vector prediction, got a ranking");
    }
    switch (kind) {
      case MetricKind::kWasserstein: return wasserstein(prediction.probs, target);
      case MetricKind::kCosine: return cosine(prediction.probs, target);
      default: return kl_divergence(prediction.probs, target);
    }
  }

  check_distribution(target, metric_name(kind));
  Ranking target_rank = to_ranking(target);
  Ranking predicted = prediction.kind == Prediction::Kind::kRanking
                          ? prediction.ranking
                          : (check_distribution(prediction.probs, metric_name(kind)),
                             to_ranking(prediction.probs));
  switch (kind) {
    case MetricKind::kKendallTau: return kendall_tau(predicted, target_rank);
    case MetricKind::kBorda: return borda(predicted, target_rank);
    default: return binary(predicted, target_rank);
  }
}

}  // namespace fedrlhf
