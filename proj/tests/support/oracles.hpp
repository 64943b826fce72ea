#pragma once

// Brute-force reference implementations for tests. They share no code with
// the library and favor obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

// Earth mover's distance on positions 0..K-1, computed by explicitly moving
// mass left to right, then divided by K-1.
inline double wasserstein(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<long double> excess(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) excess[k] = (long double)a[k] - b[k];
  long double work = 0.0L;
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    work += std::fabs(excess[k]);
    excess[k + 1] += excess[k];
    excess[k] = 0.0L;
  }
  return (double)(work / (long double)(a.size() - 1));
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += (long double)a[k] * b[k];
    na += (long double)a[k] * a[k];
    nb += (long double)b[k] * b[k];
  }
  return (double)(dot / std::sqrt(na * nb));
}

// KL(p || smoothed y).
inline double kl(const std::vector<double>& y, const std::vector<double>& p) {
  const long double eps = 1e-8L;
  const long double denom = 1.0L + eps * (long double)y.size();
  long double total = 0.0L;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (p[k] == 0.0) continue;
    total += (long double)p[k] * std::log((long double)p[k] / (((long double)y[k] + eps) / denom));
  }
  return (double)total;
}

// Descending probability, ties by lower index, by repeated selection.
inline std::vector<std::size_t> ranking(const std::vector<double>& probs) {
  std::vector<bool> used(probs.size(), false);
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < probs.size(); ++r) {
    std::size_t best = probs.size();
    for (std::size_t k = 0; k < probs.size(); ++k) {
      if (used[k]) continue;
      if (best == probs.size() || probs[k] > probs[best]) best = k;
    }
    used[best] = true;
    out.push_back(best);
  }
  return out;
}

inline std::vector<std::size_t> positions(const std::vector<std::size_t>& order) {
  std::vector<std::size_t> pos(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  return pos;
}

// Tau-a by counting every unordered item pair.
inline double kendall(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  auto pa = positions(a);
  auto pb = positions(b);
  long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      long s = ((long)pa[i] - (long)pa[j]) * ((long)pb[i] - (long)pb[j]);
      if (s > 0) ++concordant;
      if (s < 0) ++discordant;
    }
  }
  double pairs = (double)(a.size() * (a.size() - 1) / 2);
  return (double)(concordant - discordant) / pairs;
}

inline double borda(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  const double k = (double)a.size();
  double score = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) score += k - (double)i;
  }
  return score / (k * (k + 1.0) / 2.0);
}

inline double binary(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return a == b ? 1.0 : 0.0;
}

// Row-wise 1/(1 + (sigma/mu)^2) with population sigma, averaged.
inline double fairness_index(const std::vector<std::vector<double>>& rows) {
  long double total = 0.0L;
  for (const auto& row : rows) {
    long double mean = 0.0L;
    for (double v : row) mean += v;
    mean /= (long double)row.size();
    long double var = 0.0L;
    for (double v : row) var += ((long double)v - mean) * ((long double)v - mean);
    var /= (long double)row.size();
    long double denom = std::max(std::fabs(mean), 1e-9L);
    long double cov = std::sqrt(var) / denom;
    total += 1.0L / (1.0L + cov * cov);
  }
  return (double)(total / (long double)rows.size());
}

inline std::vector<double> softmax(const std::vector<double>& x) {
  std::vector<long double> e(x.size());
  long double sum = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    e[i] = std::exp((long double)x[i]);
    sum += e[i];
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (double)(e[i] / sum);
  return out;
}

inline double mean(const std::vector<double>& x) {
  long double s = 0.0L;
  for (double v : x) s += v;
  return (double)(s / (long double)x.size());
}

// Plackett-Luce probability of one full order, by the product of stage choices.
inline double plackett_luce_prob(const std::vector<double>& logits,
                                 const std::vector<std::size_t>& order) {
  long double p = 1.0L;
  for (std::size_t i = 0; i < order.size(); ++i) {
    long double denom = 0.0L;
    for (std::size_t j = i; j < order.size(); ++j) denom += std::exp((long double)logits[order[j]]);
    p *= std::exp((long double)logits[order[i]]) / denom;
  }
  return (double)p;
}

inline std::vector<double> random_simplex(std::size_t k, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> v(k);
  double s = 0.0;
  for (double& x : v) {
    x = expo(rng);
    s += x;
  }
  for (double& x : v) x /= s;
  return v;
}

inline std::vector<std::size_t> random_permutation(std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> v(k);
  for (std::size_t i = 0; i < k; ++i) v[i] = i;
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

}  // namespace oracle
