#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fedrlhf {

/// A multiple-choice question with K >= 2 ordered options. Option order is
/// canonical: every probability vector and ranking refers to options by their
/// index in `options`.
struct Question {
  std::string id;
  std::string text;
  std::vector<std::string> options;

  std::size_t num_options() const noexcept { return options.size(); }

  bool operator==(const Question&) const = default;
};

/// One group's target distribution over a question's options.
struct GroupPreference {
  std::string group_id;
  std::string question_id;
  std::vector<double> probs;
};

/// Questions, groups, and the total (group, question) -> distribution map.
///
/// Instances are immutable once built; construct through `make` (or the
/// loaders/generator), which validates every invariant.
class PreferenceDataset {
 public:
  /// Validates and assembles a dataset. `prefs` must contain exactly one
  /// entry per (group, question) pair. Throws ValidationError otherwise.
  static PreferenceDataset make(std::vector<Question> questions,
                                std::vector<std::string> groups,
                                std::vector<GroupPreference> prefs);

  const std::vector<Question>& questions() const noexcept { return questions_; }
  const std::vector<std::string>& groups() const noexcept { return groups_; }

  std::size_t num_questions() const noexcept { return questions_.size(); }
  std::size_t num_groups() const noexcept { return groups_.size(); }

  std::size_t question_index(std::string_view question_id) const;
  std::size_t group_index(std::string_view group_id) const;

  const Question& question(std::size_t q) const { return questions_.at(q); }

  /// Target distribution of group `g` for question `q` (both by index).
  std::span<const double> probs(std::size_t g, std::size_t q) const;

  /// All preference rows of one group, in question order.
  std::vector<GroupPreference> group_slice(std::size_t g) const;

  bool operator==(const PreferenceDataset&) const = default;

 private:
  std::vector<Question> questions_;
  std::vector<std::string> groups_;
  // Row-major [group][question] -> distribution.
  std::vector<std::vector<double>> table_;
  std::map<std::string, std::size_t, std::less<>> question_lookup_;
  std::map<std::string, std::size_t, std::less<>> group_lookup_;
};

enum class DatasetFormat { kJson, kCsv };

/// Parses "json" / "csv" (case-sensitive). Throws ParseError.
DatasetFormat parse_dataset_format(std::string_view name);

/// Rows whose sum is within this distance of 1 are renormalized; others are
/// rejected.
inline constexpr double kRenormalizeTolerance = 0.02;

/// Loads a dataset file. Probability rows summing to 1 +- 0.02 are rescaled to
/// sum to exactly 1; anything else is a ValidationError naming the row.
PreferenceDataset load_dataset(const std::filesystem::path& path,
                               DatasetFormat format);

/// In-memory variants of load_dataset, used by the file loader and tests.
PreferenceDataset parse_dataset_json(std::string_view text);
PreferenceDataset parse_dataset_csv(std::string_view text);

/// Writes a dataset in the JSON interchange format (stable key order).
std::string dataset_to_json(const PreferenceDataset& dataset);

struct SyntheticSpec {
  std::size_t num_groups = 4;
  std::size_t num_questions = 64;
  std::size_t options_per_question = 4;
  // 0 gives identical groups; 1 gives independent per-group draws.
  double heterogeneity = 0.5;
  std::uint64_t rng_seed = 0;
};

/// Throws ValidationError when the spec is unusable (fewer than 2 groups,
/// no questions, K < 2, heterogeneity outside [0, 1]).
void validate(const SyntheticSpec& spec);

/// Group vectors are (1 - eta) * shared + eta * own, with shared and own drawn
/// from a flat Dirichlet. The random stream does not depend on eta, so for a
/// fixed seed the datasets at different eta share their underlying draws.
PreferenceDataset generate_synthetic(const SyntheticSpec& spec);

/// Total-variation distance 0.5 * sum |a - b|.
double total_variation(std::span<const double> a, std::span<const double> b);

/// Mean over questions and unordered group pairs of the TV distance.
double mean_pairwise_tv(const PreferenceDataset& dataset);

}  // namespace fedrlhf
