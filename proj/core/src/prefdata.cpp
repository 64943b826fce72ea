#include "fedrlhf/prefdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "fedrlhf/error.hpp"
#include "json.hpp"

namespace fedrlhf {

namespace {

using nlohmann::json;

std::string pad_index(std::size_t i, std::size_t count) {
  std::string digits = std::to_string(i);
  std::size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return digits;
}

// Checks range and sum; rescales small drift. `where` names the row.
std::vector<double> normalize_row(std::vector<double> probs, const std::string& where) {
  double sum = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    double p = probs[k];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw ValidationError(where + ": probability " + std::to_string(k) +
                            " out of range [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRenormalizeTolerance) {
    std::ostringstream msg;
    msg << where << ": probabilities sum to " << sum << ", outside 1 +- "
        << kRenormalizeTolerance;
    throw ValidationError(msg.str());
  }
  for (double& p : probs) p /= sum;
  return probs;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

double parse_double(std::string_view cell, const std::string& where) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(where + ": not a number: '" + std::string(cell) + "'");
  }
  return value;
}

std::vector<double> flat_dirichlet(std::size_t k, std::mt19937_64& rng) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> draw(k);
  double total = 0.0;
  for (double& x : draw) {
    x = exp1(rng);
    total += x;
  }
  for (double& x : draw) x /= total;
  return draw;
}

}  // namespace

PreferenceDataset PreferenceDataset::make(std::vector<Question> questions,
                                          std::vector<std::string> groups,
                                          std::vector<GroupPreference> prefs) {
  if (groups.size() < 2) throw ValidationError("dataset needs at least 2 groups");
  if (questions.empty()) throw ValidationError("dataset needs at least 1 question");

  PreferenceDataset ds;
  for (std::size_t q = 0; q < questions.size(); ++q) {
    const Question& question = questions[q];
    if (question.options.size() < 2) {
      throw ValidationError("question '" + question.id + "' has fewer than 2 options");
    }
    std::set<std::string_view> labels(question.options.begin(), question.options.end());
    if (labels.size() != question.options.size()) {
      throw ValidationError("question '" + question.id + "' has duplicate option labels");
    }
    if (!ds.question_lookup_.emplace(question.id, q).second) {
      throw ValidationError("duplicate question id '" + question.id + "'");
    }
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!ds.group_lookup_.emplace(groups[g], g).second) {
      throw ValidationError("duplicate group id '" + groups[g] + "'");
    }
  }

  ds.table_.assign(groups.size() * questions.size(), {});
  for (std::size_t i = 0; i < prefs.size(); ++i) {
    GroupPreference& pref = prefs[i];
    std::string where = "preference " + std::to_string(i) + " (group '" + pref.group_id +
                        "', question '" + pref.question_id + "')";
    auto g = ds.group_lookup_.find(pref.group_id);
    if (g == ds.group_lookup_.end()) throw ValidationError(where + ": unknown group");
    auto q = ds.question_lookup_.find(pref.question_id);
    if (q == ds.question_lookup_.end()) throw ValidationError(where + ": unknown question");
    std::size_t k = questions[q->second].options.size();
    if (pref.probs.size() != k) {
      throw ValidationError(where + ": expected " + std::to_string(k) + " probabilities, got " +
                            std::to_string(pref.probs.size()));
    }
    auto& slot = ds.table_[g->second * questions.size() + q->second];
    if (!slot.empty()) throw ValidationError(where + ": duplicate entry");
    slot = normalize_row(std::move(pref.probs), where);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t q = 0; q < questions.size(); ++q) {
      if (ds.table_[g * questions.size() + q].empty()) {
        throw ValidationError("missing preference for group '" + groups[g] + "', question '" +
                              questions[q].id + "'");
      }
    }
  }
  ds.questions_ = std::move(questions);
  ds.groups_ = std::move(groups);
  return ds;
}

std::size_t PreferenceDataset::question_index(std::string_view question_id) const {
  auto it = question_lookup_.find(question_id);
  if (it == question_lookup_.end()) {
    throw ValidationError("unknown question '" + std::string(question_id) + "'");
  }
  return it->second;
}

std::size_t PreferenceDataset::group_index(std::string_view group_id) const {
  auto it = group_lookup_.find(group_id);
  if (it == group_lookup_.end()) {
    throw ValidationError("unknown group '" + std::string(group_id) + "'");
  }
  return it->second;
}

std::span<const double> PreferenceDataset::probs(std::size_t g, std::size_t q) const {
  return table_.at(g * questions_.size() + q);
}

std::vector<GroupPreference> PreferenceDataset::group_slice(std::size_t g) const {
  std::vector<GroupPreference> rows;
  rows.reserve(questions_.size());
  for (std::size_t q = 0; q < questions_.size(); ++q) {
    auto p = probs(g, q);
    rows.push_back({groups_.at(g), questions_[q].id, {p.begin(), p.end()}});
  }
  return rows;
}

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "json") return DatasetFormat::kJson;
  if (name == "csv") return DatasetFormat::kCsv;
  throw ParseError("unknown dataset format '" + std::string(name) + "'");
}

PreferenceDataset parse_dataset_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("dataset JSON: ") + e.what());
  }
  try {
    std::vector<std::string> groups = doc.at("groups").get<std::vector<std::string>>();
    std::vector<Question> questions;
    const json& qs = doc.at("questions");
    for (std::size_t i = 0; i < qs.size(); ++i) {
      const json& q = qs.at(i);
      questions.push_back({q.at("id").get<std::string>(), q.value("text", std::string{}),
                           q.at("options").get<std::vector<std::string>>()});
    }
    std::vector<GroupPreference> prefs;
    const json& ps = doc.at("preferences");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const json& p = ps.at(i);
      prefs.push_back({p.at("group").get<std::string>(), p.at("question").get<std::string>(),
                       p.at("probs").get<std::vector<double>>()});
    }
    return PreferenceDataset::make(std::move(questions), std::move(groups), std::move(prefs));
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset JSON: ") + e.what());
  }
}

PreferenceDataset parse_dataset_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }

  std::size_t line_no = 0;
  std::vector<std::string_view> header;
  for (; line_no < lines.size(); ++line_no) {
    if (!trim(lines[line_no]).empty()) {
      header = split_csv_line(lines[line_no]);
      break;
    }
  }
  if (header.size() < 4 || header[0] != "group_id" || header[1] != "question_id") {
    throw ParseError("dataset CSV: header must be group_id,question_id,p1,...,pK");
  }

  std::vector<std::string> groups;
  std::vector<Question> questions;
  std::map<std::string, std::size_t, std::less<>> question_k;
  std::set<std::string, std::less<>> seen_groups;
  std::vector<GroupPreference> prefs;

  for (++line_no; line_no < lines.size(); ++line_no) {
    if (trim(lines[line_no]).empty()) continue;
    std::string where = "line " + std::to_string(line_no + 1);
    auto cells = split_csv_line(lines[line_no]);
    if (cells.size() > header.size()) {
      throw ParseError(where + ": more cells than header columns");
    }
    if (cells.size() < 4) throw ParseError(where + ": expected at least 2 probabilities");
    std::vector<double> probs;
    bool ended = false;
    for (std::size_t c = 2; c < cells.size(); ++c) {
      if (cells[c].empty()) {
        ended = true;
        continue;
      }
      if (ended) throw ParseError(where + ": gap between probability cells");
      probs.push_back(parse_double(cells[c], where));
    }
    if (probs.size() < 2) throw ParseError(where + ": expected at least 2 probabilities");
    std::string group(cells[0]);
    std::string qid(cells[1]);
    if (group.empty() || qid.empty()) throw ParseError(where + ": empty identifier");
    if (seen_groups.insert(group).second) groups.push_back(group);
    auto [it, inserted] = question_k.emplace(qid, probs.size());
    if (inserted) {
      Question q{qid, "", {}};
      for (std::size_t k = 0; k < probs.size(); ++k) q.options.push_back(std::to_string(k + 1));
      questions.push_back(std::move(q));
    } else if (it->second != probs.size()) {
      throw ValidationError(where + " (group '" + group + "', question '" + qid +
                            "'): expected " + std::to_string(it->second) + " probabilities");
    }
    std::vector<double> checked =
        normalize_row(probs, where + " (group '" + group + "', question '" + qid + "')");
    prefs.push_back({std::move(group), std::move(qid), std::move(checked)});
  }
  return PreferenceDataset::make(std::move(questions), std::move(groups), std::move(prefs));
}

PreferenceDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dataset file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  return format == DatasetFormat::kJson ? parse_dataset_json(text) : parse_dataset_csv(text);
}

std::string dataset_to_json(const PreferenceDataset& dataset) {
  json doc;
  doc["groups"] = dataset.groups();
  json qs = json::array();
  for (const Question& q : dataset.questions()) {
    json item;
    item["id"] = q.id;
    item["text"] = q.text;
    item["options"] = q.options;
    qs.push_back(std::move(item));
  }
  doc["questions"] = std::move(qs);
  json ps = json::array();
  for (std::size_t g = 0; g < dataset.num_groups(); ++g) {
    for (std::size_t q = 0; q < dataset.num_questions(); ++q) {
      json item;
      item["group"] = dataset.groups()[g];
      item["question"] = dataset.questions()[q].id;
      auto p = dataset.probs(g, q);
      item["probs"] = std::vector<double>(p.begin(), p.end());
      ps.push_back(std::move(item));
    }
  }
  doc["preferences"] = std::move(ps);
  return doc.dump(2);
}

void validate(const SyntheticSpec& spec) {
  if (spec.num_groups < 2) throw ValidationError("synthetic: num_groups must be >= 2");
  if (spec.num_questions < 1) throw ValidationError("synthetic: num_questions must be >= 1");
  if (spec.options_per_question < 2) {
    throw ValidationError("synthetic: options_per_question must be >= 2");
  }
  if (!(spec.heterogeneity >= 0.0 && spec.heterogeneity <= 1.0)) {
    throw ValidationError("synthetic: heterogeneity must lie in [0, 1]");
  }
}

PreferenceDataset generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.rng_seed);
  const std::size_t k = spec.options_per_question;
  const double eta = spec.heterogeneity;

  std::vector<std::string> groups;
  for (std::size_t g = 0; g < spec.num_groups; ++g) {
    groups.push_back("g" + pad_index(g, spec.num_groups));
  }
  std::vector<Question> questions;
  std::vector<GroupPreference> prefs;
  prefs.reserve(spec.num_groups * spec.num_questions);
  for (std::size_t q = 0; q < spec.num_questions; ++q) {
    Question question{"q" + pad_index(q, spec.num_questions),
                      "synthetic question " + std::to_string(q), {}};
    for (std::size_t o = 0; o < k; ++o) question.options.push_back("o" + std::to_string(o + 1));

    std::vector<double> shared = flat_dirichlet(k, rng);
    for (std::size_t g = 0; g < spec.num_groups; ++g) {
      std::vector<double> own = flat_dirichlet(k, rng);
      std::vector<double> mix(k);
      for (std::size_t o = 0; o < k; ++o) mix[o] = (1.0 - eta) * shared[o] + eta * own[o];
      prefs.push_back({groups[g], question.id, std::move(mix)});
    }
    questions.push_back(std::move(question));
  }
  return PreferenceDataset::make(std::move(questions), std::move(groups), std::move(prefs));
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("total_variation: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return 0.5 * sum;
}

double mean_pairwise_tv(const PreferenceDataset& dataset) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t q = 0; q < dataset.num_questions(); ++q) {
    for (std::size_t a = 0; a < dataset.num_groups(); ++a) {
      for (std::size_t b = a + 1; b < dataset.num_groups(); ++b) {
        total += total_variation(dataset.probs(a, q), dataset.probs(b, q));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace fedrlhf
