#include "fedrlhf/serialize.hpp"

#include <algorithm>

#include "fedrlhf/error.hpp"
#include "json_codec.hpp"

namespace fedrlhf {

namespace detail {

ojson encode(const FairnessReport& report) {
  ojson j;
  j["fi"] = report.fi;
  j["num_questions"] = report.num_questions;
  j["num_groups"] = report.num_groups;
  j["per_question_cov"] = report.per_question_cov;
  return j;
}

ojson encode(const MetricEvaluation& eval) {
  ojson j;
  j["metric"] = std::string(metric_name(eval.metric));
  j["fi"] = eval.fi;
  j["avg_as"] = eval.avg_as;
  j["min_as"] = eval.min_as;
  j["avg_raw"] = eval.avg_raw;
  j["group_means"] = eval.group_means;
  j["per_question_cov"] = eval.per_question_cov;
  return j;
}

ojson encode(const EvaluationPoint& point) {
  ojson j;
  j["round"] = point.round;
  ojson metrics = ojson::array();
  for (const MetricEvaluation& m : point.metrics) metrics.push_back(encode(m));
  j["metrics"] = std::move(metrics);
  return j;
}

ojson encode(const AggregatedReward& agg) {
  ojson j;
  const auto& v = agg.per_question;
  double sum = 0.0;
  for (double x : v) sum += x;
  j["mean"] = v.empty() ? 0.0 : sum / static_cast<double>(v.size());
  j["min"] = v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
  j["max"] = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  j["per_question"] = v;
  if (agg.gate_taken) {
    j["gate"] = *agg.gate_taken == GateBranch::kAverage ? "average" : "weighted";
  } else {
    j["gate"] = nullptr;
  }
  j["gate_fi"] = agg.gate_fi ? ojson(*agg.gate_fi) : ojson(nullptr);
  j["weights"] = agg.weights_used ? ojson(*agg.weights_used) : ojson(nullptr);
  return j;
}

ojson encode(const PPOStats& stats) {
  ojson j;
  j["loss"] = stats.loss;
  j["mean_ratio"] = stats.mean_ratio;
  j["approx_kl"] = stats.approx_kl;
  j["clip_fraction"] = stats.clip_fraction;
  return j;
}

ojson encode(const RoundRecord& record) {
  ojson j;
  j["round"] = record.round;
  j["fairness"] = encode(record.fairness);
  j["aggregate"] = encode(record.aggregated);
  j["group_mean_reward"] = record.group_mean_reward;
  j["history"] = record.history;
  j["policy"] = encode(record.policy);
  if (record.evaluation) j["evaluation"] = encode(*record.evaluation);
  return j;
}

ojson encode(const RewardReply& reply) {
  ojson j;
  j["round"] = reply.round;
  j["group"] = reply.group_id;
  ojson items = ojson::array();
  for (std::size_t i = 0; i < reply.rewards.size(); ++i) {
    ojson item;
    item["index"] = i;
    item["reward"] = reply.rewards[i];
    item["raw"] = i < reply.raw.size() ? ojson(reply.raw[i]) : ojson(nullptr);
    items.push_back(std::move(item));
  }
  j["items"] = std::move(items);
  return j;
}

ojson encode(const RolloutBroadcast& broadcast) {
  ojson j;
  j["round"] = broadcast.round;
  ojson items = ojson::array();
  for (std::size_t i = 0; i < broadcast.question_ids.size(); ++i) {
    ojson item;
    item["question"] = broadcast.question_ids[i];
    const Prediction& p = broadcast.predictions.at(i);
    if (p.kind == Prediction::Kind::kProbabilityVector) {
      item["probs"] = p.probs;
    } else {
      item["ranking"] = p.ranking;
    }
    items.push_back(std::move(item));
  }
  j["items"] = std::move(items);
  return j;
}

EvaluationPoint decode_evaluation(const ojson& j) {
  try {
    EvaluationPoint point;
    point.round = j.at("round").get<long>();
    for (const ojson& m : j.at("metrics")) {
      MetricEvaluation eval;
      auto name = m.at("metric").get<std::string>();
      auto kind = parse_metric(name);
      if (!kind) throw ParseError("unknown metric '" + name + "' in evaluation");
      eval.metric = *kind;
      eval.fi = m.at("fi").get<double>();
      eval.avg_as = m.at("avg_as").get<double>();
      eval.min_as = m.at("min_as").get<double>();
      eval.avg_raw = m.at("avg_raw").get<double>();
      eval.group_means = m.at("group_means").get<std::vector<double>>();
      eval.per_question_cov = m.at("per_question_cov").get<std::vector<double>>();
      point.metrics.push_back(std::move(eval));
    }
    return point;
  } catch (const ojson::exception& e) {
    throw ParseError(std::string("evaluation JSON: ") + e.what());
  }
}

}  // namespace detail

std::string to_json(const FairnessReport& report) { return detail::encode(report).dump(); }
std::string to_json(const RewardReply& reply) { return detail::encode(reply).dump(); }
std::string to_json(const RolloutBroadcast& broadcast) { return detail::encode(broadcast).dump(); }
std::string to_json(const EvaluationPoint& point) { return detail::encode(point).dump(); }
std::string to_json(const RoundRecord& record) { return detail::encode(record).dump(); }

}  // namespace fedrlhf
