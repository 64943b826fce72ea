#pragma once

// Internal: nlohmann/json conversions for library types. Not installed.

#include <string>

#include "fedrlhf/fedsim.hpp"
#include "json.hpp"

namespace fedrlhf::detail {

using ojson = nlohmann::ordered_json;

ojson encode(const FairnessReport& report);
ojson encode(const MetricEvaluation& eval);
ojson encode(const EvaluationPoint& point);
ojson encode(const AggregatedReward& agg);
ojson encode(const PPOStats& stats);
ojson encode(const RoundRecord& record);
ojson encode(const RewardReply& reply);
ojson encode(const RolloutBroadcast& broadcast);

/// Inverse of encode(EvaluationPoint); throws ParseError.
EvaluationPoint decode_evaluation(const ojson& j);

}  // namespace fedrlhf::detail
