#pragma once

#include <string>

#include "fedrlhf/fairness.hpp"
#include "fedrlhf/fedsim.hpp"

namespace fedrlhf {

// Compact single-line JSON encodings. Key order is fixed so identical inputs
// produce identical bytes.

std::string to_json(const FairnessReport& report);
std::string to_json(const RewardReply& reply);
std::string to_json(const RolloutBroadcast& broadcast);
std::string to_json(const EvaluationPoint& point);

/// One rounds.jsonl line (without the trailing newline).
std::string to_json(const RoundRecord& record);

}  // namespace fedrlhf
