#include <gtest/gtest.h>

#include <random>

#include "fedrlhf/error.hpp"
#include "fedrlhf/fedsim.hpp"
#include "fedrlhf/serialize.hpp"

using namespace fedrlhf;

namespace {

PreferenceDataset small(double eta, std::size_t groups = 3, std::uint64_t seed = 4) {
  return generate_synthetic({groups, 6, 4, eta, seed});
}

FederationConfig config(MetricKind metric, AggregationStrategy strategy, std::uint64_t seed = 1) {
  FederationConfig c;
  c.metric = metric;
  c.strategy = strategy;
  c.seed = seed;
  return c;
}

std::string stream(const TrainingResult& r) {
  std::string s;
  for (const RoundRecord& rec : r.rounds) s += to_json(rec) + "\n";
  return s;
}

}  // namespace

TEST(Client, RewardsExactTargetsWithOne) {
  PreferenceDataset d = small(0.5);
  auto clients = make_clients(d, MetricKind::kCosine);
  RolloutBroadcast b{3, {}, {}};
  for (std::size_t q = 0; q < 2; ++q) {
    auto p = d.probs(1, q);
    b.question_ids.push_back(d.question(q).id);
    b.predictions.push_back(Prediction::from_probs({p.begin(), p.end()}));
  }
  RewardReply reply = client_evaluate(clients[1], b);
  EXPECT_EQ(reply.round, 3);
  EXPECT_EQ(reply.group_id, d.groups()[1]);
  ASSERT_EQ(reply.rewards.size(), 2u);
  for (double r : reply.rewards) EXPECT_NEAR(r, 1.0, 1e-15);
}

TEST(Client, IdenticalTargetsGiveIdenticalReplies) {
  PreferenceDataset d = small(0.0);
  auto clients = make_clients(d, MetricKind::kWasserstein);
  RolloutBroadcast b{1, {d.question(0).id, d.question(3).id},
                     {Prediction::from_probs({0.1, 0.2, 0.3, 0.4}),
                      Prediction::from_probs({0.4, 0.3, 0.2, 0.1})}};
  RewardReply a = clients[0].evaluate(b), c = clients[2].evaluate(b);
  EXPECT_EQ(a.rewards, c.rewards);
}

TEST(Client, UnknownQuestionAndForeignRows) {
  PreferenceDataset d = small(0.5);
  auto clients = make_clients(d, MetricKind::kCosine);
  RolloutBroadcast b{1, {"nope"}, {Prediction::from_probs({0.25, 0.25, 0.25, 0.25})}};
  EXPECT_THROW(clients[0].evaluate(b), ValidationError);
  EXPECT_FALSE(clients[0].knows_question("nope"));
  EXPECT_TRUE(clients[0].knows_question(d.question(0).id));
  auto rows = d.group_slice(1);
  EXPECT_THROW(GroupClient(d.groups()[0], rows, MetricKind::kCosine), ValidationError);
}

TEST(Federation, HomogeneousRoundTakesAverageGate) {
  PreferenceDataset d = small(0.0);
  Federation f(d.questions(), make_clients(d, MetricKind::kCosine),
               config(MetricKind::kCosine, AggregationStrategy::adaptive_alpha()));
  auto [state, rec] = f.run_round(f.initial_state());
  EXPECT_EQ(state.round, 1);
  EXPECT_EQ(rec.round, 1);
  EXPECT_DOUBLE_EQ(rec.fairness.fi, 1.0);
  EXPECT_EQ(rec.aggregated.gate_taken, GateBranch::kAverage);
  EXPECT_NE(to_json(rec).find("\"gate\":\"average\""), std::string::npos);
}

TEST(Federation, MinStrategyTakesColumnMinima) {
  PreferenceDataset d = small(0.9);
  auto clients = make_clients(d, MetricKind::kWasserstein);
  PolicyParams p = PolicyParams::uniform(Task::kPrediction, d.questions());
  std::mt19937_64 rng(6);
  std::vector<std::string> ids;
  for (const Question& q : d.questions()) ids.push_back(q.id);
  Rollout rollout = sample_rollout(p, ids, rng);
  RolloutBroadcast b{1, ids, {}};
  for (const RolloutItem& item : rollout.items) b.predictions.push_back(item.prediction);

  std::vector<RewardReply> replies;
  std::vector<double> values(ids.size() * clients.size());
  for (std::size_t g = 0; g < clients.size(); ++g) {
    replies.push_back(client_evaluate(clients[g], b));
    for (std::size_t j = 0; j < ids.size(); ++j) values[j * clients.size() + g] = replies[g].rewards[j];
  }
  AggregatedReward agg = aggregate_min(GroupRewardMatrix::make(ids, d.groups(), values));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    double lo = replies[0].rewards[j];
    for (const RewardReply& r : replies) lo = std::min(lo, r.rewards[j]);
    EXPECT_EQ(agg.per_question[j], lo);
  }
}

TEST(Federation, RunRoundLeavesInputStateUntouched) {
  PreferenceDataset d = small(0.9);
  Federation f(d.questions(), make_clients(d, MetricKind::kWasserstein),
               config(MetricKind::kWasserstein, AggregationStrategy::min()));
  ServerState s0 = f.initial_state();
  auto [s1, rec] = f.run_round(s0);
  EXPECT_EQ(s0, f.initial_state());
  EXPECT_NE(s1.params, s0.params);
  EXPECT_EQ(rec.aggregated.per_question.size(), f.round_questions(1).size());
  EXPECT_FALSE(rec.aggregated.gate_taken.has_value());
}

TEST(Federation, RoundQuestionsSubsampleDeterministically) {
  PreferenceDataset d = generate_synthetic({2, 40, 3, 0.5, 1});
  FederationConfig c = config(MetricKind::kCosine, AggregationStrategy::average());
  c.ppo.questions_per_round = 5;
  c.ppo.samples_per_question = 2;
  Federation f(d.questions(), make_clients(d, MetricKind::kCosine), c);
  auto a = f.round_questions(3);
  EXPECT_EQ(a.size(), 10u);
  EXPECT_EQ(a, f.round_questions(3));
  EXPECT_NE(a, f.round_questions(4));
}

TEST(Federation, RejectsBadSetups) {
  PreferenceDataset d = small(0.5);
  auto clients = make_clients(d, MetricKind::kCosine);
  FederationConfig c = config(MetricKind::kCosine, AggregationStrategy::average());
  EXPECT_THROW(Federation(d.questions(), {clients[0]}, c), ValidationError);
  EXPECT_THROW(Federation(d.questions(), {clients[0], clients[0]}, c), ValidationError);
  FederationConfig ranking = c;
  ranking.task = Task::kRanking;
  EXPECT_THROW(Federation(d.questions(), clients, ranking), ValidationError);
}

TEST(Training, ZeroRoundsIsANoOp) {
  PreferenceDataset d = small(0.5);
  TrainingConfig tc;
  tc.federation = config(MetricKind::kCosine, AggregationStrategy::average());
  TrainingResult r = run_training(d, tc);
  EXPECT_TRUE(r.rounds.empty());
  ASSERT_EQ(r.evaluations.size(), 1u);
  EXPECT_EQ(r.evaluations[0].round, 0);
  EXPECT_EQ(r.final_params, PolicyParams::uniform(Task::kPrediction, d.questions()));
}

TEST(Training, EarlyStopAlreadyMetAtStart) {
  PreferenceDataset d = small(0.5);
  TrainingConfig tc;
  tc.federation = config(MetricKind::kCosine, AggregationStrategy::average());
  tc.rounds = 10;
  tc.early_stop = EarlyStop{MetricKind::kCosine, 0.0};
  TrainingResult r = run_training(d, tc);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_TRUE(r.rounds.empty());
  EXPECT_EQ(r.evaluations.size(), 1u);
}

TEST(Training, FiveRoundsWithIntervalEvaluations) {
  PreferenceDataset d = small(0.5);
  TrainingConfig tc;
  tc.federation = config(MetricKind::kKL, AggregationStrategy::fixed_alpha(2.0));
  tc.rounds = 5;
  tc.eval_interval = 2;
  tc.eval_metrics = {MetricKind::kKL, MetricKind::kBorda};
  TrainingResult r = run_training(d, tc);
  ASSERT_EQ(r.rounds.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(r.rounds[i].round, static_cast<long>(i + 1));
  ASSERT_EQ(r.evaluations.size(), 4u);  // 0, 2, 4, 5
  EXPECT_EQ(r.evaluations[3].round, 5);
  EXPECT_TRUE(r.rounds[1].evaluation.has_value());
  EXPECT_FALSE(r.rounds[2].evaluation.has_value());
  EXPECT_EQ(*r.rounds[4].evaluation, r.evaluations.back());
  EXPECT_EQ(r.evaluations[0].metrics.size(), 2u);
}

TEST(Training, DeterministicRecordStreams) {
  PreferenceDataset d = small(0.7);
  TrainingConfig tc;
  tc.federation = config(MetricKind::kCosine, AggregationStrategy::adaptive_alpha(), 42);
  tc.rounds = 4;
  EXPECT_EQ(stream(run_training(d, tc)), stream(run_training(d, tc)));
  TrainingConfig other = tc;
  other.federation.seed = 43;
  EXPECT_NE(stream(run_training(d, tc)), stream(run_training(d, other)));
}

TEST(Training, RankingTask) {
  PreferenceDataset d = small(0.5);
  TrainingConfig tc;
  tc.federation = config(MetricKind::kKendallTau, AggregationStrategy::max());
  tc.federation.task = Task::kRanking;
  tc.rounds = 3;
  TrainingResult r = run_training(d, tc);
  EXPECT_EQ(r.rounds.size(), 3u);
  EXPECT_EQ(r.evaluations.back().metrics.size(), 3u);
}

TEST(Evaluation, SummaryStatistics) {
  PreferenceDataset d = small(0.8);
  PolicyParams p = PolicyParams::uniform(Task::kPrediction, d.questions());
  auto evals = evaluate_policy(p, d, std::vector<MetricKind>{MetricKind::kWasserstein});
  const MetricEvaluation& e = evals.at(0);
  ASSERT_EQ(e.group_means.size(), 3u);
  double lo = 1e9, sum = 0.0;
  for (double m : e.group_means) {
    lo = std::min(lo, m);
    sum += m;
  }
  EXPECT_DOUBLE_EQ(e.min_as, lo);
  EXPECT_NEAR(e.avg_as, sum / 3.0, 1e-15);
  EXPECT_NEAR(e.avg_as, 1.0 - e.avg_raw, 1e-12);
  EXPECT_EQ(e.per_question_cov.size(), d.num_questions());
  PolicyParams ranking = PolicyParams::uniform(Task::kRanking, d.questions());
  EXPECT_THROW(evaluate_policy(ranking, d, std::vector<MetricKind>{MetricKind::kCosine}),
               DomainError);
}
