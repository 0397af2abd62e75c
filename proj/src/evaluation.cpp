#include "ugrec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ugrec/training.hpp"

namespace ugrec {

int hr_at_k(int rank, int K) {
  if (rank < 1) throw ContractViolation("hr_at_k: rank must be >= 1");
  return rank <= K ? 1 : 0;
}

double ndcg_at_k(int rank, int K) {
  if (rank < 1) throw ContractViolation("ndcg_at_k: rank must be >= 1");
  if (rank > K) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

namespace {

double interaction_distance(const ModelParams& params, const UnifiedGraph& graph,
                            std::int32_t user, std::int32_t item, bool use_attention,
                            bool rescale) {
  const RelationId inter = graph.catalog().interaction();
  return directed_distance(params, EntityId{user, EntityKind::User},
                           EntityId{item, EntityKind::Item}, inter, use_attention, rescale);
}

}  // namespace

std::vector<RankedItem> rank_items(const ModelParams& params, const UnifiedGraph& graph,
                                   EntityId user, const std::unordered_set<std::int32_t>& exclude,
                                   bool use_attention, bool rescale_attention) {
  if (user.index < 0 || user.index >= graph.vocab().size() ||
      graph.vocab().kind(user.index) != EntityKind::User)
    throw ContractViolation("rank_items: not a user entity");
  std::vector<RankedItem> ranked;
  for (std::int32_t item : graph.vocab().of_kind(EntityKind::Item)) {
    if (exclude.contains(item)) continue;
    ranked.push_back(RankedItem{
        EntityId{item, EntityKind::Item},
        interaction_distance(params, graph, user.index, item, use_attention, rescale_attention)});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedItem& a, const RankedItem& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.item.index < b.item.index;
  });
  return ranked;
}

int rank_of_item(const ModelParams& params, const UnifiedGraph& graph, std::int32_t user,
                 std::int32_t item, const std::unordered_set<std::int32_t>& exclude,
                 bool use_attention, bool rescale_attention) {
  const double target =
      interaction_distance(params, graph, user, item, use_attention, rescale_attention);
  int rank = 1;
  for (std::int32_t candidate : graph.vocab().of_kind(EntityKind::Item)) {
    if (candidate == item || exclude.contains(candidate)) continue;
    const double d =
        interaction_distance(params, graph, user, candidate, use_attention, rescale_attention);
    if (d < target || (d == target && candidate < item)) ++rank;
  }
  return rank;
}

HeldOutMetrics heldout_metrics(const UnifiedGraph& train,
                               const std::map<std::int32_t, HeldOut>& held,
                               const ModelParams& params, int K, bool use_attention,
                               bool rescale_attention,
                               const std::map<std::int32_t, HeldOut>* extra_exclude) {
  HeldOutMetrics out;
  for (const auto& [user, target] : held) {
    std::unordered_set<std::int32_t> exclude;
    for (const Interaction& i : train.interactions_of(user)) exclude.insert(i.item);
    if (extra_exclude) {
      auto it = extra_exclude->find(user);
      if (it != extra_exclude->end()) exclude.insert(it->second.item);
    }
    exclude.erase(target.item);
    const int rank = rank_of_item(params, train, user, target.item, exclude, use_attention,
                                  rescale_attention);
    out.hr += hr_at_k(rank, K);
    out.ndcg += ndcg_at_k(rank, K);
    out.users += 1;
  }
  if (out.users > 0) {
    out.hr /= static_cast<double>(out.users);
    out.ndcg /= static_cast<double>(out.users);
  }
  return out;
}

EvalReport evaluate(const DataSplit& split, const ModelParams& params, const ModelConfig& config,
                    int K, const std::vector<int>& group_thresholds, bool keep_ranks) {
  if (split.test.empty()) throw ContractViolation("evaluate: empty test map");
  const UnifiedGraph& train = split.train;

  EvalReport report;
  report.K = K;
  std::vector<int> thresholds = group_thresholds;
  std::sort(thresholds.begin(), thresholds.end());
  for (int t : thresholds) report.groups.push_back(GroupStats{"<=" + std::to_string(t)});
  report.groups.push_back(
      GroupStats{">" + std::to_string(thresholds.empty() ? 0 : thresholds.back())});

  auto group_of = [&](std::int64_t interactions) {
    for (std::size_t g = 0; g < thresholds.size(); ++g)
      if (interactions <= thresholds[g]) return g;
    return thresholds.size();
  };

  for (std::int32_t user : train.vocab().of_kind(EntityKind::User)) {
    auto it = split.test.find(user);
    if (it == split.test.end()) {
      ++report.skipped;
      continue;
    }
    std::unordered_set<std::int32_t> exclude;
    for (const Interaction& i : train.interactions_of(user)) exclude.insert(i.item);
    auto vit = split.validation.find(user);
    if (vit != split.validation.end()) exclude.insert(vit->second.item);
    exclude.erase(it->second.item);

    const int rank = rank_of_item(params, train, user, it->second.item, exclude,
                                  config.use_attention, config.rescale_attention);
    const int hit = hr_at_k(rank, K);
    const double gain = ndcg_at_k(rank, K);
    report.hr += hit;
    report.ndcg += gain;
    report.users += 1;
    GroupStats& group = report.groups[group_of(
        static_cast<std::int64_t>(train.interactions_of(user).size()))];
    group.users += 1;
    group.hr += hit;
    group.ndcg += gain;
    if (keep_ranks) report.per_user_rank[user] = rank;
  }

  if (report.users > 0) {
    report.hr /= static_cast<double>(report.users);
    report.ndcg /= static_cast<double>(report.users);
  }
  for (GroupStats& g : report.groups) {
    if (g.users > 0) {
      g.hr /= static_cast<double>(g.users);
      g.ndcg /= static_cast<double>(g.users);
    }
  }
  return report;
}

namespace {

std::string fixed6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string report_to_text(const EvalReport& report) {
  std::ostringstream out;
  out << "K\t" << report.K << '\n';
  out << "hr\t" << fixed6(report.hr) << '\n';
  out << "ndcg\t" << fixed6(report.ndcg) << '\n';
  out << "users\t" << report.users << '\n';
  out << "skipped\t" << report.skipped << '\n';
  for (const GroupStats& g : report.groups)
    out << "group\t" << g.label << '\t' << g.users << '\t' << fixed6(g.hr) << '\t'
        << fixed6(g.ndcg) << '\n';
  return out.str();
}

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "group,users,hr@" << report.K << ",ndcg@" << report.K << '\n';
  out << "all," << report.users << ',' << fixed6(report.hr) << ',' << fixed6(report.ndcg) << '\n';
  for (const GroupStats& g : report.groups)
    out << g.label << ',' << g.users << ',' << fixed6(g.hr) << ',' << fixed6(g.ndcg) << '\n';
  return out.str();
}

std::string ranks_to_csv(const EvalReport& report, const EntityVocab& vocab) {
  std::ostringstream out;
  out << "user,rank\n";
  for (const auto& [user, rank] : report.per_user_rank)
    out << vocab.name(user) << ',' << rank << '\n';
  return out.str();
}

std::vector<SweepRow> cooccurrence_sweep(const DataSplit& split, const std::vector<double>& ratios,
                                         const TrainConfig& config) {
  std::vector<SweepRow> rows;
  for (double ratio : ratios) {
    DataSplit reduced;
    reduced.train = subsample_cooccurrence(split.train, ratio, config.seed);
    reduced.validation = split.validation;
    reduced.test = split.test;
    const FitResult result = fit(reduced, config);
    ModelConfig eval_config = config.model;
    eval_config.use_attention = config.attention_enabled();
    SweepRow row;
    row.ratio = ratio;
    row.report = evaluate(reduced, result.best_params, eval_config, config.eval_k);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ugrec
