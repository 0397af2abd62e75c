#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "ugrec/graph.hpp"
#include "ugrec/model.hpp"

namespace ugrec {

struct TrainConfig;

/// 1 iff rank <= K (boundary inclusive).
int hr_at_k(int rank, int K);

/// Single-relevant-item NDCG: 1/log2(rank + 1) for rank <= K, else 0.
double ndcg_at_k(int rank, int K);

struct RankedItem {
  EntityId item;
  double distance = 0.0;
};

/// Scores every item outside `exclude` by interaction-relation distance and
/// returns the full ascending ranking (ties by item index).
std::vector<RankedItem> rank_items(const ModelParams& params, const UnifiedGraph& graph,
                                   EntityId user, const std::unordered_set<std::int32_t>& exclude,
                                   bool use_attention, bool rescale_attention = false);

/// 1-based rank of `item` among all candidate items outside `exclude`, under
/// the same ordering as rank_items (no sort; a counting pass).
int rank_of_item(const ModelParams& params, const UnifiedGraph& graph, std::int32_t user,
                 std::int32_t item, const std::unordered_set<std::int32_t>& exclude,
                 bool use_attention, bool rescale_attention = false);

struct HeldOutMetrics {
  double hr = 0.0;
  double ndcg = 0.0;
  std::int64_t users = 0;
};

/// HR/NDCG@K of held-out items, excluding each user's training items (plus
/// the user's entry in extra_exclude when given).
HeldOutMetrics heldout_metrics(const UnifiedGraph& train,
                               const std::map<std::int32_t, HeldOut>& held,
                               const ModelParams& params, int K, bool use_attention,
                               bool rescale_attention,
                               const std::map<std::int32_t, HeldOut>* extra_exclude);

struct GroupStats {
  std::string label;
  std::int64_t users = 0;
  double hr = 0.0;
  double ndcg = 0.0;
};

struct EvalReport {
  int K = 20;
  double hr = 0.0;
  double ndcg = 0.0;
  std::int64_t users = 0;
  std::int64_t skipped = 0;  // users without a test item
  std::vector<GroupStats> groups;
  std::map<std::int32_t, int> per_user_rank;  // filled when keep_ranks
};

/// Test-split evaluation: each user's test item is ranked among all items
/// excluding that user's training items and validation item. Users are
/// bucketed by training interaction count at the given thresholds
/// (default {5, 10, 15} -> <=5, <=10, <=15, >15).
EvalReport evaluate(const DataSplit& split, const ModelParams& params, const ModelConfig& config,
                    int K, const std::vector<int>& group_thresholds = {5, 10, 15},
                    bool keep_ranks = false);

std::string report_to_text(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);
std::string ranks_to_csv(const EvalReport& report, const EntityVocab& vocab);

struct SweepRow {
  double ratio = 1.0;
  EvalReport report;
};

/// Retrains from scratch (same seed) for every co-occurrence ratio and
/// evaluates on the fixed test split at K = config.eval_k.
std::vector<SweepRow> cooccurrence_sweep(const DataSplit& split, const std::vector<double>& ratios,
                                         const TrainConfig& config);

}  // namespace ugrec
