#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ugrec/gradients.hpp"
#include "ugrec/graph.hpp"
#include "ugrec/model.hpp"

namespace ugrec {

enum class Ablation : std::uint8_t {
  Full = 0,
  NoDirectedNoCo = 1,  // o/dc: interaction triplets only
  NoCo = 2,            // o/c:  drop undirected co-occurrence relations
  NoDirected = 3,      // o/d:  drop non-interaction directed relations
  NoAttention = 4,     // o/att: all relations, attention disabled
};

const char* to_string(Ablation a);
std::optional<Ablation> parse_ablation(const std::string& token);

struct TrainConfig {
  ModelConfig model;
  double learning_rate = 0.05;
  double margin_interaction = 1.8;
  double margin_other = 1.0;
  int neg_pool = 20;  // N: candidates scored per hard-negative draw
  double lambda_d = 1.0;
  double lambda_c = 1.0;
  int epochs = 1000;
  int eval_every = 10;
  int eval_k = 20;  // validation HR@K inside fit
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::Full;
  int batch_size = 1024;
  int patience = 20;  // evaluations without improvement before stopping; <= 0 disables
  /// The literal reading of "hardest = largest distance"; the default picks
  /// the most loss-violating candidate (smallest distance) instead.
  bool hardest_by_largest_distance = false;
  int threads = 1;
  bool deterministic = true;

  bool attention_enabled() const {
    return model.use_attention && ablation != Ablation::NoAttention;
  }
};

/// Accumulated squared gradients, same shapes as the parameters.
struct AdaGradState {
  Matrix entity_emb, entity_proj, rel_emb, rel_proj;
  std::vector<Matrix> att_weight;
  Matrix att_bias;
  double epsilon = 1e-8;
  std::int64_t epochs_done = 0;

  static AdaGradState like(const ModelParams& params);
};

/// No corruption candidate exists for a positive triplet (every entity of the
/// tail's kind is already a known positive for its head).
struct SamplingExhausted : DataError {
  using DataError::DataError;
};

/// Draws up to N tail corruptions (rejecting known positives and undirected
/// self-loops) and returns the hardest one under the active scorer; ties go
/// to the smallest entity index. If 10*N draws all reject, falls back to a
/// deterministic scan of the whole pool; SamplingExhausted only when no valid
/// candidate exists at all.
Triplet sample_hard_negative(const Triplet& pos, const UnifiedGraph& graph,
                             const ModelParams& params, const TrainConfig& config,
                             std::mt19937_64& rng);

/// Standard AdaGrad on the touched slots: acc += g^2 first, then
/// theta -= lr * g / sqrt(acc + epsilon).
void adagrad_apply(ModelParams& params, AdaGradState& state, const GradientSet& grads,
                   double learning_rate);

struct RelationEpochStats {
  double loss_sum = 0.0;
  std::int64_t active = 0;
  std::int64_t count = 0;
  double mean_loss() const { return count > 0 ? loss_sum / static_cast<double>(count) : 0.0; }
  double active_fraction() const {
    return count > 0 ? static_cast<double>(active) / static_cast<double>(count) : 0.0;
  }
};

struct EpochSummary {
  std::map<RelationId, RelationEpochStats> per_relation;
  std::vector<std::string> small_pool_relations;  // corruption pool < 2N
  std::int64_t pairs = 0;
  std::int64_t unsampleable_pairs = 0;  // positives with no possible negative, skipped

  double mean_loss() const;
  double active_fraction() const;
};

/// One seeded-shuffled pass over the enabled positive triplets: per positive
/// a hard negative, a pair gradient scaled by lambda_d / lambda_c, AdaGrad
/// updates applied per batch against the batch-start snapshot, then unit-ball
/// projection of every touched embedding column. Deterministic given the
/// seed regardless of thread count (per-pair RNG streams, fixed-order
/// accumulation).
EpochSummary train_epoch(const UnifiedGraph& graph, ModelParams& params, AdaGradState& state,
                         const TrainConfig& config);

struct EvalRecord {
  int epoch = 0;
  double val_hr = 0.0;
  double val_ndcg = 0.0;
  std::map<RelationId, double> mean_loss;
  double active_fraction = 0.0;
};

using FitObserver = std::function<void(const EvalRecord&)>;

struct FitResult {
  ModelParams best_params;
  ModelParams final_params;
  std::vector<EvalRecord> history;
  int best_epoch = 0;
  double best_hr = -1.0;
};

/// Trains up to config.epochs epochs, evaluating validation HR@eval_k every
/// eval_every epochs and keeping the best parameters. Early-stops after
/// `patience` evaluations without improvement.
FitResult fit(const DataSplit& split, const TrainConfig& config, const FitObserver& observer = {});

/// Keeps exactly round(ratio * total) undirected triplets via a seeded
/// shuffle prefix; directed triplets are untouched. ratio == 1 returns the
/// graph unchanged.
UnifiedGraph subsample_cooccurrence(const UnifiedGraph& graph, double ratio, std::uint64_t seed);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ugrec
