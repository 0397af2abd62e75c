#include "ugrec/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "ugrec/evaluation.hpp"
#include "ugrec/geometry.hpp"

namespace ugrec {

const char* to_string(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoDirectedNoCo: return "o-dc";
    case Ablation::NoCo: return "o-c";
    case Ablation::NoDirected: return "o-d";
    case Ablation::NoAttention: return "o-att";
  }
  return "?";
}

std::optional<Ablation> parse_ablation(const std::string& token) {
  if (token == "full") return Ablation::Full;
  if (token == "o-dc" || token == "o/dc") return Ablation::NoDirectedNoCo;
  if (token == "o-c" || token == "o/c") return Ablation::NoCo;
  if (token == "o-d" || token == "o/d") return Ablation::NoDirected;
  if (token == "o-att" || token == "o/att") return Ablation::NoAttention;
  return std::nullopt;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

AdaGradState AdaGradState::like(const ModelParams& params) {
  AdaGradState s;
  s.entity_emb = Matrix::Zero(params.entity_emb.rows(), params.entity_emb.cols());
  s.entity_proj = Matrix::Zero(params.entity_proj.rows(), params.entity_proj.cols());
  s.rel_emb = Matrix::Zero(params.rel_emb.rows(), params.rel_emb.cols());
  s.rel_proj = Matrix::Zero(params.rel_proj.rows(), params.rel_proj.cols());
  s.att_weight.reserve(params.att_weight.size());
  for (const Matrix& w : params.att_weight) s.att_weight.push_back(Matrix::Zero(w.rows(), w.cols()));
  s.att_bias = Matrix::Zero(params.att_bias.rows(), params.att_bias.cols());
  return s;
}

double EpochSummary::mean_loss() const {
  double sum = 0.0;
  std::int64_t n = 0;
  for (const auto& [rel, stats] : per_relation) {
    sum += stats.loss_sum;
    n += stats.count;
  }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

double EpochSummary::active_fraction() const {
  std::int64_t active = 0, n = 0;
  for (const auto& [rel, stats] : per_relation) {
    active += stats.active;
    n += stats.count;
  }
  return n > 0 ? static_cast<double>(active) / static_cast<double>(n) : 0.0;
}

namespace {

bool relation_enabled(const RelationDef& rel, Ablation ablation) {
  if (rel.is_interaction) return true;
  switch (ablation) {
    case Ablation::Full:
    case Ablation::NoAttention: return true;
    case Ablation::NoDirectedNoCo: return false;
    case Ablation::NoCo: return rel.directedness == Directedness::Directed;
    case Ablation::NoDirected: return rel.directedness == Directedness::Undirected;
  }
  return true;
}

/// Distance-like score used to pick the hardest corruption: smaller = harder
/// (for DistMult the negated similarity plays that role).
double corruption_score(const ModelParams& params, const TrainConfig& config, EntityId head,
                        EntityId tail, RelationId r, bool directed) {
  const bool att = config.attention_enabled();
  if (directed) return directed_distance(params, head, tail, r, att, config.model.rescale_attention);
  switch (config.model.undirected_scorer) {
    case UndirectedScorer::Hyperplane:
      return undirected_distance(params, head, tail, r, att, config.model.rescale_attention);
    case UndirectedScorer::DistMult: return -distmult_score(params, head, tail, r);
    case UndirectedScorer::DirectedPair: return transe_distance(params, head, tail, r);
  }
  throw ContractViolation("unknown undirected scorer");
}

PairGrad pair_gradient(const ModelParams& params, const TrainConfig& config, const Triplet& pos,
                       const Triplet& neg, bool directed, double margin) {
  const bool att = config.attention_enabled();
  if (directed)
    return directed_pair_grad(params, pos, neg, margin, att, config.model.rescale_attention);
  switch (config.model.undirected_scorer) {
    case UndirectedScorer::Hyperplane:
      return undirected_pair_grad(params, pos, neg, margin, att, config.model.rescale_attention);
    case UndirectedScorer::DistMult: return distmult_pair_grad(params, pos, neg);
    case UndirectedScorer::DirectedPair: return transe_pair_grad(params, pos, neg, margin);
  }
  throw ContractViolation("unknown undirected scorer");
}

Matrix& family_matrix(ModelParams& p, ParamFamily f) {
  switch (f) {
    case ParamFamily::EntityEmb: return p.entity_emb;
    case ParamFamily::EntityProj: return p.entity_proj;
    case ParamFamily::RelEmb: return p.rel_emb;
    case ParamFamily::RelProj: return p.rel_proj;
    case ParamFamily::AttBias: return p.att_bias;
    case ParamFamily::AttWeight: break;
  }
  throw ContractViolation("family_matrix: not a column family");
}

Matrix& family_matrix(AdaGradState& s, ParamFamily f) {
  switch (f) {
    case ParamFamily::EntityEmb: return s.entity_emb;
    case ParamFamily::EntityProj: return s.entity_proj;
    case ParamFamily::RelEmb: return s.rel_emb;
    case ParamFamily::RelProj: return s.rel_proj;
    case ParamFamily::AttBias: return s.att_bias;
    case ParamFamily::AttWeight: break;
  }
  throw ContractViolation("family_matrix: not a column family");
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const int workers = std::min<int>(threads, static_cast<int>(n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

void adagrad_apply(ModelParams& params, AdaGradState& state, const GradientSet& grads,
                   double learning_rate) {
  for (const auto& [key, g] : grads.vectors) {
    auto acc = family_matrix(state, key.family).col(key.index);
    auto theta = family_matrix(params, key.family).col(key.index);
    acc += g.cwiseProduct(g);
    theta -= learning_rate * g.cwiseQuotient((acc.array() + state.epsilon).sqrt().matrix());
  }
  for (const auto& [rel, g] : grads.att_weights) {
    Matrix& acc = state.att_weight.at(rel);
    acc += g.cwiseProduct(g);
    params.att_weight.at(rel) -=
        learning_rate * g.cwiseQuotient((acc.array() + state.epsilon).sqrt().matrix());
  }
}

Triplet sample_hard_negative(const Triplet& pos, const UnifiedGraph& graph,
                             const ModelParams& params, const TrainConfig& config,
                             std::mt19937_64& rng) {
  if (config.neg_pool < 1) throw ContractViolation("sample_hard_negative: N must be >= 1");
  const RelationDef& rel = graph.catalog().at(pos.relation);
  const bool directed = rel.directedness == Directedness::Directed;
  const auto& pool = graph.tail_candidates(pos.relation);
  if (pool.empty()) throw DataError("no corruption candidates for relation '" + rel.name + "'");

  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  const int max_draws = 10 * config.neg_pool;
  bool have_best = false;
  double best_score = 0.0;
  std::int32_t best_tail = -1;
  auto consider = [&](std::int32_t candidate) {
    if (!directed && candidate == pos.head.index) return false;  // would form a self-loop
    if (graph.contains(pos.head.index, candidate, pos.relation)) return false;
    const double score = corruption_score(params, config, pos.head,
                                          EntityId{candidate, rel.tail_kind}, pos.relation,
                                          directed);
    const bool better =
        !have_best ||
        (config.hardest_by_largest_distance
             ? (score > best_score || (score == best_score && candidate < best_tail))
             : (score < best_score || (score == best_score && candidate < best_tail)));
    if (better) {
      have_best = true;
      best_score = score;
      best_tail = candidate;
    }
    return true;
  };
  int accepted = 0;
  for (int draw = 0; draw < max_draws && accepted < config.neg_pool; ++draw)
    if (consider(pool[pick(rng)])) ++accepted;
  if (!have_best) {
    // Every draw rejected: scan the pool once so the error fires only when no
    // candidate exists at all.
    for (std::int32_t candidate : pool) consider(candidate);
  }
  if (!have_best)
    throw SamplingExhausted("sample_hard_negative: no valid corruption for head '" +
                            graph.vocab().name(pos.head.index) + "' under relation '" + rel.name +
                            "'");
  Triplet neg = pos;
  neg.tail = EntityId{best_tail, rel.tail_kind};
  neg.timestamp.reset();
  return neg;
}

EpochSummary train_epoch(const UnifiedGraph& graph, ModelParams& params, AdaGradState& state,
                         const TrainConfig& config) {
  const std::int64_t epoch_index = state.epochs_done;
  EpochSummary summary;

  // Enabled positives in deterministic base order, then a seeded shuffle.
  struct WorkItem {
    Triplet pos;
    bool directed;
    double margin;
    double lambda;
  };
  std::vector<WorkItem> work;
  for (const RelationDef& rel : graph.catalog().relations()) {
    if (!relation_enabled(rel, config.ablation)) continue;
    const bool directed = rel.directedness == Directedness::Directed;
    const double margin = rel.is_interaction ? config.margin_interaction : config.margin_other;
    const double lambda = directed ? config.lambda_d : config.lambda_c;
    if (static_cast<std::int64_t>(graph.tail_candidates(rel.id).size()) <
        2 * static_cast<std::int64_t>(config.neg_pool))
      summary.small_pool_relations.push_back(rel.name);
    for (const Triplet& t : graph.triplets_of(rel.id)) {
      if (!directed && config.model.undirected_scorer == UndirectedScorer::DirectedPair) {
        // CFKG-style: one co-occurrence edge trains as two oriented triplets.
        work.push_back(WorkItem{t, false, margin, lambda});
        Triplet reversed = t;
        std::swap(reversed.head, reversed.tail);
        work.push_back(WorkItem{reversed, false, margin, lambda});
      } else {
        work.push_back(WorkItem{t, directed, margin, lambda});
      }
    }
  }

  std::mt19937_64 epoch_rng(splitmix64(config.seed ^ splitmix64(0x5u + static_cast<std::uint64_t>(epoch_index))));
  std::shuffle(work.begin(), work.end(), epoch_rng);

  const int threads = config.deterministic ? 1 : std::max(1, config.threads);
  const std::size_t batch_size = config.batch_size > 0 ? static_cast<std::size_t>(config.batch_size)
                                                       : work.size();

  struct PairResult {
    PairGrad grad;
    RelationId relation = -1;
    double lambda = 1.0;
    Triplet pos;
    bool sampled = false;
  };

  std::vector<PairResult> results;
  for (std::size_t base = 0; base < work.size(); base += batch_size) {
    const std::size_t count = std::min(batch_size, work.size() - base);
    results.assign(count, PairResult{});
    // Updates land at batch end, so `params` is the batch-start snapshot and
    // gradient evaluation can run data-parallel. Results are accumulated in
    // index order, which keeps every thread count bit-identical.
    parallel_for(count, threads, [&](std::size_t i) {
      const WorkItem& item = work[base + i];
      std::mt19937_64 pair_rng(
          splitmix64(splitmix64(config.seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(epoch_index)) ^
                     static_cast<std::uint64_t>(base + i)));
      PairResult& slot = results[i];
      slot.relation = item.pos.relation;
      slot.lambda = item.lambda;
      slot.pos = item.pos;
      try {
        const Triplet neg = sample_hard_negative(item.pos, graph, params, config, pair_rng);
        slot.grad = pair_gradient(params, config, item.pos, neg, item.directed, item.margin);
        slot.sampled = true;
      } catch (const SamplingExhausted&) {
        slot.sampled = false;  // no negative exists for this positive; skip it
      }
    });

    GradientSet batch_grads;
    for (std::size_t i = 0; i < count; ++i) {
      const PairResult& r = results[i];
      if (!r.sampled) {
        ++summary.unsampleable_pairs;
        continue;
      }
      if (!std::isfinite(r.grad.loss)) {
        const EntityVocab& vocab = graph.vocab();
        throw NumericalError("train_epoch: non-finite loss at triplet <" +
                             vocab.name(r.pos.head.index) + ", " + vocab.name(r.pos.tail.index) +
                             ", " + graph.catalog().at(r.relation).name + ">");
      }
      RelationEpochStats& stats = summary.per_relation[r.relation];
      stats.loss_sum += r.grad.loss;
      stats.count += 1;
      if (!r.grad.grads.empty()) {
        stats.active += 1;
        batch_grads.accumulate(r.grad.grads, r.lambda);
      }
    }
    summary.pairs += static_cast<std::int64_t>(count);

    adagrad_apply(params, state, batch_grads, config.learning_rate);

    // Constraint projection for touched embedding columns (never the
    // attention parameters), plus the degenerate-normal floor for relations
    // scored on hyperplanes.
    const double bound = 1.0 / std::sqrt(static_cast<double>(params.k));
    std::uniform_real_distribution<double> unif(-bound, bound);
    for (const auto& [key, g] : batch_grads.vectors) {
      if (key.family == ParamFamily::AttBias) continue;
      auto col = family_matrix(params, key.family).col(key.index);
      col = project_unit_ball(col);
      if (key.family == ParamFamily::RelEmb &&
          params.relations[key.index].directedness == Directedness::Undirected &&
          config.model.undirected_scorer == UndirectedScorer::Hyperplane &&
          col.norm() < 1e-6) {
        for (int i = 0; i < params.k; ++i) col(i) = unif(epoch_rng);
        col = project_unit_ball(col);
      }
    }
  }

  state.epochs_done = epoch_index + 1;
  return summary;
}

FitResult fit(const DataSplit& split, const TrainConfig& config, const FitObserver& observer) {
  FitResult result;
  ModelParams params = init_params(split.train, config.model, config.seed);
  AdaGradState state = AdaGradState::like(params);
  result.best_params = params;
  result.final_params = params;
  if (config.epochs <= 0) return result;

  const bool attention = config.attention_enabled();
  int evals_without_improvement = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const EpochSummary summary = train_epoch(split.train, params, state, config);
    if (config.eval_every <= 0 || epoch % config.eval_every != 0) continue;

    const HeldOutMetrics metrics =
        heldout_metrics(split.train, split.validation, params, config.eval_k, attention,
                        config.model.rescale_attention, /*extra_exclude=*/nullptr);
    EvalRecord record;
    record.epoch = epoch;
    record.val_hr = metrics.hr;
    record.val_ndcg = metrics.ndcg;
    record.active_fraction = summary.active_fraction();
    for (const auto& [rel, stats] : summary.per_relation) record.mean_loss[rel] = stats.mean_loss();
    result.history.push_back(record);
    if (observer) observer(record);

    if (record.val_hr > result.best_hr) {
      result.best_hr = record.val_hr;
      result.best_epoch = epoch;
      result.best_params = params;
      evals_without_improvement = 0;
    } else if (config.patience > 0 && ++evals_without_improvement >= config.patience) {
      break;
    }
  }
  result.final_params = std::move(params);
  if (result.best_epoch == 0) result.best_params = result.final_params;
  return result;
}

UnifiedGraph subsample_cooccurrence(const UnifiedGraph& graph, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0))
    throw ContractViolation("subsample_cooccurrence: ratio must be in [0, 1]");
  if (ratio == 1.0) return graph;

  std::vector<Triplet> undirected;
  std::vector<Triplet> kept;
  for (const RelationDef& rel : graph.catalog().relations()) {
    const auto& list = graph.triplets_of(rel.id);
    if (rel.directedness == Directedness::Undirected)
      undirected.insert(undirected.end(), list.begin(), list.end());
    else
      kept.insert(kept.end(), list.begin(), list.end());
  }
  std::mt19937_64 rng(splitmix64(seed ^ 0xC0C0C0C0ull));
  std::shuffle(undirected.begin(), undirected.end(), rng);
  const auto keep = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(undirected.size())));
  kept.insert(kept.end(), undirected.begin(), undirected.begin() + static_cast<std::ptrdiff_t>(keep));
  return UnifiedGraph(graph.catalog(), graph.vocab(), kept);
}

}  // namespace ugrec
