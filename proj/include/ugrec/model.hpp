#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ugrec/graph.hpp"
#include "ugrec/types.hpp"

namespace ugrec {

enum class UndirectedScorer : std::uint8_t {
  Hyperplane = 0,    // project onto the relation hyperplane, squared distance
  DistMult = 1,      // t^T diag(r) h similarity
  DirectedPair = 2,  // each co-occurrence trained as two plain translations
};

struct ModelConfig {
  int k = 64;
  bool use_attention = true;
  UndirectedScorer undirected_scorer = UndirectedScorer::Hyperplane;
  /// Compensates the ~1/k shrink of r (.) Att by multiplying the attended
  /// translation by k. Off by default; the literal formula is the default.
  bool rescale_attention = false;
  /// One attention network for every relation instead of one per relation.
  bool shared_attention = false;
};

struct RelationMeta {
  Directedness directedness = Directedness::Directed;
  bool is_interaction = false;
};

/// All learnable tensors, column-per-entity / column-per-relation.
/// rel_proj rows exist for every relation; undirected relations simply never
/// read theirs. Attention parameters are per relation and not norm-constrained.
struct ModelParams {
  int k = 0;
  Matrix entity_emb;   // k x n_entities
  Matrix entity_proj;  // k x n_entities
  Matrix rel_emb;      // k x n_relations
  Matrix rel_proj;     // k x n_relations
  std::vector<Matrix> att_weight;  // per relation, k x 2k
  Matrix att_bias;                 // k x n_relations
  std::vector<RelationMeta> relations;
  std::uint64_t catalog_hash = 0;
  bool shared_attention = false;  // every relation reads attention slot 0

  std::int32_t n_entities() const { return static_cast<std::int32_t>(entity_emb.cols()); }
  std::int32_t n_relations() const { return static_cast<std::int32_t>(rel_emb.cols()); }
  bool is_directed(RelationId r) const {
    return relations.at(r).directedness == Directedness::Directed;
  }
  RelationId attention_slot(RelationId r) const { return shared_attention ? 0 : r; }
};

/// Embeddings and projection vectors uniform on [-1/sqrt(k), 1/sqrt(k)] then
/// unit-ball projected; attention weights the same range scaled by
/// 1/sqrt(2k); attention biases zero. Deterministic per seed.
ModelParams init_params(const UnifiedGraph& graph, const ModelConfig& config, std::uint64_t seed);

/// Attention gate for relation r given already-chosen left/right inputs
/// (projected vectors for directed triplets, raw embeddings for undirected).
Vector attention_for(const ModelParams& params, RelationId r, const Vector& left,
                     const Vector& right);

/// ||h_r + r~ - t_r||^2 in the relation space (TransD projections); r~ is the
/// raw relation vector or the attended one.
double directed_distance(const ModelParams& params, EntityId h, EntityId t, RelationId r,
                         bool use_attention, bool rescale_attention = false);

/// Squared head-tail distance on the relation hyperplane; exactly symmetric
/// in (h, t) via canonical lower-index-first evaluation.
double undirected_distance(const ModelParams& params, EntityId h, EntityId t, RelationId r,
                           bool use_attention, bool rescale_attention = false);

/// DistMult similarity (higher = more related); symmetric in (h, t).
double distmult_score(const ModelParams& params, EntityId h, EntityId t, RelationId r);

/// Plain translation distance ||h + r - t||^2 on raw embeddings. Used when
/// co-occurrence triplets are modeled as pairs of directed triplets.
double transe_distance(const ModelParams& params, EntityId h, EntityId t, RelationId r);

// ---------------------------------------------------------------------------
// Checkpoint container. Little-endian, 64-bit floats. Layout:
//   bytes 0..7    magic "UGRECCP1"
//   u32 version (1), u32 k
//   u64 n_entities, u64 n_relations, u64 catalog_hash
//   u32 flags (bit0 use_attention, bit1 rescale_attention,
//              bits 2-3 undirected_scorer, bit4 shared_attention), u32 reserved
//   per relation: u8 directedness, u8 is_interaction
//   f64 tensors: entity_emb, entity_proj (entity-major, k doubles each),
//                rel_emb, rel_proj (relation-major),
//                att_weight (per relation, row-major k x 2k), att_bias.

struct Checkpoint {
  ModelParams params;
  ModelConfig config;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ugrec
