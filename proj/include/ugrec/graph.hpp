#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ugrec/error.hpp"
#include "ugrec/types.hpp"

namespace ugrec {

/// Entity vocabulary with dense contiguous indices. Attribute entities are
/// namespaced by their owning relation, so the same raw token used under two
/// attribute relations yields two distinct entities. Users and items are
/// keyed by kind + raw token.
class EntityVocab {
 public:
  std::int32_t add_or_get(EntityKind kind, const std::string& name,
                          RelationId attr_namespace = -1);
  std::optional<std::int32_t> find(EntityKind kind, const std::string& name,
                                   RelationId attr_namespace = -1) const;

  std::int32_t size() const { return static_cast<std::int32_t>(names_.size()); }
  const std::string& name(std::int32_t index) const { return names_.at(index); }
  EntityKind kind(std::int32_t index) const { return kinds_.at(index); }
  RelationId attribute_namespace(std::int32_t index) const { return attr_ns_.at(index); }
  const std::vector<std::int32_t>& of_kind(EntityKind kind) const;
  std::int32_t count(EntityKind kind) const;
  EntityId id(std::int32_t index) const { return EntityId{index, kind(index)}; }

 private:
  static std::string key(EntityKind kind, const std::string& name, RelationId attr_ns);

  std::vector<std::string> names_;
  std::vector<EntityKind> kinds_;
  std::vector<RelationId> attr_ns_;
  std::unordered_map<std::string, std::int32_t> lookup_;
  std::vector<std::int32_t> by_kind_[3];
};

/// Relation catalog: exactly one interaction relation (directed, user->item);
/// undirected relations connect items to items only.
class RelationCatalog {
 public:
  RelationCatalog() = default;
  explicit RelationCatalog(std::vector<RelationDef> defs);

  static RelationCatalog parse(std::istream& source);
  std::string serialize() const;

  std::int32_t size() const { return static_cast<std::int32_t>(defs_.size()); }
  const RelationDef& at(RelationId id) const;
  std::optional<RelationId> find(const std::string& name) const;
  RelationId interaction() const { return interaction_; }
  const std::vector<RelationDef>& relations() const { return defs_; }
  bool is_directed(RelationId id) const {
    return at(id).directedness == Directedness::Directed;
  }

 private:
  std::vector<RelationDef> defs_;
  std::unordered_map<std::string, RelationId> by_name_;
  RelationId interaction_ = -1;
};

struct Interaction {
  std::int32_t item = -1;
  std::int64_t timestamp = 0;
};

/// Parses tab-separated triplet lines `head tail relation [timestamp]`.
/// `#` lines and blank lines are ignored. Interaction lines must carry a
/// timestamp; other lines must not. With extend_vocab the vocabulary grows on
/// first sight (kinds taken from the relation's declared head/tail kinds);
/// otherwise unknown entities are a data error.
std::vector<Triplet> parse_triplet_file(std::istream& source, const RelationCatalog& catalog,
                                        EntityVocab& vocab, bool extend_vocab = true);

/// Immutable unified graph over one vocabulary and relation catalog.
/// Construction canonicalizes undirected triplets, deduplicates exact
/// duplicates, keeps the latest timestamp for duplicated (user, item)
/// interactions, and builds the per-user interaction lists sorted by
/// (timestamp, item index).
class UnifiedGraph {
 public:
  UnifiedGraph() = default;
  UnifiedGraph(RelationCatalog catalog, EntityVocab vocab, const std::vector<Triplet>& triplets);

  const RelationCatalog& catalog() const { return catalog_; }
  const EntityVocab& vocab() const { return vocab_; }

  const std::vector<Triplet>& triplets_of(RelationId id) const { return rel_triplets_.at(id); }
  std::int64_t triplet_count() const;
  std::int64_t interaction_count() const;
  std::int64_t undirected_count() const;

  /// Sorted interaction list of a user entity (empty for non-users).
  const std::vector<Interaction>& interactions_of(std::int32_t user_index) const;

  /// Membership; symmetric for undirected relations.
  bool contains(std::int32_t head, std::int32_t tail, RelationId relation) const;

  /// Corruption pool for the tail slot of a relation: entities of the tail's
  /// kind, restricted to the relation's own namespace for attribute tails.
  const std::vector<std::int32_t>& tail_candidates(RelationId relation) const;

  /// Hash binding vocabulary + catalog; checkpoints store it so a model is
  /// never evaluated against a re-indexed dataset.
  std::uint64_t signature() const { return signature_; }

  /// All triplets in the standard file format (raw token names).
  std::string serialize_triplets() const;

  std::vector<Triplet> all_triplets() const;

 private:
  RelationCatalog catalog_;
  EntityVocab vocab_;
  std::vector<std::vector<Triplet>> rel_triplets_;
  std::vector<std::vector<Interaction>> user_interactions_;
  std::vector<std::unordered_set<std::uint64_t>> membership_;
  std::vector<std::vector<std::int32_t>> tail_pools_;
  std::uint64_t signature_ = 0;
};

/// Iteratively removes users/items with fewer than `threshold` interactions
/// until a fixed point, drops knowledge/co-occurrence triplets referencing
/// removed items, and recompacts the vocabulary (first-sight order kept).
UnifiedGraph filter_min_interactions(const UnifiedGraph& graph, int threshold);

struct HeldOut {
  std::int32_t item = -1;
  std::int64_t timestamp = 0;
};

struct DataSplit {
  UnifiedGraph train;
  std::map<std::int32_t, HeldOut> validation;  // user index -> held-out item
  std::map<std::int32_t, HeldOut> test;
};

/// Leave-one-out: per user, latest interaction -> test, second latest ->
/// validation, rest -> train. Timestamp ties break toward the larger item
/// index. Non-interaction triplets all stay in train.
DataSplit leave_one_out_split(const UnifiedGraph& graph);

/// Table-style corpus statistics (entity counts, per-relation triplet counts,
/// sparsity = 1 - interactions / (users * items)).
std::string dataset_statistics(const UnifiedGraph& graph);

/// Prepared-dataset directory: catalog.tsv, entities.tsv, train.tsv,
/// valid.tsv, test.tsv, stats.txt. Loading restores the exact vocabulary, so
/// entity indices are stable across processes.
void save_prepared(const DataSplit& split, const std::filesystem::path& dir);
DataSplit load_prepared(const std::filesystem::path& dir);

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 14695981039346656037ull);

}  // namespace ugrec
