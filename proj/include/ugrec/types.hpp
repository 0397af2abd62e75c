#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>

namespace ugrec {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class EntityKind : std::uint8_t { User = 0, Item = 1, Attribute = 2 };

enum class Directedness : std::uint8_t { Directed = 0, Undirected = 1 };

using RelationId = std::int32_t;

/// Dense-compacted entity handle. Indices are contiguous from 0 over the
/// whole vocabulary (users, items and attributes share one index space).
struct EntityId {
  std::int32_t index = -1;
  EntityKind kind = EntityKind::User;

  friend bool operator==(const EntityId&, const EntityId&) = default;
};

struct RelationDef {
  RelationId id = -1;
  std::string name;
  Directedness directedness = Directedness::Directed;
  EntityKind head_kind = EntityKind::User;
  EntityKind tail_kind = EntityKind::Item;
  bool is_interaction = false;
};

/// (head, tail, relation) with an optional timestamp. Interaction triplets
/// carry a timestamp; everything else does not. Undirected triplets are
/// stored canonically with head.index <= tail.index.
struct Triplet {
  EntityId head;
  EntityId tail;
  RelationId relation = -1;
  std::optional<std::int64_t> timestamp;
};

const char* to_string(EntityKind kind);
const char* to_string(Directedness d);
std::optional<EntityKind> parse_entity_kind(const std::string& token);
std::optional<Directedness> parse_directedness(const std::string& token);

}  // namespace ugrec
