#include "ugrec/types.hpp"

namespace ugrec {

const char* to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::User: return "user";
    case EntityKind::Item: return "item";
    case EntityKind::Attribute: return "attribute";
  }
  return "?";
}

const char* to_string(Directedness d) {
  return d == Directedness::Directed ? "directed" : "undirected";
}

std::optional<EntityKind> parse_entity_kind(const std::string& token) {
  if (token == "user") return EntityKind::User;
  if (token == "item") return EntityKind::Item;
  if (token == "attribute") return EntityKind::Attribute;
  return std::nullopt;
}

std::optional<Directedness> parse_directedness(const std::string& token) {
  if (token == "directed") return Directedness::Directed;
  if (token == "undirected") return Directedness::Undirected;
  return std::nullopt;
}

}  // namespace ugrec
