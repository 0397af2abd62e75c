#include "ugrec/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace ugrec {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::int64_t parse_int(const std::string& token, std::size_t line_no, const char* what) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError(line_no, std::string("invalid ") + what + " '" + token + "'");
  return value;
}

std::uint64_t pair_key(std::int32_t a, std::int32_t b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t len) {
  h = fnv1a64(data, len, h);
}

void hash_string(std::uint64_t& h, const std::string& s) {
  hash_bytes(h, s.data(), s.size());
  const char sep = 0x1f;
  hash_bytes(h, &sep, 1);
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// EntityVocab

std::string EntityVocab::key(EntityKind kind, const std::string& name, RelationId attr_ns) {
  std::string k;
  k.push_back(static_cast<char>('0' + static_cast<int>(kind)));
  k.push_back('\x1f');
  if (kind == EntityKind::Attribute) {
    k += std::to_string(attr_ns);
    k.push_back('\x1f');
  }
  k += name;
  return k;
}

std::int32_t EntityVocab::add_or_get(EntityKind kind, const std::string& name,
                                     RelationId attr_namespace) {
  const RelationId ns = kind == EntityKind::Attribute ? attr_namespace : -1;
  auto [it, inserted] = lookup_.try_emplace(key(kind, name, ns), size());
  if (inserted) {
    names_.push_back(name);
    kinds_.push_back(kind);
    attr_ns_.push_back(ns);
    by_kind_[static_cast<int>(kind)].push_back(it->second);
  }
  return it->second;
}

std::optional<std::int32_t> EntityVocab::find(EntityKind kind, const std::string& name,
                                              RelationId attr_namespace) const {
  const RelationId ns = kind == EntityKind::Attribute ? attr_namespace : -1;
  auto it = lookup_.find(key(kind, name, ns));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::int32_t>& EntityVocab::of_kind(EntityKind kind) const {
  return by_kind_[static_cast<int>(kind)];
}

std::int32_t EntityVocab::count(EntityKind kind) const {
  return static_cast<std::int32_t>(of_kind(kind).size());
}

// ---------------------------------------------------------------------------
// RelationCatalog

RelationCatalog::RelationCatalog(std::vector<RelationDef> defs) : defs_(std::move(defs)) {
  for (std::size_t i = 0; i < defs_.size(); ++i) {
    RelationDef& def = defs_[i];
    def.id = static_cast<RelationId>(i);
    if (!by_name_.try_emplace(def.name, def.id).second)
      throw DataError("duplicate relation name '" + def.name + "'");
    if (def.directedness == Directedness::Undirected) {
      if (def.head_kind != EntityKind::Item || def.tail_kind != EntityKind::Item)
        throw DataError("undirected relation '" + def.name + "' must connect items to items");
      if (def.is_interaction)
        throw DataError("interaction relation '" + def.name + "' must be directed");
    }
    if (def.is_interaction) {
      if (interaction_ != -1)
        throw DataError("catalog declares more than one interaction relation");
      if (def.head_kind != EntityKind::User || def.tail_kind != EntityKind::Item)
        throw DataError("interaction relation '" + def.name + "' must be user -> item");
      interaction_ = def.id;
    }
  }
  if (interaction_ == -1) throw DataError("catalog declares no interaction relation");
}

RelationCatalog RelationCatalog::parse(std::istream& source) {
  std::vector<RelationDef> defs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 5)
      throw ParseError(line_no, "catalog line needs 5 tab-separated fields, got " +
                                    std::to_string(fields.size()));
    RelationDef def;
    def.name = fields[0];
    auto dir = parse_directedness(fields[1]);
    if (!dir) throw ParseError(line_no, "unknown directedness '" + fields[1] + "'");
    def.directedness = *dir;
    auto hk = parse_entity_kind(fields[2]);
    auto tk = parse_entity_kind(fields[3]);
    if (!hk || !tk) throw ParseError(line_no, "unknown entity kind");
    def.head_kind = *hk;
    def.tail_kind = *tk;
    if (fields[4] == "1" || fields[4] == "true")
      def.is_interaction = true;
    else if (fields[4] == "0" || fields[4] == "false")
      def.is_interaction = false;
    else
      throw ParseError(line_no, "is_interaction must be 0/1/true/false");
    defs.push_back(std::move(def));
  }
  return RelationCatalog(std::move(defs));
}

std::string RelationCatalog::serialize() const {
  std::ostringstream out;
  for (const RelationDef& def : defs_) {
    out << def.name << '\t' << to_string(def.directedness) << '\t' << to_string(def.head_kind)
        << '\t' << to_string(def.tail_kind) << '\t' << (def.is_interaction ? 1 : 0) << '\n';
  }
  return out.str();
}

const RelationDef& RelationCatalog::at(RelationId id) const {
  if (id < 0 || id >= size()) throw ContractViolation("relation id out of range");
  return defs_[id];
}

std::optional<RelationId> RelationCatalog::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Parsing

std::vector<Triplet> parse_triplet_file(std::istream& source, const RelationCatalog& catalog,
                                        EntityVocab& vocab, bool extend_vocab) {
  std::vector<Triplet> out;
  std::vector<std::unordered_set<std::uint64_t>> seen_undirected(catalog.size());
  std::string line;
  std::size_t line_no = 0;

  auto resolve = [&](EntityKind kind, const std::string& name, RelationId attr_ns) {
    if (extend_vocab) return vocab.add_or_get(kind, name, attr_ns);
    auto idx = vocab.find(kind, name, attr_ns);
    if (!idx)
      throw ParseError(line_no, std::string("unknown ") + to_string(kind) + " '" + name + "'");
    return *idx;
  };

  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3 && fields.size() != 4)
      throw ParseError(line_no, "expected 3 or 4 tab-separated fields, got " +
                                    std::to_string(fields.size()));

    auto rel_id = catalog.find(fields[2]);
    if (!rel_id) throw ParseError(line_no, "unknown relation '" + fields[2] + "'");
    const RelationDef& rel = catalog.at(*rel_id);

    if (rel.is_interaction && fields.size() != 4)
      throw ParseError(line_no, "interaction triplet requires a timestamp");
    if (!rel.is_interaction && fields.size() == 4)
      throw ParseError(line_no, "timestamp only allowed on interaction triplets");

    Triplet t;
    t.relation = rel.id;
    const RelationId head_ns = rel.head_kind == EntityKind::Attribute ? rel.id : -1;
    const RelationId tail_ns = rel.tail_kind == EntityKind::Attribute ? rel.id : -1;
    t.head = EntityId{resolve(rel.head_kind, fields[0], head_ns), rel.head_kind};
    t.tail = EntityId{resolve(rel.tail_kind, fields[1], tail_ns), rel.tail_kind};
    if (fields.size() == 4) t.timestamp = parse_int(fields[3], line_no, "timestamp");

    if (rel.directedness == Directedness::Undirected) {
      if (t.head.index == t.tail.index)
        throw ParseError(line_no, "undirected self-loop '" + fields[0] + "' under relation '" +
                                      rel.name + "'");
      if (t.head.index > t.tail.index) std::swap(t.head, t.tail);
      if (!seen_undirected[rel.id].insert(pair_key(t.head.index, t.tail.index)).second)
        continue;  // <h,t,r> and <t,h,r> collapse to one record
    }
    out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// UnifiedGraph

UnifiedGraph::UnifiedGraph(RelationCatalog catalog, EntityVocab vocab,
                           const std::vector<Triplet>& triplets)
    : catalog_(std::move(catalog)), vocab_(std::move(vocab)) {
  const std::int32_t n_rel = catalog_.size();
  rel_triplets_.resize(n_rel);
  membership_.resize(n_rel);
  tail_pools_.resize(n_rel);

  // Latest timestamp wins for duplicated (user, item) interactions.
  std::unordered_map<std::uint64_t, std::size_t> interaction_slot;
  const RelationId inter = catalog_.interaction();

  for (Triplet t : triplets) {
    if (t.relation < 0 || t.relation >= n_rel)
      throw DataError("triplet references unknown relation id");
    const RelationDef& rel = catalog_.at(t.relation);
    if (t.head.index < 0 || t.head.index >= vocab_.size() || t.tail.index < 0 ||
        t.tail.index >= vocab_.size())
      throw DataError("triplet references out-of-vocabulary entity");
    if (vocab_.kind(t.head.index) != rel.head_kind || vocab_.kind(t.tail.index) != rel.tail_kind)
      throw DataError("triplet entity kind does not match relation '" + rel.name + "'");
    t.head.kind = rel.head_kind;
    t.tail.kind = rel.tail_kind;

    if (rel.directedness == Directedness::Undirected) {
      if (t.head.index == t.tail.index)
        throw DataError("undirected self-loop under relation '" + rel.name + "'");
      if (t.head.index > t.tail.index) std::swap(t.head, t.tail);
    }
    const std::uint64_t key = pair_key(t.head.index, t.tail.index);
    if (t.relation == inter) {
      auto [it, inserted] = interaction_slot.try_emplace(key, rel_triplets_[inter].size());
      if (inserted) {
        rel_triplets_[inter].push_back(t);
        membership_[inter].insert(key);
      } else {
        Triplet& prev = rel_triplets_[inter][it->second];
        if (t.timestamp.value_or(0) > prev.timestamp.value_or(0)) prev = t;
      }
    } else {
      if (membership_[t.relation].insert(key).second) rel_triplets_[t.relation].push_back(t);
    }
  }

  user_interactions_.resize(vocab_.size());
  for (const Triplet& t : rel_triplets_[inter])
    user_interactions_[t.head.index].push_back(Interaction{t.tail.index, t.timestamp.value_or(0)});
  for (auto& list : user_interactions_)
    std::sort(list.begin(), list.end(), [](const Interaction& a, const Interaction& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.item < b.item;
    });

  for (RelationId r = 0; r < n_rel; ++r) {
    const RelationDef& rel = catalog_.at(r);
    if (rel.tail_kind == EntityKind::Attribute) {
      for (std::int32_t e : vocab_.of_kind(EntityKind::Attribute))
        if (vocab_.attribute_namespace(e) == r) tail_pools_[r].push_back(e);
    } else {
      tail_pools_[r] = vocab_.of_kind(rel.tail_kind);
    }
  }

  std::uint64_t h = fnv1a64("ugrec-graph", 11);
  for (std::int32_t e = 0; e < vocab_.size(); ++e) {
    const char kind = static_cast<char>(vocab_.kind(e));
    hash_bytes(h, &kind, 1);
    const RelationId ns = vocab_.attribute_namespace(e);
    hash_bytes(h, &ns, sizeof(ns));
    hash_string(h, vocab_.name(e));
  }
  for (const RelationDef& def : catalog_.relations()) {
    hash_string(h, def.name);
    const char meta[4] = {static_cast<char>(def.directedness), static_cast<char>(def.head_kind),
                          static_cast<char>(def.tail_kind), def.is_interaction ? char(1) : char(0)};
    hash_bytes(h, meta, sizeof(meta));
  }
  signature_ = h;
}

std::int64_t UnifiedGraph::triplet_count() const {
  std::int64_t n = 0;
  for (const auto& list : rel_triplets_) n += static_cast<std::int64_t>(list.size());
  return n;
}

std::int64_t UnifiedGraph::interaction_count() const {
  return static_cast<std::int64_t>(rel_triplets_.at(catalog_.interaction()).size());
}

std::int64_t UnifiedGraph::undirected_count() const {
  std::int64_t n = 0;
  for (const RelationDef& def : catalog_.relations())
    if (def.directedness == Directedness::Undirected)
      n += static_cast<std::int64_t>(rel_triplets_[def.id].size());
  return n;
}

const std::vector<Interaction>& UnifiedGraph::interactions_of(std::int32_t user_index) const {
  return user_interactions_.at(user_index);
}

bool UnifiedGraph::contains(std::int32_t head, std::int32_t tail, RelationId relation) const {
  const RelationDef& rel = catalog_.at(relation);
  if (rel.directedness == Directedness::Undirected && head > tail) std::swap(head, tail);
  return membership_.at(relation).contains(pair_key(head, tail));
}

const std::vector<std::int32_t>& UnifiedGraph::tail_candidates(RelationId relation) const {
  return tail_pools_.at(relation);
}

std::string UnifiedGraph::serialize_triplets() const {
  std::ostringstream out;
  for (const auto& list : rel_triplets_) {
    for (const Triplet& t : list) {
      out << vocab_.name(t.head.index) << '\t' << vocab_.name(t.tail.index) << '\t'
          << catalog_.at(t.relation).name;
      if (t.timestamp) out << '\t' << *t.timestamp;
      out << '\n';
    }
  }
  return out.str();
}

std::vector<Triplet> UnifiedGraph::all_triplets() const {
  std::vector<Triplet> out;
  out.reserve(static_cast<std::size_t>(triplet_count()));
  for (const auto& list : rel_triplets_) out.insert(out.end(), list.begin(), list.end());
  return out;
}

// ---------------------------------------------------------------------------
// Filtering

UnifiedGraph filter_min_interactions(const UnifiedGraph& graph, int threshold) {
  if (threshold < 1) throw ContractViolation("filter_min_interactions: threshold must be >= 1");
  const EntityVocab& vocab = graph.vocab();
  const RelationId inter = graph.catalog().interaction();

  // k-core peel on the user-item interaction bipartite graph.
  std::vector<std::int64_t> degree(vocab.size(), 0);
  std::vector<bool> removed(vocab.size(), false);
  const auto& interactions = graph.triplets_of(inter);
  for (const Triplet& t : interactions) {
    ++degree[t.head.index];
    ++degree[t.tail.index];
  }
  std::vector<std::vector<std::int32_t>> adjacency(vocab.size());
  for (const Triplet& t : interactions) {
    adjacency[t.head.index].push_back(t.tail.index);
    adjacency[t.tail.index].push_back(t.head.index);
  }
  std::vector<std::int32_t> queue;
  auto is_endpoint = [&](std::int32_t e) {
    EntityKind k = vocab.kind(e);
    return k == EntityKind::User || k == EntityKind::Item;
  };
  for (std::int32_t e = 0; e < vocab.size(); ++e)
    if (is_endpoint(e) && degree[e] < threshold && !adjacency[e].empty()) queue.push_back(e);
  // Users/items with zero interactions drop out via the vocabulary rebuild.
  for (std::int32_t e = 0; e < vocab.size(); ++e)
    if (is_endpoint(e) && degree[e] < threshold) removed[e] = true;
  while (!queue.empty()) {
    const std::int32_t e = queue.back();
    queue.pop_back();
    for (std::int32_t other : adjacency[e]) {
      if (removed[other]) continue;
      if (--degree[other] < threshold) {
        removed[other] = true;
        queue.push_back(other);
      }
    }
  }

  auto triplet_survives = [&](const Triplet& t) {
    return !removed[t.head.index] && !removed[t.tail.index];
  };

  std::vector<Triplet> survivors;
  for (const Triplet& t : graph.all_triplets())
    if (triplet_survives(t)) survivors.push_back(t);

  std::int64_t remaining_interactions = 0;
  for (const Triplet& t : survivors)
    if (t.relation == inter) ++remaining_interactions;
  if (remaining_interactions == 0)
    throw DataError("filter_min_interactions: no interactions left (threshold " +
                    std::to_string(threshold) + " is over-aggressive)");

  // Recompact: surviving entities keep their relative (first-sight) order.
  std::vector<bool> referenced(vocab.size(), false);
  for (const Triplet& t : survivors) {
    referenced[t.head.index] = true;
    referenced[t.tail.index] = true;
  }
  std::vector<std::int32_t> remap(vocab.size(), -1);
  EntityVocab new_vocab;
  for (std::int32_t e = 0; e < vocab.size(); ++e) {
    if (!referenced[e]) continue;
    remap[e] = new_vocab.add_or_get(vocab.kind(e), vocab.name(e), vocab.attribute_namespace(e));
  }
  for (Triplet& t : survivors) {
    t.head.index = remap[t.head.index];
    t.tail.index = remap[t.tail.index];
  }
  return UnifiedGraph(graph.catalog(), std::move(new_vocab), survivors);
}

// ---------------------------------------------------------------------------
// Leave-one-out split

DataSplit leave_one_out_split(const UnifiedGraph& graph) {
  const EntityVocab& vocab = graph.vocab();
  const RelationId inter = graph.catalog().interaction();

  DataSplit split;
  std::vector<Triplet> train_triplets;
  for (const RelationDef& def : graph.catalog().relations()) {
    if (def.id == inter) continue;
    const auto& list = graph.triplets_of(def.id);
    train_triplets.insert(train_triplets.end(), list.begin(), list.end());
  }

  for (std::int32_t user : vocab.of_kind(EntityKind::User)) {
    const auto& list = graph.interactions_of(user);
    if (list.size() < 3)
      throw DataError("leave_one_out_split: user '" + vocab.name(user) + "' has " +
                      std::to_string(list.size()) + " interactions (need >= 3)");
    const Interaction& test = list[list.size() - 1];
    const Interaction& valid = list[list.size() - 2];
    split.test[user] = HeldOut{test.item, test.timestamp};
    split.validation[user] = HeldOut{valid.item, valid.timestamp};
    for (std::size_t i = 0; i + 2 < list.size(); ++i) {
      Triplet t;
      t.relation = inter;
      t.head = vocab.id(user);
      t.tail = vocab.id(list[i].item);
      t.timestamp = list[i].timestamp;
      train_triplets.push_back(t);
    }
  }

  split.train = UnifiedGraph(graph.catalog(), vocab, train_triplets);
  return split;
}

// ---------------------------------------------------------------------------
// Statistics and prepared-directory IO

std::string dataset_statistics(const UnifiedGraph& graph) {
  const EntityVocab& vocab = graph.vocab();
  const std::int64_t users = vocab.count(EntityKind::User);
  const std::int64_t items = vocab.count(EntityKind::Item);
  const std::int64_t inter = graph.interaction_count();
  std::ostringstream out;
  out << "users\t" << users << '\n';
  out << "items\t" << items << '\n';
  out << "attributes\t" << vocab.count(EntityKind::Attribute) << '\n';
  out << "interactions\t" << inter << '\n';
  double sparsity = users > 0 && items > 0
                        ? 1.0 - static_cast<double>(inter) / (static_cast<double>(users) * items)
                        : 1.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", sparsity);
  out << "sparsity\t" << buf << '\n';
  for (const RelationDef& def : graph.catalog().relations())
    out << "relation\t" << def.name << '\t' << graph.triplets_of(def.id).size() << '\n';
  out << "total_triplets\t" << graph.triplet_count() << '\n';
  return out.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

std::string heldout_lines(const UnifiedGraph& train, const std::map<std::int32_t, HeldOut>& map) {
  const EntityVocab& vocab = train.vocab();
  const std::string& rel = train.catalog().at(train.catalog().interaction()).name;
  std::ostringstream out;
  for (const auto& [user, held] : map)
    out << vocab.name(user) << '\t' << vocab.name(held.item) << '\t' << rel << '\t'
        << held.timestamp << '\n';
  return out.str();
}

std::string entity_lines(const EntityVocab& vocab, const RelationCatalog& catalog) {
  std::ostringstream out;
  for (std::int32_t e = 0; e < vocab.size(); ++e) {
    const RelationId ns = vocab.attribute_namespace(e);
    out << e << '\t' << to_string(vocab.kind(e)) << '\t' << vocab.name(e) << '\t'
        << (ns >= 0 ? catalog.at(ns).name : std::string("-")) << '\n';
  }
  return out.str();
}

}  // namespace

void save_prepared(const DataSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const UnifiedGraph& train = split.train;
  write_file(dir / "catalog.tsv", train.catalog().serialize());
  write_file(dir / "entities.tsv", entity_lines(train.vocab(), train.catalog()));
  write_file(dir / "train.tsv", train.serialize_triplets());
  write_file(dir / "valid.tsv", heldout_lines(train, split.validation));
  write_file(dir / "test.tsv", heldout_lines(train, split.test));
  write_file(dir / "stats.txt", dataset_statistics(train));
}

DataSplit load_prepared(const std::filesystem::path& dir) {
  auto open = [&](const char* name) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw DataError("cannot open " + (dir / name).string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };

  std::istringstream catalog_in(open("catalog.tsv"));
  RelationCatalog catalog = RelationCatalog::parse(catalog_in);

  EntityVocab vocab;
  {
    std::istringstream in(open("entities.tsv"));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      auto fields = split_tabs(line);
      if (fields.size() != 4) throw ParseError(line_no, "entities.tsv line needs 4 fields");
      auto kind = parse_entity_kind(fields[1]);
      if (!kind) throw ParseError(line_no, "unknown entity kind '" + fields[1] + "'");
      RelationId ns = -1;
      if (fields[3] != "-") {
        auto rel = catalog.find(fields[3]);
        if (!rel) throw ParseError(line_no, "unknown namespace relation '" + fields[3] + "'");
        ns = *rel;
      }
      const std::int32_t idx = vocab.add_or_get(*kind, fields[2], ns);
      if (idx != parse_int(fields[0], line_no, "entity index"))
        throw ParseError(line_no, "entity indices must be contiguous from 0");
    }
  }

  auto parse_split = [&](const char* name) {
    std::istringstream in(open(name));
    return parse_triplet_file(in, catalog, vocab, /*extend_vocab=*/false);
  };

  DataSplit split;
  split.train = UnifiedGraph(catalog, vocab, parse_split("train.tsv"));
  for (const char* name : {"valid.tsv", "test.tsv"}) {
    auto& map = std::string(name) == "valid.tsv" ? split.validation : split.test;
    for (const Triplet& t : parse_split(name)) {
      if (t.relation != catalog.interaction())
        throw DataError(std::string(name) + " may only contain interaction triplets");
      map[t.head.index] = HeldOut{t.tail.index, t.timestamp.value_or(0)};
    }
  }
  return split;
}

}  // namespace ugrec
