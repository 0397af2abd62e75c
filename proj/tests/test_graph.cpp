#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "test_util.hpp"
#include "ugrec/graph.hpp"

using namespace ugrec;
using namespace ugrec::test;

namespace {

using NamedTriplet = std::tuple<std::string, std::string, std::string>;

/// Relation-wise multisets of (head, tail) names, canonicalized for
/// undirected relations; the representation that survives recompaction.
std::multiset<NamedTriplet> named_triplets(const UnifiedGraph& g) {
  std::multiset<NamedTriplet> out;
  for (const RelationDef& def : g.catalog().relations()) {
    for (const Triplet& t : g.triplets_of(def.id)) {
      std::string h = g.vocab().name(t.head.index);
      std::string tl = g.vocab().name(t.tail.index);
      if (def.directedness == Directedness::Undirected && tl < h) std::swap(h, tl);
      out.emplace(h, tl, def.name);
    }
  }
  return out;
}

/// Naive repeat-until-stable filter: the independent oracle for the k-core
/// peel inside filter_min_interactions.
std::multiset<NamedTriplet> naive_filter(const UnifiedGraph& g, int threshold) {
  const RelationId inter = g.catalog().interaction();
  std::set<std::int32_t> removed;
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<std::int32_t, int> degree;
    for (const Triplet& t : g.triplets_of(inter)) {
      if (removed.contains(t.head.index) || removed.contains(t.tail.index)) continue;
      ++degree[t.head.index];
      ++degree[t.tail.index];
    }
    for (std::int32_t e = 0; e < g.vocab().size(); ++e) {
      const EntityKind kind = g.vocab().kind(e);
      if (kind == EntityKind::Attribute || removed.contains(e)) continue;
      auto it = degree.find(e);
      if (it == degree.end() || it->second < threshold) {
        removed.insert(e);
        changed = true;
      }
    }
  }
  std::multiset<NamedTriplet> out;
  for (const RelationDef& def : g.catalog().relations()) {
    for (const Triplet& t : g.triplets_of(def.id)) {
      if (removed.contains(t.head.index) || removed.contains(t.tail.index)) continue;
      std::string h = g.vocab().name(t.head.index);
      std::string tl = g.vocab().name(t.tail.index);
      if (def.directedness == Directedness::Undirected && tl < h) std::swap(h, tl);
      out.emplace(h, tl, def.name);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("parse_triplet_file resolves fields") {
  UnifiedGraph g = parse_graph("u1\ti5\tinteract\t100\n");
  const auto& list = g.triplets_of(g.catalog().interaction());
  REQUIRE(list.size() == 1);
  CHECK(g.vocab().name(list[0].head.index) == "u1");
  CHECK(g.vocab().name(list[0].tail.index) == "i5");
  CHECK(list[0].timestamp == 100);
  CHECK(g.vocab().kind(list[0].head.index) == EntityKind::User);
  CHECK(g.vocab().kind(list[0].tail.index) == EntityKind::Item);
}

TEST_CASE("undirected triplets canonicalize and deduplicate") {
  UnifiedGraph g = parse_graph(
      "i3\ti7\tco_view\n"
      "i7\ti3\tco_view\n");
  auto co = g.catalog().find("co_view");
  REQUIRE(co.has_value());
  const auto& list = g.triplets_of(*co);
  REQUIRE(list.size() == 1);
  CHECK(list[0].head.index <= list[0].tail.index);
  CHECK(g.contains(list[0].head.index, list[0].tail.index, *co));
  CHECK(g.contains(list[0].tail.index, list[0].head.index, *co));
}

TEST_CASE("parse rejects malformed input with line numbers") {
  RelationCatalog catalog = small_catalog();
  EntityVocab vocab;

  auto expect_line = [&](const std::string& text, std::size_t line) {
    std::istringstream in(text);
    try {
      parse_triplet_file(in, catalog, vocab);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line_number == line);
    }
  };

  expect_line("u1\ti5\tinteract\t1\nbad line with no tabs\n", 2);
  expect_line("u1\ti5\tnot_a_relation\t1\n", 1);
  expect_line("i3\ti3\tco_view\n", 1);                 // undirected self-loop
  expect_line("u1\ti5\tinteract\n", 1);                // missing timestamp
  expect_line("i1\tcatA\tbelong_to\t7\n", 1);          // unexpected timestamp
  expect_line("u1\ti5\tinteract\tnot_a_number\n", 1);  // bad timestamp
}

TEST_CASE("comments and blank lines are ignored") {
  UnifiedGraph g = parse_graph("# header\n\nu1\ti5\tinteract\t1\n# trailing\n");
  CHECK(g.interaction_count() == 1);
}

TEST_CASE("attribute vocabularies are namespaced per relation") {
  std::vector<RelationDef> defs;
  defs.push_back(make_relation("interact", Directedness::Directed, EntityKind::User,
                               EntityKind::Item, true));
  defs.push_back(make_relation("belong_to", Directedness::Directed, EntityKind::Item,
                               EntityKind::Attribute, false));
  defs.push_back(make_relation("made_by", Directedness::Directed, EntityKind::Item,
                               EntityKind::Attribute, false));
  RelationCatalog catalog(std::move(defs));
  EntityVocab vocab;
  std::istringstream in(
      "i1\tacme\tbelong_to\n"
      "i1\tacme\tmade_by\n");
  auto triplets = parse_triplet_file(in, catalog, vocab);
  REQUIRE(triplets.size() == 2);
  CHECK(triplets[0].tail.index != triplets[1].tail.index);  // same token, distinct entities
}

TEST_CASE("graph round-trips through the triplet file format") {
  UnifiedGraph g = parse_graph(
      "u1\ti1\tinteract\t3\n"
      "u1\ti2\tinteract\t1\n"
      "u2\ti1\tinteract\t5\n"
      "i1\tcatA\tbelong_to\n"
      "i2\tcatB\tbelong_to\n"
      "i2\ti1\tco_view\n");
  UnifiedGraph reparsed = parse_graph(g.serialize_triplets());
  CHECK(named_triplets(g) == named_triplets(reparsed));
  CHECK(reparsed.vocab().size() == g.vocab().size());
}

TEST_CASE("duplicate interactions keep the latest timestamp") {
  UnifiedGraph g = parse_graph(
      "u1\ti1\tinteract\t3\n"
      "u1\ti1\tinteract\t9\n"
      "u1\ti1\tinteract\t5\n");
  REQUIRE(g.interaction_count() == 1);
  CHECK(g.triplets_of(g.catalog().interaction())[0].timestamp == 9);
}

TEST_CASE("filter_min_interactions threshold 1 is a no-op on clean graphs") {
  UnifiedGraph g = parse_graph(
      "u1\ti1\tinteract\t1\n"
      "u2\ti2\tinteract\t2\n"
      "i1\ti2\tco_view\n");
  UnifiedGraph filtered = filter_min_interactions(g, 1);
  CHECK(named_triplets(filtered) == named_triplets(g));
  CHECK(filtered.vocab().size() == g.vocab().size());
}

TEST_CASE("filter removes a user below the default threshold") {
  std::ostringstream text;
  // u_heavy: 4 interactions on i1..i4; u_light: 3 interactions.
  for (int i = 1; i <= 4; ++i) text << "u_heavy\ti" << i << "\tinteract\t" << i << "\n";
  for (int i = 1; i <= 3; ++i) text << "u_light\ti" << i << "\tinteract\t" << 10 + i << "\n";
  // Items need >= 4 interactions too; pad with more users per item.
  for (int u = 0; u < 3; ++u)
    for (int i = 1; i <= 4; ++i)
      text << "pad" << u << "\ti" << i << "\tinteract\t" << 100 + 10 * u + i << "\n";
  UnifiedGraph g = parse_graph(text.str());
  UnifiedGraph filtered = filter_min_interactions(g, 4);
  CHECK(!filtered.vocab().find(EntityKind::User, "u_light").has_value());
  CHECK(filtered.vocab().find(EntityKind::User, "u_heavy").has_value());
  CHECK(filtered.interaction_count() == g.interaction_count() - 3);
  CHECK(named_triplets(filtered) == naive_filter(g, 4));
}

TEST_CASE("filter cascades removals to a fixed point") {
  // Dense 4x4 core survives any threshold up to 4. i9 is carried by u_light
  // (3 interactions) and u_chain (4): at threshold 4, dropping u_light drags
  // i9 below the bar, which in turn drops u_chain.
  std::ostringstream text;
  for (int u = 0; u < 4; ++u)
    for (int i = 0; i < 4; ++i)
      text << "u" << u << "\ti" << i << "\tinteract\t" << 10 * u + i << "\n";
  text << "u_light\ti0\tinteract\t101\n";
  text << "u_light\ti1\tinteract\t102\n";
  text << "u_light\ti9\tinteract\t103\n";
  text << "u_chain\ti9\tinteract\t104\n";
  text << "u_chain\ti0\tinteract\t105\n";
  text << "u_chain\ti1\tinteract\t106\n";
  text << "u_chain\ti2\tinteract\t107\n";
  text << "i9\tcatA\tbelong_to\n";
  text << "i0\ti9\tco_view\n";
  UnifiedGraph g = parse_graph(text.str());

  UnifiedGraph at4 = filter_min_interactions(g, 4);
  CHECK(!at4.vocab().find(EntityKind::User, "u_chain").has_value());
  CHECK(!at4.vocab().find(EntityKind::Item, "i9").has_value());
  auto co = at4.catalog().find("co_view");
  CHECK(at4.triplets_of(*co).empty());  // the i9 edge is gone with the item

  for (int threshold : {1, 2, 3, 4}) {
    CAPTURE(threshold);
    UnifiedGraph filtered = filter_min_interactions(g, threshold);
    CHECK(named_triplets(filtered) == naive_filter(g, threshold));
    // Post-condition: every user and item has >= threshold interactions.
    for (std::int32_t user : filtered.vocab().of_kind(EntityKind::User))
      CHECK(filtered.interactions_of(user).size() >=
            static_cast<std::size_t>(threshold));
    std::map<std::int32_t, int> item_degree;
    for (const Triplet& t : filtered.triplets_of(filtered.catalog().interaction()))
      ++item_degree[t.tail.index];
    for (std::int32_t item : filtered.vocab().of_kind(EntityKind::Item))
      CHECK(item_degree[item] >= threshold);
  }
}

TEST_CASE("filter rejects over-aggressive thresholds") {
  UnifiedGraph g = parse_graph("u1\ti1\tinteract\t1\n");
  CHECK_THROWS_AS(filter_min_interactions(g, 50), DataError);
}

TEST_CASE("leave_one_out_split holds out latest and second latest") {
  UnifiedGraph g = parse_graph(
      "u1\tia\tinteract\t1\n"
      "u1\tib\tinteract\t2\n"
      "u1\tic\tinteract\t3\n");
  DataSplit split = leave_one_out_split(g);
  const std::int32_t u1 = *g.vocab().find(EntityKind::User, "u1");
  CHECK(g.vocab().name(split.test.at(u1).item) == "ic");
  CHECK(g.vocab().name(split.validation.at(u1).item) == "ib");
  REQUIRE(split.train.interactions_of(u1).size() == 1);
  CHECK(g.vocab().name(split.train.interactions_of(u1)[0].item) == "ia");
}

TEST_CASE("leave_one_out_split keeps exactly n-2 training interactions") {
  std::ostringstream text;
  for (int i = 1; i <= 4; ++i) text << "u1\ti" << i << "\tinteract\t" << i << "\n";
  UnifiedGraph g = parse_graph(text.str());
  DataSplit split = leave_one_out_split(g);
  const std::int32_t u1 = *g.vocab().find(EntityKind::User, "u1");
  CHECK(split.train.interactions_of(u1).size() == 2);
}

TEST_CASE("timestamp ties break toward the larger item index") {
  UnifiedGraph g = parse_graph(
      "u1\tia\tinteract\t1\n"
      "u1\tib\tinteract\t7\n"
      "u1\tic\tinteract\t7\n");
  DataSplit split = leave_one_out_split(g);
  const std::int32_t u1 = *g.vocab().find(EntityKind::User, "u1");
  // ib and ic share the max timestamp; ic has the larger entity index.
  CHECK(g.vocab().name(split.test.at(u1).item) == "ic");
  CHECK(g.vocab().name(split.validation.at(u1).item) == "ib");
}

TEST_CASE("leave_one_out_split conserves interactions") {
  std::ostringstream text;
  for (int u = 0; u < 7; ++u)
    for (int i = 0; i < 5; ++i)
      text << "u" << u << "\ti" << (u + i) % 9 << "\tinteract\t" << i << "\n";
  text << "i1\tcatA\tbelong_to\n";
  UnifiedGraph g = parse_graph(text.str());
  DataSplit split = leave_one_out_split(g);
  const std::int64_t users = g.vocab().count(EntityKind::User);
  CHECK(split.train.interaction_count() + 2 * users == g.interaction_count());
  // Non-interaction triplets all land in train.
  CHECK(split.train.triplets_of(*g.catalog().find("belong_to")).size() == 1);
  // Held-out items never sit in that user's training interactions.
  for (const auto& [user, held] : split.test)
    for (const Interaction& i : split.train.interactions_of(user)) CHECK(i.item != held.item);
  for (const auto& [user, held] : split.validation)
    for (const Interaction& i : split.train.interactions_of(user)) CHECK(i.item != held.item);
}

TEST_CASE("leave_one_out_split names the offending user") {
  UnifiedGraph g = parse_graph(
      "u_ok\tia\tinteract\t1\n"
      "u_ok\tib\tinteract\t2\n"
      "u_ok\tic\tinteract\t3\n"
      "u_thin\tia\tinteract\t4\n"
      "u_thin\tib\tinteract\t5\n");
  try {
    leave_one_out_split(g);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("u_thin") != std::string::npos);
  }
}

TEST_CASE("prepared directory round-trip preserves vocabulary indices") {
  std::ostringstream text;
  for (int u = 0; u < 4; ++u)
    for (int i = 0; i < 4; ++i)
      text << "u" << u << "\ti" << (u + i) % 6 << "\tinteract\t" << i << "\n";
  text << "i1\tcatA\tbelong_to\n";
  text << "i1\ti2\tco_view\n";
  UnifiedGraph g = parse_graph(text.str());
  DataSplit split = leave_one_out_split(g);

  const auto dir = std::filesystem::temp_directory_path() / "ugrec_prepared_test";
  std::filesystem::remove_all(dir);
  save_prepared(split, dir);
  DataSplit loaded = load_prepared(dir);
  std::filesystem::remove_all(dir);

  CHECK(loaded.train.signature() == split.train.signature());
  CHECK(named_triplets(loaded.train) == named_triplets(split.train));
  CHECK(loaded.validation.size() == split.validation.size());
  CHECK(loaded.test.size() == split.test.size());
  for (const auto& [user, held] : split.test) {
    CHECK(loaded.test.at(user).item == held.item);
    CHECK(loaded.test.at(user).timestamp == held.timestamp);
  }
}

TEST_CASE("catalog parsing enforces structural rules") {
  auto parse_catalog = [](const std::string& text) {
    std::istringstream in(text);
    return RelationCatalog::parse(in);
  };
  CHECK_THROWS_AS(parse_catalog("co\tundirected\tuser\titem\t0\n"
                                "interact\tdirected\tuser\titem\t1\n"),
                  DataError);  // undirected must be item-item
  CHECK_THROWS_AS(parse_catalog("interact\tdirected\tuser\titem\t1\n"
                                "also\tdirected\tuser\titem\t1\n"),
                  DataError);  // two interaction relations
  CHECK_THROWS_AS(parse_catalog("belong_to\tdirected\titem\tattribute\t0\n"),
                  DataError);  // no interaction relation
  RelationCatalog ok = parse_catalog(small_catalog().serialize());
  CHECK(ok.size() == 3);
  CHECK(ok.at(ok.interaction()).name == "interact");
}

TEST_CASE("dataset statistics report the sparsity identity") {
  UnifiedGraph g = parse_graph(
      "u1\ti1\tinteract\t1\n"
      "u1\ti2\tinteract\t2\n"
      "u2\ti1\tinteract\t3\n");
  const std::string stats = dataset_statistics(g);
  // 2 users x 2 items, 3 interactions -> sparsity 0.25.
  CHECK(stats.find("sparsity\t0.250000") != std::string::npos);
  CHECK(stats.find("users\t2") != std::string::npos);
  CHECK(stats.find("items\t2") != std::string::npos);
}
