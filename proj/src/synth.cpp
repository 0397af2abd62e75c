#include "ugrec/synth.hpp"

#include <algorithm>
#include <random>

namespace ugrec {

SyntheticGraph generate_synthetic_graph(const SynthConfig& config) {
  if (config.n_users < 1 || config.n_items < 1 || config.n_clusters < 1)
    throw ConfigError("generate_synthetic_graph: counts must be positive");
  if (config.interactions_per_user > config.n_items)
    throw ConfigError("generate_synthetic_graph: more interactions per user than items");
  if (config.co_edge_prob_intra < config.co_edge_prob_inter)
    throw ConfigError(
        "generate_synthetic_graph: co_edge_prob_intra must be >= co_edge_prob_inter");

  std::vector<RelationDef> defs(4);
  defs[0].name = "interact";
  defs[0].head_kind = EntityKind::User;
  defs[0].tail_kind = EntityKind::Item;
  defs[0].is_interaction = true;
  defs[1].name = "belong_to";
  defs[1].head_kind = EntityKind::Item;
  defs[1].tail_kind = EntityKind::Attribute;
  defs[2].name = "made_by";
  defs[2].head_kind = EntityKind::Item;
  defs[2].tail_kind = EntityKind::Attribute;
  defs[3].name = "co_occur";
  defs[3].directedness = Directedness::Undirected;
  defs[3].head_kind = EntityKind::Item;
  defs[3].tail_kind = EntityKind::Item;
  RelationCatalog catalog(std::move(defs));
  const RelationId r_inter = 0, r_cat = 1, r_maker = 2, r_co = 3;

  EntityVocab vocab;
  std::vector<std::int32_t> users(config.n_users), items(config.n_items);
  for (int u = 0; u < config.n_users; ++u)
    users[u] = vocab.add_or_get(EntityKind::User, "u" + std::to_string(u));
  for (int i = 0; i < config.n_items; ++i)
    items[i] = vocab.add_or_get(EntityKind::Item, "i" + std::to_string(i));
  std::vector<std::int32_t> categories(config.n_categories), makers(config.n_makers);
  for (int c = 0; c < config.n_categories; ++c)
    categories[c] = vocab.add_or_get(EntityKind::Attribute, "cat" + std::to_string(c), r_cat);
  for (int m = 0; m < config.n_makers; ++m)
    makers[m] = vocab.add_or_get(EntityKind::Attribute, "mk" + std::to_string(m), r_maker);

  std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ull + 0xD1B54A32D192ED03ull);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  ClusterAssignment truth;
  truth.item_cluster.resize(config.n_items);
  for (int i = 0; i < config.n_items; ++i)
    truth.item_cluster[i] = i * config.n_clusters / config.n_items;

  std::vector<std::vector<int>> cluster_items(config.n_clusters);
  for (int i = 0; i < config.n_items; ++i) cluster_items[truth.item_cluster[i]].push_back(i);

  std::vector<Triplet> triplets;
  auto add = [&](RelationId r, std::int32_t head, EntityKind hk, std::int32_t tail, EntityKind tk,
                 std::optional<std::int64_t> ts = std::nullopt) {
    Triplet t;
    t.relation = r;
    t.head = EntityId{head, hk};
    t.tail = EntityId{tail, tk};
    t.timestamp = ts;
    triplets.push_back(t);
  };

  // Attributes: cluster-aligned category (with dropout), random maker.
  for (int i = 0; i < config.n_items; ++i) {
    const int cat = truth.item_cluster[i] % std::max(1, config.n_categories);
    const bool dropped = coin(rng) < config.attribute_dropout;
    if (!dropped && config.n_categories > 0)
      add(r_cat, items[i], EntityKind::Item, categories[cat], EntityKind::Attribute);
    if (config.n_makers > 0) {
      std::uniform_int_distribution<int> pick_maker(0, config.n_makers - 1);
      add(r_maker, items[i], EntityKind::Item, makers[pick_maker(rng)], EntityKind::Attribute);
    }
  }

  // Co-occurrence edges, denser inside clusters.
  for (int i = 0; i < config.n_items; ++i)
    for (int j = i + 1; j < config.n_items; ++j) {
      const bool intra = truth.item_cluster[i] == truth.item_cluster[j];
      const double p = intra ? config.co_edge_prob_intra : config.co_edge_prob_inter;
      if (coin(rng) < p)
        add(r_co, items[i], EntityKind::Item, items[j], EntityKind::Item);
    }

  // Interactions: 80/20 intra/inter preferred cluster, timestamps in draw
  // order, items distinct per user.
  truth.user_cluster.resize(config.n_users);
  std::uniform_int_distribution<int> pick_item(0, config.n_items - 1);
  for (int u = 0; u < config.n_users; ++u) {
    const int cluster = u % config.n_clusters;
    truth.user_cluster[u] = cluster;
    const auto& preferred = cluster_items[cluster];
    std::vector<char> consumed(static_cast<std::size_t>(config.n_items), 0);
    int drawn = 0;
    std::int64_t ts = 0;
    int attempts = 0;
    const int max_attempts = 50 * std::max(1, config.interactions_per_user);
    while (drawn < config.interactions_per_user) {
      int item_pos;
      if (attempts++ < max_attempts) {
        if (!preferred.empty() && coin(rng) < 0.8) {
          std::uniform_int_distribution<std::size_t> pick(0, preferred.size() - 1);
          item_pos = preferred[pick(rng)];
        } else {
          item_pos = pick_item(rng);
        }
        if (consumed[static_cast<std::size_t>(item_pos)]) continue;
      } else {
        item_pos = -1;  // deterministic fallback: first unconsumed item
        for (int i = 0; i < config.n_items; ++i)
          if (!consumed[static_cast<std::size_t>(i)]) {
            item_pos = i;
            break;
          }
      }
      consumed[static_cast<std::size_t>(item_pos)] = 1;
      add(r_inter, users[u], EntityKind::User, items[item_pos], EntityKind::Item, ++ts);
      ++drawn;
    }
  }

  SyntheticGraph out{UnifiedGraph(catalog, vocab, triplets), std::move(truth)};
  return out;
}

namespace {

ProbeModeStats probe_mode(const UnifiedGraph& graph, TrainConfig config, UndirectedScorer scorer) {
  config.model.undirected_scorer = scorer;
  config.model.use_attention = false;  // keep the comparison purely geometric

  ModelParams params = init_params(graph, config.model, config.seed);
  AdaGradState state = AdaGradState::like(params);
  for (int epoch = 0; epoch < config.epochs; ++epoch)
    train_epoch(graph, params, state, config);

  ProbeModeStats stats;
  double distance_sum = 0.0;
  std::int64_t pairs = 0;
  for (const RelationDef& rel : graph.catalog().relations()) {
    if (rel.directedness != Directedness::Undirected) continue;
    stats.relation_norm[rel.name] = params.rel_emb.col(rel.id).norm();
    for (const Triplet& t : graph.triplets_of(rel.id)) {
      distance_sum +=
          (params.entity_emb.col(t.head.index) - params.entity_emb.col(t.tail.index)).norm();
      ++pairs;
    }
  }
  stats.mean_cooccur_embedding_distance =
      pairs > 0 ? distance_sum / static_cast<double>(pairs) : 0.0;
  return stats;
}

}  // namespace

ProbeReport trivial_solution_probe(const UnifiedGraph& graph, const TrainConfig& config) {
  if (graph.undirected_count() == 0)
    throw DataError("trivial_solution_probe: graph has no undirected triplets");
  ProbeReport report;
  report.transe_pair = probe_mode(graph, config, UndirectedScorer::DirectedPair);
  report.hyperplane = probe_mode(graph, config, UndirectedScorer::Hyperplane);
  return report;
}

}  // namespace ugrec
