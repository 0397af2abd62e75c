#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "ugrec/graph.hpp"
#include "ugrec/training.hpp"

namespace ugrec {

/// Planted-structure generator at desk scale: clustered items, cluster-aligned
/// categories (with dropout), random makers, denser intra-cluster
/// co-occurrence, and users who prefer one cluster 80/20.
struct SynthConfig {
  int n_users = 200;
  int n_items = 100;
  int n_clusters = 5;
  int interactions_per_user = 8;
  double co_edge_prob_intra = 0.70;
  double co_edge_prob_inter = 0.002;
  int n_categories = 5;
  int n_makers = 25;
  double attribute_dropout = 0.9;  // chance an item's category triplet is missing
  std::uint64_t seed = 0;
};

struct ClusterAssignment {
  std::vector<int> item_cluster;  // by item position 0..n_items-1
  std::vector<int> user_cluster;  // preferred cluster by user position
};

struct SyntheticGraph {
  UnifiedGraph graph;
  ClusterAssignment truth;
};

/// Deterministic per seed. Relations: interact (user->item, timestamps are
/// draw order), belong_to (item->category), made_by (item->maker), co_occur
/// (item-item, undirected).
SyntheticGraph generate_synthetic_graph(const SynthConfig& config);

/// Per-mode statistics from the trivial-solution probe.
struct ProbeModeStats {
  std::map<std::string, double> relation_norm;  // final |r| per undirected relation
  double mean_cooccur_embedding_distance = 0.0;
};

struct ProbeReport {
  ProbeModeStats transe_pair;  // co-occurrence as two directed translations
  ProbeModeStats hyperplane;
};

/// Trains twice on identical data and seed, once per undirected strategy,
/// with attention off in both runs so the comparison is purely geometric.
/// Symmetric TransE pairs push the relation embedding toward zero; the
/// hyperplane distance is scale-invariant in the normal and leaves its norm
/// intact.
ProbeReport trivial_solution_probe(const UnifiedGraph& graph, const TrainConfig& config);

}  // namespace ugrec
