#include "ugrec/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "ugrec/geometry.hpp"

namespace ugrec {

ModelParams init_params(const UnifiedGraph& graph, const ModelConfig& config, std::uint64_t seed) {
  if (config.k < 1) throw ConfigError("embedding dimension k must be >= 1");
  const int k = config.k;
  const std::int32_t ne = graph.vocab().size();
  const std::int32_t nr = graph.catalog().size();

  ModelParams p;
  p.k = k;
  p.catalog_hash = graph.signature();
  p.shared_attention = config.shared_attention;
  p.relations.reserve(nr);
  for (const RelationDef& def : graph.catalog().relations())
    p.relations.push_back(RelationMeta{def.directedness, def.is_interaction});

  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(k));
  std::uniform_real_distribution<double> unif(-bound, bound);

  auto fill_ball = [&](Matrix& m, std::int32_t cols) {
    m.resize(k, cols);
    for (std::int32_t c = 0; c < cols; ++c) {
      for (int i = 0; i < k; ++i) m(i, c) = unif(rng);
      m.col(c) = project_unit_ball(m.col(c));
    }
  };
  fill_ball(p.entity_emb, ne);
  fill_ball(p.entity_proj, ne);
  fill_ball(p.rel_emb, nr);
  fill_ball(p.rel_proj, nr);

  const double att_scale = 1.0 / std::sqrt(2.0 * k);
  p.att_weight.resize(nr);
  for (std::int32_t r = 0; r < nr; ++r) {
    p.att_weight[r].resize(k, 2 * k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < 2 * k; ++j) p.att_weight[r](i, j) = unif(rng) * att_scale;
  }
  p.att_bias = Matrix::Zero(k, nr);
  return p;
}

Vector attention_for(const ModelParams& params, RelationId r, const Vector& left,
                     const Vector& right) {
  const RelationId slot = params.attention_slot(r);
  return attention_vector(left, right, params.att_weight.at(slot), params.att_bias.col(slot));
}

namespace {

void check_relation(const ModelParams& params, RelationId r, Directedness expected,
                    const char* op) {
  if (r < 0 || r >= params.n_relations()) throw ContractViolation("relation id out of range");
  if (params.relations[r].directedness != expected)
    throw ContractViolation(std::string(op) + ": relation has the wrong directedness");
}

}  // namespace

double directed_distance(const ModelParams& params, EntityId h, EntityId t, RelationId r,
                         bool use_attention, bool rescale_attention) {
  check_relation(params, r, Directedness::Directed, "directed_distance");
  const Vector h_d = transd_project(params.entity_emb.col(h.index),
                                    params.entity_proj.col(h.index), params.rel_proj.col(r));
  const Vector t_d = transd_project(params.entity_emb.col(t.index),
                                    params.entity_proj.col(t.index), params.rel_proj.col(r));
  Vector translation = params.rel_emb.col(r);
  if (use_attention) {
    const Vector att = attention_for(params, r, h_d, t_d);
    translation = translation.cwiseProduct(att);
    if (rescale_attention) translation *= static_cast<double>(params.k);
  }
  return (h_d + translation - t_d).squaredNorm();
}

double undirected_distance(const ModelParams& params, EntityId h, EntityId t, RelationId r,
                           bool use_attention, bool rescale_attention) {
  check_relation(params, r, Directedness::Undirected, "undirected_distance");
  if (h.index > t.index) std::swap(h, t);  // one code path keeps symmetry exact
  Vector r_hat = params.rel_emb.col(r);
  if (use_attention) {
    const Vector att =
        attention_for(params, r, params.entity_emb.col(h.index), params.entity_emb.col(t.index));
    r_hat = r_hat.cwiseProduct(att);
    if (rescale_attention) r_hat *= static_cast<double>(params.k);
  }
  const Vector h_c = hyperplane_project(params.entity_emb.col(h.index), r_hat);
  const Vector t_c = hyperplane_project(params.entity_emb.col(t.index), r_hat);
  return (h_c - t_c).squaredNorm();
}

double distmult_score(const ModelParams& params, EntityId h, EntityId t, RelationId r) {
  check_relation(params, r, Directedness::Undirected, "distmult_score");
  return distmult(params.entity_emb.col(h.index), params.entity_emb.col(t.index),
                  params.rel_emb.col(r));
}

double transe_distance(const ModelParams& params, EntityId h, EntityId t, RelationId r) {
  return (params.entity_emb.col(h.index) + params.rel_emb.col(r) - params.entity_emb.col(t.index))
      .squaredNorm();
}

// ---------------------------------------------------------------------------
// Checkpoint IO

namespace {

constexpr char kMagic[8] = {'U', 'G', 'R', 'E', 'C', 'C', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(value));
  if (!in) throw DataError("checkpoint truncated");
  return value;
}

void put_doubles(std::ofstream& out, const double* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

void get_doubles(std::ifstream& in, double* data, std::size_t n) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw DataError("checkpoint truncated");
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const ModelParams& p = ckpt.params;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(p.k));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(p.n_entities()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(p.n_relations()));
  put<std::uint64_t>(out, p.catalog_hash);
  std::uint32_t flags = 0;
  if (ckpt.config.use_attention) flags |= 1u;
  if (ckpt.config.rescale_attention) flags |= 2u;
  flags |= static_cast<std::uint32_t>(ckpt.config.undirected_scorer) << 2;
  if (ckpt.config.shared_attention) flags |= 16u;
  put<std::uint32_t>(out, flags);
  put<std::uint32_t>(out, 0u);
  for (const RelationMeta& meta : p.relations) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(meta.directedness));
    put<std::uint8_t>(out, meta.is_interaction ? 1 : 0);
  }
  // Column-major k x n matrices are entity-major on disk by construction.
  put_doubles(out, p.entity_emb.data(), static_cast<std::size_t>(p.entity_emb.size()));
  put_doubles(out, p.entity_proj.data(), static_cast<std::size_t>(p.entity_proj.size()));
  put_doubles(out, p.rel_emb.data(), static_cast<std::size_t>(p.rel_emb.size()));
  put_doubles(out, p.rel_proj.data(), static_cast<std::size_t>(p.rel_proj.size()));
  for (const Matrix& w : p.att_weight) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = w;
    put_doubles(out, row_major.data(), static_cast<std::size_t>(row_major.size()));
  }
  put_doubles(out, p.att_bias.data(), static_cast<std::size_t>(p.att_bias.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a ugrec checkpoint: " + path.string());
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ModelParams& p = ckpt.params;
  p.k = static_cast<int>(get<std::uint32_t>(in));
  const auto ne = static_cast<std::int32_t>(get<std::uint64_t>(in));
  const auto nr = static_cast<std::int32_t>(get<std::uint64_t>(in));
  p.catalog_hash = get<std::uint64_t>(in);
  const auto flags = get<std::uint32_t>(in);
  (void)get<std::uint32_t>(in);
  ckpt.config.k = p.k;
  ckpt.config.use_attention = (flags & 1u) != 0;
  ckpt.config.rescale_attention = (flags & 2u) != 0;
  ckpt.config.undirected_scorer = static_cast<UndirectedScorer>((flags >> 2) & 3u);
  ckpt.config.shared_attention = (flags & 16u) != 0;
  p.shared_attention = ckpt.config.shared_attention;

  p.relations.resize(nr);
  for (std::int32_t r = 0; r < nr; ++r) {
    p.relations[r].directedness = static_cast<Directedness>(get<std::uint8_t>(in));
    p.relations[r].is_interaction = get<std::uint8_t>(in) != 0;
  }
  p.entity_emb.resize(p.k, ne);
  p.entity_proj.resize(p.k, ne);
  p.rel_emb.resize(p.k, nr);
  p.rel_proj.resize(p.k, nr);
  get_doubles(in, p.entity_emb.data(), static_cast<std::size_t>(p.entity_emb.size()));
  get_doubles(in, p.entity_proj.data(), static_cast<std::size_t>(p.entity_proj.size()));
  get_doubles(in, p.rel_emb.data(), static_cast<std::size_t>(p.rel_emb.size()));
  get_doubles(in, p.rel_proj.data(), static_cast<std::size_t>(p.rel_proj.size()));
  p.att_weight.resize(nr);
  for (std::int32_t r = 0; r < nr; ++r) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major(p.k, 2 * p.k);
    get_doubles(in, row_major.data(), static_cast<std::size_t>(row_major.size()));
    p.att_weight[r] = row_major;
  }
  p.att_bias.resize(p.k, nr);
  get_doubles(in, p.att_bias.data(), static_cast<std::size_t>(p.att_bias.size()));
  return ckpt;
}

}  // namespace ugrec
