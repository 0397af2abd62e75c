#include "ugrec/oracle.hpp"

#include <cmath>
#include <vector>

#include "ugrec/error.hpp"

// Everything below is written with plain scalar loops on purpose; keep Eigen
// expressions and ugrec/geometry.hpp out of this translation unit.

namespace ugrec {

namespace {

using Dense = std::vector<double>;

Dense column(const Matrix& m, std::int32_t col) {
  Dense out(static_cast<std::size_t>(m.rows()));
  for (int i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, col);
  return out;
}

// softmax(relu(W [left : right] + b)) spelled out.
Dense naive_attention(const ModelParams& params, RelationId r, const Dense& left,
                      const Dense& right) {
  const int k = params.k;
  const RelationId slot = params.shared_attention ? 0 : r;
  const Matrix& weight = params.att_weight.at(slot);
  Dense z(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < k; ++i) {
    double s = params.att_bias(i, slot);
    for (int j = 0; j < k; ++j) s += weight(i, j) * left[static_cast<std::size_t>(j)];
    for (int j = 0; j < k; ++j) s += weight(i, k + j) * right[static_cast<std::size_t>(j)];
    z[static_cast<std::size_t>(i)] = s > 0.0 ? s : 0.0;
  }
  double zmax = z[0];
  for (double v : z) zmax = v > zmax ? v : zmax;
  Dense att(static_cast<std::size_t>(k), 0.0);
  double denom = 0.0;
  for (int i = 0; i < k; ++i) {
    att[static_cast<std::size_t>(i)] = std::exp(z[static_cast<std::size_t>(i)] - zmax);
    denom += att[static_cast<std::size_t>(i)];
  }
  for (double& v : att) v /= denom;
  return att;
}

// Materializes M = r_p e_p^T + I and multiplies.
Dense materialized_transd(const ModelParams& params, std::int32_t entity, RelationId r) {
  const int k = params.k;
  std::vector<Dense> mapping(static_cast<std::size_t>(k),
                             Dense(static_cast<std::size_t>(k), 0.0));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      mapping[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          params.rel_proj(i, r) * params.entity_proj(j, entity) + (i == j ? 1.0 : 0.0);
    }
  Dense out(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < k; ++i) {
    double s = 0.0;
    for (int j = 0; j < k; ++j)
      s += mapping[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
           params.entity_emb(j, entity);
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

double oracle_directed(const Triplet& t, const ModelParams& params, bool use_attention,
                       bool rescale) {
  const int k = params.k;
  const Dense h_d = materialized_transd(params, t.head.index, t.relation);
  const Dense t_d = materialized_transd(params, t.tail.index, t.relation);
  Dense translation = column(params.rel_emb, t.relation);
  if (use_attention) {
    const Dense att = naive_attention(params, t.relation, h_d, t_d);
    for (int i = 0; i < k; ++i) {
      translation[static_cast<std::size_t>(i)] *= att[static_cast<std::size_t>(i)];
      if (rescale) translation[static_cast<std::size_t>(i)] *= static_cast<double>(k);
    }
  }
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    const double d = h_d[static_cast<std::size_t>(i)] + translation[static_cast<std::size_t>(i)] -
                     t_d[static_cast<std::size_t>(i)];
    sum += d * d;
  }
  return sum;
}

double oracle_undirected(const Triplet& t, const ModelParams& params, bool use_attention,
                         bool rescale) {
  const int k = params.k;
  std::int32_t a = t.head.index, b = t.tail.index;
  if (a > b) std::swap(a, b);
  const Dense h = column(params.entity_emb, a);
  const Dense tt = column(params.entity_emb, b);
  Dense r_hat = column(params.rel_emb, t.relation);
  if (use_attention) {
    const Dense att = naive_attention(params, t.relation, h, tt);
    for (int i = 0; i < k; ++i) {
      r_hat[static_cast<std::size_t>(i)] *= att[static_cast<std::size_t>(i)];
      if (rescale) r_hat[static_cast<std::size_t>(i)] *= static_cast<double>(k);
    }
  }
  double n2 = 0.0;
  for (double v : r_hat) n2 += v * v;
  if (!(n2 > 1e-12)) throw NumericalError("oracle_distance: degenerate normal");
  double rh = 0.0, rt = 0.0;
  for (int i = 0; i < k; ++i) {
    rh += r_hat[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)];
    rt += r_hat[static_cast<std::size_t>(i)] * tt[static_cast<std::size_t>(i)];
  }
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    const double ph = h[static_cast<std::size_t>(i)] - rh * r_hat[static_cast<std::size_t>(i)] / n2;
    const double pt =
        tt[static_cast<std::size_t>(i)] - rt * r_hat[static_cast<std::size_t>(i)] / n2;
    const double d = ph - pt;
    sum += d * d;
  }
  return sum;
}

}  // namespace

double oracle_distance(const Triplet& triplet, const ModelParams& params, bool use_attention,
                       bool rescale_attention) {
  if (triplet.relation < 0 || triplet.relation >= params.n_relations())
    throw ContractViolation("oracle_distance: relation id out of range");
  if (params.relations[triplet.relation].directedness == Directedness::Directed)
    return oracle_directed(triplet, params, use_attention, rescale_attention);
  return oracle_undirected(triplet, params, use_attention, rescale_attention);
}

}  // namespace ugrec
