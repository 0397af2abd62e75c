#include "ugrec/gradients.hpp"

#include <cmath>

#include "ugrec/geometry.hpp"

namespace ugrec {

void GradientSet::add(ParamFamily family, std::int32_t index, const Vector& g) {
  auto [it, inserted] = vectors.try_emplace(SlotKey{family, index}, g);
  if (!inserted) it->second += g;
}

void GradientSet::add_weight(std::int32_t relation, const Matrix& g) {
  auto [it, inserted] = att_weights.try_emplace(relation, g);
  if (!inserted) it->second += g;
}

void GradientSet::accumulate(const GradientSet& other, double scale) {
  for (const auto& [key, g] : other.vectors) {
    auto [it, inserted] = vectors.try_emplace(key, g * scale);
    if (!inserted) it->second += g * scale;
  }
  for (const auto& [rel, g] : other.att_weights) {
    auto [it, inserted] = att_weights.try_emplace(rel, g * scale);
    if (!inserted) it->second += g * scale;
  }
}

namespace {

/// Gradient contributions of one triplet's distance w.r.t. every parameter
/// it touches. head/tail here are entity indices.
struct TripletBackward {
  double f = 0.0;
  std::int32_t head = -1, tail = -1;
  RelationId relation = -1;
  RelationId att_slot = -1;
  Vector g_head, g_tail, g_head_proj, g_tail_proj, g_rel, g_rel_proj, g_att_bias;
  Matrix g_att_weight;
  bool has_proj = false;
  bool has_attention = false;
};

/// Backward through a = softmax(relu(W [left:right] + b)) given dL/da.
/// Returns dL/dleft, dL/dright and fills the W/b gradients.
struct AttentionBackward {
  Vector g_left, g_right, g_bias;
  Matrix g_weight;
};

struct AttentionForwardCache {
  Vector preact;  // W [left:right] + b
  Vector att;     // softmax(relu(preact))
};

AttentionForwardCache attention_forward(const ModelParams& params, RelationId r,
                                        const Vector& left, const Vector& right) {
  const RelationId slot = params.attention_slot(r);
  const Matrix& weight = params.att_weight.at(slot);
  AttentionForwardCache cache;
  cache.preact = weight.leftCols(left.size()) * left + weight.rightCols(right.size()) * right +
                 params.att_bias.col(slot);
  cache.att = softmax(relu(cache.preact));
  return cache;
}

AttentionBackward attention_backward(const ModelParams& params, RelationId r,
                                     const AttentionForwardCache& cache, const Vector& left,
                                     const Vector& right, const Vector& g_att) {
  const int k = params.k;
  const Matrix& weight = params.att_weight.at(params.attention_slot(r));
  const Vector& a = cache.att;
  // softmax: dL/dz_j = a_j (g_j - g . a); relu: zero where preact <= 0.
  const double gdota = g_att.dot(a);
  Vector g_s = a.cwiseProduct((g_att.array() - gdota).matrix());
  for (int i = 0; i < k; ++i)
    if (cache.preact(i) <= 0.0) g_s(i) = 0.0;

  AttentionBackward back;
  back.g_bias = g_s;
  back.g_weight.resize(k, 2 * k);
  back.g_weight.leftCols(k) = g_s * left.transpose();
  back.g_weight.rightCols(k) = g_s * right.transpose();
  const Vector g_u_left = weight.leftCols(k).transpose() * g_s;
  const Vector g_u_right = weight.rightCols(k).transpose() * g_s;
  back.g_left = g_u_left;
  back.g_right = g_u_right;
  return back;
}

TripletBackward directed_backward(const ModelParams& params, const Triplet& t, bool use_attention,
                                  bool rescale) {
  TripletBackward out;
  out.head = t.head.index;
  out.tail = t.tail.index;
  out.relation = t.relation;
  out.has_proj = true;

  const auto h_e = params.entity_emb.col(out.head);
  const auto h_p = params.entity_proj.col(out.head);
  const auto t_e = params.entity_emb.col(out.tail);
  const auto t_p = params.entity_proj.col(out.tail);
  const auto r_e = params.rel_emb.col(out.relation);
  const auto r_p = params.rel_proj.col(out.relation);

  const double hph = h_p.dot(h_e);
  const double tpt = t_p.dot(t_e);
  const Vector h_d = h_e + r_p * hph;
  const Vector t_d = t_e + r_p * tpt;

  const double scale = rescale ? static_cast<double>(params.k) : 1.0;
  AttentionForwardCache att_cache;
  Vector translation;
  if (use_attention) {
    out.att_slot = params.attention_slot(out.relation);
    att_cache = attention_forward(params, out.relation, h_d, t_d);
    translation = r_e.cwiseProduct(att_cache.att) * scale;
  } else {
    translation = r_e;
  }

  const Vector diff = h_d + translation - t_d;
  out.f = diff.squaredNorm();
  const Vector g_diff = 2.0 * diff;

  Vector g_hd = g_diff;
  Vector g_td = -g_diff;
  if (use_attention) {
    out.has_attention = true;
    out.g_rel = g_diff.cwiseProduct(att_cache.att) * scale;
    const Vector g_att = g_diff.cwiseProduct(r_e) * scale;
    const AttentionBackward att =
        attention_backward(params, out.relation, att_cache, h_d, t_d, g_att);
    out.g_att_bias = att.g_bias;
    out.g_att_weight = att.g_weight;
    g_hd += att.g_left;
    g_td += att.g_right;
  } else {
    out.g_rel = g_diff;
  }

  // Through the rank-1 TransD maps: d(e + r_p (e_p . e))/de = I + r_p e_p^T.
  out.g_head = g_hd + h_p * r_p.dot(g_hd);
  out.g_head_proj = h_e * r_p.dot(g_hd);
  out.g_tail = g_td + t_p * r_p.dot(g_td);
  out.g_tail_proj = t_e * r_p.dot(g_td);
  out.g_rel_proj = hph * g_hd + tpt * g_td;
  return out;
}

TripletBackward undirected_backward(const ModelParams& params, const Triplet& t,
                                    bool use_attention, bool rescale) {
  TripletBackward out;
  out.head = t.head.index;
  out.tail = t.tail.index;
  if (out.head > out.tail) std::swap(out.head, out.tail);  // canonical order
  out.relation = t.relation;

  const auto h_e = params.entity_emb.col(out.head);
  const auto t_e = params.entity_emb.col(out.tail);
  const auto r_e = params.rel_emb.col(out.relation);

  const double scale = rescale ? static_cast<double>(params.k) : 1.0;
  AttentionForwardCache att_cache;
  Vector r_hat;
  if (use_attention) {
    out.att_slot = params.attention_slot(out.relation);
    att_cache = attention_forward(params, out.relation, h_e, t_e);
    r_hat = r_e.cwiseProduct(att_cache.att) * scale;
  } else {
    r_hat = r_e;
  }

  const double n2 = r_hat.squaredNorm();
  if (!(n2 > kDegenerateNormalSq))
    throw NumericalError("undirected_pair_grad: degenerate normal (|r|^2 <= 1e-12)");

  const Vector w = h_e - t_e;
  const double srw = r_hat.dot(w);
  const Vector d = w - r_hat * (srw / n2);
  out.f = d.squaredNorm();

  const Vector g_d = 2.0 * d;
  const double gdr = g_d.dot(r_hat);
  const Vector g_w = g_d - r_hat * (gdr / n2);
  const Vector g_rhat =
      -(gdr / n2) * w - (srw / n2) * g_d + (2.0 * srw * gdr / (n2 * n2)) * r_hat;

  Vector g_h = g_w;
  Vector g_t = -g_w;
  if (use_attention) {
    out.has_attention = true;
    out.g_rel = g_rhat.cwiseProduct(att_cache.att) * scale;
    const Vector g_att = g_rhat.cwiseProduct(r_e) * scale;
    const AttentionBackward att =
        attention_backward(params, out.relation, att_cache, h_e, t_e, g_att);
    out.g_att_bias = att.g_bias;
    out.g_att_weight = att.g_weight;
    g_h += att.g_left;
    g_t += att.g_right;
  } else {
    out.g_rel = g_rhat;
  }
  out.g_head = g_h;
  out.g_tail = g_t;
  return out;
}

void apply_contribution(GradientSet& grads, const TripletBackward& back, double sign) {
  grads.add(ParamFamily::EntityEmb, back.head, sign * back.g_head);
  grads.add(ParamFamily::EntityEmb, back.tail, sign * back.g_tail);
  grads.add(ParamFamily::RelEmb, back.relation, sign * back.g_rel);
  if (back.has_proj) {
    grads.add(ParamFamily::EntityProj, back.head, sign * back.g_head_proj);
    grads.add(ParamFamily::EntityProj, back.tail, sign * back.g_tail_proj);
    grads.add(ParamFamily::RelProj, back.relation, sign * back.g_rel_proj);
  }
  if (back.has_attention) {
    grads.add(ParamFamily::AttBias, back.att_slot, sign * back.g_att_bias);
    grads.add_weight(back.att_slot, sign * back.g_att_weight);
  }
}

void check_directedness(const ModelParams& params, RelationId r, Directedness expected,
                        const char* op) {
  if (r < 0 || r >= params.n_relations())
    throw ContractViolation(std::string(op) + ": relation id out of range");
  if (params.relations[r].directedness != expected)
    throw ContractViolation(std::string(op) + ": relation has the wrong directedness");
}

void check_pair(const ModelParams& params, const Triplet& pos, const Triplet& neg,
                Directedness expected, const char* op) {
  if (pos.relation != neg.relation)
    throw ContractViolation(std::string(op) + ": pos/neg must share the relation");
  check_directedness(params, pos.relation, expected, op);
  if (expected == Directedness::Directed) {
    if (pos.head.index != neg.head.index)
      throw ContractViolation(std::string(op) + ": pos/neg must share the head");
  } else {
    // <h,t,r> == <t,h,r>: the uncorrupted entity may sit in either slot.
    const bool shared = pos.head.index == neg.head.index || pos.head.index == neg.tail.index ||
                        pos.tail.index == neg.head.index || pos.tail.index == neg.tail.index;
    if (!shared)
      throw ContractViolation(std::string(op) + ": pos/neg must share an entity");
  }
}

PairGrad hinge_pair(const TripletBackward& pos, const TripletBackward& neg, double margin) {
  PairGrad out;
  const double loss = margin + pos.f - neg.f;
  if (loss <= 0.0) return out;  // inactive hinge: empty gradients
  out.loss = loss;
  apply_contribution(out.grads, pos, 1.0);
  apply_contribution(out.grads, neg, -1.0);
  return out;
}

}  // namespace

PairGrad directed_pair_grad(const ModelParams& params, const Triplet& pos, const Triplet& neg,
                            double margin, bool use_attention, bool rescale_attention) {
  check_pair(params, pos, neg, Directedness::Directed, "directed_pair_grad");
  // Cheap forward pass first; the hinge is often inactive.
  const double f_pos = directed_distance(params, pos.head, pos.tail, pos.relation, use_attention,
                                         rescale_attention);
  const double f_neg = directed_distance(params, neg.head, neg.tail, neg.relation, use_attention,
                                         rescale_attention);
  if (margin + f_pos - f_neg <= 0.0) return {};
  return hinge_pair(directed_backward(params, pos, use_attention, rescale_attention),
                    directed_backward(params, neg, use_attention, rescale_attention), margin);
}

PairGrad undirected_pair_grad(const ModelParams& params, const Triplet& pos, const Triplet& neg,
                              double margin, bool use_attention, bool rescale_attention) {
  check_pair(params, pos, neg, Directedness::Undirected, "undirected_pair_grad");
  return hinge_pair(undirected_backward(params, pos, use_attention, rescale_attention),
                    undirected_backward(params, neg, use_attention, rescale_attention), margin);
}

PairGrad transe_pair_grad(const ModelParams& params, const Triplet& pos, const Triplet& neg,
                          double margin) {
  if (pos.relation != neg.relation || pos.head.index != neg.head.index)
    throw ContractViolation("transe_pair_grad: pos/neg must share head and relation");
  const auto h = params.entity_emb.col(pos.head.index);
  const auto r = params.rel_emb.col(pos.relation);
  const Vector d_pos = h + r - params.entity_emb.col(pos.tail.index);
  const Vector d_neg = h + r - params.entity_emb.col(neg.tail.index);
  PairGrad out;
  const double loss = margin + d_pos.squaredNorm() - d_neg.squaredNorm();
  if (loss <= 0.0) return out;
  out.loss = loss;
  const Vector g_shared = 2.0 * (d_pos - d_neg);
  out.grads.add(ParamFamily::EntityEmb, pos.head.index, g_shared);
  out.grads.add(ParamFamily::RelEmb, pos.relation, g_shared);
  out.grads.add(ParamFamily::EntityEmb, pos.tail.index, -2.0 * d_pos);
  out.grads.add(ParamFamily::EntityEmb, neg.tail.index, 2.0 * d_neg);
  return out;
}

PairGrad distmult_pair_grad(const ModelParams& params, const Triplet& pos, const Triplet& neg) {
  check_pair(params, pos, neg, Directedness::Undirected, "distmult_pair_grad");
  const auto h = params.entity_emb.col(pos.head.index);
  const auto t_pos = params.entity_emb.col(pos.tail.index);
  const auto t_neg = params.entity_emb.col(neg.tail.index);
  const auto r = params.rel_emb.col(pos.relation);

  const double s_pos = h.cwiseProduct(t_pos).dot(r);
  const double s_neg = h.cwiseProduct(t_neg).dot(r);
  const double x = s_neg - s_pos;
  PairGrad out;
  out.loss = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  const double sig = 1.0 / (1.0 + std::exp(-x));
  out.grads.add(ParamFamily::EntityEmb, pos.head.index, sig * r.cwiseProduct(t_neg - t_pos));
  out.grads.add(ParamFamily::EntityEmb, pos.tail.index, -sig * r.cwiseProduct(h));
  out.grads.add(ParamFamily::EntityEmb, neg.tail.index, sig * r.cwiseProduct(h));
  out.grads.add(ParamFamily::RelEmb, pos.relation, sig * h.cwiseProduct(t_neg - t_pos));
  return out;
}

// ---------------------------------------------------------------------------
// Finite differences

namespace {

double& param_ref(ModelParams& params, const ParamCoord& c) {
  switch (c.family) {
    case ParamFamily::EntityEmb: return params.entity_emb(c.row, c.index);
    case ParamFamily::EntityProj: return params.entity_proj(c.row, c.index);
    case ParamFamily::RelEmb: return params.rel_emb(c.row, c.index);
    case ParamFamily::RelProj: return params.rel_proj(c.row, c.index);
    case ParamFamily::AttWeight: return params.att_weight.at(c.index)(c.row, c.col);
    case ParamFamily::AttBias: return params.att_bias(c.row, c.index);
  }
  throw ContractViolation("unknown parameter family");
}

}  // namespace

double param_get(const ModelParams& params, const ParamCoord& coord) {
  return param_ref(const_cast<ModelParams&>(params), coord);
}

void param_set(ModelParams& params, const ParamCoord& coord, double value) {
  param_ref(params, coord) = value;
}

std::vector<ParamCoord> coords_of(const GradientSet& grads) {
  std::vector<ParamCoord> out;
  for (const auto& [key, g] : grads.vectors)
    for (int row = 0; row < g.size(); ++row)
      out.push_back(ParamCoord{key.family, key.index, row, 0});
  for (const auto& [rel, g] : grads.att_weights)
    for (int row = 0; row < g.rows(); ++row)
      for (int col = 0; col < g.cols(); ++col)
        out.push_back(ParamCoord{ParamFamily::AttWeight, rel, row, col});
  return out;
}

double analytic_at(const GradientSet& grads, const ParamCoord& coord) {
  if (coord.family == ParamFamily::AttWeight) {
    auto it = grads.att_weights.find(coord.index);
    return it == grads.att_weights.end() ? 0.0 : it->second(coord.row, coord.col);
  }
  auto it = grads.vectors.find(SlotKey{coord.family, coord.index});
  return it == grads.vectors.end() ? 0.0 : it->second(coord.row);
}

double finite_difference_check(const std::function<double(const ModelParams&)>& score,
                               const ModelParams& params, const GradientSet& analytic,
                               const std::vector<ParamCoord>& coords, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-4))
    throw ContractViolation("finite_difference_check: eps must be in [1e-7, 1e-4]");
  ModelParams work = params;
  double max_rel = 0.0;
  for (const ParamCoord& coord : coords) {
    const double original = param_get(work, coord);
    param_set(work, coord, original + eps);
    const double f_plus = score(work);
    param_set(work, coord, original - eps);
    const double f_minus = score(work);
    param_set(work, coord, original);
    if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
      throw NumericalError("finite_difference_check: score is non-finite");
    const double numeric = (f_plus - f_minus) / (2.0 * eps);
    const double rel =
        std::abs(analytic_at(analytic, coord) - numeric) / std::max(1.0, std::abs(numeric));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace ugrec
