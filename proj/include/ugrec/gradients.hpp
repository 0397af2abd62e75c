#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "ugrec/model.hpp"
#include "ugrec/types.hpp"

namespace ugrec {

enum class ParamFamily : std::uint8_t {
  EntityEmb = 0,
  EntityProj = 1,
  RelEmb = 2,
  RelProj = 3,
  AttWeight = 4,
  AttBias = 5,
};

struct SlotKey {
  ParamFamily family;
  std::int32_t index;
  auto operator<=>(const SlotKey&) const = default;
};

/// Sparse gradient: only slots touched by a triplet pair appear. Vector
/// families map to dense k-vectors, attention weights to k x 2k blocks.
/// Accumulation is slot-wise addition (commutative and associative).
struct GradientSet {
  std::map<SlotKey, Vector> vectors;
  std::map<std::int32_t, Matrix> att_weights;

  void add(ParamFamily family, std::int32_t index, const Vector& g);
  void add_weight(std::int32_t relation, const Matrix& g);
  void accumulate(const GradientSet& other, double scale = 1.0);
  bool empty() const { return vectors.empty() && att_weights.empty(); }
};

struct PairGrad {
  double loss = 0.0;
  GradientSet grads;  // empty when the hinge is inactive
};

/// Hinge pair loss [m + f(pos) - f(neg)]_+ over the attended directed
/// distance, with exact gradients for every touched parameter. ReLU takes
/// subgradient 0 at 0; the hinge takes 0 at its kink.
PairGrad directed_pair_grad(const ModelParams& params, const Triplet& pos, const Triplet& neg,
                            double margin, bool use_attention, bool rescale_attention = false);

/// Same hinge over the hyperplane distance, differentiating through the
/// attended normal and the |r|^2 quotient.
PairGrad undirected_pair_grad(const ModelParams& params, const Triplet& pos, const Triplet& neg,
                              double margin, bool use_attention, bool rescale_attention = false);

/// Plain translation hinge on raw embeddings (co-occurrence as directed
/// pairs; no projections, no attention).
PairGrad transe_pair_grad(const ModelParams& params, const Triplet& pos, const Triplet& neg,
                          double margin);

/// BPR-style softplus(s_neg - s_pos) over the DistMult similarity.
PairGrad distmult_pair_grad(const ModelParams& params, const Triplet& pos, const Triplet& neg);

/// One scalar parameter coordinate; col is only used for AttWeight.
struct ParamCoord {
  ParamFamily family;
  std::int32_t index = 0;
  int row = 0;
  int col = 0;
};

double param_get(const ModelParams& params, const ParamCoord& coord);
void param_set(ModelParams& params, const ParamCoord& coord, double value);

/// Every coordinate present in a gradient set.
std::vector<ParamCoord> coords_of(const GradientSet& grads);

/// Analytic partial at a coordinate (0 for untouched slots).
double analytic_at(const GradientSet& grads, const ParamCoord& coord);

/// Central-difference check of `analytic` against `score` at the sampled
/// coordinates; returns max over coords of |analytic - numeric| /
/// max(1, |numeric|). The score must be smooth at the evaluation point;
/// callers resample configurations that sit on a ReLU or hinge kink.
double finite_difference_check(const std::function<double(const ModelParams&)>& score,
                               const ModelParams& params, const GradientSet& analytic,
                               const std::vector<ParamCoord>& coords, double eps);

}  // namespace ugrec
