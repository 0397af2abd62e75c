#pragma once

#include "ugrec/model.hpp"
#include "ugrec/types.hpp"

namespace ugrec {

/// Recomputes the directed / undirected distance of a triplet by a naive
/// independent route: the TransD mapping matrices are materialized in full,
/// softmax and the hyperplane formula are written out as scalar loops, and
/// nothing is shared with the fast paths in model.cpp. Used to cross-check
/// the production scorer.
double oracle_distance(const Triplet& triplet, const ModelParams& params, bool use_attention,
                       bool rescale_attention = false);

}  // namespace ugrec
