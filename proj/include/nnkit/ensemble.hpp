#pragma once

// Decision-level ensemble strategies: Top-Two-Voting, top-1 voting (bagging)
// and normalized-output integration, plus rank-distribution analytics.
// All pure functions on double logits; vote weights alpha/beta default to
// 1.9/1.0 so two second places outrank one first place.

#include <cstdint>
#include <vector>

#include "nnkit/tensor.hpp"

namespace nnkit {

/// Rank scores: the largest logit gets C-1, the smallest 0. Ties award the
/// higher score to the lower class index.
std::vector<int> rank_vector(const std::vector<double> &logits);

/// Direct vote vector: alpha on the top-1 class, beta on the top-2, else 0.
std::vector<double> t2v_label_vector(const std::vector<int> &ranks, double alpha, double beta);

/// Arithmetic form (alpha-2beta)*max(S+2-C,0) + beta*max(S+3-C,0); agrees
/// with the direct form on every permutation.
std::vector<double> t2v_label_vector_fast(const std::vector<int> &ranks, double alpha,
                                          double beta);

struct EnsembleOutcome {
  std::vector<double> aggregate;
  std::size_t predicted = 0; // argmax, lowest index wins ties
};

/// Sum of per-network vote vectors; no normalization.
EnsembleOutcome t2v(const std::vector<std::vector<double>> &outputs, double alpha, double beta);

/// Bagging: each network casts one vote on its argmax class.
EnsembleOutcome top1_vote(const std::vector<std::vector<double>> &outputs);

/// Sum of softmax-normalized outputs.
EnsembleOutcome noi(const std::vector<std::vector<double>> &outputs);

/// fractions[k] = share of samples whose true label ranks (k+1)-th in the
/// network output. fractions[0] equals top-1 accuracy exactly.
std::vector<double> rank_distribution(const Tensor &logits,
                                      const std::vector<std::uint16_t> &labels);

} // namespace nnkit
