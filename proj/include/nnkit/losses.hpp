#pragma once

// Classification losses and the per-batch random loss selection policy.

#include <cstdint>
#include <string>
#include <vector>

#include "nnkit/nn.hpp"
#include "nnkit/rng.hpp"
#include "nnkit/tensor.hpp"

namespace nnkit {

enum class LossKind { CE, WCE, LSR };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string &name);

template <typename T> struct LossOut {
  T value;
  TensorT<T> dlogits;
};

namespace detail {

// log q_i for all i via log-sum-exp; finite for any finite logits.
template <typename T> std::vector<T> log_softmax(const TensorT<T> &logits) {
  T mx = logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i)
    mx = std::max(mx, logits[i]);
  T sum = T(0);
  for (std::size_t i = 0; i < logits.size(); ++i)
    sum += std::exp(logits[i] - mx);
  T lse = mx + std::log(sum);
  std::vector<T> lq(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    lq[i] = logits[i] - lse;
  return lq;
}

} // namespace detail

/// Cross entropy against a one-hot label, optionally class-weighted:
/// L = -w_y log q_y, dL/dz = w_y (q - onehot(y)).
template <typename T>
LossOut<T> ce_loss(const TensorT<T> &logits, std::size_t label,
                   const std::vector<T> *weights = nullptr) {
  std::size_t C = logits.size();
  if (label >= C)
    throw InputError("ce_loss label " + std::to_string(label) + " out of range for C=" +
                     std::to_string(C));
  if (weights && weights->size() != C)
    throw ConfigError("ce_loss class weight vector length mismatch");
  auto lq = detail::log_softmax(logits);
  T w = weights ? (*weights)[label] : T(1);
  LossOut<T> out{-w * lq[label], TensorT<T>({C})};
  for (std::size_t i = 0; i < C; ++i) {
    T q = std::exp(lq[i]);
    out.dlogits[i] = w * (q - (i == label ? T(1) : T(0)));
  }
  return out;
}

/// Label-smoothing regularization: target (1-eps) on the label and
/// eps/(C-1) on every other class.
template <typename T>
LossOut<T> lsr_loss(const TensorT<T> &logits, std::size_t label, double epsilon) {
  std::size_t C = logits.size();
  if (C < 2)
    throw ConfigError("lsr_loss requires C >= 2");
  if (label >= C)
    throw InputError("lsr_loss label out of range");
  if (epsilon < 0.0 || epsilon > 1.0)
    throw ConfigError("lsr_loss epsilon must lie in [0,1]");
  auto lq = detail::log_softmax(logits);
  T on = static_cast<T>(1.0 - epsilon);
  T off = static_cast<T>(epsilon / static_cast<double>(C - 1));
  LossOut<T> out{T(0), TensorT<T>({C})};
  T acc = T(0);
  for (std::size_t i = 0; i < C; ++i) {
    T p = (i == label) ? on : off;
    acc -= p * lq[i];
    out.dlogits[i] = std::exp(lq[i]) - p;
  }
  out.value = acc;
  return out;
}

struct PolicyEntry {
  LossKind kind;
  double prob;
};

/// Random multi-loss rule: one entry is drawn per batch (never a blend).
struct LossPolicy {
  std::vector<PolicyEntry> entries;
  double epsilon = 0.1;               // LSR smoothing factor
  std::vector<double> class_weights;  // used by WCE; empty means unweighted
  std::uint64_t seed = 0;

  void validate() const;
};

/// One draw from the policy's own stream; sequence is fixed by the seed.
LossKind pick_loss(const LossPolicy &policy, Rng &rng);

/// Inverse-frequency weights w_c = N / (C * n_c); balanced counts give ones.
std::vector<double> class_weights(const std::vector<std::size_t> &counts);

/// Parse "lsr:0.8,ce:0.2" into policy entries.
std::vector<PolicyEntry> parse_policy_entries(const std::string &text);
std::string render_policy_entries(const std::vector<PolicyEntry> &entries);

} // namespace nnkit
