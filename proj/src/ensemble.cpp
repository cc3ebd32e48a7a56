#include "nnkit/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nnkit/common.hpp"

namespace nnkit {

namespace {

std::size_t argmax_low_tie(const std::vector<double> &v) {
  std::size_t arg = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[arg])
      arg = i;
  return arg;
}

void check_outputs(const std::vector<std::vector<double>> &outputs) {
  if (outputs.empty())
    throw InputError("ensemble needs at least one network output");
  for (const auto &o : outputs) {
    if (o.size() != outputs[0].size())
      throw InputError("ensemble outputs disagree on the class count");
    for (double v : o)
      if (!std::isfinite(v))
        throw InputError("ensemble output contains a non-finite logit");
  }
}

} // namespace

std::vector<int> rank_vector(const std::vector<double> &logits) {
  std::size_t C = logits.size();
  std::vector<std::size_t> idx(C);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (logits[a] != logits[b])
      return logits[a] > logits[b];
    return a < b; // tie: lower class index ranks higher
  });
  std::vector<int> ranks(C);
  for (std::size_t pos = 0; pos < C; ++pos)
    ranks[idx[pos]] = static_cast<int>(C - 1 - pos);
  return ranks;
}

std::vector<double> t2v_label_vector(const std::vector<int> &ranks, double alpha, double beta) {
  std::size_t C = ranks.size();
  if (C < 2)
    throw ConfigError("t2v needs at least two classes");
  std::vector<double> v(C, 0.0);
  for (std::size_t i = 0; i < C; ++i) {
    if (ranks[i] == static_cast<int>(C - 1))
      v[i] = alpha;
    else if (ranks[i] == static_cast<int>(C - 2))
      v[i] = beta;
  }
  return v;
}

std::vector<double> t2v_label_vector_fast(const std::vector<int> &ranks, double alpha,
                                          double beta) {
  std::size_t C = ranks.size();
  if (C < 2)
    throw ConfigError("t2v needs at least two classes");
  std::vector<double> v(C);
  for (std::size_t i = 0; i < C; ++i) {
    double s = static_cast<double>(ranks[i]);
    double c = static_cast<double>(C);
    v[i] = (alpha - 2.0 * beta) * std::max(s + 2.0 - c, 0.0) + beta * std::max(s + 3.0 - c, 0.0);
  }
  return v;
}

EnsembleOutcome t2v(const std::vector<std::vector<double>> &outputs, double alpha, double beta) {
  check_outputs(outputs);
  std::size_t C = outputs[0].size();
  if (C < 2)
    throw ConfigError("t2v needs at least two classes");
  EnsembleOutcome out;
  out.aggregate.assign(C, 0.0);
  for (const auto &o : outputs) {
    auto votes = t2v_label_vector_fast(rank_vector(o), alpha, beta);
    for (std::size_t i = 0; i < C; ++i)
      out.aggregate[i] += votes[i];
  }
  out.predicted = argmax_low_tie(out.aggregate);
  return out;
}

EnsembleOutcome top1_vote(const std::vector<std::vector<double>> &outputs) {
  check_outputs(outputs);
  std::size_t C = outputs[0].size();
  EnsembleOutcome out;
  out.aggregate.assign(C, 0.0);
  for (const auto &o : outputs)
    out.aggregate[argmax_low_tie(o)] += 1.0;
  out.predicted = argmax_low_tie(out.aggregate);
  return out;
}

EnsembleOutcome noi(const std::vector<std::vector<double>> &outputs) {
  check_outputs(outputs);
  std::size_t C = outputs[0].size();
  EnsembleOutcome out;
  out.aggregate.assign(C, 0.0);
  for (const auto &o : outputs) {
    double mx = *std::max_element(o.begin(), o.end());
    double sum = 0.0;
    std::vector<double> e(C);
    for (std::size_t i = 0; i < C; ++i) {
      e[i] = std::exp(o[i] - mx);
      sum += e[i];
    }
    for (std::size_t i = 0; i < C; ++i)
      out.aggregate[i] += e[i] / sum;
  }
  out.predicted = argmax_low_tie(out.aggregate);
  return out;
}

std::vector<double> rank_distribution(const Tensor &logits,
                                      const std::vector<std::uint16_t> &labels) {
  if (labels.empty())
    throw InputError("rank_distribution needs a nonempty evaluation set");
  if (logits.rank() != 2 || logits.extent(0) != labels.size())
    throw InputError("rank_distribution: logits must be [N,C] with one row per label");
  std::size_t C = logits.extent(1);
  std::vector<double> fractions(C, 0.0);
  std::vector<double> row(C);
  for (std::size_t s = 0; s < labels.size(); ++s) {
    if (labels[s] >= C)
      throw InputError("rank_distribution: label out of range");
    for (std::size_t i = 0; i < C; ++i)
      row[i] = static_cast<double>(logits[s * C + i]);
    auto ranks = rank_vector(row);
    std::size_t position = C - 1 - static_cast<std::size_t>(ranks[labels[s]]); // 0-based
    fractions[position] += 1.0;
  }
  for (double &f : fractions)
    f /= static_cast<double>(labels.size());
  return fractions;
}

} // namespace nnkit
