#pragma once

// Feature fusion among networks: element-wise weight averaging of
// same-architecture parents inside a selection / retraining loop.

#include <cstdint>
#include <string>
#include <vector>

#include "nnkit/model.hpp"
#include "nnkit/trainer.hpp"

namespace nnkit {

struct GaConfig {
  std::size_t fusions = 2;        // fused children per generation
  std::size_t parents_k = 3;      // parents per fusion
  std::size_t fresh = 2;          // newly initialized networks per generation
  double tau = 0.5;               // selection temperature
  std::size_t child_epoch_cap = 20;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Member {
  NetworkState state;
  double fitness = 0.0; // mean training loss over the final plateau window
  std::string name;
};

struct Population {
  std::vector<Member> members;
  std::size_t generation = 0;

  /// All members must share one spec and be trained; fitness must be finite.
  void validate() const;
};

/// Mean training loss over the trailing `window` epochs.
double member_fitness(const NetworkState &state, std::size_t window);

/// Child whose every parameter tensor is the element-wise arithmetic mean of
/// the parents' tensors (conv kernels, biases and dense weights alike).
/// The child is untrained: it must be retrained before classifying.
NetworkState fuse_weights(const std::vector<const NetworkState *> &parents);

/// Boltzmann weights over losses: p_l = exp(-loss_l/tau) / sum. Lower loss
/// means strictly higher probability; invariant to a constant loss shift.
std::vector<double> selection_probabilities(const std::vector<double> &losses, double tau);

/// K distinct indices drawn without replacement, each draw proportional to
/// the renormalized selection probabilities of the remaining members.
std::vector<std::size_t> select_parents(const std::vector<double> &losses, std::size_t K,
                                        double tau, Rng &rng);

struct FusionRecord {
  std::string child;
  std::vector<std::string> parents;
};

struct GenerationLog {
  std::size_t generation = 0;
  std::vector<FusionRecord> fusions;
  std::vector<std::pair<std::string, std::uint64_t>> fresh_seeds;
  std::vector<std::pair<std::string, double>> fitness_after;
};

/// One Algorithm-1 generation: select + fuse children, initialize fresh
/// networks, retrain both sets to plateau under the epoch cap, then keep the
/// best incumbents so the population size stays constant.
Population evolve_generation(const Population &pop, const GaConfig &ga, const TrainConfig &tcfg,
                             const DatasetBundle &data, std::size_t parallel,
                             GenerationLog *log = nullptr);

} // namespace nnkit
