#include "nnkit/fga.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nnkit {

void GaConfig::validate() const {
  if (tau <= 0.0)
    throw ConfigError("FGA selection temperature must be positive");
  if (parents_k == 0)
    throw ConfigError("FGA needs at least one parent per fusion");
  if (child_epoch_cap == 0)
    throw ConfigError("FGA child epoch cap must be positive");
}

void Population::validate() const {
  if (members.empty())
    throw ConfigError("population is empty");
  for (const auto &m : members) {
    if (!(m.state.spec == members[0].state.spec))
      throw ConfigError("population members must share one network spec");
    if (!std::isfinite(m.fitness) || m.fitness < 0.0)
      throw InputError("population fitness values must be finite and >= 0");
  }
}

double member_fitness(const NetworkState &state, std::size_t window) {
  if (state.loss_history.empty())
    throw PreconditionError("member has no training history");
  std::size_t n = std::min(window, state.loss_history.size());
  double sum = 0.0;
  for (std::size_t i = state.loss_history.size() - n; i < state.loss_history.size(); ++i)
    sum += state.loss_history[i];
  return sum / static_cast<double>(n);
}

NetworkState fuse_weights(const std::vector<const NetworkState *> &parents) {
  if (parents.empty())
    throw ConfigError("fuse_weights needs at least one parent");
  for (const auto *p : parents)
    if (!(p->spec == parents[0]->spec))
      throw ConfigError("fuse_weights: parents have mismatched specs");

  NetworkState child;
  child.spec = parents[0]->spec;
  double inv_m = 1.0 / static_cast<double>(parents.size());
  for (const auto &[name, first] : parents[0]->params) {
    Tensor mean(first.shape());
    for (std::size_t i = 0; i < mean.size(); ++i) {
      double acc = 0.0;
      for (const auto *p : parents)
        acc += static_cast<double>(p->params.at(name)[i]);
      mean[i] = static_cast<float>(acc * inv_m);
    }
    child.params.emplace(name, std::move(mean));
  }
  return child;
}

std::vector<double> selection_probabilities(const std::vector<double> &losses, double tau) {
  if (tau <= 0.0)
    throw ConfigError("selection temperature must be positive");
  if (losses.empty())
    throw InputError("selection_probabilities needs at least one loss");
  double lo = losses[0];
  for (double l : losses) {
    if (!std::isfinite(l))
      throw InputError("selection_probabilities: non-finite loss");
    lo = std::min(lo, l);
  }
  std::vector<double> p(losses.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    p[i] = std::exp(-(losses[i] - lo) / tau);
    sum += p[i];
  }
  for (double &v : p)
    v /= sum;
  return p;
}

std::vector<std::size_t> select_parents(const std::vector<double> &losses, std::size_t K,
                                        double tau, Rng &rng) {
  if (K > losses.size())
    throw ConfigError("select_parents: K exceeds population size");
  std::vector<std::size_t> alive(losses.size());
  std::iota(alive.begin(), alive.end(), 0);
  std::vector<std::size_t> picked;
  picked.reserve(K);
  for (std::size_t draw = 0; draw < K; ++draw) {
    std::vector<double> rem;
    rem.reserve(alive.size());
    for (std::size_t idx : alive)
      rem.push_back(losses[idx]);
    auto probs = selection_probabilities(rem, tau);
    double u = rng.uniform();
    double cum = 0.0;
    std::size_t chosen = alive.size() - 1;
    for (std::size_t i = 0; i < alive.size(); ++i) {
      cum += probs[i];
      if (u < cum) {
        chosen = i;
        break;
      }
    }
    picked.push_back(alive[chosen]);
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(chosen));
  }
  return picked;
}

Population evolve_generation(const Population &pop, const GaConfig &ga, const TrainConfig &tcfg,
                             const DatasetBundle &data, std::size_t parallel,
                             GenerationLog *log) {
  ga.validate();
  pop.validate();
  for (const auto &m : pop.members)
    if (!m.state.well_trained)
      throw PreconditionError("evolve_generation: member '" + m.name + "' is not trained");

  if (ga.fusions == 0 && ga.fresh == 0)
    return pop;

  if (ga.fusions + ga.fresh > pop.members.size())
    throw ConfigError("fusions + fresh exceeds the population size");
  if (ga.parents_k > pop.members.size())
    throw ConfigError("parents per fusion exceeds the population size");

  std::size_t next_gen = pop.generation + 1;
  Rng rng(derive_seed(ga.seed, next_gen));
  std::vector<double> losses;
  for (const auto &m : pop.members)
    losses.push_back(m.fitness);

  GenerationLog local_log;
  GenerationLog &glog = log ? *log : local_log;
  glog = {};
  glog.generation = next_gen;

  // Fused children from preferential parent selection.
  std::vector<NetworkState> newcomers;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < ga.fusions; ++i) {
    auto parent_idx = select_parents(losses, ga.parents_k, ga.tau, rng);
    std::vector<const NetworkState *> parents;
    FusionRecord rec;
    rec.child = "gen" + std::to_string(next_gen) + "_fused" + std::to_string(i);
    for (std::size_t idx : parent_idx) {
      parents.push_back(&pop.members[idx].state);
      rec.parents.push_back(pop.members[idx].name);
    }
    newcomers.push_back(fuse_weights(parents));
    names.push_back(rec.child);
    glog.fusions.push_back(std::move(rec));
  }

  // Fresh random networks for exploration.
  for (std::size_t r = 0; r < ga.fresh; ++r) {
    std::uint64_t seed = derive_seed(ga.seed, next_gen, 0xf0e5 + r);
    newcomers.push_back(build<float>(pop.members[0].state.spec, seed));
    std::string name = "gen" + std::to_string(next_gen) + "_fresh" + std::to_string(r);
    names.push_back(name);
    glog.fresh_seeds.emplace_back(name, seed);
  }

  // Retrain to plateau under the cap ("the fused network cannot directly
  // participate in the classification").
  TrainConfig child_cfg = tcfg;
  child_cfg.max_epochs = ga.child_epoch_cap;
  child_cfg.stop_on_plateau = true;
  child_cfg.seed = derive_seed(tcfg.seed, 0xc41d, next_gen);
  child_cfg.policy.seed = derive_seed(tcfg.policy.seed, 0xc41e, next_gen);
  train_population(newcomers, data, child_cfg, parallel);

  // Keep the best incumbents so the size stays constant.
  std::size_t keep = pop.members.size() - ga.fusions - ga.fresh;
  std::vector<std::size_t> order(pop.members.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pop.members[a].fitness < pop.members[b].fitness;
  });

  Population out;
  out.generation = next_gen;
  for (std::size_t k = 0; k < keep; ++k)
    out.members.push_back(pop.members[order[k]]);
  for (std::size_t k = 0; k < newcomers.size(); ++k) {
    Member m;
    m.fitness = member_fitness(newcomers[k], tcfg.plateau_window);
    m.state = std::move(newcomers[k]);
    m.name = names[k];
    out.members.push_back(std::move(m));
  }
  for (const auto &m : out.members)
    glog.fitness_after.emplace_back(m.name, m.fitness);
  out.validate();
  return out;
}

} // namespace nnkit
