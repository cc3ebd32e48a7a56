#include "nnkit/losses.hpp"

#include <cmath>
#include <sstream>

namespace nnkit {

std::string to_string(LossKind kind) {
  switch (kind) {
  case LossKind::CE:
    return "ce";
  case LossKind::WCE:
    return "wce";
  case LossKind::LSR:
    return "lsr";
  }
  return "?";
}

LossKind loss_kind_from_string(const std::string &name) {
  if (name == "ce")
    return LossKind::CE;
  if (name == "wce")
    return LossKind::WCE;
  if (name == "lsr")
    return LossKind::LSR;
  throw ConfigError("unknown loss kind '" + name + "' (expected ce, wce or lsr)");
}

void LossPolicy::validate() const {
  if (entries.empty())
    throw ConfigError("loss policy has no entries");
  double total = 0.0;
  for (const auto &e : entries) {
    if (e.prob < 0.0)
      throw ConfigError("loss policy probability must be >= 0");
    total += e.prob;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ConfigError("loss policy probabilities sum to " + std::to_string(total) +
                      ", expected 1");
  if (epsilon < 0.0 || epsilon > 1.0)
    throw ConfigError("loss policy epsilon must lie in [0,1]");
  for (double w : class_weights)
    if (!(w >= 0.0))
      throw ConfigError("loss policy class weights must be >= 0");
}

LossKind pick_loss(const LossPolicy &policy, Rng &rng) {
  if (policy.entries.empty())
    throw ConfigError("pick_loss called with an empty policy");
  double u = rng.uniform();
  double cum = 0.0;
  for (const auto &e : policy.entries) {
    cum += e.prob;
    if (u < cum)
      return e.kind;
  }
  return policy.entries.back().kind;
}

std::vector<double> class_weights(const std::vector<std::size_t> &counts) {
  if (counts.empty())
    throw InputError("class_weights needs at least one class");
  std::size_t total = 0;
  for (std::size_t c : counts) {
    if (c == 0)
      throw InputError("class_weights: zero sample count for a class");
    total += c;
  }
  double C = static_cast<double>(counts.size());
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    w[i] = static_cast<double>(total) / (C * static_cast<double>(counts[i]));
  return w;
}

std::vector<PolicyEntry> parse_policy_entries(const std::string &text) {
  std::vector<PolicyEntry> entries;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("bad loss policy entry '" + item + "', expected kind:prob");
    std::string kind = item.substr(0, colon);
    double prob;
    try {
      prob = std::stod(item.substr(colon + 1));
    } catch (const std::exception &) {
      throw ConfigError("bad probability in loss policy entry '" + item + "'");
    }
    entries.push_back({loss_kind_from_string(kind), prob});
  }
  if (entries.empty())
    throw ConfigError("empty loss policy '" + text + "'");
  return entries;
}

std::string render_policy_entries(const std::vector<PolicyEntry> &entries) {
  std::string out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i)
      out += ",";
    std::ostringstream p;
    p << entries[i].prob;
    out += to_string(entries[i].kind) + ":" + p.str();
  }
  return out;
}

} // namespace nnkit
