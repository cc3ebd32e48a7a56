#include "nnkit/config.hpp"

#include <fstream>
#include <sstream>

namespace nnkit {

const std::vector<KeyDoc> &RunConfig::schema() {
  static const std::vector<KeyDoc> keys = {
      {"data.classes", "5", "number of classes for gen-data"},
      {"data.counts", "400,400,400,400,400", "per-class training sample counts"},
      {"data.test_counts", "", "per-class test counts; empty = balanced quarter of training"},
      {"data.size", "16", "square image size in pixels (multiple of 8)"},
      {"data.noise", "0.1", "Gaussian pixel noise sigma"},
      {"data.seed", "42", "dataset generator seed"},
      {"data.train", "", "training dataset path used by the fuse command"},
      {"net.conv_channels", "8,16,32", "output channels of the three conv stages"},
      {"net.hidden", "64", "dense hidden width"},
      {"net.fa.enabled", "true", "replace the first convolution with the FA fusion block"},
      {"net.fa.lambda", "0.3", "fusion weight for the default FA regions"},
      {"net.fa.branch_ksize", "3", "FA branch kernel size (odd)"},
      {"net.fa.regions", "",
       "row:col:h:w:lambda;... crop regions; empty = quarters and lower-central half"},
      {"loss.policy", "lsr:0.8,ce:0.2", "loss kinds with per-batch selection probabilities"},
      {"loss.epsilon", "0.1", "LSR smoothing factor"},
      {"loss.seed", "0", "loss-policy stream seed"},
      {"train.batch_size", "128", "mini-batch size (shrunk to the dataset if larger)"},
      {"train.max_epochs", "30", "epoch cap per training run"},
      {"train.lr1", "0.0003", "phase-1 learning rate (cosine annealing)"},
      {"train.lr2", "1e-05", "phase-2 learning rate (step decay)"},
      {"train.cosine_period", "0", "cosine period in epochs; 0 = max_epochs"},
      {"train.lr_min", "0", "cosine floor"},
      {"train.step_gamma", "0.9", "step decay factor in (0,1]"},
      {"train.step_interval", "5", "epochs between step decays"},
      {"train.plateau_window", "5", "epochs in the plateau window"},
      {"train.plateau_loss_tol", "0.01", "loss fluctuation tolerance"},
      {"train.plateau_acc_tol", "0.005", "accuracy fluctuation tolerance"},
      {"train.flip_prob", "0.5", "horizontal flip probability per image"},
      {"train.seed", "0", "training stream seed (shuffle, flips)"},
      {"train.stop_on_plateau", "false", "stop at the phase-2 plateau instead of the cap"},
      {"adam.beta1", "0.9", "Adam first-moment decay"},
      {"adam.beta2", "0.999", "Adam second-moment decay"},
      {"adam.eps", "1e-08", "Adam denominator epsilon"},
      {"fga.fusions", "2", "fused children per generation"},
      {"fga.parents", "3", "parents per fusion"},
      {"fga.fresh", "2", "fresh random networks per generation"},
      {"fga.tau", "0.5", "Boltzmann selection temperature"},
      {"fga.child_epoch_cap", "20", "epoch cap when retraining children"},
      {"fga.seed", "0", "FGA selection stream seed"},
      {"ensemble.alpha", "1.9", "T2V weight of the top-1 class"},
      {"ensemble.beta", "1", "T2V weight of the top-2 class"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto &k : schema())
    values_[k.key] = k.default_value;
}

RunConfig RunConfig::from_text(const std::string &text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#')
      continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + " has no '=': '" + line + "'");
    auto trim = [](std::string s) {
      std::size_t a = s.find_first_not_of(" \t");
      std::size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return from_text(text.str());
}

void RunConfig::set(const std::string &key, const std::string &value) {
  auto it = values_.find(key);
  if (it == values_.end())
    throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

const std::string &RunConfig::get(const std::string &key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::size_t RunConfig::get_size(const std::string &key) const {
  try {
    return static_cast<std::size_t>(std::stoull(get(key)));
  } catch (const std::exception &) {
    throw ConfigError("config key '" + key + "' is not a non-negative integer: '" + get(key) +
                      "'");
  }
}

double RunConfig::get_double(const std::string &key) const {
  try {
    return std::stod(get(key));
  } catch (const std::exception &) {
    throw ConfigError("config key '" + key + "' is not a number: '" + get(key) + "'");
  }
}

bool RunConfig::get_bool(const std::string &key) const {
  const std::string &v = get(key);
  if (v == "true" || v == "1")
    return true;
  if (v == "false" || v == "0")
    return false;
  throw ConfigError("config key '" + key + "' is not a boolean: '" + v + "'");
}

std::uint64_t RunConfig::get_seed(const std::string &key) const {
  try {
    return std::stoull(get(key));
  } catch (const std::exception &) {
    throw ConfigError("config key '" + key + "' is not a seed: '" + get(key) + "'");
  }
}

std::vector<std::size_t> RunConfig::get_counts(const std::string &key) const {
  std::vector<std::size_t> out;
  const std::string &v = get(key);
  if (v.empty())
    return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(static_cast<std::size_t>(std::stoull(item)));
    } catch (const std::exception &) {
      throw ConfigError("config key '" + key + "' holds a bad count '" + item + "'");
    }
  }
  return out;
}

std::string RunConfig::render() const {
  std::ostringstream out;
  for (const auto &k : schema()) {
    out << "# " << k.doc << "\n";
    out << k.key << " = " << values_.at(k.key) << "\n";
  }
  return out.str();
}

} // namespace nnkit
