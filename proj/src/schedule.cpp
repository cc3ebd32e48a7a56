#include "nnkit/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "nnkit/common.hpp"

namespace nnkit {

double cosine_lr(std::size_t epoch, std::size_t period, double lr_max, double lr_min) {
  if (period == 0)
    throw ConfigError("cosine_lr period must be positive");
  if (epoch > period)
    throw ConfigError("cosine_lr epoch exceeds period");
  constexpr double pi = 3.14159265358979323846;
  double t = static_cast<double>(epoch) / static_cast<double>(period);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(pi * t));
}

double step_lr(std::size_t epochs_since_switch, double base, double gamma, std::size_t interval) {
  if (interval == 0)
    throw ConfigError("step_lr interval must be positive");
  if (gamma <= 0.0 || gamma > 1.0)
    throw ConfigError("step_lr gamma must lie in (0,1]");
  return base * std::pow(gamma, static_cast<double>(epochs_since_switch / interval));
}

namespace {

bool range_below(const std::vector<double> &series, std::size_t window, double tol) {
  auto first = series.end() - static_cast<std::ptrdiff_t>(window);
  double lo = *std::min_element(first, series.end());
  double hi = *std::max_element(first, series.end());
  return hi - lo < tol;
}

} // namespace

bool plateau_reached(const std::vector<double> &losses, const std::vector<double> &accuracies,
                     std::size_t window, double loss_tol, double acc_tol) {
  if (window < 2)
    throw ConfigError("plateau window must be >= 2");
  if (losses.size() != accuracies.size())
    throw InputError("plateau history series differ in length");
  if (losses.size() < window)
    return false;
  return range_below(losses, window, loss_tol) && range_below(accuracies, window, acc_tol);
}

} // namespace nnkit
