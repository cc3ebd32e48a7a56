#pragma once

// Learning-rate schedules and the plateau trigger that switches between them.

#include <cstddef>
#include <vector>

namespace nnkit {

/// lr_min + 0.5*(lr_max - lr_min)*(1 + cos(pi*t/T)) for 0 <= t <= T.
double cosine_lr(std::size_t epoch, std::size_t period, double lr_max, double lr_min);

/// base * gamma^floor(epoch/interval), gamma in (0,1].
double step_lr(std::size_t epochs_since_switch, double base, double gamma, std::size_t interval);

/// True iff the trailing `window` entries of both series fluctuate less than
/// their tolerance (max - min). Shorter history means "not ready": false.
bool plateau_reached(const std::vector<double> &losses, const std::vector<double> &accuracies,
                     std::size_t window, double loss_tol, double acc_tol);

} // namespace nnkit
