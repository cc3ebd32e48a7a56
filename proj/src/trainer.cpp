#include "nnkit/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include <omp.h>

namespace nnkit {

void TrainConfig::validate() const {
  if (batch_size == 0)
    throw ConfigError("batch size must be positive");
  if (!(lr1 > lr2 && lr2 > 0.0))
    throw ConfigError("learning rates must satisfy lr1 > lr2 > 0");
  if (flip_prob < 0.0 || flip_prob > 1.0)
    throw ConfigError("flip probability must lie in [0,1]");
  if (plateau_window < 2)
    throw ConfigError("plateau window must be >= 2");
  if (step_gamma <= 0.0 || step_gamma > 1.0)
    throw ConfigError("step gamma must lie in (0,1]");
  if (step_interval == 0)
    throw ConfigError("step interval must be positive");
  policy.validate();
}

namespace {

struct Adam {
  GradMap m, v;
  std::size_t t = 0;
  double beta1, beta2, eps;

  Adam(const NetworkState &state, const TrainConfig &cfg)
      : m(zero_grads_like(state)), v(zero_grads_like(state)), beta1(cfg.beta1), beta2(cfg.beta2),
        eps(cfg.eps_adam) {}

  void step(NetworkState &state, const GradMap &grads, double lr) {
    ++t;
    float b1 = static_cast<float>(beta1), b2 = static_cast<float>(beta2);
    float corr1 = static_cast<float>(1.0 - std::pow(beta1, static_cast<double>(t)));
    float corr2 = static_cast<float>(1.0 - std::pow(beta2, static_cast<double>(t)));
    float flr = static_cast<float>(lr), feps = static_cast<float>(eps);
    for (auto &[name, p] : state.params) {
      const Tensor &g = grads.at(name);
      Tensor &mm = m.at(name);
      Tensor &vv = v.at(name);
      for (std::size_t i = 0; i < p.size(); ++i) {
        mm[i] = b1 * mm[i] + (1.0f - b1) * g[i];
        vv[i] = b2 * vv[i] + (1.0f - b2) * g[i] * g[i];
        float mhat = mm[i] / corr1;
        float vhat = vv[i] / corr2;
        p[i] -= flr * mhat / (std::sqrt(vhat) + feps);
      }
    }
  }
};

Tensor sample_image(const DatasetBundle &data, std::size_t idx) {
  std::size_t ch = data.images.extent(1), H = data.images.extent(2), W = data.images.extent(3);
  Tensor img({ch, H, W});
  const float *src = data.images.data() + idx * ch * H * W;
  std::copy(src, src + ch * H * W, img.data());
  return img;
}

std::vector<double> losses_of(const std::vector<EpochStats> &epochs, std::size_t from) {
  std::vector<double> out;
  for (std::size_t i = from; i < epochs.size(); ++i)
    out.push_back(epochs[i].loss);
  return out;
}

std::vector<double> accs_of(const std::vector<EpochStats> &epochs, std::size_t from) {
  std::vector<double> out;
  for (std::size_t i = from; i < epochs.size(); ++i)
    out.push_back(epochs[i].accuracy);
  return out;
}

} // namespace

TrainReport train(NetworkState &state, const DatasetBundle &data, const TrainConfig &cfg) {
  cfg.validate();
  data.validate();
  const NetworkSpec &spec = state.spec;
  if (data.images.extent(1) != spec.in_ch || data.images.extent(2) != spec.in_h ||
      data.images.extent(3) != spec.in_w)
    throw ConfigError("dataset image geometry does not match the network input");
  if (!cfg.policy.class_weights.empty() &&
      cfg.policy.class_weights.size() != spec.num_classes)
    throw ConfigError("policy class weights do not match the class count");

  TrainReport report;
  if (cfg.max_epochs == 0)
    return report;

  std::size_t N = data.size();
  std::size_t B = std::min(cfg.batch_size, N);
  std::size_t T = cfg.cosine_period == 0 ? cfg.max_epochs : cfg.cosine_period;
  std::size_t C = spec.num_classes;

  Rng data_rng(derive_seed(cfg.seed, 0x0da7a));
  Rng policy_rng(cfg.policy.seed);
  std::vector<float> wce_weights;
  for (double w : cfg.policy.class_weights)
    wce_weights.push_back(static_cast<float>(w));

  Adam adam(state, cfg);
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);

  bool switched = false;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    double lr = switched ? step_lr(epoch - report.switch_epoch, cfg.lr2, cfg.step_gamma,
                                   cfg.step_interval)
                         : cosine_lr(std::min(epoch, T), T, cfg.lr1, cfg.lr_min);
    data_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    EpochStats stats;
    stats.lr = lr;

    for (std::size_t start = 0; start < N; start += B) {
      std::size_t bsz = std::min(B, N - start);
      // All stochastic draws happen before the parallel sections.
      std::vector<char> flips(bsz);
      for (std::size_t s = 0; s < bsz; ++s)
        flips[s] = data_rng.uniform() < cfg.flip_prob ? 1 : 0;
      LossKind kind = pick_loss(cfg.policy, policy_rng);
      stats.loss_tally[static_cast<std::size_t>(kind)]++;

      Tensor batch({bsz, spec.in_ch, spec.in_h, spec.in_w});
      std::size_t img = spec.in_ch * spec.in_h * spec.in_w;
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(bsz); ++s) {
        Tensor im = sample_image(data, order[start + static_cast<std::size_t>(s)]);
        if (flips[s])
          im = flip_horizontal(im);
        std::copy(im.data(), im.data() + img, batch.data() + s * img);
      }

      std::vector<ForwardTrace<float>> traces;
      Tensor logits = forward(state, batch, &traces);

      Tensor dlogits({bsz, C});
      double batch_loss = 0.0;
      std::size_t batch_correct = 0;
      float inv_b = 1.0f / static_cast<float>(bsz);
      for (std::size_t s = 0; s < bsz; ++s) {
        std::size_t label = data.labels[order[start + s]];
        Tensor lg({C});
        std::copy(logits.data() + s * C, logits.data() + (s + 1) * C, lg.data());
        LossOut<float> lo;
        switch (kind) {
        case LossKind::CE:
          lo = ce_loss(lg, label);
          break;
        case LossKind::WCE:
          lo = ce_loss(lg, label, wce_weights.empty() ? nullptr : &wce_weights);
          break;
        case LossKind::LSR:
          lo = lsr_loss(lg, label, cfg.policy.epsilon);
          break;
        }
        batch_loss += lo.value;
        for (std::size_t i = 0; i < C; ++i)
          dlogits[s * C + i] = lo.dlogits[i] * inv_b;
        std::size_t arg = 0;
        for (std::size_t i = 1; i < C; ++i)
          if (lg[i] > lg[arg])
            arg = i;
        if (arg == label)
          ++batch_correct;
      }
      batch_loss /= static_cast<double>(bsz);
      if (!std::isfinite(batch_loss))
        throw InputError("training aborted: non-finite loss at epoch " + std::to_string(epoch) +
                         ", batch " + std::to_string(start / B) + ", loss kind " +
                         to_string(kind));
      loss_sum += batch_loss * static_cast<double>(bsz);
      correct += batch_correct;

      GradMap grads = backward(state, traces, dlogits);
      adam.step(state, grads, lr);
    }

    stats.loss = loss_sum / static_cast<double>(N);
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(N);
    report.epochs.push_back(stats);
    state.loss_history.push_back(stats.loss);
    state.epoch++;

    if (!switched) {
      if (plateau_reached(losses_of(report.epochs, 0), accs_of(report.epochs, 0),
                          cfg.plateau_window, cfg.plateau_loss_tol, cfg.plateau_acc_tol)) {
        switched = true;
        report.switch_epoch = epoch + 1;
      }
    } else if (!report.plateaued && report.switch_epoch <= epoch) {
      // Phase-2 plateau judged on epochs trained under lr2 only.
      if (plateau_reached(losses_of(report.epochs, report.switch_epoch),
                          accs_of(report.epochs, report.switch_epoch), cfg.plateau_window,
                          cfg.plateau_loss_tol, cfg.plateau_acc_tol)) {
        report.plateaued = true;
        if (cfg.stop_on_plateau)
          break;
      }
    }
  }

  state.well_trained = true;
  return report;
}

EvalResult evaluate(const NetworkState &state, const DatasetBundle &data) {
  data.validate();
  const NetworkSpec &spec = state.spec;
  if (data.images.extent(1) != spec.in_ch || data.images.extent(2) != spec.in_h ||
      data.images.extent(3) != spec.in_w)
    throw ConfigError("dataset image geometry does not match the network input");

  std::size_t N = data.size(), C = spec.num_classes;
  if (data.num_classes() > C)
    throw InputError("dataset has more classes than the network emits");
  EvalResult r;
  r.logits = Tensor({N, C});
  r.predicted.resize(N);

  std::size_t img = spec.in_ch * spec.in_h * spec.in_w;
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < N; start += kChunk) {
    std::size_t bsz = std::min(kChunk, N - start);
    Tensor batch({bsz, spec.in_ch, spec.in_h, spec.in_w});
    std::copy(data.images.data() + start * img, data.images.data() + (start + bsz) * img,
              batch.data());
    Tensor logits = forward(state, batch);
    std::copy(logits.data(), logits.data() + bsz * C, r.logits.data() + start * C);
  }

  std::vector<std::vector<std::size_t>> counts(data.num_classes(),
                                               std::vector<std::size_t>(C, 0));
  std::size_t correct = 0;
  for (std::size_t s = 0; s < N; ++s) {
    const float *lg = r.logits.data() + s * C;
    std::size_t arg = 0;
    for (std::size_t i = 1; i < C; ++i)
      if (lg[i] > lg[arg])
        arg = i;
    r.predicted[s] = static_cast<std::uint16_t>(arg);
    counts[data.labels[s]][arg]++;
    if (arg == data.labels[s])
      ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(N);
  r.confusion.assign(data.num_classes(), std::vector<double>(C, 0.0));
  r.per_class_accuracy.assign(data.num_classes(), 0.0);
  for (std::size_t t = 0; t < data.num_classes(); ++t) {
    double row_n = static_cast<double>(data.class_counts[t]);
    for (std::size_t p = 0; p < C; ++p)
      r.confusion[t][p] = static_cast<double>(counts[t][p]) / row_n;
    r.per_class_accuracy[t] = r.confusion[t][t];
  }
  return r;
}

TrainConfig config_for_member(const TrainConfig &base, std::size_t member_index) {
  TrainConfig cfg = base;
  cfg.seed = derive_seed(base.seed, 0x7ea1, member_index);
  cfg.policy.seed = derive_seed(base.policy.seed, 0x901c, member_index);
  return cfg;
}

std::vector<TrainReport> train_population(std::vector<NetworkState> &states,
                                          const DatasetBundle &data, const TrainConfig &cfg,
                                          std::size_t parallel) {
  std::size_t M = states.size();
  std::vector<TrainReport> reports(M);
  if (M == 0)
    return reports;
  parallel = std::max<std::size_t>(1, std::min(parallel, M));
  if (parallel == 1) {
    for (std::size_t k = 0; k < M; ++k)
      reports[k] = train(states[k], data, config_for_member(cfg, k));
    return reports;
  }

  std::exception_ptr error;
  std::vector<std::thread> workers;
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  for (std::size_t w = 0; w < parallel; ++w) {
    workers.emplace_back([&]() {
      omp_set_num_threads(1); // one kernel thread per training worker
      while (true) {
        std::size_t k = next.fetch_add(1);
        if (k >= M)
          return;
        try {
          reports[k] = train(states[k], data, config_for_member(cfg, k));
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error)
            error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto &t : workers)
    t.join();
  if (error)
    std::rethrow_exception(error);
  return reports;
}

} // namespace nnkit
