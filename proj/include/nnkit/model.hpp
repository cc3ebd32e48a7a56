#pragma once

// Parameter container, seeded initialization, and the full forward/backward
// pass of a network, including the FA feature-fusion first layer.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nnkit/net_spec.hpp"
#include "nnkit/nn.hpp"
#include "nnkit/rng.hpp"

namespace nnkit {

template <typename T> using GradMapT = std::map<std::string, TensorT<T>>;
using GradMap = GradMapT<float>;

/// Named parameters plus training bookkeeping. Single-owner mutable: one
/// trainer mutates a state at a time; snapshots may be read concurrently.
template <typename T> struct NetworkStateT {
  NetworkSpec spec;
  std::map<std::string, TensorT<T>> params;
  std::size_t epoch = 0;
  std::uint64_t seed = 0;
  std::vector<double> loss_history; // per completed epoch
  bool well_trained = false;
};

using NetworkState = NetworkStateT<float>;

namespace detail {

template <typename T>
void init_weight(TensorT<T> &w, std::size_t fan_in, Rng &rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = static_cast<T>(rng.uniform(-bound, bound));
}

} // namespace detail

/// Visit every parameter slot of a spec in its fixed build order.
/// fn(name, shape, fan_in, is_weight).
template <typename Fn> void for_each_param_slot(const NetworkSpec &spec, Fn &&fn) {
  std::size_t in_c = spec.in_ch;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const auto &l = spec.layers[li];
    if (l.kind == LayerKind::Conv) {
      std::size_t fan = in_c * l.ksize * l.ksize;
      fn(l.name + ".weight", std::vector<std::size_t>{l.out_ch, in_c, l.ksize, l.ksize}, fan,
         true);
      fn(l.name + ".bias", std::vector<std::size_t>{l.out_ch}, fan, false);
      if (spec.fa.enabled && li == 0) {
        std::size_t bk = spec.fa.branch_ksize;
        std::size_t bfan = in_c * bk * bk;
        for (std::size_t r = 0; r < spec.fa.regions.size(); ++r) {
          std::string base = l.name + ".branch" + std::to_string(r);
          fn(base + ".weight", std::vector<std::size_t>{l.out_ch, in_c, bk, bk}, bfan, true);
          fn(base + ".bias", std::vector<std::size_t>{l.out_ch}, bfan, false);
        }
      }
      in_c = l.out_ch;
    } else if (l.kind == LayerKind::Dense) {
      fn(l.name + ".weight", std::vector<std::size_t>{l.out_features, l.in_features},
         l.in_features, true);
      fn(l.name + ".bias", std::vector<std::size_t>{l.out_features}, l.in_features, false);
    }
  }
}

/// Seeded He-uniform weights, zero biases. Same (spec, seed) gives
/// bit-identical parameters on every platform.
template <typename T>
NetworkStateT<T> build(const NetworkSpec &spec, std::uint64_t seed) {
  spec.validate();
  NetworkStateT<T> state;
  state.spec = spec;
  state.seed = seed;
  Rng rng(seed);
  for_each_param_slot(spec, [&](const std::string &name, const std::vector<std::size_t> &shape,
                                std::size_t fan_in, bool is_weight) {
    TensorT<T> t(shape);
    if (is_weight)
      detail::init_weight(t, fan_in, rng);
    state.params.emplace(name, std::move(t));
  });
  return state;
}

/// Crop [C, row:row+h, col:col+w] of a [C,H,W] tensor.
template <typename T>
TensorT<T> crop(const TensorT<T> &img, const FaRegion &r) {
  std::size_t C = img.extent(0);
  TensorT<T> out({C, r.h, r.w});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < r.h; ++y)
      for (std::size_t x = 0; x < r.w; ++x)
        out.at3(c, y, x) = img.at3(c, r.row + y, r.col + x);
  return out;
}

/// One FA branch per region. Branch weights are the per-region kernel/bias
/// pairs; lambdas scale each embedded branch map.
template <typename T> struct FaBranchParams {
  const TensorT<T> *weight;
  const TensorT<T> *bias;
};

/// F' = conv(image, main) + sum_k lambda_k * Embed(conv(crop_k(image), branch_k), region_k).
/// Branch maps land on the output window spatially aligned with their crop.
template <typename T>
TensorT<T> fa_forward(const TensorT<T> &image, const TensorT<T> &main_w, const TensorT<T> &main_b,
                      std::size_t stride, std::size_t pad,
                      const std::vector<FaBranchParams<T>> &branches,
                      const std::vector<FaRegion> &regions,
                      std::vector<TensorT<T>> *crops_out = nullptr,
                      std::vector<TensorT<T>> *branch_maps_out = nullptr) {
  if (branches.size() != regions.size())
    throw ConfigError("fa_forward: one branch parameter set per region required");
  for (const auto &r : regions)
    if (r.row + r.h > image.extent(1) || r.col + r.w > image.extent(2))
      throw ConfigError("fa_forward: region outside image");
  TensorT<T> out = conv2d_forward(image, main_w, main_b, stride, pad);
  for (std::size_t k = 0; k < regions.size(); ++k) {
    const auto &r = regions[k];
    TensorT<T> c = crop(image, r);
    std::size_t bk = branches[k].weight->extent(2);
    TensorT<T> bmap = conv2d_forward(c, *branches[k].weight, *branches[k].bias, std::size_t(1),
                                     (bk - 1) / 2);
    if (bmap.extent(0) != out.extent(0))
      throw ConfigError("fa_forward: branch output channels differ from main output");
    T lam = static_cast<T>(r.lambda);
    for (std::size_t ch = 0; ch < bmap.extent(0); ++ch)
      for (std::size_t y = 0; y < r.h; ++y)
        for (std::size_t x = 0; x < r.w; ++x)
          out.at3(ch, r.row + y, r.col + x) += lam * bmap.at3(ch, y, x);
    if (crops_out)
      crops_out->push_back(std::move(c));
    if (branch_maps_out)
      branch_maps_out->push_back(std::move(bmap));
  }
  return out;
}

template <typename T>
void add_into(GradMapT<T> &grads, const std::string &name, const TensorT<T> &delta) {
  auto it = grads.find(name);
  if (it == grads.end()) {
    grads.emplace(name, delta);
    return;
  }
  if (!it->second.same_shape(delta))
    throw ConfigError("gradient shape mismatch for parameter '" + name + "'");
  for (std::size_t i = 0; i < delta.size(); ++i)
    it->second[i] += delta[i];
}

template <typename T> GradMapT<T> zero_grads_like(const NetworkStateT<T> &state) {
  GradMapT<T> g;
  for (const auto &[name, p] : state.params)
    g.emplace(name, TensorT<T>(p.shape()));
  return g;
}

/// Everything the backward pass needs from one sample's forward pass.
template <typename T> struct ForwardTrace {
  std::vector<TensorT<T>> acts;                    // acts[0]=input, acts[i+1]=layer i output
  std::vector<std::vector<std::uint8_t>> poolarg;  // per layer, empty unless maxpool
  std::vector<TensorT<T>> fa_crops;                // per FA region
};

template <typename T>
const TensorT<T> &forward_sample(const NetworkStateT<T> &state, const TensorT<T> &image,
                                 ForwardTrace<T> &trace) {
  const NetworkSpec &spec = state.spec;
  if (image.shape() != std::vector<std::size_t>{spec.in_ch, spec.in_h, spec.in_w})
    throw ConfigError("forward: image shape " + shape_str(image.shape()) +
                      " does not match network input");
  trace.acts.clear();
  trace.poolarg.assign(spec.layers.size(), {});
  trace.fa_crops.clear();
  trace.acts.reserve(spec.layers.size() + 1);
  trace.acts.push_back(image);
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const auto &l = spec.layers[li];
    const TensorT<T> &x = trace.acts.back();
    switch (l.kind) {
    case LayerKind::Conv: {
      const auto &w = state.params.at(l.name + ".weight");
      const auto &b = state.params.at(l.name + ".bias");
      if (spec.fa.enabled && li == 0) {
        std::vector<FaBranchParams<T>> branches;
        for (std::size_t r = 0; r < spec.fa.regions.size(); ++r) {
          std::string base = l.name + ".branch" + std::to_string(r);
          branches.push_back(
              {&state.params.at(base + ".weight"), &state.params.at(base + ".bias")});
        }
        trace.acts.push_back(
            fa_forward(x, w, b, l.stride, l.pad, branches, spec.fa.regions, &trace.fa_crops));
      } else {
        trace.acts.push_back(conv2d_forward(x, w, b, l.stride, l.pad));
      }
      break;
    }
    case LayerKind::Relu:
      trace.acts.push_back(relu_forward(x));
      break;
    case LayerKind::MaxPool2: {
      auto r = maxpool2x2_forward(x);
      trace.poolarg[li] = std::move(r.argmax);
      trace.acts.push_back(std::move(r.out));
      break;
    }
    case LayerKind::Flatten:
      trace.acts.push_back(flatten(x));
      break;
    case LayerKind::Dense:
      trace.acts.push_back(dense_forward(x, state.params.at(l.name + ".weight"),
                                         state.params.at(l.name + ".bias")));
      break;
    case LayerKind::GlobalAvgPool:
      trace.acts.push_back(global_avg_pool(x));
      break;
    case LayerKind::AttentionNoop:
      trace.acts.push_back(x);
      break;
    }
  }
  return trace.acts.back();
}

/// Gradients of every parameter for one sample; input gradient is discarded
/// at the first layer. Accumulates into `grads` (which must be zero-filled or
/// hold prior accumulation with matching shapes).
template <typename T>
void backward_sample(const NetworkStateT<T> &state, const ForwardTrace<T> &trace,
                     const TensorT<T> &dlogits, GradMapT<T> &grads) {
  const NetworkSpec &spec = state.spec;
  TensorT<T> g = dlogits;
  for (std::size_t li = spec.layers.size(); li-- > 0;) {
    const auto &l = spec.layers[li];
    const TensorT<T> &x = trace.acts[li];
    switch (l.kind) {
    case LayerKind::Conv: {
      const auto &w = state.params.at(l.name + ".weight");
      const auto &b = state.params.at(l.name + ".bias");
      if (spec.fa.enabled && li == 0) {
        // Main trunk sees the full upstream map.
        auto main_grad = conv2d_backward(x, w, b, g, l.stride, l.pad);
        add_into(grads, l.name + ".weight", main_grad.params.at("weight"));
        add_into(grads, l.name + ".bias", main_grad.params.at("bias"));
        for (std::size_t r = 0; r < spec.fa.regions.size(); ++r) {
          const auto &reg = spec.fa.regions[r];
          std::string base = l.name + ".branch" + std::to_string(r);
          const auto &bw = state.params.at(base + ".weight");
          const auto &bb = state.params.at(base + ".bias");
          // Branch upstream = lambda * window of g.
          TensorT<T> gwin({g.extent(0), reg.h, reg.w});
          T lam = static_cast<T>(reg.lambda);
          for (std::size_t c = 0; c < g.extent(0); ++c)
            for (std::size_t y = 0; y < reg.h; ++y)
              for (std::size_t xx = 0; xx < reg.w; ++xx)
                gwin.at3(c, y, xx) = lam * g.at3(c, reg.row + y, reg.col + xx);
          auto br = conv2d_backward(trace.fa_crops[r], bw, bb, gwin, std::size_t(1),
                                    (spec.fa.branch_ksize - 1) / 2);
          add_into(grads, base + ".weight", br.params.at("weight"));
          add_into(grads, base + ".bias", br.params.at("bias"));
        }
        return; // first layer: input gradient not needed
      }
      if (li == 0) {
        // First layer: only weight gradients are needed.
        std::size_t m = w.extent(0), n = w.extent(1), s1 = w.extent(2), s2 = w.extent(3);
        TensorT<T> dw(w.shape());
        TensorT<T> db(b.shape());
        kernels::conv2d_backward_weights(x.data(), n, x.extent(1), x.extent(2), g.data(), m,
                                         g.extent(1), g.extent(2), s1, s2, l.stride, l.pad,
                                         dw.data(), db.data());
        add_into(grads, l.name + ".weight", dw);
        add_into(grads, l.name + ".bias", db);
        return;
      }
      auto cg = conv2d_backward(x, w, b, g, l.stride, l.pad);
      add_into(grads, l.name + ".weight", cg.params.at("weight"));
      add_into(grads, l.name + ".bias", cg.params.at("bias"));
      g = std::move(cg.input);
      break;
    }
    case LayerKind::Relu:
      g = relu_backward(x, g);
      break;
    case LayerKind::MaxPool2:
      g = maxpool2x2_backward(g, trace.poolarg[li], x.shape());
      break;
    case LayerKind::Flatten:
      g = unflatten(g, x.shape());
      break;
    case LayerKind::Dense: {
      auto dg = dense_backward(x, state.params.at(l.name + ".weight"), g);
      add_into(grads, l.name + ".weight", dg.params.at("weight"));
      add_into(grads, l.name + ".bias", dg.params.at("bias"));
      g = std::move(dg.input);
      break;
    }
    case LayerKind::GlobalAvgPool:
      g = global_avg_pool_backward(g, x.shape());
      break;
    case LayerKind::AttentionNoop:
      break;
    }
  }
}

/// Batched forward: images [B,C,H,W] -> logits [B,num_classes]. Samples are
/// independent, so the loop parallelizes across them. With `traces` the
/// per-sample activations are kept for a following backward pass.
template <typename T>
TensorT<T> forward(const NetworkStateT<T> &state, const TensorT<T> &batch,
                   std::vector<ForwardTrace<T>> *traces) {
  if (batch.rank() != 4)
    throw ConfigError("forward: batch must be [B,C,H,W], got " + shape_str(batch.shape()));
  std::size_t B = batch.extent(0);
  std::size_t C = state.spec.num_classes;
  std::size_t img = batch.extent(1) * batch.extent(2) * batch.extent(3);
  TensorT<T> logits({B, C});
  if (traces)
    traces->assign(B, {});
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(B); ++s) {
    TensorT<T> image({batch.extent(1), batch.extent(2), batch.extent(3)});
    std::copy(batch.data() + s * img, batch.data() + (s + 1) * img, image.data());
    ForwardTrace<T> scratch;
    ForwardTrace<T> &tr = traces ? (*traces)[static_cast<std::size_t>(s)] : scratch;
    const TensorT<T> &out = forward_sample(state, image, tr);
    std::copy(out.data(), out.data() + C, logits.data() + s * C);
  }
  return logits;
}

template <typename T>
TensorT<T> forward(const NetworkStateT<T> &state, const TensorT<T> &batch) {
  return forward(state, batch, static_cast<std::vector<ForwardTrace<T>> *>(nullptr));
}

/// Batched backward: per-sample gradients are reduced in sample order, so
/// results do not depend on the number of threads.
template <typename T>
GradMapT<T> backward(const NetworkStateT<T> &state, const std::vector<ForwardTrace<T>> &traces,
                     const TensorT<T> &dlogits_batch) {
  std::size_t B = traces.size();
  if (dlogits_batch.rank() != 2 || dlogits_batch.extent(0) != B)
    throw ConfigError("backward: upstream must be [B,num_classes]");
  std::size_t C = dlogits_batch.extent(1);
  std::vector<GradMapT<T>> per_sample(B);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(B); ++s) {
    TensorT<T> g({C});
    std::copy(dlogits_batch.data() + s * C, dlogits_batch.data() + (s + 1) * C, g.data());
    backward_sample(state, traces[static_cast<std::size_t>(s)], g,
                    per_sample[static_cast<std::size_t>(s)]);
  }
  GradMapT<T> total = zero_grads_like(state);
  for (std::size_t s = 0; s < B; ++s)
    for (auto &[name, t] : per_sample[s]) {
      auto &dst = total.at(name);
      for (std::size_t i = 0; i < t.size(); ++i)
        dst[i] += t[i];
    }
  return total;
}

} // namespace nnkit
