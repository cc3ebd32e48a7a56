#include "nnkit/net_spec.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "nnkit/specio.hpp"
#include "nnkit/tensor.hpp"

namespace nnkit {

std::string to_string(LayerKind kind) {
  switch (kind) {
  case LayerKind::Conv:
    return "conv";
  case LayerKind::Relu:
    return "relu";
  case LayerKind::MaxPool2:
    return "maxpool2";
  case LayerKind::Flatten:
    return "flatten";
  case LayerKind::Dense:
    return "dense";
  case LayerKind::GlobalAvgPool:
    return "gap";
  case LayerKind::AttentionNoop:
    return "attention";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string &name) {
  if (name == "conv")
    return LayerKind::Conv;
  if (name == "relu")
    return LayerKind::Relu;
  if (name == "maxpool2")
    return LayerKind::MaxPool2;
  if (name == "flatten")
    return LayerKind::Flatten;
  if (name == "dense")
    return LayerKind::Dense;
  if (name == "gap")
    return LayerKind::GlobalAvgPool;
  if (name == "attention")
    return LayerKind::AttentionNoop;
  throw ConfigError("unknown layer kind '" + name + "'");
}

void NetworkSpec::validate() const {
  if (in_ch == 0 || in_h == 0 || in_w == 0)
    throw ConfigError("network input shape must be positive");
  if (num_classes < 2)
    throw ConfigError("network needs at least 2 classes");
  if (layers.empty())
    throw ConfigError("network has no layers");
  auto chain = shape_chain(); // throws on incomposable layers
  const auto &out = chain.back();
  if (out.size() != 1 || out[0] != num_classes)
    throw ConfigError("network head emits " + shape_str(out) + ", expected [" +
                      std::to_string(num_classes) + "] logits");
  if (fa.enabled) {
    if (layers[0].kind != LayerKind::Conv)
      throw ConfigError("FA block requires the first layer to be a convolution");
    const auto &c = layers[0];
    if (c.stride != 1 || c.pad != (c.ksize - 1) / 2 || c.ksize % 2 == 0)
      throw ConfigError("FA host convolution must be odd-sized, stride 1, 'same' padded so "
                        "branch windows tile exactly");
    if (fa.branch_ksize % 2 == 0)
      throw ConfigError("FA branch kernel size must be odd");
    if (fa.regions.empty())
      throw ConfigError("FA enabled but no regions given");
    for (const auto &r : fa.regions) {
      if (r.h == 0 || r.w == 0 || r.row + r.h > in_h || r.col + r.w > in_w)
        throw ConfigError("FA region lies outside the input image");
      if (!std::isfinite(r.lambda))
        throw ConfigError("FA region weight must be finite");
    }
  }
}

std::vector<std::vector<std::size_t>> NetworkSpec::shape_chain() const {
  std::vector<std::vector<std::size_t>> chain;
  std::vector<std::size_t> cur = {in_ch, in_h, in_w};
  chain.push_back(cur);
  for (const auto &l : layers) {
    switch (l.kind) {
    case LayerKind::Conv: {
      if (cur.size() != 3)
        throw ConfigError("layer '" + l.name + "': convolution needs a [C,H,W] input, got " +
                          shape_str(cur));
      if (l.out_ch == 0 || l.ksize == 0 || l.stride == 0)
        throw ConfigError("layer '" + l.name + "': bad convolution geometry");
      if (l.ksize > cur[1] + 2 * l.pad || l.ksize > cur[2] + 2 * l.pad)
        throw ConfigError("layer '" + l.name + "': kernel exceeds padded input");
      cur = {l.out_ch, (cur[1] + 2 * l.pad - l.ksize) / l.stride + 1,
             (cur[2] + 2 * l.pad - l.ksize) / l.stride + 1};
      break;
    }
    case LayerKind::Relu:
    case LayerKind::AttentionNoop:
      break;
    case LayerKind::MaxPool2:
      if (cur.size() != 3 || cur[1] % 2 != 0 || cur[2] % 2 != 0)
        throw ConfigError("layer '" + l.name + "': maxpool2 needs even [C,H,W], got " +
                          shape_str(cur));
      cur = {cur[0], cur[1] / 2, cur[2] / 2};
      break;
    case LayerKind::Flatten: {
      std::size_t n = 1;
      for (std::size_t e : cur)
        n *= e;
      cur = {n};
      break;
    }
    case LayerKind::Dense: {
      std::size_t n = 1;
      for (std::size_t e : cur)
        n *= e;
      if (cur.size() != 1)
        throw ConfigError("layer '" + l.name + "': dense needs a flat input, got " +
                          shape_str(cur));
      if (n != l.in_features)
        throw ConfigError("layer '" + l.name + "': dense expects " +
                          std::to_string(l.in_features) + " inputs but receives " +
                          std::to_string(n));
      if (l.out_features == 0)
        throw ConfigError("layer '" + l.name + "': dense output must be positive");
      cur = {l.out_features};
      break;
    }
    case LayerKind::GlobalAvgPool:
      if (cur.size() != 3)
        throw ConfigError("layer '" + l.name + "': gap needs a [C,H,W] input");
      cur = {cur[0]};
      break;
    }
    chain.push_back(cur);
  }
  return chain;
}

std::size_t NetworkSpec::parameter_count() const {
  std::size_t total = 0;
  std::size_t in_c = in_ch;
  for (const auto &l : layers) {
    if (l.kind == LayerKind::Conv) {
      total += l.out_ch * in_c * l.ksize * l.ksize + l.out_ch;
      if (fa.enabled && &l == &layers[0])
        total += fa.regions.size() * (l.out_ch * in_c * fa.branch_ksize * fa.branch_ksize + l.out_ch);
      in_c = l.out_ch;
    } else if (l.kind == LayerKind::Dense) {
      total += l.in_features * l.out_features + l.out_features;
    }
  }
  return total;
}

FaConfig default_fa_regions(std::size_t h, std::size_t w, double lambda) {
  FaConfig fa;
  fa.enabled = true;
  fa.branch_ksize = 3;
  fa.regions = {
      {0, 0, h / 2, w / 2, lambda},         // upper-left quarter
      {0, w / 2, h / 2, w / 2, lambda},     // upper-right quarter
      {h / 2, w / 4, h / 2, w / 2, lambda}, // lower-central half
  };
  return fa;
}

NetworkSpec minicnn_spec(std::size_t size, std::size_t num_classes, std::size_t c1,
                         std::size_t c2, std::size_t c3, std::size_t hidden, bool with_fa) {
  if (size % 8 != 0)
    throw ConfigError("minicnn size must be a multiple of 8");
  NetworkSpec s;
  s.in_ch = 1;
  s.in_h = s.in_w = size;
  s.num_classes = num_classes;
  if (with_fa)
    s.fa = default_fa_regions(size, size);
  std::size_t flat = c3 * (size / 8) * (size / 8);
  s.layers = {
      {LayerKind::Conv, "conv1", c1, 3, 1, 1, 0, 0},
      {LayerKind::Relu, "relu1"},
      {LayerKind::MaxPool2, "pool1"},
      {LayerKind::Conv, "conv2", c2, 3, 1, 1, 0, 0},
      {LayerKind::Relu, "relu2"},
      {LayerKind::MaxPool2, "pool2"},
      {LayerKind::Conv, "conv3", c3, 3, 1, 1, 0, 0},
      {LayerKind::Relu, "relu3"},
      {LayerKind::MaxPool2, "pool3"},
      {LayerKind::Flatten, "flat"},
      {LayerKind::Dense, "fc1", 0, 0, 1, 0, flat, hidden},
      {LayerKind::Relu, "relu4"},
      {LayerKind::Dense, "fc2", 0, 0, 1, 0, hidden, num_classes},
  };
  s.validate();
  return s;
}

} // namespace nnkit

namespace nnkit {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::size_t to_size(const std::string &s, const std::string &what) {
  try {
    long long v = std::stoll(s);
    if (v < 0)
      throw std::out_of_range("negative");
    return static_cast<std::size_t>(v);
  } catch (const std::exception &) {
    throw ConfigError("bad " + what + " '" + s + "' in network spec text");
  }
}

double to_double(const std::string &s, const std::string &what) {
  try {
    return std::stod(s);
  } catch (const std::exception &) {
    throw ConfigError("bad " + what + " '" + s + "' in network spec text");
  }
}

} // namespace

std::string render_spec(const NetworkSpec &spec) {
  std::ostringstream out;
  out << "net.input = " << spec.in_ch << "x" << spec.in_h << "x" << spec.in_w << "\n";
  out << "net.classes = " << spec.num_classes << "\n";
  out << "net.fa.enabled = " << (spec.fa.enabled ? 1 : 0) << "\n";
  out << "net.fa.branch_ksize = " << spec.fa.branch_ksize << "\n";
  out << "net.fa.regions = ";
  for (std::size_t i = 0; i < spec.fa.regions.size(); ++i) {
    const auto &r = spec.fa.regions[i];
    if (i)
      out << ";";
    out << r.row << ":" << r.col << ":" << r.h << ":" << r.w << ":" << format_double(r.lambda);
  }
  out << "\n";
  out << "net.layers = ";
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto &l = spec.layers[i];
    if (i)
      out << ",";
    out << to_string(l.kind) << ":" << l.name;
    if (l.kind == LayerKind::Conv)
      out << ":" << l.out_ch << ":" << l.ksize << ":" << l.stride << ":" << l.pad;
    else if (l.kind == LayerKind::Dense)
      out << ":" << l.in_features << ":" << l.out_features;
  }
  out << "\n";
  return out.str();
}

NetworkSpec parse_spec(const std::string &text) {
  NetworkSpec spec;
  spec.fa = FaConfig{};
  spec.layers.clear();
  std::istringstream in(text);
  std::string line;
  bool saw_layers = false;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (line.empty() || line[0] == '#' || eq == std::string::npos)
      continue;
    auto trim = [](std::string s) {
      std::size_t a = s.find_first_not_of(" \t");
      std::size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key == "net.input") {
      auto p = split(val, 'x');
      if (p.size() != 3)
        throw ConfigError("net.input must be CxHxW");
      spec.in_ch = to_size(p[0], "input channels");
      spec.in_h = to_size(p[1], "input height");
      spec.in_w = to_size(p[2], "input width");
    } else if (key == "net.classes") {
      spec.num_classes = to_size(val, "class count");
    } else if (key == "net.fa.enabled") {
      spec.fa.enabled = to_size(val, "fa flag") != 0;
    } else if (key == "net.fa.branch_ksize") {
      spec.fa.branch_ksize = to_size(val, "fa branch kernel");
    } else if (key == "net.fa.regions") {
      spec.fa.regions.clear();
      if (!val.empty()) {
        for (const auto &tok : split(val, ';')) {
          auto f = split(tok, ':');
          if (f.size() != 5)
            throw ConfigError("bad FA region '" + tok + "', expected row:col:h:w:lambda");
          spec.fa.regions.push_back({to_size(f[0], "region row"), to_size(f[1], "region col"),
                                     to_size(f[2], "region height"), to_size(f[3], "region width"),
                                     to_double(f[4], "region lambda")});
        }
      }
    } else if (key == "net.layers") {
      saw_layers = true;
      for (const auto &tok : split(val, ',')) {
        auto f = split(tok, ':');
        if (f.size() < 2)
          throw ConfigError("bad layer token '" + tok + "'");
        LayerSpec l;
        l.kind = layer_kind_from_string(f[0]);
        l.name = f[1];
        if (l.kind == LayerKind::Conv) {
          if (f.size() != 6)
            throw ConfigError("conv layer token needs out:k:stride:pad");
          l.out_ch = to_size(f[2], "conv channels");
          l.ksize = to_size(f[3], "conv kernel");
          l.stride = to_size(f[4], "conv stride");
          l.pad = to_size(f[5], "conv padding");
        } else if (l.kind == LayerKind::Dense) {
          if (f.size() != 4)
            throw ConfigError("dense layer token needs in:out");
          l.in_features = to_size(f[2], "dense inputs");
          l.out_features = to_size(f[3], "dense outputs");
        } else if (f.size() != 2) {
          throw ConfigError("layer token '" + tok + "' takes no parameters");
        }
        spec.layers.push_back(l);
      }
    } else {
      throw ConfigError("unknown network spec key '" + key + "'");
    }
  }
  if (!saw_layers)
    throw ConfigError("network spec text has no net.layers line");
  return spec;
}

} // namespace nnkit
