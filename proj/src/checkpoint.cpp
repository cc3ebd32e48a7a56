#include "nnkit/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nnkit/specio.hpp"

namespace nnkit {

namespace {

constexpr char kMagic[8] = {'N', 'N', 'K', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream &out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char *>(b), 4);
}

std::uint32_t read_u32(std::istream &in, std::uint64_t offset, const char *what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char *>(b), 4);
  if (!in)
    throw FormatError(std::string("checkpoint truncated while reading ") + what, offset);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::string shape_token(const std::vector<std::size_t> &shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i)
    s += (i ? "x" : "") + std::to_string(shape[i]);
  return s;
}

std::vector<std::size_t> parse_shape_token(const std::string &tok) {
  std::vector<std::size_t> shape;
  std::string cur;
  for (char c : tok + "x") {
    if (c == 'x') {
      if (cur.empty())
        throw ConfigError("bad shape token '" + tok + "'");
      shape.push_back(static_cast<std::size_t>(std::stoull(cur)));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return shape;
}

} // namespace

void save_checkpoint(const NetworkState &state, const std::string &path) {
  std::ostringstream header;
  header << render_spec(state.spec);
  header << "meta.seed = " << state.seed << "\n";
  header << "meta.epochs = " << state.epoch << "\n";
  header << "meta.well_trained = " << (state.well_trained ? 1 : 0) << "\n";
  header << "meta.loss_history = ";
  for (std::size_t i = 0; i < state.loss_history.size(); ++i)
    header << (i ? "," : "") << format_double(state.loss_history[i]);
  header << "\n";
  std::uint64_t offset = 0;
  for (const auto &[name, t] : state.params) {
    header << "tensor " << name << " " << shape_token(t.shape()) << " @" << offset << "\n";
    offset += t.size() * 4;
  }
  std::string htext = header.str();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw InputError("cannot open '" + path + "' for writing");
  out.write(kMagic, 8);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(htext.size()));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const auto &[name, t] : state.params) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::uint32_t bits;
      float v = t[i];
      std::memcpy(&bits, &v, 4);
      write_u32(out, bits);
    }
  }
  if (!out)
    throw InputError("write failed for '" + path + "'");
}

std::string checkpoint_header(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open checkpoint file '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("bad checkpoint magic", 0);
  std::uint32_t version = read_u32(in, 8, "version");
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 8);
  std::uint32_t hlen = read_u32(in, 12, "header length");
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  if (!in)
    throw FormatError("checkpoint truncated in header", 16);
  return htext;
}

NetworkState load_checkpoint(const std::string &path) {
  std::string htext = checkpoint_header(path);
  std::uint64_t blob_start = 16 + htext.size();

  // Split header into spec lines, metadata and the tensor manifest.
  std::string spec_text;
  NetworkState state;
  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
    std::uint64_t offset;
  };
  std::vector<Entry> manifest;
  std::istringstream hs(htext);
  std::string line;
  while (std::getline(hs, line)) {
    if (line.rfind("net.", 0) == 0) {
      spec_text += line + "\n";
    } else if (line.rfind("meta.", 0) == 0) {
      auto eq = line.find('=');
      std::string key = line.substr(0, eq);
      key.erase(key.find_last_not_of(" \t") + 1);
      std::string val = line.substr(eq + 1);
      val.erase(0, val.find_first_not_of(" \t"));
      if (key == "meta.seed")
        state.seed = std::stoull(val);
      else if (key == "meta.epochs")
        state.epoch = static_cast<std::size_t>(std::stoull(val));
      else if (key == "meta.well_trained")
        state.well_trained = val != "0";
      else if (key == "meta.loss_history") {
        std::stringstream vs(val);
        std::string item;
        while (std::getline(vs, item, ','))
          if (!item.empty())
            state.loss_history.push_back(std::stod(item));
      }
    } else if (line.rfind("tensor ", 0) == 0) {
      std::istringstream ls(line);
      std::string tag, name, shape, at;
      ls >> tag >> name >> shape >> at;
      if (name.empty() || shape.empty() || at.size() < 2 || at[0] != '@')
        throw FormatError("bad tensor manifest line '" + line + "'", 16);
      manifest.push_back({name, parse_shape_token(shape), std::stoull(at.substr(1))});
    }
  }
  try {
    state.spec = parse_spec(spec_text);
    state.spec.validate();
  } catch (const ConfigError &e) {
    throw FormatError(std::string("checkpoint spec invalid: ") + e.what(), 16);
  }

  // The manifest must cover exactly the parameter slots of the spec.
  std::size_t slots = 0;
  for_each_param_slot(state.spec, [&](const std::string &name,
                                      const std::vector<std::size_t> &shape, std::size_t,
                                      bool) {
    bool found = false;
    for (const auto &e : manifest)
      if (e.name == name) {
        if (e.shape != shape)
          throw FormatError("tensor '" + name + "' has shape " + shape_token(e.shape) +
                                ", spec expects " + shape_token(shape),
                            16);
        found = true;
      }
    if (!found)
      throw FormatError("checkpoint is missing tensor '" + name + "'", 16);
    ++slots;
  });
  if (manifest.size() != slots)
    throw FormatError("checkpoint manifest holds " + std::to_string(manifest.size()) +
                          " tensors, spec expects " + std::to_string(slots),
                      16);

  std::ifstream in(path, std::ios::binary);
  for (const auto &e : manifest) {
    in.seekg(static_cast<std::streamoff>(blob_start + e.offset));
    Tensor t(e.shape);
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::uint32_t bits = read_u32(in, blob_start + e.offset + i * 4, "parameter blob");
      float v;
      std::memcpy(&v, &bits, 4);
      if (std::isnan(v))
        throw FormatError("NaN parameter in tensor '" + e.name + "'",
                          blob_start + e.offset + i * 4);
      t[i] = v;
    }
    state.params.emplace(e.name, std::move(t));
  }
  return state;
}

} // namespace nnkit
