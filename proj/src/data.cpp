#include "nnkit/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "nnkit/rng.hpp"

namespace nnkit {

namespace {

constexpr char kMagic[8] = {'N', 'N', 'K', 'D', 'A', 'T', 'A', '\0'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream &out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char *>(b), 4);
}

std::uint32_t read_u32(std::istream &in, std::uint64_t &offset, const char *what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char *>(b), 4);
  if (!in)
    throw FormatError(std::string("dataset file truncated while reading ") + what, offset);
  offset += 4;
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

float quantize_u8(double v) {
  v = std::clamp(v, 0.0, 1.0);
  int q = static_cast<int>(std::lround(v * 255.0));
  return static_cast<float>(q) / 255.0f;
}

std::vector<std::string> default_class_names(std::size_t C) {
  std::vector<std::string> names(C);
  for (std::size_t i = 0; i < C; ++i)
    names[i] = "class" + std::to_string(i);
  return names;
}

} // namespace

void DatasetBundle::validate() const {
  if (labels.empty())
    throw InputError("dataset is empty");
  if (images.rank() != 4 || images.extent(0) != labels.size())
    throw InputError("dataset image tensor must be [N,C,H,W] with one image per label");
  std::size_t C = class_counts.size();
  std::vector<std::size_t> seen(C, 0);
  for (std::uint16_t l : labels) {
    if (l >= C)
      throw InputError("dataset label " + std::to_string(l) + " out of range");
    seen[l]++;
  }
  if (seen != class_counts)
    throw InputError("dataset class counts are inconsistent with labels");
  for (std::size_t i = 0; i < images.size(); ++i)
    if (!(images[i] >= 0.0f && images[i] <= 1.0f))
      throw InputError("dataset pixel outside [0,1]");
}

Tensor class_prototype(std::size_t cls, std::size_t num_classes, std::size_t size) {
  if (num_classes < 2 || cls >= num_classes)
    throw ConfigError("class_prototype: bad class index");
  double S = static_cast<double>(size);
  double band_row = (static_cast<double>(cls) + 0.5) * S / static_cast<double>(num_classes);
  double band_half = S / 16.0;
  double blob_r = S / 16.0 * (1.0 + 0.9 * static_cast<double>(cls));
  double blob_rmax = S / 4.0;
  if (blob_r > blob_rmax)
    blob_r = blob_rmax;
  double arc_r = S / 3.0;
  bool arc_up = (cls % 2 == 0);
  double cx = (S - 1.0) / 2.0, cy = (S - 1.0) / 2.0;

  Tensor img({1, size, size});
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      double v = 0.1;
      if (std::abs(static_cast<double>(y) - band_row) <= band_half)
        v = std::max(v, 0.9);
      double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      double r = std::sqrt(dx * dx + dy * dy);
      if (r <= blob_r)
        v = std::max(v, 0.55);
      if (std::abs(r - arc_r) <= 0.75 && ((arc_up && dy < 0) || (!arc_up && dy >= 0)))
        v = std::max(v, 0.4);
      img.at3(0, y, x) = static_cast<float>(v);
    }
  return img;
}

namespace {

DatasetBundle make_split(std::size_t C, const std::vector<std::size_t> &counts, std::size_t size,
                         double sigma, Rng &rng, const std::string &split) {
  std::size_t N = 0;
  for (std::size_t c : counts)
    N += c;
  if (N == 0)
    throw ConfigError("generate_synthetic: split has no samples");

  std::vector<Tensor> prototypes;
  prototypes.reserve(C);
  for (std::size_t k = 0; k < C; ++k)
    prototypes.push_back(class_prototype(k, C, size));

  DatasetBundle b;
  b.images = Tensor({N, 1, size, size});
  b.labels.reserve(N);
  b.class_names = default_class_names(C);
  b.class_counts = counts;
  b.split = split;

  std::size_t s = 0;
  for (std::size_t k = 0; k < C; ++k) {
    for (std::size_t i = 0; i < counts[k]; ++i, ++s) {
      // jitter in {-1,0,1}^2, then pixel noise; draws happen in a fixed order
      int dy = static_cast<int>(rng.below(3)) - 1;
      int dx = static_cast<int>(rng.below(3)) - 1;
      const Tensor &proto = prototypes[k];
      float *dst = b.images.data() + s * size * size;
      for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
          std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) - dy;
          std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x) - dx;
          double v = 0.1;
          if (sy >= 0 && sy < static_cast<std::ptrdiff_t>(size) && sx >= 0 &&
              sx < static_cast<std::ptrdiff_t>(size))
            v = proto.at3(0, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
          if (sigma > 0.0)
            v += sigma * rng.normal();
          dst[y * size + x] = quantize_u8(v);
        }
      b.labels.push_back(static_cast<std::uint16_t>(k));
    }
  }
  return b;
}

} // namespace

std::pair<DatasetBundle, DatasetBundle>
generate_synthetic(std::size_t num_classes, const std::vector<std::size_t> &train_counts,
                   std::size_t size, double noise_sigma, std::uint64_t seed,
                   std::vector<std::size_t> test_counts) {
  if (num_classes < 2)
    throw ConfigError("generate_synthetic: need at least 2 classes");
  if (size < 16)
    throw ConfigError("generate_synthetic: image size must be >= 16");
  if (train_counts.size() != num_classes)
    throw ConfigError("generate_synthetic: one training count per class required");
  for (std::size_t c : train_counts)
    if (c == 0)
      throw ConfigError("generate_synthetic: zero training count for a class");
  if (test_counts.empty()) {
    std::size_t total = 0;
    for (std::size_t c : train_counts)
      total += c;
    std::size_t per = std::max<std::size_t>(1, total / (4 * num_classes));
    test_counts.assign(num_classes, per);
  }
  if (test_counts.size() != num_classes)
    throw ConfigError("generate_synthetic: one test count per class required");

  Rng train_rng(derive_seed(seed, 1));
  Rng test_rng(derive_seed(seed, 2));
  auto train = make_split(num_classes, train_counts, size, noise_sigma, train_rng, "train");
  auto test = make_split(num_classes, test_counts, size, noise_sigma, test_rng, "test");
  return {std::move(train), std::move(test)};
}

void save_dataset(const DatasetBundle &bundle, const std::string &path) {
  bundle.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw InputError("cannot open '" + path + "' for writing");
  out.write(kMagic, 8);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(bundle.num_classes()));
  write_u32(out, static_cast<std::uint32_t>(bundle.size()));
  write_u32(out, static_cast<std::uint32_t>(bundle.images.extent(1)));
  write_u32(out, static_cast<std::uint32_t>(bundle.images.extent(2)));
  write_u32(out, static_cast<std::uint32_t>(bundle.images.extent(3)));
  for (std::uint16_t l : bundle.labels) {
    unsigned char b[2] = {static_cast<unsigned char>(l), static_cast<unsigned char>(l >> 8)};
    out.write(reinterpret_cast<const char *>(b), 2);
  }
  std::vector<unsigned char> pix(bundle.images.size());
  for (std::size_t i = 0; i < pix.size(); ++i)
    pix[i] = static_cast<unsigned char>(
        std::lround(std::clamp(bundle.images[i], 0.0f, 1.0f) * 255.0f));
  out.write(reinterpret_cast<const char *>(pix.data()), static_cast<std::streamsize>(pix.size()));
  if (!out)
    throw InputError("write failed for '" + path + "'");
}

DatasetBundle load_dataset(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open dataset file '" + path + "'");
  std::uint64_t offset = 0;
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("bad dataset magic", 0);
  offset = 8;
  std::uint32_t version = read_u32(in, offset, "version");
  if (version != kVersion)
    throw FormatError("unsupported dataset version " + std::to_string(version), 8);
  std::uint32_t C = read_u32(in, offset, "class count");
  std::uint32_t N = read_u32(in, offset, "sample count");
  std::uint32_t ch = read_u32(in, offset, "channels");
  std::uint32_t H = read_u32(in, offset, "height");
  std::uint32_t W = read_u32(in, offset, "width");
  if (C == 0 || N == 0 || ch == 0 || H == 0 || W == 0)
    throw FormatError("dataset header contains a zero extent", 12);

  DatasetBundle b;
  b.labels.resize(N);
  for (std::uint32_t i = 0; i < N; ++i) {
    unsigned char raw[2];
    in.read(reinterpret_cast<char *>(raw), 2);
    if (!in)
      throw FormatError("dataset file truncated in label block", offset);
    offset += 2;
    b.labels[i] = static_cast<std::uint16_t>(raw[0] | (raw[1] << 8));
    if (b.labels[i] >= C)
      throw FormatError("label out of range in dataset file", offset - 2);
  }
  std::size_t npix = static_cast<std::size_t>(N) * ch * H * W;
  std::vector<unsigned char> pix(npix);
  in.read(reinterpret_cast<char *>(pix.data()), static_cast<std::streamsize>(npix));
  if (static_cast<std::size_t>(in.gcount()) != npix)
    throw FormatError("dataset file truncated in pixel block",
                      offset + static_cast<std::uint64_t>(in.gcount()));
  b.images = Tensor({N, ch, H, W});
  for (std::size_t i = 0; i < npix; ++i)
    b.images[i] = static_cast<float>(pix[i]) / 255.0f;
  b.class_names = default_class_names(C);
  b.class_counts.assign(C, 0);
  for (std::uint16_t l : b.labels)
    b.class_counts[l]++;
  for (std::size_t c = 0; c < C; ++c)
    if (b.class_counts[c] == 0)
      throw FormatError("dataset file declares class " + std::to_string(c) + " with no samples",
                        28);
  std::string stem = std::filesystem::path(path).stem().string();
  b.split = stem.find("test") != std::string::npos ? "test" : "train";
  return b;
}

DatasetBundle import_image_dir(const std::string &dir, std::size_t channels, std::size_t height,
                               std::size_t width) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw InputError("import: '" + dir + "' is not a directory");
  std::vector<std::string> class_dirs;
  for (const auto &e : fs::directory_iterator(dir))
    if (e.is_directory())
      class_dirs.push_back(e.path().string());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.size() < 2)
    throw InputError("import: need at least two class subdirectories");

  std::size_t bytes_per_image = channels * height * width;
  std::vector<std::pair<std::string, std::uint16_t>> files;
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    std::vector<std::string> fs_list;
    for (const auto &e : fs::directory_iterator(class_dirs[c]))
      if (e.is_regular_file())
        fs_list.push_back(e.path().string());
    std::sort(fs_list.begin(), fs_list.end());
    for (auto &f : fs_list)
      files.emplace_back(f, static_cast<std::uint16_t>(c));
  }
  if (files.empty())
    throw InputError("import: no image files found under '" + dir + "'");

  DatasetBundle b;
  b.images = Tensor({files.size(), channels, height, width});
  b.labels.reserve(files.size());
  b.class_counts.assign(class_dirs.size(), 0);
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::ifstream in(files[i].first, std::ios::binary);
    std::vector<unsigned char> raw(bytes_per_image);
    in.read(reinterpret_cast<char *>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes_per_image || in.peek() != EOF)
      throw FormatError("raw image '" + files[i].first + "' does not hold exactly " +
                            std::to_string(bytes_per_image) + " bytes",
                        static_cast<std::uint64_t>(in.gcount()));
    for (std::size_t p = 0; p < bytes_per_image; ++p)
      b.images[i * bytes_per_image + p] = static_cast<float>(raw[p]) / 255.0f;
    b.labels.push_back(files[i].second);
    b.class_counts[files[i].second]++;
  }
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    b.class_names.push_back(fs::path(class_dirs[c]).filename().string());
    if (b.class_counts[c] == 0)
      throw InputError("import: class directory '" + class_dirs[c] + "' is empty");
  }
  return b;
}

Tensor flip_horizontal(const Tensor &image) {
  if (image.rank() != 3)
    throw ConfigError("flip_horizontal expects a [C,H,W] image");
  Tensor out(image.shape());
  std::size_t C = image.extent(0), H = image.extent(1), W = image.extent(2);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        out.at3(c, y, x) = image.at3(c, y, W - 1 - x);
  return out;
}

} // namespace nnkit
