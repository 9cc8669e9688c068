#pragma once

// Dataset construction: 1D sin(6x) regression sets, exhaustive parity sets,
// seeded splits and subsamples, and the MNIST IDX reader/writer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "groklens/error.hpp"
#include "groklens/nn.hpp"
#include "groklens/rng.hpp"

namespace groklens {

struct LabeledSet {
  Matrix inputs;   // n x m
  Matrix targets;  // n x q
  std::string provenance;
  // Row indices into the set this one was drawn from (split/subsample); empty otherwise.
  std::vector<std::size_t> source_indices;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index input_dim() const { return inputs.cols(); }
  Eigen::Index target_dim() const { return targets.cols(); }

  /// Rows `rows` of this set, in the given order.
  LabeledSet select(const std::vector<std::size_t>& rows, std::string provenance_note) const {
    LabeledSet out;
    out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
    out.targets.resize(static_cast<Eigen::Index>(rows.size()), targets.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(rows[i]));
      out.targets.row(static_cast<Eigen::Index>(i)) = targets.row(static_cast<Eigen::Index>(rows[i]));
    }
    out.provenance = std::move(provenance_note);
    out.source_indices = rows;
    return out;
  }
};

/// Row-wise concatenation of two sets with equal dimensions.
inline LabeledSet concat(const LabeledSet& a, const LabeledSet& b, std::string provenance) {
  if (a.input_dim() != b.input_dim() || a.target_dim() != b.target_dim())
    throw ShapeError("concat: datasets have different dimensions");
  LabeledSet out;
  out.inputs.resize(a.size() + b.size(), a.input_dim());
  out.inputs << a.inputs, b.inputs;
  out.targets.resize(a.size() + b.size(), a.target_dim());
  out.targets << a.targets, b.targets;
  out.provenance = std::move(provenance);
  return out;
}

// ---------------------------------------------------------------------------
// 1D regression on sin(6x)

inline constexpr int kSynthPoolSize = 10000;
inline constexpr int kSynthSpecialFirst = 20;   // closest to sin x = sin 6x
inline constexpr int kSynthSpecialSecond = 10;  // closest to sin 3x = sin 6x

inline double synth_target(double x) { return std::sin(6.0 * x); }

/// n evenly spaced points on [-pi, pi], both endpoints included exactly.
inline std::vector<double> evenly_spaced(int n, double lo, double hi) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  xs.back() = hi;
  return xs;
}

namespace detail {

inline LabeledSet synth_from_points(const std::vector<double>& xs, std::string provenance) {
  LabeledSet set;
  const auto n = static_cast<Eigen::Index>(xs.size());
  set.inputs.resize(n, 1);
  set.targets.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    set.inputs(i, 0) = xs[static_cast<std::size_t>(i)];
    set.targets(i, 0) = synth_target(xs[static_cast<std::size_t>(i)]);
  }
  set.provenance = std::move(provenance);
  return set;
}

// Indices of the `count` smallest scores among `candidates`, ties by index.
inline std::vector<std::size_t> smallest_by(const std::vector<std::size_t>& candidates,
                                            const std::vector<double>& score, int count) {
  std::vector<std::size_t> order = candidates;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] < score[b];
    return a < b;
  });
  order.resize(static_cast<std::size_t>(count));
  return order;
}

}  // namespace detail

/// The 10000-point candidate pool on [-pi, pi].
inline std::vector<double> synth_pool() { return evenly_spaced(kSynthPoolSize, -std::numbers::pi, std::numbers::pi); }

/// Pool indices of the 30 seed-independent points: 20 minimizers of
/// |sin x - sin 6x|, then 10 minimizers of |sin 3x - sin 6x| among the rest.
inline std::vector<std::size_t> synth_special_indices() {
  const auto pool = synth_pool();
  std::vector<double> first(pool.size()), second(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    first[i] = std::abs(std::sin(pool[i]) - std::sin(6.0 * pool[i]));
    second[i] = std::abs(std::sin(3.0 * pool[i]) - std::sin(6.0 * pool[i]));
  }
  std::vector<std::size_t> all(pool.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto chosen = detail::smallest_by(all, first, kSynthSpecialFirst);
  std::vector<bool> taken(pool.size(), false);
  for (auto i : chosen) taken[i] = true;
  std::vector<std::size_t> rest;
  for (auto i : all)
    if (!taken[i]) rest.push_back(i);
  const auto more = detail::smallest_by(rest, second, kSynthSpecialSecond);
  chosen.insert(chosen.end(), more.begin(), more.end());
  return chosen;
}

/// Nonuniform training set: the 30 special points plus n-30 pool points drawn
/// uniformly without replacement. Points are returned in ascending x order.
inline LabeledSet gen_synth1d_nonuniform(int n, std::uint64_t seed) {
  if (n < kSynthSpecialFirst + kSynthSpecialSecond) throw ConfigError("nonuniform synth1d needs n >= 30");
  if (n > kSynthPoolSize) throw ConfigError("nonuniform synth1d needs n <= 10000");
  const auto pool = synth_pool();
  auto chosen = synth_special_indices();
  std::vector<bool> taken(pool.size(), false);
  for (auto i : chosen) taken[i] = true;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (!taken[i]) rest.push_back(i);

  Rng rng(seed);
  const auto fill = static_cast<std::size_t>(n) - chosen.size();
  // partial Fisher-Yates: the first `fill` slots end up a uniform sample
  for (std::size_t i = 0; i < fill; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(rest.size() - i));
    std::swap(rest[i], rest[j]);
    chosen.push_back(rest[i]);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<double> xs;
  xs.reserve(chosen.size());
  for (auto i : chosen) xs.push_back(pool[i]);
  auto set = detail::synth_from_points(
      xs, "synth1d nonuniform n=" + std::to_string(n) + " seed=" + std::to_string(seed));
  set.source_indices = chosen;
  return set;
}

inline LabeledSet gen_synth1d_uniform(int n) {
  if (n < 2) throw ConfigError("uniform synth1d needs n >= 2");
  return detail::synth_from_points(evenly_spaced(n, -std::numbers::pi, std::numbers::pi),
                                   "synth1d uniform n=" + std::to_string(n));
}

// ---------------------------------------------------------------------------
// Parity

inline constexpr int kMaxParityDim = 20;

struct ParitySpec {
  int m = 10;
  std::vector<int> indices;  // 1-based coordinates entering the product

  static ParitySpec full(int m) {
    ParitySpec s{m, {}};
    for (int i = 1; i <= m; ++i) s.indices.push_back(i);
    return s;
  }

  void validate() const {
    if (m < 1) throw ConfigError("parity dimension must be >= 1");
    if (indices.empty()) throw ConfigError("parity index set must be non-empty");
    std::vector<int> sorted = indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigError("parity indices must be distinct");
    if (sorted.front() < 1 || sorted.back() > m) throw ConfigError("parity indices must lie in 1..m");
  }
};

inline double parity_label(const ParitySpec& spec, const double* x) {
  double label = 1.0;
  for (int i : spec.indices) label *= x[i - 1];
  return label;
}

/// All 2^m sign vectors. Row c is the binary expansion of c with coordinate
/// j+1 taken from bit j: +1 for a set bit, -1 for a clear one.
inline LabeledSet parity_enumerate(const ParitySpec& spec) {
  spec.validate();
  if (spec.m > kMaxParityDim) throw ConfigError("parity dimension too large to enumerate (max 20)");
  const Eigen::Index n = Eigen::Index{1} << spec.m;
  LabeledSet set;
  set.inputs.resize(n, spec.m);
  set.targets.resize(n, 1);
  std::vector<double> row(static_cast<std::size_t>(spec.m));
  for (Eigen::Index c = 0; c < n; ++c) {
    for (int j = 0; j < spec.m; ++j) {
      row[static_cast<std::size_t>(j)] = ((c >> j) & 1) ? 1.0 : -1.0;
      set.inputs(c, j) = row[static_cast<std::size_t>(j)];
    }
    set.targets(c, 0) = parity_label(spec, row.data());
  }
  set.provenance = "parity m=" + std::to_string(spec.m) + " |I|=" + std::to_string(spec.indices.size());
  return set;
}

// ---------------------------------------------------------------------------
// Splits and subsamples

struct SplitResult {
  LabeledSet train;
  LabeledSet test;
  double proportion = 0.5;
  std::uint64_t seed = 0;
};

/// Seeded shuffle; the first round(proportion * n) shuffled rows go to train.
/// Each side keeps ascending source order.
inline SplitResult split(const LabeledSet& set, double proportion, std::uint64_t seed) {
  if (!(proportion > 0.0 && proportion < 1.0)) throw ConfigError("split proportion must lie in (0, 1)");
  const auto n = static_cast<std::size_t>(set.size());
  const auto n_train = static_cast<std::size_t>(std::llround(proportion * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) throw ConfigError("split leaves one side empty");
  Rng rng(seed);
  auto perm = rng.permutation(n);
  std::vector<std::size_t> train_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test_rows(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  const std::string tag = " proportion=" + std::to_string(proportion) + " seed=" + std::to_string(seed);
  return SplitResult{set.select(train_rows, set.provenance + " | train" + tag),
                     set.select(test_rows, set.provenance + " | test" + tag), proportion, seed};
}

/// k rows drawn uniformly without replacement, kept in ascending source order.
inline LabeledSet subsample(const LabeledSet& set, std::size_t k, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(set.size());
  if (k < 1 || k > n) throw ConfigError("subsample size must lie in [1, " + std::to_string(n) + "]");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return set.select(idx, set.provenance + " | subsample k=" + std::to_string(k) + " of " + std::to_string(n) +
                             " seed=" + std::to_string(seed));
}

// ---------------------------------------------------------------------------
// MNIST IDX files
//
// images: 0x00000803, count, rows, cols (big-endian u32), then count*rows*cols bytes
// labels: 0x00000801, count, then count bytes

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr int kMnistClasses = 10;

enum class IdxErrorKind { bad_magic, truncated, count_mismatch, bad_label, io };

class IdxError : public ParseError {
 public:
  IdxError(IdxErrorKind kind, const std::string& what, std::size_t offset)
      : ParseError(what, offset), kind_(kind) {}
  IdxErrorKind kind() const noexcept { return kind_; }

 private:
  IdxErrorKind kind_;
};

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxErrorKind::io, "cannot open " + path.string(), 0);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t offset, const std::string& file) {
  if (offset + 4 > b.size())
    throw IdxError(IdxErrorKind::truncated, file + ": header truncated", b.size());
  return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
         (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

inline void write_be32(std::ostream& os, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                         static_cast<char>(v)};
  os.write(bytes, 4);
}

}  // namespace detail

struct IdxImages {
  std::uint32_t count = 0, rows = 0, cols = 0;
  std::vector<std::uint8_t> pixels;
};

inline IdxImages parse_idx_images(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  const auto magic = detail::read_be32(bytes, 0, name);
  if (magic != kIdxImageMagic) throw IdxError(IdxErrorKind::bad_magic, name + ": bad image magic", 0);
  IdxImages img;
  img.count = detail::read_be32(bytes, 4, name);
  img.rows = detail::read_be32(bytes, 8, name);
  img.cols = detail::read_be32(bytes, 12, name);
  const std::size_t payload = std::size_t{img.count} * img.rows * img.cols;
  if (bytes.size() < 16 + payload)
    throw IdxError(IdxErrorKind::truncated,
                   name + ": image payload truncated, expected " + std::to_string(16 + payload) + " bytes",
                   bytes.size());
  img.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(payload));
  return img;
}

inline std::vector<std::uint8_t> parse_idx_labels(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  const auto magic = detail::read_be32(bytes, 0, name);
  if (magic != kIdxLabelMagic) throw IdxError(IdxErrorKind::bad_magic, name + ": bad label magic", 0);
  const auto count = detail::read_be32(bytes, 4, name);
  if (bytes.size() < 8 + std::size_t{count})
    throw IdxError(IdxErrorKind::truncated,
                   name + ": label payload truncated, expected " + std::to_string(8 + std::size_t{count}) + " bytes",
                   bytes.size());
  return {bytes.begin() + 8, bytes.begin() + 8 + count};
}

/// Images flattened row-major and scaled by 1/255; labels one-hot in R^10.
inline LabeledSet load_mnist_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path) {
  const auto images = parse_idx_images(detail::read_file_bytes(image_path), image_path.filename().string());
  const auto labels = parse_idx_labels(detail::read_file_bytes(label_path), label_path.filename().string());
  if (labels.size() != images.count)
    throw IdxError(IdxErrorKind::count_mismatch,
                   "image count " + std::to_string(images.count) + " != label count " + std::to_string(labels.size()),
                   4);
  const Eigen::Index n = images.count;
  const Eigen::Index dim = Eigen::Index{images.rows} * images.cols;
  LabeledSet set;
  set.inputs.resize(n, dim);
  set.targets = Matrix::Zero(n, kMnistClasses);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::uint8_t* px = images.pixels.data() + static_cast<std::size_t>(i * dim);
    for (Eigen::Index j = 0; j < dim; ++j) set.inputs(i, j) = px[j] / 255.0;
    const auto label = labels[static_cast<std::size_t>(i)];
    if (label >= kMnistClasses)
      throw IdxError(IdxErrorKind::bad_label, "label " + std::to_string(label) + " out of range",
                     8 + static_cast<std::size_t>(i));
    set.targets(i, label) = 1.0;
  }
  set.provenance = "mnist " + image_path.filename().string() + " n=" + std::to_string(n);
  return set;
}

inline void write_idx_images(const std::filesystem::path& path, const IdxImages& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  detail::write_be32(out, kIdxImageMagic);
  detail::write_be32(out, img.count);
  detail::write_be32(out, img.rows);
  detail::write_be32(out, img.cols);
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

inline void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  detail::write_be32(out, kIdxLabelMagic);
  detail::write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

}  // namespace groklens
