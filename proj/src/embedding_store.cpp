#include "gatedclip/embedding_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>

#include "gatedclip/error.hpp"
#include "gatedclip/rng.hpp"

namespace gatedclip {

static_assert(std::endian::native == std::endian::little,
              "GCEB I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 4> kMagic = {'G', 'C', 'E', 'B'};
constexpr std::uint32_t kVersionReal = 1;
constexpr std::uint32_t kVersionTagged = 2;
constexpr std::uint8_t kFlagFlipped = 0x1;

double l2_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

void check_vector(std::span<const float> v, std::size_t dim, std::size_t index, const char* what) {
  if (v.size() != dim) {
    throw FormatError(FormatErrc::corrupt, std::string(what) + " of record " +
                                               std::to_string(index) + " has wrong dimension");
  }
  const double norm = l2_norm(v);
  if (!(std::abs(norm - 1.0) <= kNormTolerance)) {
    throw FormatError(FormatErrc::norm_violation, std::string(what) + " of record " +
                                                      std::to_string(index) + " has L2 norm " +
                                                      std::to_string(norm));
  }
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw FormatError(FormatErrc::io, "cannot open " + path.string() + " for writing");
  }
  template <typename T>
  void put(const T& value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  void put_floats(std::span<const float> v) {
    out_.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(float)));
  }
  void put_bytes(std::span<const char> b) { out_.write(b.data(), static_cast<std::streamsize>(b.size())); }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw FormatError(FormatErrc::io, "write to " + path.string() + " failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  Reader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  }
  template <typename T>
  bool get(T& value) {
    return static_cast<bool>(in_.read(reinterpret_cast<char*>(&value), sizeof(T)));
  }
  bool get_floats(std::vector<float>& v, std::size_t n) {
    v.resize(n);
    return static_cast<bool>(
        in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float))));
  }
  bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
};

}  // namespace

std::string_view to_string(MetaTag tag) {
  switch (tag) {
    case MetaTag::none: return "none";
    case MetaTag::image_signal: return "image_signal";
    case MetaTag::text_signal: return "text_signal";
  }
  return "unknown";
}

void Dataset::validate() const {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.label != 0 && r.label != 1 && r.label != 255) {
      throw FormatError(FormatErrc::invalid_label,
                        "record " + std::to_string(i) + " has label " + std::to_string(r.label));
    }
    if (!seen.insert(r.id).second) {
      throw FormatError(FormatErrc::duplicate_id, "id " + std::to_string(r.id) + " repeats");
    }
    check_vector(r.image_emb, dim, i, "image_emb");
    check_vector(r.text_emb, dim, i, "text_emb");
    if (r.flipped_image_emb) check_vector(*r.flipped_image_emb, dim, i, "flipped_image_emb");
    if (static_cast<std::uint8_t>(r.meta_tag) > 2) {
      throw FormatError(FormatErrc::corrupt, "record " + std::to_string(i) + " has bad meta tag");
    }
  }
}

bool Dataset::all_labeled() const {
  return std::all_of(records.begin(), records.end(),
                     [](const EmbeddingRecord& r) { return r.label == 0 || r.label == 1; });
}

std::size_t Dataset::count_label(std::uint8_t label) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [label](const EmbeddingRecord& r) { return r.label == label; }));
}

void write_embedding_file(const Dataset& dataset, const std::filesystem::path& path) {
  dataset.validate();
  if (dataset.records.size() > UINT32_MAX) {
    throw FormatError(FormatErrc::corrupt, "too many records for a u32 count");
  }
  const std::uint32_t version = dataset.has_meta_tags ? kVersionTagged : kVersionReal;
  Writer w(path);
  w.put_bytes(kMagic);
  w.put(version);
  w.put(dataset.dim);
  w.put(static_cast<std::uint32_t>(dataset.records.size()));
  for (const auto& r : dataset.records) {
    w.put(r.id);
    w.put(r.label);
    const std::uint8_t flags = r.flipped_image_emb ? kFlagFlipped : 0;
    w.put(flags);
    w.put_floats(r.image_emb);
    w.put_floats(r.text_emb);
    if (r.flipped_image_emb) w.put_floats(*r.flipped_image_emb);
    if (version == kVersionTagged) w.put(static_cast<std::uint8_t>(r.meta_tag));
  }
  w.finish(path);
}

Dataset read_embedding_file(const std::filesystem::path& path, FileInfo* info) {
  Reader in(path);
  std::array<char, 4> magic{};
  std::uint32_t version = 0, dim = 0, count = 0;
  if (!in.get(magic)) throw FormatError(FormatErrc::truncated, "file shorter than the magic");
  if (magic != kMagic) throw FormatError(FormatErrc::bad_magic, path.string() + " is not a GCEB file");
  if (!in.get(version) || !in.get(dim) || !in.get(count)) {
    throw FormatError(FormatErrc::truncated, "header is incomplete");
  }
  if (version != kVersionReal && version != kVersionTagged) {
    throw FormatError(FormatErrc::unsupported_version, "version " + std::to_string(version));
  }
  if (dim == 0) throw FormatError(FormatErrc::corrupt, "dimension 0");

  Dataset ds;
  ds.dim = dim;
  ds.has_meta_tags = version == kVersionTagged;
  ds.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto truncated = [i] {
      return FormatError(FormatErrc::truncated, "file ends inside record " + std::to_string(i));
    };
    EmbeddingRecord r;
    std::uint8_t flags = 0;
    if (!in.get(r.id) || !in.get(r.label) || !in.get(flags)) throw truncated();
    if ((flags & ~kFlagFlipped) != 0) {
      throw FormatError(FormatErrc::corrupt, "record " + std::to_string(i) + " has unknown flags");
    }
    if (!in.get_floats(r.image_emb, dim) || !in.get_floats(r.text_emb, dim)) throw truncated();
    if (flags & kFlagFlipped) {
      std::vector<float> flipped;
      if (!in.get_floats(flipped, dim)) throw truncated();
      r.flipped_image_emb = std::move(flipped);
      ds.has_flip = true;
    }
    if (version == kVersionTagged) {
      std::uint8_t tag = 0;
      if (!in.get(tag)) throw truncated();
      if (tag > 2) throw FormatError(FormatErrc::corrupt, "record " + std::to_string(i) + " has bad meta tag");
      r.meta_tag = static_cast<MetaTag>(tag);
    }
    ds.records.push_back(std::move(r));
  }
  if (!in.at_eof()) throw FormatError(FormatErrc::corrupt, "trailing bytes after last record");
  ds.validate();
  if (info) *info = {version, dim, count};
  return ds;
}

std::vector<Batch> make_batches(const Dataset& dataset, const BatchOptions& opt) {
  if (opt.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (dataset.records.empty()) throw std::invalid_argument("cannot batch an empty dataset");
  if (!(opt.flip_prob >= 0.0 && opt.flip_prob <= 1.0)) {
    throw std::invalid_argument("flip_prob must be in [0, 1]");
  }
  const std::size_t n = dataset.records.size();
  const std::size_t dim = dataset.dim;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (opt.shuffle) {
    auto engine = rng::make_engine(rng::derive_key(opt.seed, rng::Purpose::shuffle, opt.epoch));
    std::shuffle(order.begin(), order.end(), engine);
  }

  std::vector<Batch> batches;
  batches.reserve((n + opt.batch_size - 1) / opt.batch_size);
  for (std::size_t start = 0; start < n; start += opt.batch_size) {
    const std::size_t rows = std::min(opt.batch_size, n - start);
    Batch b{Matrix<float>(rows, dim), Matrix<float>(rows, dim), {}, {}};
    b.labels.reserve(rows);
    b.ids.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto& rec = dataset.records[order[start + r]];
      const std::vector<float>* image = &rec.image_emb;
      if (rec.flipped_image_emb && opt.flip_prob > 0.0) {
        const double u =
            rng::uniform_from_key(rng::derive_key(opt.seed, rng::Purpose::flip, opt.epoch, rec.id));
        if (u < opt.flip_prob) image = &*rec.flipped_image_emb;
      }
      std::copy(image->begin(), image->end(), b.image.row(r).begin());
      std::copy(rec.text_emb.begin(), rec.text_emb.end(), b.text.row(r).begin());
      b.labels.push_back(rec.label);
      b.ids.push_back(rec.id);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

// ---------------------------------------------------------------- synthetic

SyntheticMode parse_synthetic_mode(std::string_view s) {
  if (s == "xor") return SyntheticMode::xor_;
  if (s == "single_modality") return SyntheticMode::single_modality;
  throw std::invalid_argument("unknown synthetic mode '" + std::string(s) + "'");
}

std::string_view to_string(SyntheticMode mode) {
  return mode == SyntheticMode::xor_ ? "xor" : "single_modality";
}

void SyntheticConfig::validate() const {
  if (n < 2) throw std::invalid_argument("synthetic n must be >= 2");
  if (dim < 2) throw std::invalid_argument("synthetic dim must be >= 2");
  if (!(alpha > 0.0)) throw std::invalid_argument("synthetic alpha must be positive");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("synthetic noise must be >= 0");
  if (mode == SyntheticMode::single_modality && noise_sigma == 0.0) {
    throw std::invalid_argument("single_modality needs noise_sigma > 0 for the noise-only modality");
  }
}

SyntheticDirections synthetic_directions(std::uint32_t dim, std::uint64_t seed) {
  auto engine = rng::make_engine(rng::derive_key(seed, rng::Purpose::synthetic_directions));
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&] {
    std::vector<double> v(dim);
    for (auto& x : v) x = gauss(engine);
    return v;
  };
  auto normalize = [](std::vector<double>& v) {
    const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (auto& x : v) x /= n;
  };
  SyntheticDirections d{draw(), draw()};
  normalize(d.image);
  // Gram-Schmidt: remove the image component from the text direction.
  const double proj = std::inner_product(d.text.begin(), d.text.end(), d.image.begin(), 0.0);
  for (std::size_t i = 0; i < dim; ++i) d.text[i] -= proj * d.image[i];
  normalize(d.text);
  return d;
}

namespace {

// normalize(noise + sign·alpha·direction); sign 0 gives pure noise.
std::vector<float> synth_embedding(const std::vector<double>& direction, int sign, double alpha,
                                   double sigma, rng::Engine& engine) {
  const std::size_t dim = direction.size();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = sigma > 0.0 ? sigma * gauss(engine) : 0.0;
  for (std::size_t i = 0; i < dim; ++i) v[i] += sign * alpha * direction[i];
  const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] / n);
  return out;
}

// n labels, floor(n/2) zeros and the rest ones, in a seeded random order.
std::vector<std::uint8_t> balanced_bits(std::size_t n, rng::Engine& engine) {
  std::vector<std::uint8_t> bits(n, 0);
  std::fill(bits.begin() + static_cast<std::ptrdiff_t>(n / 2), bits.end(), 1);
  std::shuffle(bits.begin(), bits.end(), engine);
  return bits;
}

}  // namespace

Dataset generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  const auto dirs = synthetic_directions(config.dim, config.seed);
  auto engine = rng::make_engine(rng::derive_key(config.seed, rng::Purpose::synthetic_records));

  Dataset ds;
  ds.dim = config.dim;
  ds.has_meta_tags = true;
  ds.records.reserve(config.n);

  const auto labels = balanced_bits(config.n, engine);
  const auto tags = config.mode == SyntheticMode::single_modality
                        ? balanced_bits(config.n, engine)
                        : std::vector<std::uint8_t>(config.n, 0);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> noise_dir(config.dim, 0.0);

  for (std::size_t i = 0; i < config.n; ++i) {
    EmbeddingRecord r;
    r.id = i;
    r.label = labels[i];
    auto sign = [](std::uint8_t bit) { return bit ? 1 : -1; };
    if (config.mode == SyntheticMode::xor_) {
      const std::uint8_t a = coin(engine) ? 1 : 0;
      const std::uint8_t b = a ^ r.label;
      r.image_emb = synth_embedding(dirs.image, sign(a), config.alpha, config.noise_sigma, engine);
      r.text_emb = synth_embedding(dirs.text, sign(b), config.alpha, config.noise_sigma, engine);
      r.meta_tag = MetaTag::none;
    } else if (tags[i] == 0) {
      r.image_emb =
          synth_embedding(dirs.image, sign(r.label), config.alpha, config.noise_sigma, engine);
      r.text_emb = synth_embedding(noise_dir, 0, 0.0, config.noise_sigma, engine);
      r.meta_tag = MetaTag::image_signal;
    } else {
      r.image_emb = synth_embedding(noise_dir, 0, 0.0, config.noise_sigma, engine);
      r.text_emb =
          synth_embedding(dirs.text, sign(r.label), config.alpha, config.noise_sigma, engine);
      r.meta_tag = MetaTag::text_signal;
    }
    ds.records.push_back(std::move(r));
  }
  return ds;
}

}  // namespace gatedclip
