#pragma once

// GCEB embedding files (little-endian):
//
//   header (16 bytes): magic "GCEB" | version u32 | dim u32 | record_count u32
//   record:            id u64 | label u8 | flags u8 (bit0: flipped image present)
//                      | image dim×f32 | text dim×f32 | [flipped image dim×f32]
//                      | [meta_tag u8, version 2 only]
//
// Version 1 is what the extractor writes for real data. Version 2 is written
// for synthetic datasets and carries the generator's meta tag per record.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "gatedclip/tensor.hpp"

namespace gatedclip {

enum class MetaTag : std::uint8_t { none = 0, image_signal = 1, text_signal = 2 };

std::string_view to_string(MetaTag tag);

inline constexpr double kNormTolerance = 1e-3;

struct EmbeddingRecord {
  std::uint64_t id = 0;
  std::uint8_t label = 0;  // 0 benign, 1 hateful, 255 unlabeled
  std::vector<float> image_emb;
  std::vector<float> text_emb;
  std::optional<std::vector<float>> flipped_image_emb;
  MetaTag meta_tag = MetaTag::none;

  bool operator==(const EmbeddingRecord&) const = default;
};

struct Dataset {
  std::vector<EmbeddingRecord> records;
  std::uint32_t dim = 512;
  bool has_flip = false;       // at least one record carries a flipped embedding
  bool has_meta_tags = false;  // written as version 2

  std::size_t size() const noexcept { return records.size(); }
  bool operator==(const Dataset&) const = default;

  /// Throws FormatError on any invariant violation (dims, norms, labels, ids).
  void validate() const;
  bool all_labeled() const;
  std::size_t count_label(std::uint8_t label) const;
};

struct FileInfo {
  std::uint32_t version = 0;
  std::uint32_t dim = 0;
  std::uint32_t record_count = 0;
};

void write_embedding_file(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_embedding_file(const std::filesystem::path& path, FileInfo* info = nullptr);

struct Batch {
  Matrix<float> image;
  Matrix<float> text;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint64_t> ids;

  std::size_t size() const noexcept { return ids.size(); }
};

struct BatchOptions {
  std::size_t batch_size = 32;
  bool shuffle = false;
  double flip_prob = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
};

/// Partitions the dataset into batches. The shuffle permutation depends only
/// on (seed, epoch); the flip choice for a record only on (seed, epoch, id).
/// The final batch may be short.
std::vector<Batch> make_batches(const Dataset& dataset, const BatchOptions& options);

enum class SyntheticMode { xor_, single_modality };

SyntheticMode parse_synthetic_mode(std::string_view s);
std::string_view to_string(SyntheticMode mode);

struct SyntheticConfig {
  std::size_t n = 1000;
  std::uint32_t dim = 512;
  SyntheticMode mode = SyntheticMode::xor_;
  double alpha = 0.5;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticDirections {
  std::vector<double> image;
  std::vector<double> text;
};

/// The two orthonormal signal directions used by generate_synthetic.
SyntheticDirections synthetic_directions(std::uint32_t dim, std::uint64_t seed);

/// xor: label = a XOR b where a is carried by the image along u_img and b by
/// the text along u_txt. single_modality: half the records carry the label in
/// the image only (text pure noise), half in the text only.
Dataset generate_synthetic(const SyntheticConfig& config);

}  // namespace gatedclip
