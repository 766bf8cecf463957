#pragma once

#include "vlanet/data_io.hpp"

#include <cstdint>
#include <filesystem>

namespace vlanet {

/// Planted-alignment dataset: each video hides a concept vector inside one
/// interval and its query carries noisy copies of the same concept among
/// distractor tokens.
struct SyntheticSpec {
  std::size_t videos = 200;       // training videos, one query each
  std::size_t test_videos = 50;
  std::int64_t frames = 240;      // T
  std::size_t raw_dim = 32;       // frame and token dimension
  std::size_t min_tokens = 5;
  std::size_t max_tokens = 8;
  /// Concepts are drawn from a random subspace of this rank (<= raw_dim).
  std::size_t concept_dim = 32;
  double noise = 0.1;             // per-component frame/token noise sigma
  double distractor_norm = 0.5;   // expected norm of distractor tokens
  std::int64_t min_planted = 64;
  std::int64_t max_planted = 128;
  std::uint64_t seed = 0;
  /// Grid recorded in the manifest for this video length.
  GridHint grid{8, {32, 64, 128}};
};

struct SyntheticResult {
  Manifest manifest;
  /// Videos whose in-interval mean frame is not strictly closer (cosine) to
  /// their own query's mean token than to every other query's.
  std::size_t separation_violations = 0;
  /// Smallest own-minus-best-other cosine gap over all videos.
  double separation_margin = 0.0;
};

/// Writes features/, tokens/ and manifest.json under out_dir.
SyntheticResult generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

}  // namespace vlanet
