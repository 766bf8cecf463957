#pragma once

#include "vlanet/proposals.hpp"
#include "vlanet/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vlanet {

// Feature file layout (all little-endian):
//   offset 0  : magic "VLFT"
//   offset 4  : u32 format version (1)
//   offset 8  : u32 rows
//   offset 12 : u32 cols
//   offset 16 : rows * cols f32, row-major
inline constexpr char kFeatureMagic[4] = {'V', 'L', 'F', 'T'};
inline constexpr std::uint32_t kFeatureVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 16;

/// Environment variable that overrides the directory relative manifest
/// paths are resolved against.
inline constexpr const char* kDataRootEnv = "VLANET_DATA_ROOT";

/// Values are narrowed to f32 for storage.
void write_features(const std::filesystem::path& path, const Matrix& features);
Matrix load_features(const std::filesystem::path& path);

enum class DatasetMode { kFrameGrid, kSegmentUnits };

std::string to_string(DatasetMode mode);
DatasetMode parse_dataset_mode(const std::string& text);

struct GridHint {
  std::int64_t stride = 8;
  std::vector<std::int64_t> windows;
};

struct VideoEntry {
  std::string id;
  std::int64_t length = 0;  // frames or segments; equals feature rows
  std::string features;     // path relative to the data root
};

struct QueryEntry {
  std::string id;
  std::string tokens;                 // path relative to the data root, or empty
  std::optional<Matrix> inline_tokens;
  std::string text;                   // informational only
};

struct PairEntry {
  std::string video;
  std::string query;
  std::string split = "train";
  std::optional<Interval> gt;
};

struct Manifest {
  std::string name;
  DatasetMode mode = DatasetMode::kFrameGrid;
  /// Proposal grid suited to this dataset's video lengths, if the dataset
  /// author recorded one.
  std::optional<GridHint> grid;
  std::vector<VideoEntry> videos;
  std::vector<QueryEntry> queries;
  std::vector<PairEntry> pairs;
  /// Directory relative feature paths resolve against.
  std::filesystem::path root;

  const VideoEntry& video(const std::string& id) const;
  const QueryEntry& query(const std::string& id) const;
};

/// Parses and validates a manifest; relative paths resolve against
/// $VLANET_DATA_ROOT when set, otherwise the manifest's directory.
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const std::string& text, const std::filesystem::path& root);
std::string manifest_to_json(const Manifest& manifest);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Throws DataError for dangling ids, duplicate ids, or gt outside the video.
void validate_manifest(const Manifest& manifest);

/// Frames and tokens for every referenced video and query. Holds no
/// temporal annotations.
struct FeatureStore {
  DatasetMode mode = DatasetMode::kFrameGrid;
  std::map<std::string, Matrix> frames;
  std::map<std::string, Matrix> tokens;

  const Matrix& video(const std::string& id) const;
  const Matrix& query(const std::string& id) const;
};

/// Loads every feature file; checks rows against declared video lengths
/// and that all files of one kind share a column count.
FeatureStore load_feature_store(const Manifest& manifest);

}  // namespace vlanet
