#pragma once

#include "vlanet/synthetic.hpp"
#include "vlanet/training.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

namespace testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vlanet_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// A dataset small enough to train in well under a second.
inline vlanet::SyntheticSpec tiny_spec(std::uint64_t seed = 0) {
  vlanet::SyntheticSpec s;
  s.videos = 8;
  s.test_videos = 4;
  s.frames = 48;
  s.raw_dim = 8;
  s.concept_dim = 8;
  s.min_tokens = 3;
  s.max_tokens = 5;
  s.min_planted = 8;
  s.max_planted = 16;
  s.seed = seed;
  s.grid = {8, {8, 16}};
  return s;
}

inline vlanet::TrainingConfig tiny_config() {
  vlanet::TrainingConfig c;
  c.epochs = 2;
  c.batch_size = 4;
  c.stride = 8;
  c.windows = {8, 16};
  c.model.hidden_dim = c.model.model_dim = c.model.attention_dim = 8;
  return c;
}

}  // namespace testing
