#include "vlanet/proposals.hpp"
#include "vlanet/error.hpp"

#include <algorithm>

namespace vlanet {

std::string Interval::str() const {
  return "[" + std::to_string(start) + "," + std::to_string(end) + ")";
}

std::vector<Interval> ProposalGrid::intervals() const {
  std::vector<Interval> out;
  out.reserve(size());
  for (std::size_t l = 0; l < scales; ++l) {
    for (const SegmentGroup& g : groups) out.push_back(g.windows[l]);
  }
  return out;
}

std::vector<Interval> ProposalGrid::distinct_intervals() const {
  std::vector<Interval> out = intervals();
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ProposalGrid generate_segment_groups(std::int64_t video_len, std::int64_t stride,
                                     std::span<const std::int64_t> window_sizes) {
  if (stride < 1) throw ConfigError("stride must be >= 1, got " + std::to_string(stride));
  if (window_sizes.empty()) throw ConfigError("window_sizes must be non-empty");
  if (!std::is_sorted(window_sizes.begin(), window_sizes.end())) {
    throw ConfigError("window_sizes must be sorted ascending");
  }
  if (window_sizes.front() < 1) throw ConfigError("window sizes must be positive");
  const std::int64_t shortest = window_sizes.front();
  if (video_len < shortest) {
    throw ConfigError("video shorter than smallest window (" + std::to_string(video_len) +
                      " < " + std::to_string(shortest) + ")");
  }

  ProposalGrid grid;
  grid.scales = window_sizes.size();
  for (std::int64_t start = 0; start + shortest <= video_len; start += stride) {
    SegmentGroup group;
    group.start = start;
    group.windows.reserve(window_sizes.size());
    for (std::int64_t w : window_sizes) {
      group.windows.push_back({start, std::min(start + w, video_len)});
    }
    grid.groups.push_back(std::move(group));
  }
  return grid;
}

std::vector<Interval> enumerate_contiguous_moments(std::int64_t segment_count) {
  if (segment_count < 1) {
    throw ConfigError("segment_count must be >= 1, got " + std::to_string(segment_count));
  }
  std::vector<Interval> out;
  out.reserve(static_cast<std::size_t>(segment_count * (segment_count + 1) / 2));
  for (std::int64_t i = 0; i < segment_count; ++i) {
    for (std::int64_t j = i + 1; j <= segment_count; ++j) out.push_back({i, j});
  }
  return out;
}

ProposalGrid grid_from_moments(std::span<const Interval> moments) {
  if (moments.empty()) throw ConfigError("grid_from_moments: no moments");
  ProposalGrid grid;
  grid.scales = 1;
  for (const Interval& m : moments) {
    if (!m.valid()) throw ConfigError("grid_from_moments: invalid moment " + m.str());
    grid.groups.push_back({m.start, {m}});
  }
  return grid;
}

double temporal_iou(const Interval& a, const Interval& b) {
  const std::int64_t inter = std::max<std::int64_t>(
      0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const std::int64_t uni = a.length() + b.length() - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace vlanet
