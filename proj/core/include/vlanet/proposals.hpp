#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vlanet {

/// Half-open temporal span [start, end) in frames or segments.
struct Interval {
  std::int64_t start = 0;
  std::int64_t end = 0;

  std::int64_t length() const { return end - start; }
  bool valid() const { return start >= 0 && end > start; }
  std::string str() const;

  friend bool operator==(const Interval&, const Interval&) = default;
  friend auto operator<=>(const Interval&, const Interval&) = default;
};

/// Windows sharing one start time, one per scale.
struct SegmentGroup {
  std::int64_t start = 0;
  std::vector<Interval> windows;
};

/// K segment groups x L scales. Feature rows derived from a grid are laid out
/// scale-major: row(l, k) = l * K + k.
struct ProposalGrid {
  std::vector<SegmentGroup> groups;
  std::size_t scales = 0;

  std::size_t group_count() const { return groups.size(); }
  std::size_t size() const { return groups.size() * scales; }
  std::size_t row(std::size_t scale, std::size_t group) const {
    return scale * groups.size() + group;
  }
  const Interval& interval(std::size_t scale, std::size_t group) const {
    return groups[group].windows[scale];
  }
  /// All K*L intervals in scale-major row order.
  std::vector<Interval> intervals() const;
  /// Distinct intervals sorted by (start, end).
  std::vector<Interval> distinct_intervals() const;
};

/// Groups start at k * stride while the smallest window still fits; longer
/// windows are clamped to video_len so every group keeps all L scales.
ProposalGrid generate_segment_groups(std::int64_t video_len, std::int64_t stride,
                                     std::span<const std::int64_t> window_sizes);

/// Every contiguous span [i, j) with 0 <= i < j <= segment_count, ordered by
/// (start, end).
std::vector<Interval> enumerate_contiguous_moments(std::int64_t segment_count);

/// One group per moment with a single scale, for segment-unit datasets.
ProposalGrid grid_from_moments(std::span<const Interval> moments);

double temporal_iou(const Interval& a, const Interval& b);

}  // namespace vlanet
