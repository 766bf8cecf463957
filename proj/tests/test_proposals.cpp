#include "vlanet/error.hpp"
#include "vlanet/proposals.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace vlanet;

TEST_SUITE("proposals") {

TEST_CASE("default grid on a 240-frame video") {
  const std::vector<std::int64_t> windows{176, 208, 240};
  const ProposalGrid grid = generate_segment_groups(240, 8, windows);
  CHECK(grid.group_count() == 9);
  CHECK(grid.scales == 3);
  CHECK(grid.size() == 27);
  // Group 8 starts at 64; all three windows run to the end of the video.
  CHECK(grid.groups[8].start == 64);
  for (const Interval& w : grid.groups[8].windows) CHECK(w == Interval{64, 240});
  CHECK(grid.interval(0, 0) == Interval{0, 176});
  CHECK(grid.interval(2, 0) == Interval{0, 240});
}

TEST_CASE("groups share a start and are evenly spaced") {
  const std::vector<std::int64_t> windows{32, 64, 128};
  const ProposalGrid grid = generate_segment_groups(240, 8, windows);
  for (std::size_t k = 0; k < grid.group_count(); ++k) {
    for (const Interval& w : grid.groups[k].windows) CHECK(w.start == grid.groups[k].start);
    if (k > 0) CHECK(grid.groups[k].start - grid.groups[k - 1].start == 8);
  }
  CHECK(grid.intervals().size() == grid.size());
  // Scale-major rows.
  const auto all = grid.intervals();
  CHECK(all[grid.row(1, 3)] == grid.interval(1, 3));
}

TEST_CASE("group count matches brute-force enumeration") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::int64_t> len(10, 300);
  std::uniform_int_distribution<std::int64_t> stride_dist(1, 20);
  std::uniform_int_distribution<std::int64_t> win(1, 120);
  for (int trial = 0; trial < 200; ++trial) {
    const std::int64_t t = len(rng);
    const std::int64_t stride = stride_dist(rng);
    std::set<std::int64_t> ws;
    while (ws.size() < 3) ws.insert(win(rng));
    const std::vector<std::int64_t> windows(ws.begin(), ws.end());
    if (windows.front() > t) {
      CHECK_THROWS_AS(generate_segment_groups(t, stride, windows), ConfigError);
      continue;
    }
    std::int64_t brute = 0;
    for (std::int64_t start = 0; start + windows.front() <= t; start += stride) ++brute;
    const ProposalGrid grid = generate_segment_groups(t, stride, windows);
    CHECK(static_cast<std::int64_t>(grid.group_count()) == brute);
    CHECK(static_cast<std::int64_t>(grid.group_count()) == (t - windows.front()) / stride + 1);
    for (const Interval& iv : grid.intervals()) {
      CHECK(iv.valid());
      CHECK(iv.end <= t);
    }
  }
}

TEST_CASE("invalid grid requests") {
  const std::vector<std::int64_t> windows{176, 208, 240};
  try {
    generate_segment_groups(100, 8, windows);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("video shorter than smallest window") != std::string::npos);
  }
  CHECK_THROWS_AS(generate_segment_groups(240, 0, windows), ConfigError);
  const std::vector<std::int64_t> unsorted{208, 176};
  CHECK_THROWS_AS(generate_segment_groups(240, 8, unsorted), ConfigError);
  CHECK_THROWS_AS(generate_segment_groups(240, 8, std::vector<std::int64_t>{}), ConfigError);
}

TEST_CASE("contiguous moments") {
  const auto moments = enumerate_contiguous_moments(6);
  CHECK(moments.size() == 21);
  CHECK(moments.front() == Interval{0, 1});
  CHECK(moments.back() == Interval{5, 6});
  CHECK(std::is_sorted(moments.begin(), moments.end()));
  CHECK(enumerate_contiguous_moments(1).size() == 1);
  CHECK_THROWS_AS(enumerate_contiguous_moments(0), ConfigError);
  for (std::int64_t n = 1; n <= 12; ++n) {
    CHECK(enumerate_contiguous_moments(n).size() == static_cast<std::size_t>(n * (n + 1) / 2));
  }
  const ProposalGrid grid = grid_from_moments(moments);
  CHECK(grid.group_count() == 21);
  CHECK(grid.scales == 1);
}

TEST_CASE("temporal IoU") {
  CHECK(temporal_iou({0, 10}, {0, 10}) == 1.0);
  CHECK(temporal_iou({0, 10}, {10, 20}) == 0.0);
  CHECK(temporal_iou({0, 10}, {5, 15}) == doctest::Approx(5.0 / 15.0));
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::int64_t> pos(0, 60);
  for (int trial = 0; trial < 500; ++trial) {
    std::int64_t a = pos(rng), b = pos(rng), c = pos(rng), d = pos(rng);
    if (a == b || c == d) continue;
    const Interval x{std::min(a, b), std::max(a, b)};
    const Interval y{std::min(c, d), std::max(c, d)};
    CHECK(temporal_iou(x, y) == doctest::Approx(oracle::iou(x, y)).epsilon(1e-15));
    CHECK(temporal_iou(x, y) == temporal_iou(y, x));
  }
}

TEST_CASE("distinct intervals collapse clamped duplicates") {
  const std::vector<std::int64_t> windows{176, 208, 240};
  const ProposalGrid grid = generate_segment_groups(240, 8, windows);
  const auto distinct = grid.distinct_intervals();
  CHECK(distinct.size() < grid.size());
  CHECK(std::set<Interval>(distinct.begin(), distinct.end()).size() == distinct.size());
}

}  // TEST_SUITE
