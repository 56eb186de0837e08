#include "objmap/instance_ingest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "test_support.h"

namespace objmap {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("objmap_ingest_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Region2D region_of(std::vector<std::uint32_t> pixels, RegionId id = 1) {
  return {id, std::move(pixels)};
}

// Region of `n` pixels of which the first `inside` carry mask id 1.
struct Fixture {
  MaskFrame masks;
  std::vector<Region2D> regions;
};

Fixture partial_overlap(int n, int inside) {
  Fixture f;
  f.masks.ids = Image<std::uint16_t>(n, 1, 0);
  f.masks.instances[1] = {62, "chair", 0.98};
  std::vector<std::uint32_t> pixels;
  for (int i = 0; i < n; ++i) {
    pixels.push_back(static_cast<std::uint32_t>(i));
    if (i < inside) f.masks.ids[i] = 1;
  }
  f.regions.push_back(region_of(pixels));
  return f;
}

TEST(Overlaps, RegionInsideMaskIsOne) {
  const Fixture f = partial_overlap(50, 50);
  const OverlapTable t = compute_overlaps(f.regions, f.masks);
  ASSERT_EQ(t.rows[0].size(), 1u);
  EXPECT_DOUBLE_EQ(t.rows[0][0].fraction, 1.0);
}

TEST(Overlaps, DisjointEntryAbsent) {
  const Fixture f = partial_overlap(50, 0);
  EXPECT_TRUE(compute_overlaps(f.regions, f.masks).rows[0].empty());
}

TEST(Overlaps, EightyOfTwoHundred) {
  const Fixture f = partial_overlap(200, 80);
  const OverlapTable t = compute_overlaps(f.regions, f.masks);
  ASSERT_EQ(t.rows[0].size(), 1u);
  EXPECT_EQ(t.rows[0][0].pixels, 80u);
  EXPECT_DOUBLE_EQ(t.rows[0][0].fraction, 0.4);
}

// Property: sparse overlaps equal a dense double loop over pixels and masks.
TEST(OverlapsProperty, MatchBruteForce) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int w = testing::uniform_int(rng, 4, 40);
    const int h = testing::uniform_int(rng, 4, 30);
    const MaskFrame masks = testing::random_masks(rng, w, h, 6);
    // Random disjoint regions: a random label per pixel.
    const int n_regions = testing::uniform_int(rng, 1, 5);
    std::vector<Region2D> regions(n_regions);
    for (int r = 0; r < n_regions; ++r) regions[r].id = r + 1;
    for (int i = 0; i < w * h; ++i) {
      const int r = testing::uniform_int(rng, 0, n_regions);
      if (r < n_regions) regions[r].pixels.push_back(i);
    }
    std::erase_if(regions, [](const Region2D& r) { return r.pixels.empty(); });
    const OverlapTable t = compute_overlaps(regions, masks);
    ASSERT_EQ(t.rows.size(), regions.size());
    for (size_t i = 0; i < regions.size(); ++i) {
      size_t listed = 0;
      for (int k = 1; k <= 6; ++k) {
        std::uint32_t brute = 0;
        for (int v = 0; v < h; ++v) {
          for (int u = 0; u < w; ++u) {
            const auto idx = static_cast<std::uint32_t>(v * w + u);
            const bool in_region =
                std::find(regions[i].pixels.begin(), regions[i].pixels.end(),
                          idx) != regions[i].pixels.end();
            if (in_region && masks.ids(u, v) == k) ++brute;
          }
        }
        auto it = std::find_if(t.rows[i].begin(), t.rows[i].end(),
                               [&](const MaskOverlap& o) { return o.mask == k; });
        if (brute == 0) {
          EXPECT_TRUE(it == t.rows[i].end());
        } else {
          ASSERT_TRUE(it != t.rows[i].end());
          EXPECT_EQ(it->pixels, brute);
          EXPECT_DOUBLE_EQ(it->fraction,
                           double(brute) / double(regions[i].pixel_count()));
          ++listed;
        }
      }
      EXPECT_EQ(listed, t.rows[i].size());
    }
  }
}

std::vector<FrameSegment> segments_for(const std::vector<Region2D>& regions) {
  std::vector<FrameSegment> out;
  for (const auto& r : regions) {
    FrameSegment s;
    s.region = r;
    out.push_back(s);
  }
  return out;
}

TEST(Refine, AboveThresholdTakesMask) {
  const Fixture f = partial_overlap(10, 9);
  auto segments = segments_for(f.regions);
  const auto used = refine_segments(
      segments, compute_overlaps(f.regions, f.masks), f.masks, 0.5);
  EXPECT_EQ(segments[0].instance, 1u);
  EXPECT_EQ(segments[0].class_id, 62u);
  EXPECT_EQ(used, std::vector<InstanceId>{1});
}

TEST(Refine, AtOrBelowThresholdStaysUnlabeled) {
  for (int inside : {0, 3, 5}) {
    const Fixture f = partial_overlap(10, inside);
    auto segments = segments_for(f.regions);
    const auto used = refine_segments(
        segments, compute_overlaps(f.regions, f.masks), f.masks, 0.5);
    EXPECT_EQ(segments[0].instance, 0u) << inside;
    EXPECT_EQ(segments[0].class_id, 0u);
    EXPECT_TRUE(used.empty());
  }
}

TEST(Refine, SeveralRegionsShareOneMask) {
  MaskFrame masks;
  masks.ids = Image<std::uint16_t>(20, 1, 1);
  masks.instances[1] = {3, "sofa", 0.9};
  std::vector<Region2D> regions = {region_of({0, 1, 2, 3, 4}, 1),
                                   region_of({10, 11, 12}, 2)};
  auto segments = segments_for(regions);
  const auto used =
      refine_segments(segments, compute_overlaps(regions, masks), masks, 0.5);
  EXPECT_EQ(segments[0].instance, 1u);
  EXPECT_EQ(segments[1].instance, 1u);
  EXPECT_EQ(used, std::vector<InstanceId>{1});
}

TEST(Refine, TieGoesToLowestMaskId) {
  MaskFrame masks;
  masks.ids = Image<std::uint16_t>(4, 1, 0);
  masks.ids[0] = masks.ids[1] = 7;
  masks.ids[2] = masks.ids[3] = 4;
  masks.instances[4] = {1, "a", 0.1};
  masks.instances[7] = {2, "b", 0.9};
  std::vector<Region2D> regions = {region_of({0, 1, 2, 3})};
  auto segments = segments_for(regions);
  // 0.5 each; with τ_p below that the lower id wins.
  refine_segments(segments, compute_overlaps(regions, masks), masks, 0.4);
  EXPECT_EQ(segments[0].instance, 4u);
  EXPECT_EQ(segments[0].class_id, 1u);
}

// Property: o_i = 0 exactly when c_i = 0, and a labeled segment's overlap
// with its mask strictly exceeds τ_p and is maximal.
TEST(RefineProperty, InstanceIffClassAndArgmax) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 20, h = 10;
    const MaskFrame masks = testing::random_masks(rng, w, h, 4);
    std::vector<Region2D> regions(3);
    for (int r = 0; r < 3; ++r) regions[r].id = r + 1;
    for (int i = 0; i < w * h; ++i) {
      regions[testing::uniform_int(rng, 0, 2)].pixels.push_back(i);
    }
    auto segments = segments_for(regions);
    const double tau = testing::uniform(rng, 0.05, 0.95);
    const OverlapTable t = compute_overlaps(regions, masks);
    refine_segments(segments, t, masks, tau);
    for (size_t i = 0; i < segments.size(); ++i) {
      EXPECT_EQ(segments[i].instance == 0, segments[i].class_id == 0);
      double best = 0;
      for (const auto& o : t.rows[i]) best = std::max(best, o.fraction);
      if (segments[i].instance != 0) {
        EXPECT_GT(best, tau);
        for (const auto& o : t.rows[i]) {
          if (o.mask == segments[i].instance) EXPECT_EQ(o.fraction, best);
        }
      } else {
        EXPECT_LE(best, tau);
      }
    }
  }
}

TEST(MaskFiles, AbsentFileGivesEmptyFrame) {
  const fs::path dir = scratch("absent");
  const MaskFrame m = load_masks(dir, "000001", 8, 6);
  EXPECT_EQ(m.instance_count(), 0u);
  EXPECT_TRUE(m.ids.same_shape(8, 6));
  for (auto id : m.ids.data()) EXPECT_EQ(id, 0);
}

TEST(MaskFiles, RoundTrip640x480) {
  const fs::path dir = scratch("roundtrip");
  MaskFrame m;
  m.ids = Image<std::uint16_t>(640, 480, 0);
  for (int v = 100; v < 200; ++v) {
    for (int u = 50; u < 300; ++u) m.ids(u, v) = 1;
  }
  m.instances[1] = {62, "chair", 0.98};
  save_masks(dir, "17", m);
  const MaskFrame back = load_masks(dir, "17", 640, 480);
  EXPECT_EQ(back.instance_count(), 1u);
  EXPECT_EQ(back.ids, m.ids);
  EXPECT_EQ(back.instances, m.instances);
}

TEST(MaskFiles, UnknownRasterIdIsParseError) {
  const fs::path dir = scratch("unknown");
  MaskFrame m;
  m.ids = Image<std::uint16_t>(4, 4, 0);
  m.ids(1, 1) = 3;
  m.instances[3] = {1, "x", 1.0};
  save_masks(dir, "a", m);
  std::ofstream(mask_table_path(dir, "a"))
      << R"([{"id": 1, "class_id": 62, "class_name": "chair", "score": 0.98}])";
  EXPECT_THROW(load_masks(dir, "a", 4, 4), ParseError);
}

TEST(MaskFiles, DimensionMismatchAndMalformedTable) {
  const fs::path dir = scratch("bad");
  MaskFrame m;
  m.ids = Image<std::uint16_t>(4, 4, 0);
  save_masks(dir, "a", m);
  EXPECT_THROW(load_masks(dir, "a", 5, 4), DimensionError);
  std::ofstream(mask_table_path(dir, "a")) << "{not json";
  EXPECT_THROW(load_masks(dir, "a", 4, 4), ParseError);
  fs::remove(mask_table_path(dir, "a"));
  EXPECT_THROW(load_masks(dir, "a", 4, 4), ParseError);
}

TEST(MaskTable, RejectsBadEntries) {
  EXPECT_THROW(parse_mask_table(R"({"id": 1})"), ParseError);
  EXPECT_THROW(parse_mask_table(R"([{"id": 0, "class_id": 1}])"), ParseError);
  EXPECT_THROW(parse_mask_table(R"([{"id": 1, "class_id": 0}])"), ParseError);
  EXPECT_THROW(parse_mask_table(R"([{"id": 1, "class_id": 2},
                                    {"id": 1, "class_id": 3}])"),
               ParseError);
  EXPECT_THROW(parse_mask_table(R"([{"id": 1, "class_id": 2, "score": 2}])"),
               ParseError);
  const auto t = parse_mask_table(
      R"([{"id": 2, "class_id": 5, "class_name": "tv", "score": 0.5}])");
  EXPECT_EQ(t.at(2).class_name, "tv");
  EXPECT_EQ(parse_mask_table(format_mask_table(t)), t);
}

TEST(FuseBinaryMasks, HigherScoreClaimsContestedPixels) {
  BinaryMask a{Image<std::uint8_t>(3, 1, 0), {1, "a", 0.4}};
  BinaryMask b{Image<std::uint8_t>(3, 1, 0), {2, "b", 0.9}};
  BinaryMask c{Image<std::uint8_t>(3, 1, 0), {3, "c", 0.9}};
  a.mask[0] = a.mask[1] = 1;
  b.mask[1] = b.mask[2] = 1;
  c.mask[2] = 1;
  const std::vector<BinaryMask> masks = {a, b, c};
  const MaskFrame f = fuse_binary_masks(masks, 3, 1);
  EXPECT_EQ(f.ids[0], 1);
  EXPECT_EQ(f.ids[1], 2);
  EXPECT_EQ(f.ids[2], 2);  // equal score, earlier mask wins
  EXPECT_EQ(f.instance_count(), 3u);
  EXPECT_EQ(f.instances.at(3).class_id, 3u);
}

}  // namespace
}  // namespace objmap
