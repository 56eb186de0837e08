#include "objmap/data_association.h"

#include <algorithm>
#include <numeric>
#include <set>

namespace objmap {

std::uint32_t SegmentOverlapTable::at(size_t segment, Label label) const {
  const auto& row = rows.at(segment);
  auto it = std::lower_bound(
      row.begin(), row.end(), label,
      [](const LabelOverlap& o, Label l) { return o.label < l; });
  return (it != row.end() && it->label == label) ? it->points : 0;
}

SegmentOverlapTable compute_3d_overlaps(std::span<const FrameSegment> segments,
                                        const SegmentMap& map,
                                        const RigidPose& pose) {
  SegmentOverlapTable table;
  table.rows.resize(segments.size());
  if (map.grid().block_count() == 0) return table;

  std::map<Label, std::uint32_t> counts;
  for (size_t i = 0; i < segments.size(); ++i) {
    counts.clear();
    for (const Eigen::Vector3f& p : segments[i].points) {
      const Eigen::Vector3d world = pose * p.cast<double>();
      if (auto label = map.lookup_voxel_label(world)) {
        ++counts[*label];
      }
    }
    table.rows[i].reserve(counts.size());
    for (const auto& [label, n] : counts) {
      table.rows[i].push_back({label, n});
    }
  }
  return table;
}

std::vector<size_t> processing_order(std::span<const FrameSegment> segments) {
  std::vector<size_t> order(segments.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (segments[a].pixel_count() != segments[b].pixel_count()) {
      return segments[a].pixel_count() > segments[b].pixel_count();
    }
    return segments[a].region.id < segments[b].region.id;
  });
  return order;
}

SegmentAssociation associate_segments(const SegmentOverlapTable& overlaps,
                                      std::span<const FrameSegment> segments,
                                      PersistentLabels& labels,
                                      double min_overlap) {
  if (overlaps.rows.size() != segments.size()) {
    throw DimensionError("overlap table does not match the segment list");
  }
  const std::vector<size_t> order = processing_order(segments);

  // Π_j and î_j per map label. Scanning in processing order keeps the first
  // (largest) segment on ties.
  struct Best {
    std::uint32_t points = 0;
    size_t segment = 0;
  };
  std::map<Label, Best> best;
  for (size_t i : order) {
    for (const LabelOverlap& o : overlaps.rows[i]) {
      Best& b = best[o.label];
      if (o.points > b.points) b = {o.points, i};
    }
  }

  struct Candidate {
    Label label;
    std::uint32_t points;
    size_t segment;
  };
  std::vector<Candidate> candidates;
  for (const auto& [label, b] : best) {
    const double scaled =
        static_cast<double>(b.points) * std::max(1, segments[b.segment].stride);
    if (scaled > min_overlap) candidates.push_back({label, b.points, b.segment});
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.points != b.points) return a.points > b.points;
              return a.label < b.label;
            });

  SegmentAssociation result;
  result.labels.assign(segments.size(), 0);
  result.matched.assign(segments.size(), false);
  for (const Candidate& c : candidates) {
    if (result.matched[c.segment]) continue;
    result.labels[c.segment] = c.label;
    result.matched[c.segment] = true;
    result.match_overlaps[c.label] = c.points;
  }
  for (size_t i : order) {
    if (!result.matched[i]) result.labels[i] = labels.fresh_segment_label();
  }
  return result;
}

InstanceMapping associate_instances(std::span<const FrameSegment> segments,
                                    std::span<const Label> segment_labels,
                                    const CountTables& counts,
                                    PersistentLabels& labels) {
  if (segment_labels.size() != segments.size()) {
    throw DimensionError("segment label list does not match the segments");
  }
  InstanceMapping mapping;
  std::set<InstanceLabel> claimed;
  std::vector<InstanceId> first_seen;
  std::set<InstanceId> seen;

  for (size_t i : processing_order(segments)) {
    const InstanceId o = segments[i].instance;
    if (o == 0) continue;
    if (seen.insert(o).second) first_seen.push_back(o);
    if (mapping.contains(o)) continue;

    auto row = counts.instance_counts.find(segment_labels[i]);
    if (row == counts.instance_counts.end()) continue;
    InstanceLabel pick = 0;
    std::uint32_t pick_count = 0;
    // Ascending key order, so strict > keeps the smaller label on ties.
    for (const auto& [persistent, n] : row->second) {
      if (n > pick_count && !claimed.contains(persistent)) {
        pick = persistent;
        pick_count = n;
      }
    }
    if (pick != 0) {
      mapping[o] = pick;
      claimed.insert(pick);
    }
  }
  for (InstanceId o : first_seen) {
    if (!mapping.contains(o)) mapping[o] = labels.fresh_instance_label();
  }
  return mapping;
}

}  // namespace objmap
