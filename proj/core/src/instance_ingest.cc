#include "objmap/instance_ingest.h"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "objmap/png_io.h"

namespace objmap {

void MaskFrame::validate() const {
  std::set<std::uint16_t> missing;
  for (size_t i = 0; i < ids.size(); ++i) {
    const std::uint16_t id = ids[i];
    if (id != 0 && !instances.contains(id)) {
      missing.insert(id);
    }
  }
  if (!missing.empty()) {
    throw ParseError("mask raster contains instance id " +
                     std::to_string(*missing.begin()) +
                     " that is missing from the instance table");
  }
}

MaskFrame fuse_binary_masks(std::span<const BinaryMask> masks, int width,
                            int height) {
  if (masks.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error("too many instance masks for a 16-bit id raster");
  }
  MaskFrame frame;
  frame.ids = Image<std::uint16_t>(width, height, 0);
  std::vector<double> claimed_score(frame.ids.size(), 0.0);
  for (size_t k = 0; k < masks.size(); ++k) {
    const BinaryMask& mask = masks[k];
    if (!mask.mask.same_shape(width, height)) {
      throw DimensionError("binary mask size differs from the frame size");
    }
    const auto id = static_cast<std::uint16_t>(k + 1);
    frame.instances.emplace(id, mask.info);
    for (size_t i = 0; i < frame.ids.size(); ++i) {
      if (mask.mask[i] == 0) {
        continue;
      }
      if (frame.ids[i] == 0 || mask.info.score > claimed_score[i]) {
        frame.ids[i] = id;
        claimed_score[i] = mask.info.score;
      }
    }
  }
  return frame;
}

std::filesystem::path mask_raster_path(const std::filesystem::path& directory,
                                       const std::string& frame) {
  return directory / (frame + ".masks.png");
}

std::filesystem::path mask_table_path(const std::filesystem::path& directory,
                                      const std::string& frame) {
  return directory / (frame + ".masks.json");
}

std::map<InstanceId, InstanceInfo> parse_mask_table(const std::string& text) {
  using nlohmann::json;
  std::map<InstanceId, InstanceInfo> table;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed mask table: ") + e.what());
  }
  if (!doc.is_array()) {
    throw ParseError("mask table must be a JSON array");
  }
  for (const json& entry : doc) {
    try {
      const auto id = entry.at("id").get<std::int64_t>();
      if (id <= 0 || id > std::numeric_limits<std::uint16_t>::max()) {
        throw ParseError("mask table id out of range: " + std::to_string(id));
      }
      InstanceInfo info;
      const auto class_id = entry.at("class_id").get<std::int64_t>();
      if (class_id <= 0 || class_id > std::numeric_limits<std::uint32_t>::max()) {
        throw ParseError("mask table class_id must be a positive integer");
      }
      info.class_id = static_cast<ClassId>(class_id);
      info.class_name = entry.value("class_name", std::string());
      info.score = entry.value("score", 1.0);
      if (!(info.score >= 0.0 && info.score <= 1.0)) {
        throw ParseError("mask score must lie in [0, 1]");
      }
      if (!table.emplace(static_cast<InstanceId>(id), std::move(info)).second) {
        throw ParseError("duplicate id in mask table: " + std::to_string(id));
      }
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed mask table entry: ") + e.what());
    }
  }
  return table;
}

std::string format_mask_table(const std::map<InstanceId, InstanceInfo>& table) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& [id, info] : table) {
    doc.push_back({{"id", id},
                   {"class_id", info.class_id},
                   {"class_name", info.class_name},
                   {"score", info.score}});
  }
  return doc.dump(2) + "\n";
}

MaskFrame load_masks(const std::filesystem::path& directory,
                     const std::string& frame, int width, int height) {
  const auto raster_path = mask_raster_path(directory, frame);
  MaskFrame masks;
  if (!std::filesystem::exists(raster_path)) {
    masks.ids = Image<std::uint16_t>(width, height, 0);
    return masks;
  }
  masks.ids = read_png16(raster_path);
  if (!masks.ids.same_shape(width, height)) {
    throw DimensionError("mask raster " + raster_path.string() + " is " +
                         std::to_string(masks.ids.width()) + "x" +
                         std::to_string(masks.ids.height()) + ", expected " +
                         std::to_string(width) + "x" + std::to_string(height));
  }
  const auto table_path = mask_table_path(directory, frame);
  std::ifstream in(table_path);
  if (!in) {
    throw ParseError("missing mask table " + table_path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  masks.instances = parse_mask_table(buffer.str());
  masks.validate();
  return masks;
}

void save_masks(const std::filesystem::path& directory,
                const std::string& frame, const MaskFrame& masks) {
  masks.validate();
  write_png16(mask_raster_path(directory, frame), masks.ids);
  std::ofstream out(mask_table_path(directory, frame));
  if (!out) {
    throw Error("cannot write mask table for frame " + frame);
  }
  out << format_mask_table(masks.instances);
}

OverlapTable compute_overlaps(std::span<const Region2D> regions,
                              const MaskFrame& masks) {
  OverlapTable table;
  table.rows.resize(regions.size());
  std::map<InstanceId, std::uint32_t> counts;
  for (size_t i = 0; i < regions.size(); ++i) {
    const Region2D& region = regions[i];
    counts.clear();
    for (const std::uint32_t pixel : region.pixels) {
      if (pixel >= masks.ids.size()) {
        throw DimensionError("region pixel lies outside the mask raster");
      }
      const std::uint16_t id = masks.ids[pixel];
      if (id != 0) {
        ++counts[id];
      }
    }
    const double area = static_cast<double>(region.pixel_count());
    auto& row = table.rows[i];
    row.reserve(counts.size());
    for (const auto& [mask, pixels] : counts) {
      row.push_back({mask, pixels, static_cast<double>(pixels) / area});
    }
  }
  return table;
}

std::vector<InstanceId> refine_segments(std::span<FrameSegment> segments,
                                        const OverlapTable& overlaps,
                                        const MaskFrame& masks,
                                        double min_overlap) {
  if (overlaps.rows.size() != segments.size()) {
    throw DimensionError("overlap table does not match the segment list");
  }
  std::set<InstanceId> used;
  for (size_t i = 0; i < segments.size(); ++i) {
    FrameSegment& segment = segments[i];
    segment.instance = 0;
    segment.class_id = 0;
    const MaskOverlap* best = nullptr;
    // Rows are sorted by mask id, so strict > keeps the lowest id on ties.
    for (const MaskOverlap& entry : overlaps.rows[i]) {
      if (best == nullptr || entry.pixels > best->pixels) {
        best = &entry;
      }
    }
    if (best == nullptr || !(best->fraction > min_overlap)) {
      continue;
    }
    const auto info = masks.instances.find(best->mask);
    if (info == masks.instances.end()) {
      throw ParseError("overlap refers to mask " + std::to_string(best->mask) +
                       " missing from the instance table");
    }
    segment.instance = best->mask;
    segment.class_id = info->second.class_id;
    used.insert(best->mask);
  }
  return {used.begin(), used.end()};
}

}  // namespace objmap
