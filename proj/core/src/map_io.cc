#include "objmap/map_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "objmap/geometry.h"

namespace objmap {
namespace {

constexpr char kMagic[8] = {'O', 'B', 'J', 'M', 'A', 'P', '\0', '\0'};
constexpr char kTrailer[4] = {'O', 'M', 'E', 'N'};

class Writer {
 public:
  void bytes(const char* data, size_t n) { out_.append(data, n); }
  void u32(std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>(x >> (8 * i)));
  }
  void u64(std::uint64_t x) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>(x >> (8 * i)));
  }
  void i32(std::int32_t x) { u32(static_cast<std::uint32_t>(x)); }
  void f32(float x) { u32(std::bit_cast<std::uint32_t>(x)); }
  void f64(double x) { u64(std::bit_cast<std::uint64_t>(x)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  void bytes(char* out, size_t n) {
    need(n);
    std::memcpy(out, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) {
      x |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_++]))
           << (8 * i);
    }
    return x;
  }
  std::uint64_t u64() {
    const std::uint64_t lo = u32();
    const std::uint64_t hi = u32();
    return lo | (hi << 32);
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(size_t n) const {
    if (in_.size() - pos_ < n) {
      throw ParseError("map file (format version " +
                       std::to_string(kMapFormatVersion) + ") is truncated");
    }
  }

  const std::string& in_;
  size_t pos_ = 0;
};

ParseError corrupt(const std::string& what) {
  return ParseError("corrupt map file (format version " +
                    std::to_string(kMapFormatVersion) + "): " + what);
}

}  // namespace

std::string serialize_map(const SegmentMap& map) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kMapFormatVersion);
  w.u32(kBlockSide);
  w.f64(map.config().voxel_size);
  w.f64(map.config().truncation_multiplier);
  w.f32(map.config().max_weight);
  w.u32(map.labels().next_segment_label);
  w.u32(map.labels().next_instance_label);

  const auto blocks = map.grid().sorted_block_indices();
  w.u64(blocks.size());
  for (const BlockIndex& index : blocks) {
    w.i32(index.x());
    w.i32(index.y());
    w.i32(index.z());
    const VoxelBlock& block = *map.grid().find_block(index);
    for (const TsdfVoxel& voxel : block.voxels) {
      w.f32(voxel.sdf);
      w.f32(voxel.weight);
      w.u32(voxel.label);
      w.u32(voxel.label_confidence);
    }
  }

  auto write_table = [&w](const auto& table) {
    std::uint64_t entries = 0;
    for (const auto& row : table) entries += row.second.size();
    w.u64(entries);
    for (const auto& [label, row] : table) {
      for (const auto& [key, count] : row) {
        w.u32(label);
        w.u32(key);
        w.u32(count);
      }
    }
  };
  write_table(map.counts().instance_counts);
  write_table(map.counts().class_counts);
  w.bytes(kTrailer, sizeof(kTrailer));
  return w.take();
}

SegmentMap deserialize_map(const std::string& bytes) {
  Reader r(bytes);
  char magic[sizeof(kMagic)];
  if (bytes.size() < sizeof(kMagic)) {
    throw corrupt("file too short for a map header");
  }
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw corrupt("bad magic, not an objmap map file");
  }
  const std::uint32_t version = r.u32();
  if (version != kMapFormatVersion) {
    throw ParseError("unsupported map format version " +
                     std::to_string(version) + " (expected " +
                     std::to_string(kMapFormatVersion) + ")");
  }
  if (r.u32() != kBlockSide) {
    throw corrupt("unsupported block size");
  }
  MapConfig config;
  config.voxel_size = r.f64();
  config.truncation_multiplier = r.f64();
  config.max_weight = r.f32();
  SegmentMap map = [&] {
    try {
      return SegmentMap(config);
    } catch (const Error& e) {
      throw corrupt(e.what());
    }
  }();
  map.labels().next_segment_label = r.u32();
  map.labels().next_instance_label = r.u32();

  const std::uint64_t n_blocks = r.u64();
  constexpr size_t kBlockBytes = 12 + kVoxelsPerBlock * 16;
  if (n_blocks > r.remaining() / kBlockBytes) {
    throw corrupt("block count exceeds file size");
  }
  for (std::uint64_t b = 0; b < n_blocks; ++b) {
    BlockIndex index;
    index.x() = r.i32();
    index.y() = r.i32();
    index.z() = r.i32();
    if (map.grid().find_block(index) != nullptr) {
      throw corrupt("duplicate block");
    }
    VoxelBlock& block = map.grid().allocate_block(index);
    for (TsdfVoxel& voxel : block.voxels) {
      voxel.sdf = r.f32();
      voxel.weight = r.f32();
      voxel.label = r.u32();
      voxel.label_confidence = r.u32();
    }
  }

  auto read_table = [&r](auto& table, const char* name) {
    const std::uint64_t entries = r.u64();
    if (entries > r.remaining() / 12) {
      throw corrupt(std::string(name) + " entry count exceeds file size");
    }
    for (std::uint64_t e = 0; e < entries; ++e) {
      const std::uint32_t label = r.u32();
      const std::uint32_t key = r.u32();
      const std::uint32_t count = r.u32();
      if (count == 0) {
        throw corrupt(std::string(name) + " holds a zero count");
      }
      if (!table[label].emplace(key, count).second) {
        throw corrupt(std::string(name) + " holds a duplicate entry");
      }
    }
  };
  read_table(map.counts().instance_counts, "instance count table");
  read_table(map.counts().class_counts, "class count table");

  char trailer[sizeof(kTrailer)];
  r.bytes(trailer, sizeof(trailer));
  if (std::memcmp(trailer, kTrailer, sizeof(kTrailer)) != 0 ||
      r.remaining() != 0) {
    throw corrupt("bad trailer");
  }
  return map;
}

void save_map(const std::filesystem::path& path, const SegmentMap& map) {
  const std::string bytes = serialize_map(map);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error("failed writing " + path.string());
  }
}

SegmentMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open map file " + path.string());
  }
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return deserialize_map(bytes);
}

}  // namespace objmap
