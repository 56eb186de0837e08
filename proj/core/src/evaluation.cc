#include "objmap/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <map>
#include <numeric>
#include <sstream>

namespace objmap {
namespace {

VoxelSet sorted_unique(VoxelSet v) {
  std::sort(v.begin(), v.end(), IndexLess());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::string percent(const std::optional<double>& ap) {
  if (!ap) return "-";
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.1f", *ap * 100.0);
  return buffer;
}

}  // namespace

double iou(const VoxelSet& a, const VoxelSet& b) {
  if (a.empty() && b.empty()) return 0.0;
  size_t common = 0;
  auto i = a.begin();
  auto j = b.begin();
  IndexLess less;
  while (i != a.end() && j != b.end()) {
    if (less(*i, *j)) {
      ++i;
    } else if (less(*j, *i)) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(common) /
         static_cast<double>(a.size() + b.size() - common);
}

VoxelSet voxelize_points(std::span<const Eigen::Vector3d> points,
                         double voxel_size) {
  VoxelSet out;
  out.reserve(points.size());
  for (const auto& p : points) {
    out.push_back((p / voxel_size).array().floor().cast<int>().matrix());
  }
  return sorted_unique(std::move(out));
}

VoxelSet resample_voxels(const VoxelSet& voxels, double from_size,
                         double to_size) {
  if (from_size == to_size) return voxels;
  std::vector<Eigen::Vector3d> centers;
  centers.reserve(voxels.size());
  for (const auto& v : voxels) {
    centers.push_back((v.cast<double>().array() + 0.5) * from_size);
  }
  return voxelize_points(centers, to_size);
}

std::optional<double> average_precision(
    std::span<const InstanceRecord> predictions,
    std::span<const InstanceRecord> ground_truth, ClassId class_id,
    double iou_threshold) {
  std::vector<const InstanceRecord*> gts;
  for (const auto& g : ground_truth) {
    if (g.class_id == class_id) gts.push_back(&g);
  }
  if (gts.empty()) return std::nullopt;
  std::sort(gts.begin(), gts.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });

  std::vector<const InstanceRecord*> preds;
  for (const auto& p : predictions) {
    if (p.class_id == class_id) preds.push_back(&p);
  }
  std::sort(preds.begin(), preds.end(), [](const auto* a, const auto* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->id < b->id;
  });

  std::vector<bool> taken(gts.size(), false);
  std::vector<double> precision, recall;
  size_t tp = 0;
  for (size_t k = 0; k < preds.size(); ++k) {
    double best = -1.0;
    size_t match = gts.size();
    for (size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double overlap = iou(preds[k]->voxels, gts[g]->voxels);
      if (overlap >= iou_threshold && overlap > best) {
        best = overlap;
        match = g;
      }
    }
    if (match != gts.size()) {
      taken[match] = true;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
  }

  // All-point interpolation: precision envelope summed over recall steps.
  for (size_t k = precision.size(); k-- > 1;) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  double ap = 0.0;
  double previous_recall = 0.0;
  for (size_t k = 0; k < precision.size(); ++k) {
    ap += (recall[k] - previous_recall) * precision[k];
    previous_recall = recall[k];
  }
  return ap;
}

double mean_ap(std::span<const double> per_class) {
  if (per_class.empty()) throw Error("mean_ap needs at least one class");
  return std::accumulate(per_class.begin(), per_class.end(), 0.0) /
         static_cast<double>(per_class.size());
}

EvaluationReport evaluate(std::span<const InstanceRecord> predictions,
                          std::span<const InstanceRecord> ground_truth,
                          double iou_threshold) {
  std::map<ClassId, ClassResult> classes;
  for (const auto& g : ground_truth) {
    ClassResult& c = classes[g.class_id];
    c.class_id = g.class_id;
    if (c.class_name.empty()) c.class_name = g.class_name;
    ++c.ground_truth;
  }
  for (const auto& p : predictions) {
    ClassResult& c = classes[p.class_id];
    c.class_id = p.class_id;
    if (c.class_name.empty()) c.class_name = p.class_name;
    ++c.predictions;
  }
  EvaluationReport report;
  std::vector<double> defined;
  for (auto& [id, c] : classes) {
    c.ap = average_precision(predictions, ground_truth, id, iou_threshold);
    if (c.ap) defined.push_back(*c.ap);
    report.classes.push_back(c);
  }
  if (!defined.empty()) report.map = mean_ap(defined);
  return report;
}

std::vector<InstanceRecord> predictions_from_map(const SegmentMap& map) {
  const CountTables& counts = map.counts();
  struct Group {
    std::vector<VoxelIndex> voxels;
    std::map<ClassId, std::uint64_t> class_votes;
  };
  std::map<InstanceLabel, Group> groups;
  for (const GlobalSegment& s : map.extract_segments()) {
    const InstanceLabel instance = counts.dominant_instance(s.label);
    if (instance == 0) continue;
    Group& g = groups[instance];
    g.voxels.insert(g.voxels.end(), s.voxels.begin(), s.voxels.end());
    auto row = counts.class_counts.find(s.label);
    if (row != counts.class_counts.end()) {
      for (const auto& [c, n] : row->second) g.class_votes[c] += n;
    }
  }
  std::vector<InstanceRecord> out;
  for (auto& [instance, g] : groups) {
    ClassId best = 0;
    std::uint64_t best_votes = 0;
    for (const auto& [c, n] : g.class_votes) {
      if (n > best_votes) {
        best = c;
        best_votes = n;
      }
    }
    if (best == 0) continue;
    InstanceRecord r;
    r.id = instance;
    r.class_id = best;
    r.voxels = sorted_unique(std::move(g.voxels));
    r.score = static_cast<double>(r.voxels.size());
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<InstanceRecord> ground_truth_records(const GroundTruthVolume& gt) {
  std::vector<InstanceRecord> out;
  for (const auto& inst : gt.instances) {
    if (inst.voxels.empty()) continue;
    out.push_back({inst.id, inst.class_id, inst.class_name,
                   sorted_unique(inst.voxels), 0.0});
  }
  return out;
}

std::string format_report_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "class_id,class_name,ground_truth,predictions,ap\n";
  for (const auto& c : report.classes) {
    out << c.class_id << ',' << c.class_name << ',' << c.ground_truth << ','
        << c.predictions << ',' << percent(c.ap) << '\n';
  }
  out << "mean,,,," << percent(report.map) << '\n';
  return out.str();
}

std::string format_report_table(const EvaluationReport& report) {
  size_t width = 5;
  for (const auto& c : report.classes) {
    width = std::max(width, c.class_name.size());
  }
  std::ostringstream out;
  char line[256];
  const int w = static_cast<int>(width);
  std::snprintf(line, sizeof(line), "%-*s %8s %8s %8s\n", w, "class", "gt",
                "pred", "AP@0.5");
  out << line << std::string(width + 27, '-') << '\n';
  for (const auto& c : report.classes) {
    const std::string name =
        c.class_name.empty() ? "class_" + std::to_string(c.class_id)
                             : c.class_name;
    std::snprintf(line, sizeof(line), "%-*s %8zu %8zu %8s\n", w, name.c_str(),
                  c.ground_truth, c.predictions, percent(c.ap).c_str());
    out << line;
  }
  out << std::string(width + 27, '-') << '\n';
  std::snprintf(line, sizeof(line), "%-*s %8s %8s %8s\n", w, "mAP", "", "",
                percent(report.map).c_str());
  out << line;
  return out.str();
}

}  // namespace objmap
