#ifndef OBJMAP_EVALUATION_H_
#define OBJMAP_EVALUATION_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "objmap/depth_segmentation.h"
#include "objmap/synth.h"
#include "objmap/volumetric_map.h"

namespace objmap {

// Sorted (IndexLess), duplicate-free voxel indices.
using VoxelSet = std::vector<VoxelIndex>;

double iou(const VoxelSet& a, const VoxelSet& b);

// Nearest-voxel transfer of arbitrary points onto a grid.
VoxelSet voxelize_points(std::span<const Eigen::Vector3d> points,
                         double voxel_size);
// Moves a voxel set to a grid of another resolution through voxel centers.
VoxelSet resample_voxels(const VoxelSet& voxels, double from_size,
                         double to_size);

struct InstanceRecord {
  std::uint32_t id = 0;
  ClassId class_id = 0;
  std::string class_name;
  VoxelSet voxels;
  // Ranking score for predictions; higher ranks first.
  double score = 0.0;
};

inline constexpr double kDefaultIouThreshold = 0.5;

// AP of one class in [0, 1]. Predictions are ranked by score (ties by id) and
// each is greedily matched to the unmatched ground truth of its class with
// the highest IoU >= threshold; the precision-recall curve is integrated with
// all-point interpolation. nullopt when the class has no ground truth.
std::optional<double> average_precision(
    std::span<const InstanceRecord> predictions,
    std::span<const InstanceRecord> ground_truth, ClassId class_id,
    double iou_threshold = kDefaultIouThreshold);

// Unweighted mean. Throws Error on an empty list.
double mean_ap(std::span<const double> per_class);

struct ClassResult {
  ClassId class_id = 0;
  std::string class_name;
  size_t ground_truth = 0;
  size_t predictions = 0;
  std::optional<double> ap;
};

struct EvaluationReport {
  std::vector<ClassResult> classes;  // ascending class id
  std::optional<double> map;         // over classes with defined AP
};

EvaluationReport evaluate(std::span<const InstanceRecord> predictions,
                          std::span<const InstanceRecord> ground_truth,
                          double iou_threshold = kDefaultIouThreshold);

// One prediction per persistent instance: the union of all segments whose
// dominant instance it is, with the class maximizing the summed Ψ rows of
// those segments. Score = voxel count.
std::vector<InstanceRecord> predictions_from_map(const SegmentMap& map);

std::vector<InstanceRecord> ground_truth_records(const GroundTruthVolume& gt);

// AP values are printed in percent with one decimal, undefined ones as "-".
std::string format_report_csv(const EvaluationReport& report);
std::string format_report_table(const EvaluationReport& report);

}  // namespace objmap

#endif  // OBJMAP_EVALUATION_H_
