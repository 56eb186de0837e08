// objmap command line: run, eval, synth, export.
//
// Exit codes: 0 success, 1 usage error, 2 data error. Log verbosity follows
// GLOG_v / GLOG_minloglevel, or -v on the command line.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <glog/logging.h>

#include "objmap/dataset.h"
#include "objmap/evaluation.h"
#include "objmap/map_io.h"
#include "objmap/pipeline.h"
#include "objmap/synth.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct RunArgs {
  std::string dataset;
  std::string out;
  objmap::PipelineConfig config;
  bool no_masks = false;
  bool no_carve = false;
  bool quiet = false;
};

struct EvalArgs {
  std::string map;
  std::string gt;
  std::string csv;
  double iou = objmap::kDefaultIouThreshold;
};

struct SynthArgs {
  std::string scene;
  std::string out;
  bool no_masks = false;
  objmap::SynthDatasetOptions options;
};

struct ExportArgs {
  std::string map;
  std::string out;
  std::vector<std::string> what{"mesh", "segments", "counts"};
};

void add_run(CLI::App& app, RunArgs& a) {
  auto* run = app.add_subcommand("run", "Map a dataset directory");
  // --config belongs to the top-level app; fall through so it can follow
  // the subcommand name.
  run->fallthrough();
  run->add_option("--dataset", a.dataset, "Dataset directory")->required();
  run->add_option("--out", a.out, "Output directory")->required();
  auto& c = a.config;
  run->add_option("--voxel-size", c.map.voxel_size, "Voxel edge in meters")
      ->capture_default_str();
  run->add_option("--truncation-multiplier", c.map.truncation_multiplier,
                  "Truncation distance in voxels")
      ->capture_default_str();
  run->add_option("--tau-p", c.min_instance_overlap,
                  "Minimum region/mask overlap fraction")
      ->capture_default_str();
  run->add_option("--tau-pi", c.min_segment_overlap,
                  "Minimum 3D overlap in points")
      ->capture_default_str();
  run->add_option("--concavity-deg", c.segmentation.concavity_angle_deg)
      ->capture_default_str();
  run->add_option("--min-distance", c.segmentation.min_distance)
      ->capture_default_str();
  run->add_option("--distance-factor", c.segmentation.distance_factor)
      ->capture_default_str();
  run->add_option("--min-region-size", c.segmentation.min_region_size)
      ->capture_default_str();
  run->add_option("--max-range", c.integrator.max_range)
      ->capture_default_str();
  run->add_option("--frame-stride", c.frame_stride, "Use every n-th frame")
      ->capture_default_str();
  run->add_option("--point-stride", c.point_stride,
                  "Use every n-th segment point for 3D overlaps")
      ->capture_default_str();
  run->add_option("--threads", c.preprocess_threads,
                  "Preprocessing threads, 0 = inline")
      ->capture_default_str();
  run->add_flag("--no-masks", a.no_masks, "Ignore instance masks");
  run->add_flag("--no-carve", a.no_carve, "Skip free-space allocation");
  run->add_flag("--realtime", c.realtime,
                "Drop frames by wall clock instead of a fixed stride");
  run->add_option("--realtime-hz", c.realtime_hz)->capture_default_str();
  run->add_flag("--quiet", a.quiet, "No progress output");
}

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* eval = app.add_subcommand("eval", "Score a map against ground truth");
  eval->add_option("--map", a.map, "Map file")->required();
  eval->add_option("--gt", a.gt, "Ground-truth volume file")->required();
  eval->add_option("--csv", a.csv, "Also write the table as CSV");
  eval->add_option("--iou", a.iou, "IoU threshold")->capture_default_str();
}

void add_synth(CLI::App& app, SynthArgs& a) {
  auto* synth = app.add_subcommand("synth", "Render a synthetic dataset");
  synth->add_option("--scene", a.scene, "Scene JSON")->required();
  synth->add_option("--out", a.out, "Dataset directory")->required();
  synth->add_flag("--no-masks", a.no_masks, "Do not write instance masks");
  synth->add_option("--gt-voxel-size", a.options.gt_voxel_size)
      ->capture_default_str();
  synth->add_option("--gt-band", a.options.gt_band,
                    "Surface band of ground-truth voxels")
      ->capture_default_str();
}

void add_export(CLI::App& app, ExportArgs& a) {
  auto* exp = app.add_subcommand("export", "Export meshes and tables");
  exp->add_option("--map", a.map, "Map file")->required();
  exp->add_option("--out", a.out, "Output directory")->required();
  exp->add_option("--what", a.what, "Any of mesh, segments, counts")
      ->check(CLI::IsMember({"mesh", "segments", "counts"}))
      ->delimiter(',')
      ->capture_default_str();
}

int do_run(RunArgs& a) {
  a.config.use_masks = !a.no_masks;
  a.config.integrator.carve_free_space = !a.no_carve;
  a.config.validate();
  const objmap::Dataset dataset = objmap::Dataset::open(a.dataset);
  LOG(INFO) << "dataset " << a.dataset << ": " << dataset.frames().size()
            << " frames";
  const auto summary = objmap::run_pipeline(
      dataset, a.config, a.out,
      [&](const objmap::FrameResult& r, size_t done, size_t total) {
        if (!a.quiet) {
          std::fprintf(stderr, "\r[%zu/%zu] frame %s", done, total,
                       r.id.c_str());
          if (done == total) std::fputc('\n', stderr);
        }
      });
  std::printf(
      "integrated %zu of %zu frames (%zu skipped, %zu dropped); "
      "%zu segments, %zu instances; %.2f s\n",
      summary.frames_integrated, summary.frames_total,
      summary.frames_skipped.size(), summary.frames_dropped, summary.segments,
      summary.instances, summary.wall_seconds);
  return 0;
}

int do_eval(const EvalArgs& a) {
  const objmap::SegmentMap map = objmap::load_map(a.map);
  const objmap::GroundTruthVolume gt = objmap::load_ground_truth(a.gt);
  auto gts = objmap::ground_truth_records(gt);
  const double voxel = map.config().voxel_size;
  if (gt.voxel_size != voxel) {
    LOG(INFO) << "resampling ground truth from " << gt.voxel_size << " to "
              << voxel << " m voxels";
    for (auto& g : gts) {
      g.voxels = objmap::resample_voxels(g.voxels, gt.voxel_size, voxel);
    }
  }
  auto preds = objmap::predictions_from_map(map);
  // Predictions carry class ids only; borrow names from the ground truth.
  for (auto& p : preds) {
    for (const auto& g : gts) {
      if (g.class_id == p.class_id) p.class_name = g.class_name;
    }
  }
  const auto report = objmap::evaluate(preds, gts, a.iou);
  std::cout << objmap::format_report_table(report);
  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    out << objmap::format_report_csv(report);
    if (!out) throw objmap::Error("cannot write " + a.csv);
  }
  return 0;
}

int do_synth(SynthArgs& a) {
  const objmap::SceneSpec scene = objmap::load_scene(a.scene);
  a.options.write_masks = !a.no_masks;
  objmap::write_synthetic_dataset(scene, a.out, a.options);
  std::printf("wrote %zu frames to %s\n", scene.trajectory.size(),
              a.out.c_str());
  return 0;
}

int do_export(const ExportArgs& a) {
  const objmap::SegmentMap map = objmap::load_map(a.map);
  objmap::ExportOptions options{false, false, false};
  for (const auto& w : a.what) {
    if (w == "mesh") options.mesh = true;
    if (w == "segments") options.segments = true;
    if (w == "counts") options.counts = true;
  }
  const auto s = objmap::export_map(map, a.out, options);
  std::printf("%zu triangles, %zu instance meshes, %zu segments\n",
              s.triangles, s.instance_meshes, s.segments);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  FLAGS_logtostderr = true;
  google::InitGoogleLogging(argv[0]);

  CLI::App app{"Incremental object-level volumetric mapping"};
  app.require_subcommand(1);
  int verbosity = -1;
  app.add_option("-v,--verbosity", verbosity, "glog verbosity (VLOG level)");
  app.set_config("--config", "",
                 "TOML/INI file with option defaults, [run] section for run");

  RunArgs run_args;
  EvalArgs eval_args;
  SynthArgs synth_args;
  ExportArgs export_args;
  add_run(app, run_args);
  add_eval(app, eval_args);
  add_synth(app, synth_args);
  add_export(app, export_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (verbosity >= 0) FLAGS_v = verbosity;

  try {
    if (app.got_subcommand("run")) return do_run(run_args);
    if (app.got_subcommand("eval")) return do_eval(eval_args);
    if (app.got_subcommand("synth")) return do_synth(synth_args);
    if (app.got_subcommand("export")) return do_export(export_args);
  } catch (const objmap::Error& e) {
    LOG(ERROR) << e.what();
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    LOG(ERROR) << e.what();
    return kExitData;
  }
  return kExitUsage;
}
