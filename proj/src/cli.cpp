#include "edgeloc/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "edgeloc/eval.hpp"
#include "edgeloc/image_io.hpp"
#include "edgeloc/image_pipeline.hpp"
#include "edgeloc/localizer.hpp"
#include "edgeloc/rasterizer.hpp"
#include "edgeloc/serialization.hpp"

namespace edgeloc {

namespace fs = std::filesystem;

namespace {

/// Records written files so every run leaves an index.json next to them.
class ArtifactIndex {
 public:
  explicit ArtifactIndex(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  fs::path add(const std::string& name, const std::string& kind) {
    entries_.push_back({{"file", name}, {"kind", kind}});
    return dir_ / name;
  }

  void write(const std::string& command) const {
    writeJsonFile(dir_ / "index.json", {{"command", command}, {"artifacts", entries_}});
  }

 private:
  fs::path dir_;
  Json entries_ = Json::array();
};

struct SceneArgs {
  std::string mesh, camera, pose;
};

void addScene(CLI::App* app, SceneArgs& a, const char* pose_flag, const char* pose_help) {
  app->add_option("--mesh", a.mesh, "Triangle mesh (.obj)")->required()->check(CLI::ExistingFile);
  app->add_option("--camera", a.camera, "Camera model JSON")->required()->check(CLI::ExistingFile);
  app->add_option(pose_flag, a.pose, pose_help)->required()->check(CLI::ExistingFile);
}

EdgeMap binarize(const GrayImage& img) { return (img > 0).cast<std::uint8_t>(); }

LocalizerConfig loadConfig(const std::string& path) {
  return path.empty() ? LocalizerConfig{} : configFromJson(readJsonFile(path));
}

void dumpRender(ArtifactIndex& index, const std::string& prefix, const GeometryBuffer& buf, const SalientEdges& se) {
  writePgm(index.add(prefix + "edges.pgm", "salient_edges"), edgeImage(se.edges));
  writePgm(index.add(prefix + "mask.pgm", "render_mask"), edgeImage(se.render_mask));
  writePgm16(index.add(prefix + "depth.pgm", "depth_mm_16bit"), depthImage(buf));
  writePpm(index.add(prefix + "normals.ppm", "normals"), normalImage(buf));
}

int cmdLocalize(const SceneArgs& scene, const std::string& image, const std::string& config, const std::string& out,
                std::optional<std::uint64_t> rng_seed, const std::string& metric, bool edges_input, bool multi_seed,
                bool want_overlay, bool debug, std::ostream& os) {
  const TriangleMesh mesh = loadObj(scene.mesh);
  const CameraModeld camera = cameraFromJson(readJsonFile(scene.camera));
  const RigidTransformd seed = poseFromJson(readJsonFile(scene.pose));
  LocalizerConfig cfg = loadConfig(config);
  if (rng_seed) cfg.rng_seed = *rng_seed;
  if (!metric.empty()) cfg.metric = metricFromString(metric);

  const GrayImage img = readGray(image);
  if (img.rows() != camera.height || img.cols() != camera.width)
    throw SizeMismatchError("image is " + std::to_string(img.cols()) + "x" + std::to_string(img.rows()) +
                            ", camera expects " + std::to_string(camera.width) + "x" + std::to_string(camera.height));
  const EdgeMap test = edges_input ? binarize(img) : detectTestEdges(img, cfg.canny);
  const LocalizerResult result = multi_seed ? multiSeedLocalizeEdges(test, seed, mesh, camera, cfg)
                                            : localizeEdges(test, seed, mesh, camera, cfg);

  ArtifactIndex index(out);
  writeJsonFile(index.add("result.json", "result"), resultToJson(result));
  writeJsonFile(index.add("pose.json", "pose"), poseToJson(result.pose));
  writeJsonFile(index.add("config.json", "config"), configToJson(cfg));
  if (want_overlay || debug) {
    const GeometryBuffer buf = rasterize(mesh, result.pose, camera);
    const SalientEdges se = salientEdges(buf, cfg.normal_threshold_deg, cfg.depth_threshold_mm);
    writePng(index.add("overlay.png", "overlay"), overlay(img, se.edges));
    if (debug) dumpRender(index, "final_", buf, se);
  }
  if (debug) {
    writePgm(index.add("test_edges.pgm", "test_edges"), edgeImage(test));
    for (int k = 0; k < result.iterations(); ++k) {
      const std::string name = "correspondences_" + std::to_string(k) + ".csv";
      std::ofstream csv(index.add(name, "correspondences"));
      writeCorrespondencesCsv(csv, result.diagnostics[k].correspondences);
    }
    // Scores of the first template at the seed, for inspecting the match surface.
    const GeometryBuffer seed_buf = rasterize(mesh, result.seed, camera);
    const SalientEdges seed_se = salientEdges(seed_buf, cfg.normal_threshold_deg, cfg.depth_threshold_mm);
    const auto templates = extractTemplates(seed_se.edges, seed_se.render_mask, seed_buf, camera, result.seed, cfg.templates);
    const SearchWindow w = searchWindow(templates.front().anchor3d, result.seed, cfg.boxAt(0), camera, cfg.templates.size);
    writeScoreDump(index.add("scores_t0.f32", "scores").replace_extension(),
                   scoreTemplate(cfg.metric, templates.front(), crop(test, w)), w);
    index.add("scores_t0.json", "scores_meta");
  }
  index.write("localize");

  os << toString(result.status) << " after " << result.iterations() << " iteration(s)\n";
  return result.status == LocalizerStatus::Converged ? kExitOk : kExitNotConverged;
}

int cmdRenderEdges(const SceneArgs& scene, const std::string& out, double normal_deg, double depth_mm,
                   std::ostream& os) {
  const TriangleMesh mesh = loadObj(scene.mesh);
  const CameraModeld camera = cameraFromJson(readJsonFile(scene.camera));
  const RigidTransformd pose = poseFromJson(readJsonFile(scene.pose));
  const GeometryBuffer buf = rasterize(mesh, pose, camera);
  const SalientEdges se = salientEdges(buf, normal_deg, depth_mm);
  ArtifactIndex index(out);
  dumpRender(index, "", buf, se);
  index.write("render-edges");
  os << se.edges.cast<int>().sum() << " edge pixels\n";
  return kExitOk;
}

int cmdSynth(const SceneArgs& scene, const std::string& out, const std::string& mode, const EdgeNoise& noise,
             std::uint64_t rng_seed, std::ostream& os) {
  const TriangleMesh mesh = loadObj(scene.mesh);
  const CameraModeld camera = cameraFromJson(readJsonFile(scene.camera));
  const RigidTransformd pose = poseFromJson(readJsonFile(scene.pose));
  const GeometryBuffer buf = rasterize(mesh, pose, camera);
  GrayImage img;
  if (mode == "intensity") {
    img = shade(buf);
  } else {
    img = edgeImage(applyEdgeNoise(salientEdges(buf).edges, noise, rng_seed));
  }
  const fs::path path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (path.extension() == ".png") writePng(path, img);
  else writePgm(path, img);
  os << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmdEval(const std::string& manifest, const std::string& config, const std::string& out,
            std::optional<std::uint64_t> rng_seed, std::optional<int> trials, std::optional<int> workers,
            const std::string& metric, double floor, std::ostream& os) {
  LocalizerConfig cfg = loadConfig(config);
  ScenarioSpec spec = scenarioFromJson(readJsonFile(manifest), fs::path(manifest).parent_path(), config.empty() ? &cfg : nullptr);
  if (rng_seed) spec.rng_seed = *rng_seed;
  if (trials) spec.trials = *trials;
  if (workers) spec.workers = *workers;
  if (!metric.empty()) cfg.metric = metricFromString(metric);
  spec.validate();

  const CampaignReport report = runScenarios(spec, cfg);
  ArtifactIndex index(out);
  {
    std::ofstream json(index.add("report.json", "report"));
    writeReportJson(json, report);
    std::ofstream csv(index.add("report.csv", "trials"));
    writeReportCsv(csv, report);
  }
  index.write("eval");
  os << "trials " << report.trials.size() << ", completion " << report.completion_rate << ", success "
     << report.success_rate << ", false positives " << report.false_positives << '\n';
  if (report.trials.empty()) return kExitOk;
  return report.success_rate >= floor ? kExitOk : kExitBelowFloor;
}

}  // namespace

int runCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Edge-based render-and-compare pose localization"};
  app.require_subcommand(1);

  SceneArgs loc_scene;
  std::string image, config, loc_out, metric;
  std::optional<std::uint64_t> rng_seed;
  bool edges_input = false, multi_seed = false, want_overlay = false, debug = false;
  CLI::App* loc = app.add_subcommand("localize", "Estimate the pose of the object in an image");
  addScene(loc, loc_scene, "--seed-pose", "Seed camera-from-station pose JSON");
  loc->add_option("--image", image, "Test image (PNG or PGM/PPM)")->required()->check(CLI::ExistingFile);
  loc->add_option("--config", config, "Localizer configuration JSON")->check(CLI::ExistingFile);
  loc->add_option("--out", loc_out, "Output directory")->required();
  loc->add_option("--rng-seed", rng_seed, "Override the RANSAC seed");
  loc->add_option("--metric", metric, "whs, ncc or ssd")->check(CLI::IsMember({"whs", "ncc", "ssd"}, CLI::ignore_case));
  loc->add_flag("--edges", edges_input, "The image already is an edge map (non-zero = edge)");
  loc->add_flag("--multi-seed", multi_seed, "Sweep rotated seeds before localizing");
  loc->add_flag("--overlay", want_overlay, "Write baseline edges at the final pose over the test image");
  loc->add_flag("--debug", debug, "Dump renders, correspondences and a score surface");

  SceneArgs ren_scene;
  std::string ren_out;
  double normal_deg = 30.0, depth_mm = 5.0;
  CLI::App* ren = app.add_subcommand("render-edges", "Render salient edges, depth and normals at a pose");
  addScene(ren, ren_scene, "--pose", "Camera-from-station pose JSON");
  ren->add_option("--out", ren_out, "Output directory")->required();
  ren->add_option("--normal-threshold", normal_deg, "Crease angle threshold (deg)");
  ren->add_option("--depth-threshold", depth_mm, "Depth discontinuity threshold (mm)");

  SceneArgs syn_scene;
  std::string syn_out, mode = "edges";
  EdgeNoise noise;
  std::uint64_t syn_seed = 0;
  CLI::App* syn = app.add_subcommand("synth", "Synthesize a test image at a pose");
  addScene(syn, syn_scene, "--pose", "Camera-from-station pose JSON");
  syn->add_option("--out", syn_out, "Output image (.pgm or .png)")->required();
  syn->add_option("--mode", mode, "edges or intensity")->check(CLI::IsMember({"edges", "intensity"}));
  syn->add_option("--spurious", noise.spurious, "Spurious edge probability")->check(CLI::Range(0.0, 1.0));
  syn->add_option("--dropout", noise.dropout, "Edge dropout probability")->check(CLI::Range(0.0, 1.0));
  syn->add_option("--jitter", noise.jitter, "Edge jitter probability")->check(CLI::Range(0.0, 1.0));
  syn->add_option("--rng-seed", syn_seed, "Noise seed");

  std::string manifest, eval_config, eval_out, eval_metric;
  std::optional<std::uint64_t> eval_seed;
  std::optional<int> trials, workers;
  double floor = 0.0;
  CLI::App* ev = app.add_subcommand("eval", "Run an evaluation campaign");
  ev->add_option("--manifest", manifest, "Scenario JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--config", eval_config, "Localizer configuration JSON (overrides the manifest's)")
      ->check(CLI::ExistingFile);
  ev->add_option("--out", eval_out, "Output directory")->required();
  ev->add_option("--rng-seed", eval_seed, "Override the scenario seed");
  ev->add_option("--trials", trials, "Override the trial count")->check(CLI::NonNegativeNumber);
  ev->add_option("--workers", workers, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  ev->add_option("--metric", eval_metric, "whs, ncc or ssd")->check(CLI::IsMember({"whs", "ncc", "ssd"}, CLI::ignore_case));
  ev->add_option("--floor", floor, "Minimum success rate for exit code 0")->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*loc) return cmdLocalize(loc_scene, image, config, loc_out, rng_seed, metric, edges_input, multi_seed, want_overlay, debug, out);
    if (*ren) return cmdRenderEdges(ren_scene, ren_out, normal_deg, depth_mm, out);
    if (*syn) return cmdSynth(syn_scene, syn_out, mode, noise, syn_seed, out);
    return cmdEval(manifest, eval_config, eval_out, eval_seed, trials, workers, eval_metric, floor, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace edgeloc
