#include "edgeloc/serialization.hpp"

#include <fstream>
#include <set>

namespace edgeloc {

namespace {

Eigen::Vector3d vec3(const Json& j, const char* what) {
  if (j.is_number()) return Eigen::Vector3d::Constant(j.get<double>());
  if (!j.is_array() || j.size() != 3) throw PreconditionError(std::string(what) + " must be a number or 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json vecJson(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw PreconditionError(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <typename T>
void readIf(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Json readJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(path.string() + ": " + e.what());
  }
}

void writeJsonFile(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Json poseToJson(const RigidTransformd& pose) {
  const auto& q = pose.rotation();
  return {{"quaternion_wxyz", Json::array({q.w(), q.x(), q.y(), q.z()})},
          {"translation_mm", vecJson(pose.translation())}};
}

RigidTransformd poseFromJson(const Json& j) {
  try {
    const Eigen::Vector3d t = vec3(require(j, "translation_mm"), "translation_mm");
    if (j.contains("rotation_vector_deg"))
      return RigidTransformd::FromRotationVector(vec3(j["rotation_vector_deg"], "rotation_vector_deg") * kDegToRad, t);
    const Json& q = require(j, "quaternion_wxyz");
    if (!q.is_array() || q.size() != 4) throw PreconditionError("quaternion_wxyz must have 4 entries");
    const Eigen::Quaterniond quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
    if (quat.norm() < 1e-12) throw PreconditionError("quaternion must be non-zero");
    return RigidTransformd(quat, t);
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("pose: ") + e.what());
  }
}

Json cameraToJson(const CameraModeld& c) {
  return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"k1", c.k1},         {"k2", c.k2},
          {"k3", c.k3}, {"p1", c.p1}, {"p2", c.p2}, {"size_x", c.width}, {"size_y", c.height}};
}

CameraModeld cameraFromJson(const Json& j) {
  try {
    CameraModeld c;
    c.fx = require(j, "fx").get<double>();
    c.fy = require(j, "fy").get<double>();
    c.cx = require(j, "cx").get<double>();
    c.cy = require(j, "cy").get<double>();
    readIf(j, "k1", c.k1);
    readIf(j, "k2", c.k2);
    readIf(j, "k3", c.k3);
    readIf(j, "p1", c.p1);
    readIf(j, "p2", c.p2);
    c.width = require(j, "size_x").get<int>();
    c.height = require(j, "size_y").get<int>();
    if (c.fx <= 0 || c.fy <= 0 || c.width <= 0 || c.height <= 0)
      throw PreconditionError("camera focal lengths and size must be positive");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("camera: ") + e.what());
  }
}

Json boxToJson(const UncertaintyBox& box) {
  return {{"translation_mm", vecJson(box.translation_mm)}, {"rotation_deg", vecJson(box.rotation_deg)}};
}

UncertaintyBox boxFromJson(const Json& j) {
  UncertaintyBox box{vec3(require(j, "translation_mm"), "translation_mm"),
                     vec3(require(j, "rotation_deg"), "rotation_deg")};
  if (!box.valid()) throw PreconditionError("box half-widths must be non-negative");
  return box;
}

Json configToJson(const LocalizerConfig& cfg) {
  return {{"n_max", cfg.n_max},
          {"convergence_translation_mm", cfg.convergence_translation_mm},
          {"convergence_rotation_deg", cfg.convergence_rotation_deg},
          {"initial_box", boxToJson(cfg.initial_box)},
          {"box_halvings", cfg.box_halvings},
          {"reprojection_threshold_px", cfg.reprojection_threshold_px},
          {"reprojection_halvings", cfg.reprojection_halvings},
          {"template_size", cfg.templates.size},
          {"max_templates", cfg.templates.max_count},
          {"min_template_spacing", cfg.templates.min_spacing},
          {"metric", toString(cfg.metric)},
          {"subpixel", cfg.subpixel},
          {"normal_threshold_deg", cfg.normal_threshold_deg},
          {"depth_threshold_mm", cfg.depth_threshold_mm},
          {"box_margin", cfg.box_margin},
          {"ransac_max_iterations", cfg.ransac_max_iterations},
          {"ransac_confidence", cfg.ransac_confidence},
          {"rng_seed", cfg.rng_seed},
          {"canny_sigma", cfg.canny.sigma},
          {"canny_low", cfg.canny.low},
          {"canny_high", cfg.canny.high},
          {"seed_increment_deg", cfg.seed_increment_deg},
          {"seed_sweep_half_range_deg", cfg.seed_sweep_half_range_deg},
          {"seed_axis", vecJson(cfg.seed_axis)}};
}

LocalizerConfig configFromJson(const Json& j, LocalizerConfig cfg) {
  if (!j.is_object()) throw PreconditionError("config must be a JSON object");
  static const std::set<std::string> known = [] {
    std::set<std::string> keys;
    const Json defaults = configToJson(LocalizerConfig{});
    for (const auto& [k, v] : defaults.items()) keys.insert(k);
    return keys;
  }();
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw PreconditionError("unknown config field '" + k + "'");
  try {
    readIf(j, "n_max", cfg.n_max);
    readIf(j, "convergence_translation_mm", cfg.convergence_translation_mm);
    readIf(j, "convergence_rotation_deg", cfg.convergence_rotation_deg);
    if (j.contains("initial_box")) cfg.initial_box = boxFromJson(j["initial_box"]);
    readIf(j, "box_halvings", cfg.box_halvings);
    readIf(j, "reprojection_threshold_px", cfg.reprojection_threshold_px);
    readIf(j, "reprojection_halvings", cfg.reprojection_halvings);
    readIf(j, "template_size", cfg.templates.size);
    readIf(j, "max_templates", cfg.templates.max_count);
    readIf(j, "min_template_spacing", cfg.templates.min_spacing);
    readIf(j, "subpixel", cfg.subpixel);
    if (j.contains("metric")) cfg.metric = metricFromString(j["metric"].get<std::string>());
    readIf(j, "normal_threshold_deg", cfg.normal_threshold_deg);
    readIf(j, "depth_threshold_mm", cfg.depth_threshold_mm);
    readIf(j, "box_margin", cfg.box_margin);
    readIf(j, "ransac_max_iterations", cfg.ransac_max_iterations);
    readIf(j, "ransac_confidence", cfg.ransac_confidence);
    readIf(j, "rng_seed", cfg.rng_seed);
    readIf(j, "canny_sigma", cfg.canny.sigma);
    readIf(j, "canny_low", cfg.canny.low);
    readIf(j, "canny_high", cfg.canny.high);
    readIf(j, "seed_increment_deg", cfg.seed_increment_deg);
    readIf(j, "seed_sweep_half_range_deg", cfg.seed_sweep_half_range_deg);
    if (j.contains("seed_axis")) cfg.seed_axis = vec3(j["seed_axis"], "seed_axis");
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

Json resultToJson(const LocalizerResult& result) {
  Json diags = Json::array();
  for (const IterationDiagnostics& d : result.diagnostics)
    diags.push_back({{"pose", poseToJson(d.pose)},
                     {"correction_translation_mm", d.correction_translation_mm},
                     {"correction_rotation_deg", d.correction_rotation_deg},
                     {"templates", d.template_count},
                     {"correspondences", d.correspondence_count},
                     {"inliers", d.inlier_count},
                     {"mean_reprojection_error_px", d.mean_reprojection_error_px},
                     {"box", boxToJson(d.box)},
                     {"reprojection_threshold_px", d.reprojection_threshold_px}});
  Json j = {{"status", toString(result.status)},
            {"iterations", result.iterations()},
            {"pose", poseToJson(result.pose)},
            {"seed", poseToJson(result.seed)}};
  if (!result.message.empty()) j["message"] = result.message;
  j["diagnostics"] = std::move(diags);
  return j;
}

ScenarioSpec scenarioFromJson(const Json& j, const std::filesystem::path& base_dir, LocalizerConfig* cfg) {
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  const auto objectOrFile = [&](const Json& v) { return v.is_string() ? readJsonFile(resolve(v.get<std::string>())) : v; };
  try {
    ScenarioSpec s;
    s.mesh_path = resolve(require(j, "mesh").get<std::string>()).string();
    s.mesh = loadObj(s.mesh_path);
    s.camera = cameraFromJson(objectOrFile(require(j, "camera")));
    s.ground_truth = poseFromJson(objectOrFile(require(j, "ground_truth")));
    if (j.contains("perturbation_box")) s.perturbation_box = boxFromJson(j["perturbation_box"]);
    if (j.contains("exclusion_box")) s.exclusion_box = boxFromJson(j["exclusion_box"]);
    readIf(j, "seed_rotation_deg", s.seed_rotation_deg);
    if (j.contains("noise")) {
      const Json& n = j["noise"];
      readIf(n, "spurious", s.noise.spurious);
      readIf(n, "dropout", s.noise.dropout);
      readIf(n, "jitter", s.noise.jitter);
    }
    readIf(j, "intensity_noise_sigma", s.intensity_noise_sigma);
    if (j.contains("mode")) {
      const std::string mode = j["mode"].get<std::string>();
      if (mode == "edges") s.mode = ScenarioMode::Edges;
      else if (mode == "intensity") s.mode = ScenarioMode::Intensity;
      else throw PreconditionError("mode must be 'edges' or 'intensity'");
    }
    readIf(j, "multi_seed", s.multi_seed);
    if (j.contains("camera_from_ee")) s.camera_from_ee = poseFromJson(objectOrFile(j["camera_from_ee"]));
    if (j.contains("requirements")) {
      readIf(j["requirements"], "max_translation_mm", s.requirements.max_translation_mm);
      readIf(j["requirements"], "max_rotation_deg", s.requirements.max_rotation_deg);
    }
    readIf(j, "rng_seed", s.rng_seed);
    readIf(j, "trials", s.trials);
    readIf(j, "workers", s.workers);
    if (cfg && j.contains("config")) *cfg = configFromJson(objectOrFile(j["config"]), *cfg);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("scenario: ") + e.what());
  }
}

void writeScoreDump(const std::filesystem::path& stem, const ScoreMatrix& scores, const SearchWindow& window) {
  std::filesystem::path raw = stem, meta = stem;
  raw += ".f32";
  meta += ".json";
  std::ofstream out(raw, std::ios::binary);
  if (!out) throw IoError("cannot write " + raw.string());
  for (Eigen::Index i = 0; i < scores.values.rows(); ++i)
    for (Eigen::Index k = 0; k < scores.values.cols(); ++k) {
      const float v = static_cast<float>(scores.values(i, k));
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  writeJsonFile(meta, {{"file", raw.filename().string()},
                       {"dtype", "float32"},
                       {"order", "row-major"},
                       {"rows", scores.values.rows()},
                       {"cols", scores.values.cols()},
                       {"metric", toString(scores.metric)},
                       {"template_rows", scores.template_rows},
                       {"template_cols", scores.template_cols},
                       {"window_x0", window.x0},
                       {"window_y0", window.y0},
                       {"zero_variance", scores.zero_variance}});
}

}  // namespace edgeloc
