#include "edgeloc/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "edgeloc/image_pipeline.hpp"
#include "edgeloc/rasterizer.hpp"

namespace edgeloc {

RigidTransformd endEffectorError(const RigidTransformd& est, const RigidTransformd& truth,
                                 const RigidTransformd& camera_from_ee) {
  const RigidTransformd camera_error = truth * est.inverse();
  return camera_from_ee.inverse() * camera_error * camera_from_ee;
}

ErrorDecomposition decompose(const RigidTransformd& err, const Eigen::Vector3d& camera_axis) {
  if (std::abs(camera_axis.norm() - 1.0) > 1e-9) throw PreconditionError("camera axis must be unit-norm");
  const Eigen::Vector3d& t = err.translation();
  const double along = t.dot(camera_axis);
  ErrorDecomposition d;
  d.normal_mm = std::abs(along);
  d.tangential_mm = (t - along * camera_axis).norm();
  const double c = std::clamp(camera_axis.dot(err.rotation() * camera_axis), -1.0, 1.0);
  d.tilt_deg = std::acos(c) * kRadToDeg;
  return d;
}

void ScenarioSpec::validate() const {
  const auto fraction = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!fraction(noise.spurious) || !fraction(noise.dropout) || !fraction(noise.jitter))
    throw PreconditionError("noise fractions must lie in [0, 1]");
  if (trials < 0) throw PreconditionError("trial count must be non-negative");
  if (!perturbation_box.valid()) throw PreconditionError("perturbation box half-widths must be non-negative");
  if (trials > 0 && mesh.empty()) throw EmptyMeshError("scenario mesh is empty");
}

EdgeMap applyEdgeNoise(const EdgeMap& clean, const EdgeNoise& noise, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> neighbor(0, 7);
  static constexpr int kDx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
  static constexpr int kDy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
  const int h = static_cast<int>(clean.rows()), w = static_cast<int>(clean.cols());
  EdgeMap out = EdgeMap::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = unit(rng);
      if (!clean(y, x)) {
        if (u < noise.spurious) out(y, x) = 1;
        continue;
      }
      if (u < noise.dropout) continue;
      if (noise.jitter > 0 && unit(rng) < noise.jitter) {
        const int k = neighbor(rng);
        const int nx = std::clamp(x + kDx[k], 0, w - 1), ny = std::clamp(y + kDy[k], 0, h - 1);
        out(ny, nx) = 1;
      } else {
        out(y, x) = 1;
      }
    }
  return out;
}

namespace {

ErrorDecomposition errorOf(const ScenarioSpec& spec, const RigidTransformd& est, double* translation_norm = nullptr,
                           double* in_plane_deg = nullptr) {
  const RigidTransformd err = endEffectorError(est, spec.ground_truth, spec.camera_from_ee);
  const Eigen::Vector3d axis = spec.camera_from_ee.rotation().conjugate() * Eigen::Vector3d::UnitZ();
  if (translation_norm) *translation_norm = err.translation().norm();
  if (in_plane_deg) *in_plane_deg = std::abs(err.rotationVector().dot(axis)) * kRadToDeg;
  return decompose(err, axis);
}

}  // namespace

TrialRecord runTrial(const ScenarioSpec& spec, const LocalizerConfig& cfg, int trial) {
  const std::uint64_t trial_seed = spec.rng_seed ^ static_cast<std::uint64_t>(trial);
  std::mt19937_64 rng(trial_seed);
  const std::uint64_t perturb_seed = rng(), noise_seed = rng(), ransac_seed = rng();

  RigidTransformd delta = samplePosePerturbation(spec.perturbation_box, perturb_seed);
  if (spec.exclusion_box) {
    std::mt19937_64 redraw(perturb_seed);
    for (int attempt = 0; attempt < 10000 && withinBox(delta, *spec.exclusion_box); ++attempt)
      delta = samplePosePerturbation(spec.perturbation_box, redraw());
  }
  RigidTransformd seed = spec.ground_truth * delta.inverse();
  if (spec.seed_rotation_deg != 0.0) seed = rotateSeed(seed, cfg.seed_axis, spec.seed_rotation_deg);

  LocalizerConfig trial_cfg = cfg;
  trial_cfg.rng_seed = ransac_seed;

  const GeometryBuffer truth_buf = rasterize(spec.mesh, spec.ground_truth, spec.camera);
  LocalizerResult result;
  if (spec.mode == ScenarioMode::Edges) {
    const EdgeMap clean = salientEdges(truth_buf, cfg.normal_threshold_deg, cfg.depth_threshold_mm).edges;
    const EdgeMap test = applyEdgeNoise(clean, spec.noise, noise_seed);
    result = spec.multi_seed ? multiSeedLocalizeEdges(test, seed, spec.mesh, spec.camera, trial_cfg)
                             : localizeEdges(test, seed, spec.mesh, spec.camera, trial_cfg);
  } else {
    GrayImage img = shade(truth_buf);
    std::mt19937_64 noise_rng(noise_seed);
    std::normal_distribution<double> gauss(0.0, spec.intensity_noise_sigma);
    for (Eigen::Index i = 0; i < img.size(); ++i)
      img.data()[i] = static_cast<std::uint8_t>(std::clamp(std::lround(img.data()[i] + gauss(noise_rng)), 0L, 255L));
    result = spec.multi_seed ? multiSeedLocalize(img, seed, spec.mesh, spec.camera, trial_cfg)
                             : localize(img, seed, spec.mesh, spec.camera, trial_cfg);
  }

  TrialRecord rec;
  rec.trial = trial;
  rec.status = result.status;
  rec.iterations = result.iterations();
  rec.input_error = errorOf(spec, seed);
  rec.final_error = errorOf(spec, result.pose, &rec.final_translation_mm, &rec.in_plane_deg);
  rec.completed = result.status == LocalizerStatus::Converged;
  rec.successful = rec.completed && spec.requirements.satisfiedBy(rec.final_error);
  rec.false_positive = rec.completed && !rec.successful;
  rec.beyond_box = !withinBox(spec.ground_truth.inverse() * result.pose, cfg.initial_box);
  return rec;
}

CampaignReport runScenarios(const ScenarioSpec& spec, const LocalizerConfig& cfg) {
  spec.validate();
  cfg.validate();
  CampaignReport report;
  report.metric = toString(cfg.metric);
  report.trials.resize(spec.trials);
  if (spec.trials == 0) return report;

  int workers = spec.workers > 0 ? spec.workers : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, spec.trials);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (int t = next++; t < spec.trials; t = next++) {
      try {
        report.trials[t] = runTrial(spec, cfg, t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  int completed = 0, successful = 0;
  std::vector<int> iterations;
  for (const TrialRecord& r : report.trials) {
    completed += r.completed;
    successful += r.successful;
    report.false_positives += r.false_positive;
    report.converged_beyond_box += r.completed && r.beyond_box;
    iterations.push_back(r.iterations);
  }
  report.completion_rate = static_cast<double>(completed) / spec.trials;
  report.success_rate = static_cast<double>(successful) / spec.trials;
  std::sort(iterations.begin(), iterations.end());
  const std::size_t mid = iterations.size() / 2;
  report.median_iterations =
      iterations.size() % 2 ? iterations[mid] : 0.5 * (iterations[mid - 1] + iterations[mid]);
  return report;
}

namespace {

nlohmann::ordered_json errorJson(const ErrorDecomposition& e) {
  return {{"normal_mm", e.normal_mm}, {"tangential_mm", e.tangential_mm}, {"tilt_deg", e.tilt_deg}};
}

}  // namespace

void writeReportJson(std::ostream& out, const CampaignReport& report) {
  nlohmann::ordered_json j;
  j["metric"] = report.metric;
  j["trial_count"] = report.trials.size();
  j["completion_rate"] = report.completion_rate;
  j["success_rate"] = report.success_rate;
  j["false_positives"] = report.false_positives;
  j["converged_beyond_box"] = report.converged_beyond_box;
  j["median_iterations"] = report.median_iterations;
  nlohmann::ordered_json trials = nlohmann::ordered_json::array();
  for (const TrialRecord& r : report.trials) {
    trials.push_back({{"trial", r.trial},
                      {"status", toString(r.status)},
                      {"iterations", r.iterations},
                      {"completed", r.completed},
                      {"successful", r.successful},
                      {"false_positive", r.false_positive},
                      {"beyond_box", r.beyond_box},
                      {"input_error", errorJson(r.input_error)},
                      {"final_error", errorJson(r.final_error)},
                      {"final_translation_mm", r.final_translation_mm},
                      {"in_plane_deg", r.in_plane_deg}});
  }
  j["trials"] = std::move(trials);
  out << j.dump(2) << '\n';
}

void writeReportCsv(std::ostream& out, const CampaignReport& report) {
  out << "trial,status,iterations,completed,successful,false_positive,normal_mm,tangential_mm,tilt_deg\n";
  out << std::setprecision(9);
  for (const TrialRecord& r : report.trials)
    out << r.trial << ',' << toString(r.status) << ',' << r.iterations << ',' << r.completed << ',' << r.successful
        << ',' << r.false_positive << ',' << r.final_error.normal_mm << ',' << r.final_error.tangential_mm << ','
        << r.final_error.tilt_deg << '\n';
}

}  // namespace edgeloc
