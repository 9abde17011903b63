#pragma once

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "edgeloc/camera_model.hpp"
#include "edgeloc/eval.hpp"
#include "edgeloc/localizer.hpp"
#include "edgeloc/matcher.hpp"
#include "edgeloc/rigid_transform.hpp"

namespace edgeloc {

using Json = nlohmann::ordered_json;

/// Parses a JSON file; IoError when unreadable, PreconditionError when malformed.
Json readJsonFile(const std::filesystem::path& path);
void writeJsonFile(const std::filesystem::path& path, const Json& j);

/// {"quaternion_wxyz": [w,x,y,z], "translation_mm": [x,y,z]}; reading also
/// accepts "rotation_vector_deg" in place of the quaternion.
Json poseToJson(const RigidTransformd& pose);
RigidTransformd poseFromJson(const Json& j);

/// {"fx","fy","cx","cy","k1","k2","k3","p1","p2","size_x","size_y"}; missing
/// distortion terms default to zero.
Json cameraToJson(const CameraModeld& camera);
CameraModeld cameraFromJson(const Json& j);

/// Box half-widths as scalars or 3-vectors.
Json boxToJson(const UncertaintyBox& box);
UncertaintyBox boxFromJson(const Json& j);

/// Fields mirror LocalizerConfig; absent fields keep `base` values, unknown
/// keys are rejected.
Json configToJson(const LocalizerConfig& cfg);
LocalizerConfig configFromJson(const Json& j, LocalizerConfig base = {});

Json resultToJson(const LocalizerResult& result);

/// Scenario manifest; relative paths resolve against `base_dir`. An embedded
/// "config" object is returned through `cfg` when given.
ScenarioSpec scenarioFromJson(const Json& j, const std::filesystem::path& base_dir,
                              LocalizerConfig* cfg = nullptr);

/// Raw little-endian float32 scores plus a JSON sidecar describing them.
void writeScoreDump(const std::filesystem::path& stem, const ScoreMatrix& scores, const SearchWindow& window);

}  // namespace edgeloc
