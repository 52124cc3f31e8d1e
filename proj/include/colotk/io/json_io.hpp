#pragma once

#include "colotk/bundle_adjust.hpp"
#include "colotk/depth_eval.hpp"
#include "colotk/geometry.hpp"

#include <json.hpp>

#include <filesystem>
#include <vector>

namespace colotk::io {

using json = nlohmann::ordered_json;

json intrinsics_to_json(const CameraIntrinsics& k);
CameraIntrinsics intrinsics_from_json(const json& j);

json pose_to_json(const Pose& p);  // {R: 9 floats row-major, t: 3 floats}
Pose pose_from_json(const json& j);

json poses_to_json(const std::vector<Pose>& poses);
std::vector<Pose> poses_from_json(const json& j);

json metric_report_to_json(const MetricReport& r, const AlignmentParams* params = nullptr);

/// Tracks as JSON-lines, one track per line:
/// {"id": int, "obs": [{"f": int, "u": float, "v": float, "d": float}, ...]}
void write_tracks_jsonl(const std::filesystem::path& path, const TrackSet& tracks);
TrackSet read_tracks_jsonl(const std::filesystem::path& path);

json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const json& j);

}  // namespace colotk::io
