#include "colotk/io/json_io.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

namespace colotk::io {

json intrinsics_to_json(const CameraIntrinsics& k) {
  return json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx},
              {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics k{j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                     j.at("cy").get<double>(), j.at("width").get<int>(), j.at("height").get<int>()};
  k.validate();
  return k;
}

json pose_to_json(const Pose& p) {
  json r = json::array();
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) r.push_back(p.rotation(i, c));
  json t = json::array({p.translation.x(), p.translation.y(), p.translation.z()});
  return json{{"R", r}, {"t", t}};
}

Pose pose_from_json(const json& j) {
  Pose p;
  const auto& r = j.at("R");
  const auto& t = j.at("t");
  if (r.size() != 9 || t.size() != 3) throw std::invalid_argument("pose json: need R[9], t[3]");
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) p.rotation(i, c) = r[static_cast<std::size_t>(3 * i + c)].get<double>();
  for (int i = 0; i < 3; ++i) p.translation(i) = t[static_cast<std::size_t>(i)].get<double>();
  if (!p.is_valid(1e-6)) throw std::invalid_argument("pose json: rotation is not orthonormal");
  return p;
}

json poses_to_json(const std::vector<Pose>& poses) {
  json out = json::array();
  for (const auto& p : poses) out.push_back(pose_to_json(p));
  return out;
}

std::vector<Pose> poses_from_json(const json& j) {
  std::vector<Pose> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(pose_from_json(e));
  return out;
}

json metric_report_to_json(const MetricReport& r, const AlignmentParams* params) {
  json j{{"delta1", r.delta1},
         {"abs_rel", r.abs_rel},
         {"sq_rel", r.sq_rel},
         {"rmse_mm", r.rmse_mm},
         {"n_pixels", r.n_pixels}};
  if (r.has_ci) {
    j["ci"] = json{{"delta1", {r.delta1_ci.lo, r.delta1_ci.hi}},
                   {"abs_rel", {r.abs_rel_ci.lo, r.abs_rel_ci.hi}},
                   {"sq_rel", {r.sq_rel_ci.lo, r.sq_rel_ci.hi}},
                   {"rmse_mm", {r.rmse_ci.lo, r.rmse_ci.hi}}};
    j["ci_degenerate"] = r.ci_degenerate;
  }
  if (params) {
    j["alignment"] = json{{"alpha", params->alpha},
                          {"beta", params->beta},
                          {"domain", params->domain == AlignDomain::depth ? "depth" : "disparity"},
                          {"degenerate", params->degenerate}};
  }
  return j;
}

void write_tracks_jsonl(const std::filesystem::path& path, const TrackSet& tracks) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("tracks: cannot open for writing: " + path.string());
  for (const auto& t : tracks.tracks) {
    json obs = json::array();
    for (const auto& o : t.obs)
      obs.push_back(json{{"f", o.frame}, {"u", o.u}, {"v", o.v}, {"d", o.depth}});
    f << json{{"id", t.id}, {"obs", obs}}.dump() << "\n";
  }
}

TrackSet read_tracks_jsonl(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("tracks: cannot open: " + path.string());
  TrackSet out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("tracks: " + path.string() + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
    Track t;
    t.id = j.at("id").get<long>();
    for (const auto& o : j.at("obs"))
      t.obs.push_back({o.at("f").get<int>(), o.at("u").get<double>(), o.at("v").get<double>(),
                       o.at("d").get<double>()});
    out.tracks.push_back(std::move(t));
  }
  return out;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("json: cannot open: " + path.string());
  json j;
  f >> j;
  return j;
}

void save_json(const std::filesystem::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("json: cannot open for writing: " + path.string());
  f << j.dump(2) << "\n";
}

}  // namespace colotk::io
