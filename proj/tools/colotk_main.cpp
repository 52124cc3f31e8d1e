// colotk command-line front end: thin shells over the library operations.
// Exit codes: 0 ok, 2 config error, 3 I/O error, 4 numerical failure,
// 5 validation failure. Logs go to stderr; stdout only carries --print-json.

#include "colotk/bundle_adjust.hpp"
#include "colotk/coverage.hpp"
#include "colotk/depth_eval.hpp"
#include "colotk/io/json_io.hpp"
#include "colotk/io/pfm.hpp"
#include "colotk/io/ply.hpp"
#include "colotk/io/png_io.hpp"
#include "colotk/manifest.hpp"
#include "colotk/preprocess.hpp"
#include "colotk/reconstruct.hpp"
#include "colotk/synthcolon.hpp"

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace colotk;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitValidation = 5;

void log_line(const std::string& msg) { std::cerr << "[colotk] " << msg << "\n"; }

struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::pair<int, int> parse_size(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw std::invalid_argument("size must be WIDTHxHEIGHT: " + s);
  const int w = std::stoi(s.substr(0, x));
  const int h = std::stoi(s.substr(x + 1));
  if (w < 2 || h < 2) throw std::invalid_argument("size must be at least 2x2: " + s);
  return {w, h};
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// PFM preferred; 16-bit PNG with a {mm_per_unit} sidecar accepted.
DepthSequence load_depth_dir(const fs::path& dir) {
  DepthSequence seq;
  auto pfms = sorted_files(dir, ".pfm");
  if (!pfms.empty()) {
    for (const auto& p : pfms) seq.frames.push_back(io::read_pfm(p));
    return seq;
  }
  for (const auto& p : sorted_files(dir, ".png")) {
    if (io::png_bit_depth(p) != 16) continue;
    fs::path sidecar = p;
    sidecar.replace_extension(".json");
    if (!fs::exists(sidecar))
      throw std::runtime_error("16-bit PNG without mm_per_unit sidecar: " + p.string());
    const double mm = io::load_json(sidecar).at("mm_per_unit").get<double>();
    const io::Gray16Image raw = io::read_png_gray16(p);
    DepthFrame f(static_cast<int>(raw.rows()), static_cast<int>(raw.cols()));
    for (int v = 0; v < raw.rows(); ++v)
      for (int u = 0; u < raw.cols(); ++u) {
        f.values(v, u) = static_cast<float>(raw(v, u) * mm);
        f.mask(v, u) = raw(v, u) > 0;
      }
    seq.frames.push_back(f);
  }
  if (seq.frames.empty()) throw std::runtime_error("no depth files (.pfm or 16-bit .png) in " +
                                                   dir.string());
  return seq;
}

struct Scene {
  PhantomSpec phantom;
  TrajectorySpec trajectory;
  io::json resolved;  // config as actually used
};

Scene load_scene(const std::optional<fs::path>& path, int frames_override,
                 std::uint64_t seed) {
  Scene s;
  s.phantom = default_phantom();
  s.trajectory = default_trajectory(frames_override > 0 ? frames_override : 32, seed);
  if (path) {
    const io::json j = io::load_json(*path);
    if (j.contains("phantom")) {
      const auto& p = j["phantom"];
      if (p.contains("centerline")) {
        s.phantom.centerline.clear();
        for (const auto& c : p["centerline"])
          s.phantom.centerline.emplace_back(c.at(0).get<double>(), c.at(1).get<double>(),
                                            c.at(2).get<double>());
      }
      s.phantom.base_radius = p.value("base_radius", s.phantom.base_radius);
      s.phantom.haustra_amplitude = p.value("haustra_amplitude", s.phantom.haustra_amplitude);
      s.phantom.haustra_wavelength = p.value("haustra_wavelength", s.phantom.haustra_wavelength);
      if (p.contains("polyps")) {
        s.phantom.polyps.clear();
        for (const auto& pp : p["polyps"])
          s.phantom.polyps.push_back({pp.value("s", 0.0), pp.value("theta", 0.0),
                                      pp.value("height", 0.0), pp.value("width", 1.0)});
      }
    }
    if (j.contains("trajectory")) {
      const auto& t = j["trajectory"];
      s.trajectory.n_frames = t.value("n_frames", s.trajectory.n_frames);
      s.trajectory.speed_min = t.value("speed_min", s.trajectory.speed_min);
      s.trajectory.speed_max = t.value("speed_max", s.trajectory.speed_max);
      s.trajectory.intrinsics_jitter_pct =
          t.value("intrinsics_jitter_pct", s.trajectory.intrinsics_jitter_pct);
      s.trajectory.atten_min = t.value("atten_min", s.trajectory.atten_min);
      s.trajectory.atten_max = t.value("atten_max", s.trajectory.atten_max);
      s.trajectory.tilt_max_rad = t.value("tilt_max_rad", s.trajectory.tilt_max_rad);
      s.trajectory.s_start = t.value("s_start", s.trajectory.s_start);
      if (t.contains("flip_segments")) {
        s.trajectory.flip_segments.clear();
        for (const auto& f : t["flip_segments"])
          s.trajectory.flip_segments.emplace_back(f.at(0).get<int>(), f.at(1).get<int>());
      }
    }
  }
  if (frames_override > 0) s.trajectory.n_frames = frames_override;
  s.trajectory.seed = seed;

  io::json cl = io::json::array();
  for (const auto& c : s.phantom.centerline) cl.push_back({c.x(), c.y(), c.z()});
  io::json polyps = io::json::array();
  for (const auto& p : s.phantom.polyps)
    polyps.push_back(
        {{"s", p.s}, {"theta", p.theta}, {"height", p.height}, {"width", p.width}});
  io::json flips = io::json::array();
  for (const auto& [a, b] : s.trajectory.flip_segments) flips.push_back({a, b});
  s.resolved = {
      {"phantom",
       {{"centerline", cl},
        {"base_radius", s.phantom.base_radius},
        {"haustra_amplitude", s.phantom.haustra_amplitude},
        {"haustra_wavelength", s.phantom.haustra_wavelength},
        {"polyps", polyps}}},
      {"trajectory",
       {{"n_frames", s.trajectory.n_frames},
        {"speed_min", s.trajectory.speed_min},
        {"speed_max", s.trajectory.speed_max},
        {"flip_segments", flips},
        {"intrinsics_jitter_pct", s.trajectory.intrinsics_jitter_pct},
        {"atten_min", s.trajectory.atten_min},
        {"atten_max", s.trajectory.atten_max},
        {"tilt_max_rad", s.trajectory.tilt_max_rad},
        {"s_start", s.trajectory.s_start},
        {"seed", s.trajectory.seed}}}};
  return s;
}

RunManifest make_manifest(const std::string& subcommand, const io::json& config,
                          std::uint64_t seed) {
  RunManifest m;
  m.subcommand = subcommand;
  m.config = config;
  m.seed = seed;
  return m;
}

void finish_manifest(RunManifest& m, const fs::path& path,
                     const std::chrono::steady_clock::time_point& t0) {
  m.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.save(path);
}

// Splits tracks into consecutive windows (fixed stride, last one may be
// shorter), solves each and chains the gauges.
std::vector<Pose> solve_windows(const TrackSet& tracks, const CameraIntrinsics& k, int n_frames,
                                int window, int overlap, double depth_weight,
                                std::optional<double> huber) {
  if (window < 2 || overlap < 1 || overlap >= window)
    throw std::invalid_argument("poses: need window >= 2 and 1 <= overlap < window");
  std::vector<BaSolution> sols;
  const int stride = window - overlap;
  for (int start = 0; start == 0 || start + overlap < n_frames; start += stride) {
    const int end = std::min(start + window, n_frames);
    if (end - start < 2) break;
    BaProblem p;
    p.window_size = end - start;
    p.intrinsics.assign(static_cast<std::size_t>(end - start), k);
    p.depth_weight = depth_weight;
    p.huber_delta = huber;
    for (const auto& t : tracks.tracks) {
      Track local;
      local.id = t.id;
      for (const auto& o : t.obs)
        if (o.frame >= start && o.frame < end) local.obs.push_back({o.frame - start, o.u, o.v, o.depth});
      std::set<int> distinct;
      for (const auto& o : local.obs) distinct.insert(o.frame);
      if (distinct.size() >= 2) p.tracks.tracks.push_back(std::move(local));
    }
    if (p.tracks.tracks.empty())
      throw std::invalid_argument("poses: no usable tracks in window starting at frame " +
                                  std::to_string(start));
    log_line("solving window [" + std::to_string(start) + ", " + std::to_string(end) + ")");
    sols.push_back(ba_solve(p));
    if (!sols.back().converged)
      throw numerical_error("ba-window-" + std::to_string(start) + " did not converge");
    if (end == n_frames) break;
  }
  return sols.size() == 1 ? sols.front().poses : chain_windows(sols, overlap);
}

ImageFrame load_gray_frame(const fs::path& p) {
  ImageFrame img;
  img.channels.push_back(io::read_png_gray8(p));
  return img;
}

struct CoverageResult {
  CoverageMap map;
  double ratio = 0.0;
};

CoverageResult run_coverage(const PointCloud& cloud, int n_s, int n_theta, int open_r, int close_r,
                            const Eigen::Vector3d* hint) {
  const auto est = pca_centerline(cloud, hint);
  if (est.ambiguous) log_line("warning: principal axis is ambiguous");
  CoverageResult r;
  r.map = morph_clean(unroll(cloud, est.axis, est.origin, n_s, n_theta), open_r, close_r);
  r.ratio = coverage_ratio(r.map);
  return r;
}

void write_coverage_outputs(const CoverageResult& r, const fs::path& map_png,
                            const fs::path& summary_json) {
  GrayImage img(r.map.n_s(), r.map.n_theta());
  for (int is = 0; is < r.map.n_s(); ++is)
    for (int it = 0; it < r.map.n_theta(); ++it) img(is, it) = r.map.grid(is, it) ? 1.0f : 0.0f;
  io::write_png_gray8(map_png, img);
  io::save_json(summary_json, io::json{{"coverage_ratio", r.ratio},
                                       {"n_s", r.map.n_s()},
                                       {"n_theta", r.map.n_theta()},
                                       {"s_min", r.map.s_min},
                                       {"s_max", r.map.s_max}});
}

int classify_exception() {
  try {
    throw;
  } catch (const numerical_error&) {
    return kExitNumerical;
  } catch (const std::invalid_argument&) {
    return kExitConfig;
  } catch (const std::bad_alloc&) {
    return kExitNumerical;
  } catch (const std::runtime_error&) {
    return kExitIo;
  } catch (...) {
    return kExitNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"colotk: synthetic colonoscopy geometry toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int threads = 0;
  bool print_json = false;
  app.add_option("--seed", seed, "seed for all randomness")->capture_default_str();
  app.add_option("--threads", threads, "cap worker threads (0 = library default)");
  app.add_flag("--print-json", print_json, "print a JSON summary to stdout");

  // render
  auto* render_cmd = app.add_subcommand("render", "render a synthetic fly-through dataset");
  render_cmd->fallthrough();
  std::string render_scene, render_size = "256x256", render_out;
  int render_frames = 0;
  render_cmd->add_option("--scene", render_scene, "scene JSON (phantom + trajectory)");
  render_cmd->add_option("--frames", render_frames, "frame count override");
  render_cmd->add_option("--size", render_size, "image size WxH")->capture_default_str();
  render_cmd->add_option("--out", render_out, "output directory")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "depth metrics with scale-shift alignment");
  eval_cmd->fallthrough();
  std::string eval_pred, eval_gt, eval_domain = "depth", eval_out;
  int eval_bootstrap = 0;
  eval_cmd->add_option("--pred", eval_pred, "predicted depth dir")->required();
  eval_cmd->add_option("--gt", eval_gt, "ground-truth depth dir")->required();
  eval_cmd->add_option("--domain", eval_domain, "alignment domain: depth|disparity")
      ->check(CLI::IsMember({"depth", "disparity"}))
      ->capture_default_str();
  eval_cmd->add_option("--bootstrap", eval_bootstrap, "bootstrap resamples (0 = off)");
  eval_cmd->add_option("--out", eval_out, "metrics JSON path")->required();

  // poses
  auto* poses_cmd = app.add_subcommand("poses", "windowed bundle adjustment over tracks");
  poses_cmd->fallthrough();
  std::string poses_tracks, poses_intr, poses_out;
  int poses_window = 16, poses_overlap = 4;
  double poses_depth_weight = 1.0;
  double poses_huber = 0.0;
  poses_cmd->add_option("--tracks", poses_tracks, "tracks JSONL")->required();
  poses_cmd->add_option("--intrinsics", poses_intr, "intrinsics JSON")->required();
  poses_cmd->add_option("--window", poses_window, "window size")->capture_default_str();
  poses_cmd->add_option("--overlap", poses_overlap, "window overlap")->capture_default_str();
  poses_cmd->add_option("--depth-weight", poses_depth_weight, "depth residual weight (px/mm)");
  poses_cmd->add_option("--huber", poses_huber, "Huber delta in px (0 = plain least squares)");
  poses_cmd->add_option("--out", poses_out, "poses JSON path")->required();

  // reconstruct
  auto* rec_cmd = app.add_subcommand("reconstruct", "fuse depth into a point cloud");
  rec_cmd->fallthrough();
  std::string rec_depth, rec_poses, rec_intr, rec_rgb, rec_labels, rec_out;
  double rec_voxel = 1.0;
  int rec_stride = 1;
  bool rec_ascii = false;
  rec_cmd->add_option("--depth", rec_depth, "depth dir")->required();
  rec_cmd->add_option("--poses", rec_poses, "poses JSON")->required();
  rec_cmd->add_option("--intrinsics", rec_intr, "intrinsics JSON")->required();
  rec_cmd->add_option("--rgb", rec_rgb, "color image dir (optional)");
  rec_cmd->add_option("--labels", rec_labels, "label image dir (optional)");
  rec_cmd->add_option("--voxel", rec_voxel, "voxel size mm (0 = no downsample)")
      ->capture_default_str();
  rec_cmd->add_option("--stride", rec_stride, "pixel stride")->capture_default_str();
  rec_cmd->add_flag("--ascii", rec_ascii, "write ASCII PLY");
  rec_cmd->add_option("--out", rec_out, "output PLY path")->required();

  // coverage
  auto* cov_cmd = app.add_subcommand("coverage", "unrolled surface coverage map");
  cov_cmd->fallthrough();
  std::string cov_cloud, cov_bins = "256x64", cov_out, cov_summary;
  int cov_open = 1, cov_close = 2;
  cov_cmd->add_option("--cloud", cov_cloud, "input PLY")->required();
  cov_cmd->add_option("--bins", cov_bins, "grid bins SxTHETA")->capture_default_str();
  cov_cmd->add_option("--open", cov_open, "opening radius")->capture_default_str();
  cov_cmd->add_option("--close", cov_close, "closing radius")->capture_default_str();
  cov_cmd->add_option("--out", cov_out, "coverage map PNG")->required();
  cov_cmd->add_option("--summary", cov_summary, "summary JSON")->required();

  // preprocess
  auto* pre_cmd = app.add_subcommand("preprocess", "deterministic image preprocessing");
  pre_cmd->fallthrough();
  std::string pre_in, pre_out, pre_adain_ref, pre_hist_ref;
  bool pre_specular = false, pre_inpaint = false;
  int pre_tile = 64;
  double pre_attenuate = 0.0;
  pre_cmd->add_option("--in", pre_in, "input PNG dir")->required();
  pre_cmd->add_option("--out", pre_out, "output dir")->required();
  pre_cmd->add_flag("--specular-mask", pre_specular, "save specular masks");
  pre_cmd->add_flag("--inpaint", pre_inpaint, "inpaint specular pixels");
  pre_cmd->add_option("--adain-ref", pre_adain_ref, "style reference image");
  pre_cmd->add_option("--hist-ref", pre_hist_ref, "histogram reference dir");
  pre_cmd->add_option("--tile", pre_tile, "histogram tile size")->capture_default_str();
  pre_cmd->add_option("--attenuate", pre_attenuate, "brightness factor in (0,1]");

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "render -> eval -> poses -> cloud -> coverage");
  pipe_cmd->fallthrough();
  std::string pipe_out, pipe_size = "256x256", pipe_scene;
  int pipe_frames = 32, pipe_window = 16, pipe_overlap = 4;
  double pipe_voxel = 1.0;
  std::string pipe_bins = "128x48";
  pipe_cmd->add_option("--out", pipe_out, "output directory")->required();
  pipe_cmd->add_option("--scene", pipe_scene, "scene JSON (default demo scene)");
  pipe_cmd->add_option("--frames", pipe_frames, "frame count")->capture_default_str();
  pipe_cmd->add_option("--size", pipe_size, "image size WxH")->capture_default_str();
  pipe_cmd->add_option("--window", pipe_window, "BA window")->capture_default_str();
  pipe_cmd->add_option("--overlap", pipe_overlap, "BA overlap")->capture_default_str();
  pipe_cmd->add_option("--voxel", pipe_voxel, "voxel size mm")->capture_default_str();
  pipe_cmd->add_option("--bins", pipe_bins, "coverage bins SxTHETA")->capture_default_str();

  // validate
  auto* val_cmd = app.add_subcommand("validate", "check file formats in a directory");
  val_cmd->fallthrough();
  std::string val_dir;
  val_cmd->add_option("--dir", val_dir, "directory to check")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (*render_cmd) {
      const auto [w, h] = parse_size(render_size);
      std::optional<fs::path> scene_path;
      if (!render_scene.empty()) scene_path = render_scene;
      if (scene_path && !fs::exists(*scene_path))
        throw std::runtime_error("scene file not found: " + render_scene);
      const Scene scene = load_scene(scene_path, render_frames, seed);
      const Phantom phantom(scene.phantom);
      const auto traj = sample_trajectory(scene.trajectory, phantom, default_intrinsics(w, h));
      Lighting lighting;
      lighting.attenuation = traj.attenuation;
      log_line("rendering " + std::to_string(traj.poses.size()) + " frames at " + render_size);
      const auto frames = render_sequence(phantom, traj, lighting);
      export_dataset(frames, render_out);

      RunManifest m = make_manifest("render", scene.resolved, seed);
      if (scene_path) m.add_input(*scene_path);
      for (const auto& e : fs::directory_iterator(render_out))
        m.outputs.push_back(e.path().filename().string());
      std::sort(m.outputs.begin(), m.outputs.end());
      finish_manifest(m, fs::path(render_out) / "run_manifest.json", t0);
      if (print_json)
        std::cout << io::json{{"frames", frames.size()}, {"out", render_out}}.dump() << "\n";
      return kExitOk;
    }

    if (*eval_cmd) {
      const DepthSequence pred = load_depth_dir(eval_pred);
      const DepthSequence gt = load_depth_dir(eval_gt);
      pred.validate();
      gt.validate();
      if (pred.size() != gt.size())
        throw std::invalid_argument("pred and gt frame counts differ");
      const AlignDomain domain =
          eval_domain == "depth" ? AlignDomain::depth : AlignDomain::disparity;
      const auto params = align_scale_shift(pred, gt, domain);
      const auto aligned = apply_alignment(pred, params);
      const MetricReport report = eval_bootstrap > 0
                                      ? bootstrap_ci(aligned.seq, gt, eval_bootstrap, seed)
                                      : compute_metrics(aligned.seq, gt);
      io::json out = io::metric_report_to_json(report, &params);
      out["masked_nonpositive"] = aligned.masked_nonpositive;
      io::save_json(eval_out, out);
      log_line("evaluated " + std::to_string(gt.size()) + " frames; abs_rel " +
               std::to_string(report.abs_rel));

      RunManifest m = make_manifest(
          "eval",
          io::json{{"pred", eval_pred}, {"gt", eval_gt}, {"domain", eval_domain},
                   {"bootstrap", eval_bootstrap}},
          seed);
      m.outputs.push_back(eval_out);
      finish_manifest(m, fs::path(eval_out).concat(".manifest.json"), t0);
      if (print_json) std::cout << out.dump() << "\n";
      return kExitOk;
    }

    if (*poses_cmd) {
      const TrackSet tracks = io::read_tracks_jsonl(poses_tracks);
      const CameraIntrinsics k = io::intrinsics_from_json(io::load_json(poses_intr));
      int n_frames = 0;
      for (const auto& t : tracks.tracks)
        for (const auto& o : t.obs) n_frames = std::max(n_frames, o.frame + 1);
      const std::optional<double> huber =
          poses_huber > 0.0 ? std::optional<double>(poses_huber) : std::nullopt;
      const auto poses =
          solve_windows(tracks, k, n_frames, poses_window, poses_overlap, poses_depth_weight, huber);
      io::save_json(poses_out, io::poses_to_json(poses));
      log_line("estimated " + std::to_string(poses.size()) + " poses");

      RunManifest m = make_manifest(
          "poses",
          io::json{{"window", poses_window}, {"overlap", poses_overlap},
                   {"depth_weight", poses_depth_weight}, {"huber", poses_huber}},
          seed);
      m.add_input(poses_tracks);
      m.add_input(poses_intr);
      m.outputs.push_back(poses_out);
      finish_manifest(m, fs::path(poses_out).concat(".manifest.json"), t0);
      if (print_json) std::cout << io::json{{"n_poses", poses.size()}}.dump() << "\n";
      return kExitOk;
    }

    if (*rec_cmd) {
      const DepthSequence depths = load_depth_dir(rec_depth);
      const auto poses = io::poses_from_json(io::load_json(rec_poses));
      const CameraIntrinsics k = io::intrinsics_from_json(io::load_json(rec_intr));

      std::vector<GrayImage> colors;
      std::vector<LabelImage> labels;
      if (!rec_rgb.empty())
        for (const auto& p : sorted_files(rec_rgb, ".png")) colors.push_back(io::read_png_gray8(p));
      if (!rec_labels.empty())
        for (const auto& p : sorted_files(rec_labels, ".png"))
          labels.push_back(io::read_png_gray8_raw(p));

      PointCloud cloud = fuse(depths, poses, k, colors.empty() ? nullptr : &colors,
                              labels.empty() ? nullptr : &labels, rec_stride);
      if (rec_voxel > 0.0) cloud = voxel_downsample(cloud, rec_voxel);
      io::write_ply(rec_out, cloud, rec_ascii);
      log_line("wrote " + std::to_string(cloud.size()) + " points");

      RunManifest m = make_manifest(
          "reconstruct", io::json{{"voxel", rec_voxel}, {"stride", rec_stride}}, seed);
      m.add_input(rec_poses);
      m.add_input(rec_intr);
      m.outputs.push_back(rec_out);
      finish_manifest(m, fs::path(rec_out).concat(".manifest.json"), t0);
      if (print_json) std::cout << io::json{{"n_points", cloud.size()}}.dump() << "\n";
      return kExitOk;
    }

    if (*cov_cmd) {
      const PointCloud cloud = io::read_ply(cov_cloud);
      const auto [n_s, n_theta] = parse_size(cov_bins);
      const auto result = run_coverage(cloud, n_s, n_theta, cov_open, cov_close, nullptr);
      write_coverage_outputs(result, cov_out, cov_summary);
      log_line("coverage ratio " + std::to_string(result.ratio));

      RunManifest m = make_manifest(
          "coverage",
          io::json{{"bins", cov_bins}, {"open", cov_open}, {"close", cov_close}}, seed);
      m.add_input(cov_cloud);
      m.outputs.push_back(cov_out);
      m.outputs.push_back(cov_summary);
      finish_manifest(m, fs::path(cov_summary).concat(".manifest.json"), t0);
      if (print_json) std::cout << io::json{{"coverage_ratio", result.ratio}}.dump() << "\n";
      return kExitOk;
    }

    if (*pre_cmd) {
      const auto inputs = sorted_files(pre_in, ".png");
      if (inputs.empty()) throw std::runtime_error("no .png inputs in " + pre_in);
      std::vector<fs::path> hist_refs;
      if (!pre_hist_ref.empty()) {
        hist_refs = sorted_files(pre_hist_ref, ".png");
        if (hist_refs.size() != inputs.size())
          throw std::invalid_argument("hist-ref file count differs from input count");
      }
      std::optional<ImageFrame> style;
      if (!pre_adain_ref.empty()) style = load_gray_frame(pre_adain_ref);
      fs::create_directories(pre_out);

      for (std::size_t i = 0; i < inputs.size(); ++i) {
        ImageFrame img = load_gray_frame(inputs[i]);
        if (pre_specular || pre_inpaint) {
          const MaskGrid mask = specular_mask(img);
          if (pre_specular) {
            GrayImage m(mask.rows(), mask.cols());
            for (int v = 0; v < mask.rows(); ++v)
              for (int u = 0; u < mask.cols(); ++u) m(v, u) = mask(v, u) ? 1.0f : 0.0f;
            fs::path mp = fs::path(pre_out) / inputs[i].stem().concat("_mask.png");
            io::write_png_gray8(mp, m);
          }
          if (pre_inpaint && mask.any()) img = inpaint_masked(img, mask);
        }
        if (style) img = adain(img, *style);
        if (!hist_refs.empty()) img = local_hist_match(img, load_gray_frame(hist_refs[i]), pre_tile);
        if (pre_attenuate > 0.0) img = attenuate(img, pre_attenuate);
        io::write_png_gray8(fs::path(pre_out) / inputs[i].filename(), img.channels[0]);
      }
      log_line("processed " + std::to_string(inputs.size()) + " images");

      RunManifest m = make_manifest(
          "preprocess",
          io::json{{"specular_mask", pre_specular}, {"inpaint", pre_inpaint},
                   {"adain_ref", pre_adain_ref}, {"hist_ref", pre_hist_ref},
                   {"tile", pre_tile}, {"attenuate", pre_attenuate}},
          seed);
      for (const auto& e : fs::directory_iterator(pre_out))
        m.outputs.push_back(e.path().filename().string());
      std::sort(m.outputs.begin(), m.outputs.end());
      finish_manifest(m, fs::path(pre_out) / "run_manifest.json", t0);
      if (print_json) std::cout << io::json{{"n_images", inputs.size()}}.dump() << "\n";
      return kExitOk;
    }

    if (*val_cmd) {
      const auto checks = validate_formats(val_dir);
      int failures = 0;
      io::json rows = io::json::array();
      for (const auto& c : checks) {
        if (!c.ok) ++failures;
        log_line((c.ok ? (c.warning ? "WARN " : "ok   ") : "FAIL ") + c.path +
                 (c.message.empty() ? "" : " (" + c.message + ")"));
        rows.push_back({{"path", c.path},
                        {"kind", c.kind},
                        {"ok", c.ok},
                        {"warning", c.warning},
                        {"message", c.message}});
      }
      if (print_json) std::cout << rows.dump() << "\n";
      return failures == 0 ? kExitOk : kExitValidation;
    }

    if (*pipe_cmd) {
      const auto [w, h] = parse_size(pipe_size);
      const auto [n_s, n_theta] = parse_size(pipe_bins);
      std::optional<fs::path> scene_path;
      if (!pipe_scene.empty()) scene_path = pipe_scene;
      if (scene_path && !fs::exists(*scene_path))
        throw std::runtime_error("scene file not found: " + pipe_scene);

      std::string stage = "render";
      try {
        const Scene scene = load_scene(scene_path, pipe_frames, seed);
        const Phantom phantom(scene.phantom);
        const auto traj = sample_trajectory(scene.trajectory, phantom, default_intrinsics(w, h));
        Lighting lighting;
        lighting.attenuation = traj.attenuation;
        log_line("stage render: " + std::to_string(traj.poses.size()) + " frames at " + pipe_size);
        const auto frames = render_sequence(phantom, traj, lighting);
        const fs::path out_dir = pipe_out;
        const fs::path render_dir = out_dir / "render";
        export_dataset(frames, render_dir);

        stage = "eval";
        log_line("stage eval: GT vs perturbed GT");
        DepthSequence gt_seq, pred_seq;
        std::mt19937_64 rng(seed + 1);
        std::normal_distribution<float> noise(0.0f, 0.05f);
        for (const auto& f : frames) {
          gt_seq.frames.push_back(f.depth);
          DepthFrame p = f.depth;
          for (int v = 0; v < p.height(); ++v)
            for (int u = 0; u < p.width(); ++u)
              if (p.mask(v, u))
                p.values(v, u) = std::max(0.01f, 1.3f * p.values(v, u) + 4.0f + noise(rng));
          pred_seq.frames.push_back(p);
        }
        const auto params = align_scale_shift(pred_seq, gt_seq, AlignDomain::depth);
        const auto aligned = apply_alignment(pred_seq, params);
        const MetricReport report = bootstrap_ci(aligned.seq, gt_seq, 100, seed);
        io::json metrics = io::metric_report_to_json(report, &params);
        io::save_json(out_dir / "metrics.json", metrics);
        if (report.delta1 < 0.99)
          throw numerical_error("perturbed-GT delta1 " + std::to_string(report.delta1) +
                                " below internal check 0.99");

        stage = "tracks";
        log_line("stage tracks: oracle feature tracks");
        const TrackSet tracks = oracle_tracks(frames, 8, pipe_window, 0.0, seed);
        io::write_tracks_jsonl(out_dir / "tracks.jsonl", tracks);

        stage = "poses";
        log_line("stage poses: windowed bundle adjustment");
        const auto est = solve_windows(tracks, frames[0].intrinsics,
                                       static_cast<int>(frames.size()), pipe_window, pipe_overlap,
                                       1.0, std::nullopt);
        io::save_json(out_dir / "poses.json", io::poses_to_json(est));

        stage = "reconstruct";
        log_line("stage reconstruct: fusing depth");
        DepthSequence depths;
        std::vector<GrayImage> colors;
        std::vector<LabelImage> labels;
        std::vector<Pose> world_poses;
        for (std::size_t f = 0; f < frames.size(); ++f) {
          depths.frames.push_back(frames[f].depth);
          colors.push_back(frames[f].intensity);
          labels.push_back(frames[f].label);
          // estimated poses are frame-0 relative; re-anchor with the true first pose
          world_poses.push_back(compose(frames[0].pose, est[f]));
        }
        PointCloud cloud =
            fuse(depths, world_poses, frames[0].intrinsics, &colors, &labels, 2);
        if (pipe_voxel > 0.0) cloud = voxel_downsample(cloud, pipe_voxel);
        if (cloud.size() == 0) throw std::runtime_error("fused cloud is empty");
        io::write_ply(out_dir / "cloud.ply", cloud);

        stage = "coverage";
        log_line("stage coverage: unrolling the cloud");
        const Eigen::Vector3d hint =
            world_poses.back().translation - world_poses.front().translation;
        const auto cov = run_coverage(cloud, n_s, n_theta, 1, 2, &hint);
        write_coverage_outputs(cov, out_dir / "coverage.png", out_dir / "coverage.json");
        if (cov.ratio <= 0.2 || cov.ratio > 1.0)
          throw numerical_error("coverage ratio " + std::to_string(cov.ratio) +
                                " fails internal check");

        stage = "manifest";
        RunManifest m = make_manifest("pipeline", scene.resolved, seed);
        m.config["size"] = pipe_size;
        m.config["window"] = pipe_window;
        m.config["overlap"] = pipe_overlap;
        m.config["voxel"] = pipe_voxel;
        m.config["bins"] = pipe_bins;
        if (scene_path) m.add_input(*scene_path);
        for (const auto& name : {"metrics.json", "tracks.jsonl", "poses.json", "cloud.ply",
                                 "coverage.png", "coverage.json"})
          m.outputs.push_back(name);
        finish_manifest(m, out_dir / "run_manifest.json", t0);
        if (print_json)
          std::cout << io::json{{"frames", frames.size()},
                                {"delta1", report.delta1},
                                {"n_points", cloud.size()},
                                {"coverage_ratio", cov.ratio}}
                           .dump()
                    << "\n";
        return kExitOk;
      } catch (...) {
        std::cerr << "[colotk] pipeline stage '" << stage << "' failed\n";
        throw;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "[colotk] error: " << e.what() << "\n";
    return classify_exception();
  }
  return kExitConfig;
}
