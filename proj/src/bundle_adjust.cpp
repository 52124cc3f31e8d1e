#include "colotk/bundle_adjust.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace colotk {

namespace {

constexpr double kBehindCameraCap = 1e4;
constexpr double kMinZ = 1e-6;

struct ResidualBlock {
  int track = 0;
  int obs_i = 0;  // indices into track.obs
  int obs_j = 0;
};

std::vector<ResidualBlock> enumerate_blocks(const BaProblem& p) {
  std::vector<ResidualBlock> blocks;
  for (std::size_t t = 0; t < p.tracks.tracks.size(); ++t) {
    const auto& obs = p.tracks.tracks[t].obs;
    for (std::size_t i = 0; i < obs.size(); ++i)
      for (std::size_t j = 0; j < obs.size(); ++j)
        if (i != j)
          blocks.push_back({static_cast<int>(t), static_cast<int>(i), static_cast<int>(j)});
  }
  return blocks;
}

// Residual of one block plus (optionally) its analytic Jacobian wrt the
// twists of poses fi and fj. Returns false when the point lands behind
// camera j (residual capped, Jacobian zeroed).
bool eval_block(const BaProblem& p, const std::vector<Pose>& poses, const ResidualBlock& b,
                Eigen::Vector3d& r, Eigen::Matrix<double, 3, 6>* j_i,
                Eigen::Matrix<double, 3, 6>* j_j) {
  const Track& trk = p.tracks.tracks[b.track];
  const TrackObservation& oi = trk.obs[b.obs_i];
  const TrackObservation& oj = trk.obs[b.obs_j];
  const CameraIntrinsics& ki = p.intrinsics[oi.frame];
  const CameraIntrinsics& kj = p.intrinsics[oj.frame];
  const Pose& wi = poses[oi.frame];
  const Pose& wj = poses[oj.frame];

  const Eigen::Vector3d x = backproject({oi.u, oi.v, oi.depth}, ki);
  const Eigen::Vector3d y = transform(wi, x);                       // world
  const Eigen::Vector3d q = wj.rotation.transpose() * (y - wj.translation);

  bool ok = q.z() > kMinZ;
  const double qz = ok ? q.z() : kMinZ;
  r.x() = kj.fx * q.x() / qz + kj.cx - oj.u;
  r.y() = kj.fy * q.y() / qz + kj.cy - oj.v;
  r.z() = p.depth_weight * (q.z() - oj.depth);
  if (!ok) {
    r = r.cwiseMax(-kBehindCameraCap).cwiseMin(kBehindCameraCap);
    if (j_i) j_i->setZero();
    if (j_j) j_j->setZero();
    return false;
  }
  if (j_i || j_j) {
    Eigen::Matrix3d dr_dq;
    dr_dq << kj.fx / qz, 0.0, -kj.fx * q.x() / (qz * qz),
             0.0, kj.fy / qz, -kj.fy * q.y() / (qz * qz),
             0.0, 0.0, p.depth_weight;
    Eigen::Matrix<double, 3, 6> dq_dxi;
    dq_dxi.leftCols<3>() = wj.rotation.transpose();
    dq_dxi.rightCols<3>() = -wj.rotation.transpose() * skew(y);
    const Eigen::Matrix<double, 3, 6> base = dr_dq * dq_dxi;
    if (j_i) *j_i = base;
    if (j_j) *j_j = -base;
  }
  return true;
}

double huber_cost(double block_sq_norm, const std::optional<double>& delta) {
  if (!delta) return block_sq_norm;
  const double s = std::sqrt(block_sq_norm);
  const double d = *delta;
  return s <= d ? block_sq_norm : 2.0 * d * s - d * d;
}

double robust_weight(double block_norm, const std::optional<double>& delta) {
  if (!delta || block_norm <= *delta) return 1.0;
  return *delta / block_norm;
}

double total_cost(const BaProblem& p, const std::vector<ResidualBlock>& blocks,
                  const std::vector<Pose>& poses, int* behind = nullptr) {
  double cost = 0.0;
  int nb = 0;
  Eigen::Vector3d r;
  for (const auto& b : blocks) {
    if (!eval_block(p, poses, b, r, nullptr, nullptr)) ++nb;
    cost += huber_cost(r.squaredNorm(), p.huber_delta);
  }
  if (behind) *behind = nb;
  return cost;
}

}  // namespace

void BaProblem::validate() const {
  if (window_size < 2) throw std::invalid_argument("BaProblem: window_size must be >= 2");
  if (!(depth_weight > 0.0)) throw std::invalid_argument("BaProblem: depth_weight must be > 0");
  if (static_cast<int>(intrinsics.size()) != window_size)
    throw std::invalid_argument("BaProblem: need one intrinsics per frame");
  for (const auto& k : intrinsics) k.validate();
  for (const auto& t : tracks.tracks) {
    std::set<int> frames;
    for (const auto& o : t.obs) {
      if (o.frame < 0 || o.frame >= window_size)
        throw std::invalid_argument("BaProblem: observation frame out of window");
      const CameraIntrinsics& k = intrinsics[o.frame];
      if (!(o.depth > 0.0) || !(o.u >= 0.0 && o.u < k.width) || !(o.v >= 0.0 && o.v < k.height))
        throw std::invalid_argument("BaProblem: observation violates pixel/depth bounds");
      frames.insert(o.frame);
    }
    if (frames.size() < 2)
      throw std::invalid_argument("BaProblem: tracks need observations in >= 2 distinct frames");
  }
}

Eigen::VectorXd ba_residual(const BaProblem& problem, const std::vector<Pose>& poses) {
  problem.validate();
  if (static_cast<int>(poses.size()) != problem.window_size)
    throw std::invalid_argument("ba_residual: pose count mismatch");
  for (const auto& w : poses)
    if (!w.rotation.allFinite() || !w.translation.allFinite())
      throw std::invalid_argument("ba_residual: non-finite pose");

  const auto blocks = enumerate_blocks(problem);
  Eigen::VectorXd r(3 * blocks.size());
  Eigen::Vector3d rb;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    eval_block(problem, poses, blocks[i], rb, nullptr, nullptr);
    r.segment<3>(3 * i) = rb;
  }
  return r;
}

Eigen::MatrixXd ba_jacobian(const BaProblem& problem, const std::vector<Pose>& poses,
                            bool analytic, double fd_step) {
  problem.validate();
  const auto blocks = enumerate_blocks(problem);
  const int n_params = 6 * (problem.window_size - 1);  // pose 0 is gauge-fixed
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(3 * blocks.size(), n_params);

  if (analytic) {
    Eigen::Vector3d rb;
    Eigen::Matrix<double, 3, 6> ji, jj;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const Track& trk = problem.tracks.tracks[blocks[b].track];
      const int fi = trk.obs[blocks[b].obs_i].frame;
      const int fj = trk.obs[blocks[b].obs_j].frame;
      eval_block(problem, poses, blocks[b], rb, &ji, &jj);
      if (fi > 0) jac.block<3, 6>(3 * b, 6 * (fi - 1)) += ji;
      if (fj > 0) jac.block<3, 6>(3 * b, 6 * (fj - 1)) += jj;
    }
    return jac;
  }

  std::vector<Pose> pert = poses;
  for (int k = 1; k < problem.window_size; ++k) {
    for (int m = 0; m < 6; ++m) {
      Twist xi = Twist::Zero();
      xi(m) = fd_step;
      pert[k] = compose(se3_exp(xi), poses[k]);
      const Eigen::VectorXd rp = ba_residual(problem, pert);
      xi(m) = -fd_step;
      pert[k] = compose(se3_exp(xi), poses[k]);
      const Eigen::VectorXd rm = ba_residual(problem, pert);
      pert[k] = poses[k];
      jac.col(6 * (k - 1) + m) = (rp - rm) / (2.0 * fd_step);
    }
  }
  return jac;
}

BaSolution ba_solve(const BaProblem& problem, const std::vector<Pose>& init,
                    const BaOptions& opts) {
  problem.validate();
  const int T = problem.window_size;
  std::vector<Pose> poses = init;
  if (poses.empty()) poses.assign(T, Pose::identity());
  if (static_cast<int>(poses.size()) != T) throw std::invalid_argument("ba_solve: bad init size");
  poses[0] = Pose::identity();

  const auto blocks = enumerate_blocks(problem);
  const int n_params = 6 * (T - 1);
  const int n_res = static_cast<int>(3 * blocks.size());

  BaSolution sol;
  sol.poses = poses;
  double cost = total_cost(problem, blocks, poses, &sol.behind_camera_residuals);
  const double initial_cost = cost;
  sol.final_cost = cost;

  double lambda = 1e-4;
  int accepted = 0;
  bool converged = false;

  for (int iter = 0; iter < opts.max_iterations && !converged; ++iter) {
    // Linearize: robust weights frozen at the current iterate.
    Eigen::VectorXd r(n_res);
    Eigen::Vector3d rb;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      eval_block(problem, poses, blocks[b], rb, nullptr, nullptr);
      r.segment<3>(3 * b) = rb;
    }
    Eigen::MatrixXd jac = ba_jacobian(problem, poses, opts.analytic_jacobian, opts.fd_step);
    if (problem.huber_delta) {
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        const double w = std::sqrt(robust_weight(r.segment<3>(3 * b).norm(), problem.huber_delta));
        r.segment<3>(3 * b) *= w;
        jac.middleRows<3>(3 * b) *= w;
      }
    }
    const Eigen::MatrixXd h = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;

    bool stepped = false;
    while (!stepped) {
      Eigen::MatrixXd a = h;
      for (int d = 0; d < n_params; ++d) a(d, d) += lambda * std::max(h(d, d), 1e-12);
      const Eigen::VectorXd delta = a.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda *= 4.0;
        if (lambda > 1e12) { converged = false; stepped = true; }
        continue;
      }
      if (delta.norm() < opts.step_tolerance) {
        converged = true;
        break;
      }
      std::vector<Pose> cand = poses;
      for (int k = 1; k < T; ++k)
        cand[k] = compose(se3_exp(delta.segment<6>(6 * (k - 1))), poses[k]);
      int behind = 0;
      const double cand_cost = total_cost(problem, blocks, cand, &behind);
      if (cand_cost < cost) {
        const double rel_decrease = (cost - cand_cost) / std::max(cost, 1e-300);
        poses = std::move(cand);
        cost = cand_cost;
        sol.behind_camera_residuals = behind;
        ++accepted;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (rel_decrease < opts.cost_tolerance) converged = true;
      } else {
        lambda *= 4.0;
        if (lambda > 1e12) {
          converged = true;  // cannot improve further at any damping
          stepped = true;
        }
      }
    }
  }

  sol.poses = poses;
  sol.final_cost = cost;
  sol.iterations = accepted;
  sol.converged = converged && cost <= initial_cost;
  return sol;
}

Pose align_pose_sets(const std::vector<Pose>& a, const std::vector<Pose>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("align_pose_sets: size mismatch or empty");
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (std::size_t k = 0; k < a.size(); ++k) m += a[k].rotation * b[k].rotation.transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d vt = svd.matrixV().transpose();
  if ((u * vt).determinant() < 0.0) u.col(2) *= -1.0;
  Pose g;
  g.rotation = u * vt;
  Eigen::Vector3d ta = Eigen::Vector3d::Zero(), tb = Eigen::Vector3d::Zero();
  for (std::size_t k = 0; k < a.size(); ++k) {
    ta += a[k].translation;
    tb += b[k].translation;
  }
  ta /= static_cast<double>(a.size());
  tb /= static_cast<double>(b.size());
  g.translation = ta - g.rotation * tb;
  return g;
}

std::vector<Pose> chain_windows(const std::vector<BaSolution>& solutions, int overlap) {
  if (overlap < 1) throw std::invalid_argument("chain_windows: overlap must be >= 1");
  if (solutions.empty()) throw std::invalid_argument("chain_windows: no windows");

  std::vector<Pose> global = solutions.front().poses;
  for (std::size_t w = 1; w < solutions.size(); ++w) {
    const auto& local = solutions[w].poses;
    if (static_cast<int>(local.size()) < overlap || static_cast<int>(global.size()) < overlap)
      throw std::invalid_argument("chain_windows: window shorter than overlap");
    const std::size_t start = global.size() - overlap;
    std::vector<Pose> shared_global(global.begin() + start, global.end());
    std::vector<Pose> shared_local(local.begin(), local.begin() + overlap);
    const Pose g = align_pose_sets(shared_global, shared_local);
    for (std::size_t l = overlap; l < local.size(); ++l) global.push_back(compose(g, local[l]));
  }
  return global;
}

}  // namespace colotk
