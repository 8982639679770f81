#include "fisheyedist/usm_camera.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fmt/format.h>

namespace fisheyedist {

namespace {

using Params5 = Eigen::Matrix<double, 5, 1>;

bool finite(double v) { return std::isfinite(v); }

Params5 to_vector(const CameraParams& c) {
  Params5 w;
  w << c.xi, c.fx, c.fy, c.cx, c.cy;
  return w;
}

CameraParams from_vector(const Params5& w, double mount_height) {
  return CameraParams{w[0], w[1], w[2], w[3], w[4], mount_height};
}

// Projection without parameter validation; false when the ray is degenerate.
bool project_raw(const WorldPoint& p, const Params5& w, PixelPoint& out) {
  const double norm = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
  if (!(norm > 0.0)) return false;
  const double denom = p.z / norm + w[0];
  if (!(denom > kDegenerateEpsilon)) return false;
  out.u = w[1] * (p.x / norm) / denom + w[3];
  out.v = w[2] * (p.y / norm) / denom + w[4];
  return true;
}

// Residual vector (u, v interleaved); false if any point fails to project.
bool residuals(std::span<const Correspondence> data, const Params5& w,
               Eigen::VectorXd& r) {
  r.resize(static_cast<Eigen::Index>(2 * data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    PixelPoint px;
    if (!project_raw(data[i].world, w, px)) return false;
    r[static_cast<Eigen::Index>(2 * i)] = px.u - data[i].pixel.u;
    r[static_cast<Eigen::Index>(2 * i + 1)] = px.v - data[i].pixel.v;
  }
  return true;
}

bool jacobian(std::span<const Correspondence> data, const Params5& w, double rel_step,
              Eigen::MatrixXd& jac) {
  const auto rows = static_cast<Eigen::Index>(2 * data.size());
  jac.resize(rows, 5);
  Eigen::VectorXd plus, minus;
  for (int k = 0; k < 5; ++k) {
    const double h = rel_step * std::max(std::abs(w[k]), 1.0);
    Params5 wp = w, wm = w;
    wp[k] += h;
    wm[k] -= h;
    if (!residuals(data, wp, plus) || !residuals(data, wm, minus)) return false;
    jac.col(k) = (plus - minus) / (2.0 * h);
  }
  return true;
}

}  // namespace

void validate(const CameraParams& c) {
  const bool all_finite = finite(c.xi) && finite(c.fx) && finite(c.fy) && finite(c.cx) &&
                          finite(c.cy) && finite(c.mount_height_in);
  if (!all_finite || !(c.fx > 0.0) || !(c.fy > 0.0) || !(c.xi >= 0.0) ||
      !(c.mount_height_in > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("invalid camera parameters (xi={}, fx={}, fy={}, cx={}, cy={}, "
                            "mount_height_in={})",
                            c.xi, c.fx, c.fy, c.cx, c.cy, c.mount_height_in));
  }
}

PixelPoint project(const WorldPoint& p, const CameraParams& camera) {
  validate(camera);
  PixelPoint out;
  if (!project_raw(p, to_vector(camera), out)) {
    throw Error(ErrorCode::DegenerateProjection,
                fmt::format("point ({}, {}, {}) is outside the projection model", p.x, p.y, p.z));
  }
  return out;
}

WorldPoint inverse_project(const PixelPoint& x, double pz, const CameraParams& camera) {
  validate(camera);
  if (!(pz > 0.0) || !finite(pz)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("depth must be positive, got {}", pz));
  }
  const double mx = (x.u - camera.cx) / camera.fx;
  const double my = (x.v - camera.cy) / camera.fy;
  const double r2 = mx * mx + my * my;
  const double xi = camera.xi;

  const double disc = 1.0 + (1.0 - xi * xi) * r2;
  if (!(disc >= 0.0)) {
    throw Error(ErrorCode::NoPreimage,
                fmt::format("pixel ({}, {}) has no preimage on the unit sphere", x.u, x.v));
  }
  const double root = std::sqrt(disc);
  // eta - xi rewritten as (1 - xi^2 r^2) / (root + xi r^2) to avoid cancellation.
  const double eta = (xi + root) / (1.0 + r2);
  const double sz = (1.0 - xi * xi * r2) / (root + xi * r2);
  if (!(sz > 0.0)) {
    throw Error(ErrorCode::NoPreimage,
                fmt::format("pixel ({}, {}) maps to a ray at or above the horizon", x.u, x.v));
  }
  const double scale = pz / sz;
  return WorldPoint{eta * mx * scale, eta * my * scale, pz};
}

double height_to_pz(const CameraParams& camera, double person_height_in) {
  if (!(person_height_in > 0.0) || !(person_height_in < 2.0 * camera.mount_height_in)) {
    throw Error(ErrorCode::InvalidHeight,
                fmt::format("person height {} in is outside (0, {})", person_height_in,
                            2.0 * camera.mount_height_in));
  }
  return camera.mount_height_in - person_height_in / 2.0;
}

FitResult fit_params(std::span<const Correspondence> data, const CameraParams& initial,
                     const FitOptions& options) {
  if (data.size() < 5) {
    throw Error(ErrorCode::SingularFit,
                fmt::format("{} correspondences cannot determine 5 parameters", data.size()));
  }
  validate(initial);

  Params5 w = to_vector(initial);
  Eigen::VectorXd r;
  if (!residuals(data, w, r)) {
    throw Error(ErrorCode::SingularFit, "initial parameters cannot project every point");
  }
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  bool converged = false;
  int iter = 0;

  Eigen::MatrixXd jac;
  Eigen::VectorXd trial_r;
  const double cost_floor = 1e-28 * static_cast<double>(data.size());

  for (; iter < options.max_iterations && !converged; ++iter) {
    if (!jacobian(data, w, options.difference_step, jac)) {
      throw Error(ErrorCode::SingularFit, "Jacobian evaluation left the valid projection domain");
    }
    // Checked before the exact-fit exit so degenerate geometry is reported
    // even when the starting point already reproduces every pixel.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
    qr.setThreshold(1e-12);
    if (qr.rank() < 5) {
      throw Error(ErrorCode::SingularFit,
                  fmt::format("rank-deficient Jacobian (rank {} < 5)", qr.rank()));
    }
    if (cost <= cost_floor) {
      converged = true;
      break;
    }
    const Eigen::Matrix<double, 5, 5> jtj = jac.transpose() * jac;
    const Params5 gradient = jac.transpose() * r;

    bool accepted = false;
    while (!accepted) {
      Eigen::Matrix<double, 5, 5> damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal();
      const Params5 step = damped.ldlt().solve(-gradient);
      const Params5 candidate = w + step;
      if (candidate.allFinite() && residuals(data, candidate, trial_r)) {
        const double trial_cost = trial_r.squaredNorm();
        if (trial_cost < cost) {
          const double change = (cost - trial_cost) / cost;
          w = candidate;
          r = trial_r;
          cost = trial_cost;
          lambda = std::max(lambda / 10.0, 1e-12);
          accepted = true;
          if (change < options.relative_tolerance) converged = true;
          break;
        }
      }
      lambda *= 10.0;
      if (lambda > 1e16) {
        // No descent direction left at working precision: stationary point.
        converged = true;
        break;
      }
    }
  }

  FitResult result;
  result.params = from_vector(w, initial.mount_height_in);
  // RMS over the 2N scalar residuals (per image axis).
  result.rmse_px = std::sqrt(cost / static_cast<double>(2 * data.size()));
  result.iterations = iter;
  result.converged = converged;
  return result;
}

}  // namespace fisheyedist
