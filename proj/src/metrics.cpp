#include "spinedrill/metrics.hpp"

#include "spinedrill/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spinedrill {

double improvement_percent(double baseline, double candidate) {
  if (!(baseline > 0.0) || !std::isfinite(baseline) || !std::isfinite(candidate)) {
    throw DomainError("improvement_percent: baseline must be finite and > 0");
  }
  return 100.0 * (baseline - candidate) / baseline;
}

double radius_error_percent(double reference_mm, double measured_mm) {
  if (!(reference_mm > 0.0) || !std::isfinite(reference_mm) || std::isnan(measured_mm)) {
    throw DomainError("radius_error_percent: reference must be finite and > 0");
  }
  return 100.0 * std::abs(measured_mm - reference_mm) / reference_mm;
}

Plane fit_plane(std::span<const Vec3> points) {
  if (points.empty()) throw DomainError("fit_plane: no points");
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) cov += (p - centroid) * (p - centroid).transpose();
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Plane plane;
  plane.point = centroid;
  plane.normal = eig.eigenvectors().col(0).normalized();
  return plane;
}

CircleFit fit_circle(std::span<const Vec3> points, const std::optional<Plane>& plane_in) {
  if (points.size() < 3) throw DomainError("fit_circle: need at least 3 points");
  for (const auto& p : points) {
    if (!p.allFinite()) throw DomainError("fit_circle: non-finite point");
  }
  const Plane plane = plane_in ? Plane{plane_in->point, plane_in->normal.normalized()}
                               : fit_plane(points);

  // In-plane basis; e1 along the dominant spread of the projected points.
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) {
    Vec3 q = p - centroid;
    q -= q.dot(plane.normal) * plane.normal;
    cov += q * q.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 e1 = eig.eigenvectors().col(2);
  e1 = (e1 - e1.dot(plane.normal) * plane.normal).normalized();
  const Vec3 e2 = plane.normal.cross(e1);

  std::vector<Eigen::Vector2d> uv(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 q = points[i] - centroid;
    uv[i] = Eigen::Vector2d(q.dot(e1), q.dot(e2));
  }
  double spread_major = 0.0;
  double spread_minor = 0.0;
  for (const auto& w : uv) {
    spread_major = std::max(spread_major, std::abs(w.x()));
    spread_minor = std::max(spread_minor, std::abs(w.y()));
  }

  CircleFit fit;
  fit.normal = plane.normal;
  if (spread_major == 0.0 || spread_minor <= 1e-12 * spread_major) {
    fit.straight = true;
    fit.radius = std::numeric_limits<double>::infinity();
    fit.center = centroid;
    return fit;
  }

  // Kasa: u^2 + v^2 + D u + E v + F = 0, coordinates scaled by the spread for conditioning.
  const double scale = spread_major;
  Eigen::MatrixXd a(uv.size(), 3);
  Eigen::VectorXd rhs(uv.size());
  for (std::size_t i = 0; i < uv.size(); ++i) {
    const Eigen::Vector2d w = uv[i] / scale;
    a(static_cast<Eigen::Index>(i), 0) = w.x();
    a(static_cast<Eigen::Index>(i), 1) = w.y();
    a(static_cast<Eigen::Index>(i), 2) = 1.0;
    rhs[static_cast<Eigen::Index>(i)] = -w.squaredNorm();
  }
  const Eigen::Vector3d sol = a.colPivHouseholderQr().solve(rhs);
  Eigen::Vector2d c(-0.5 * sol[0], -0.5 * sol[1]);
  const double r2 = c.squaredNorm() - sol[2];
  if (!(r2 > 0.0) || !std::isfinite(r2) || c.norm() > 1e9) {
    fit.straight = true;
    fit.radius = std::numeric_limits<double>::infinity();
    fit.center = centroid;
    return fit;
  }
  c *= scale;
  double r = std::sqrt(r2) * scale;

  // Gauss-Newton on residuals |w - c| - r; unknowns (cu, cv, r).
  int it = 0;
  for (; it < 100; ++it) {
    Eigen::MatrixXd jac(uv.size(), 3);
    Eigen::VectorXd res(uv.size());
    for (std::size_t i = 0; i < uv.size(); ++i) {
      const Eigen::Vector2d d = uv[i] - c;
      const double dist = d.norm();
      const auto row = static_cast<Eigen::Index>(i);
      res[row] = dist - r;
      if (dist > 0.0) {
        jac(row, 0) = -d.x() / dist;
        jac(row, 1) = -d.y() / dist;
      } else {
        jac(row, 0) = 0.0;
        jac(row, 1) = 0.0;
      }
      jac(row, 2) = -1.0;
    }
    const Eigen::Vector3d step = jac.colPivHouseholderQr().solve(-res);
    if (!step.allFinite()) break;
    c += step.head<2>();
    r += step[2];
    if (step.norm() <= 1e-12) {
      ++it;
      break;
    }
  }
  fit.iterations = it;
  fit.radius = std::abs(r);
  fit.center = centroid + c.x() * e1 + c.y() * e2;
  return fit;
}

namespace {

double distance_to_curve(const Vec3& p, const Trajectory& t) {
  const double length = t.total_length;
  const int coarse = std::max(64, static_cast<int>(std::ceil(length / 0.25)));
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= coarse; ++i) {
    const double s = length * i / coarse;
    const double d = (t.point_at(s) - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  double lo = length * std::max(0, best - 1) / coarse;
  double hi = length * std::min(coarse, best + 1) / coarse;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double s) { return (t.point_at(s) - p).squaredNorm(); };
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > 1e-10) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  const double refined = std::min({f(lo), f(hi), f(0.5 * (lo + hi)), best_d});
  return std::sqrt(refined);
}

}  // namespace

PathDeviation path_deviation(std::span<const Vec3> measured, const Trajectory& planned) {
  if (measured.empty()) throw DomainError("path_deviation: no measured points");
  planned.validate();
  PathDeviation out;
  out.distances.reserve(measured.size());
  for (const auto& p : measured) {
    if (!p.allFinite()) throw DomainError("path_deviation: non-finite point");
    out.distances.push_back(distance_to_curve(p, planned));
  }
  double mean = 0.0;
  for (const double d : out.distances) mean += d;
  mean /= static_cast<double>(out.distances.size());
  double var = 0.0;
  for (const double d : out.distances) {
    var += (d - mean) * (d - mean);
    out.max_mm = std::max(out.max_mm, d);
  }
  out.std_mm = std::sqrt(var / static_cast<double>(out.distances.size()));
  return out;
}

PathErrorReport path_error_report(std::span<const Vec3> path, const Trajectory& planned,
                                  double guide_radius_mm) {
  const CircleFit fit = fit_circle(path);
  const PathDeviation dev = path_deviation(path, planned);
  PathErrorReport rep;
  rep.straight = fit.straight;
  rep.fitted_radius_mm = fit.radius;
  rep.fitted_curvature_per_mm = fit.curvature();
  if (!fit.straight) {
    if (planned.curvature > 0.0) {
      rep.radius_error_vs_planned_pct = radius_error_percent(1.0 / planned.curvature, fit.radius);
    }
    rep.radius_error_vs_guide_pct = radius_error_percent(guide_radius_mm, fit.radius);
  }
  rep.deviation_std_mm = dev.std_mm;
  rep.deviation_max_mm = dev.max_mm;
  return rep;
}

}  // namespace spinedrill
