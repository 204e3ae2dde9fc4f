#include "spinedrill/planner.hpp"

#include "spinedrill/ctsdr.hpp"
#include "spinedrill/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace spinedrill {

void CandidateSpace::validate() const {
  if (curvatures.empty()) throw SpecError("candidate space: curvatures must not be empty");
  if (straight_lengths.empty()) throw SpecError("candidate space: straight_lengths must not be empty");
  if (roll_angles.empty()) throw SpecError("candidate space: roll_angles must not be empty");
  for (const double k : curvatures) {
    if (!(k >= 0.0) || !std::isfinite(k)) throw SpecError("candidate space: curvatures must be >= 0");
  }
  for (const double l : straight_lengths) {
    if (!(l >= 0.0) || l > screw.length) {
      throw SpecError("candidate space: straight lengths must lie in [0, screw length]");
    }
  }
  for (const double r : roll_angles) {
    if (!std::isfinite(r)) throw SpecError("candidate space: roll angles must be finite");
  }
  try {
    screw.validate();
    enumerate_candidates(*this).front().trajectory.validate();
  } catch (const DomainError& e) {
    throw SpecError(std::string("candidate space: ") + e.what());
  }
}

std::vector<Candidate> enumerate_candidates(const CandidateSpace& space) {
  std::vector<Candidate> out;
  for (const double k : space.curvatures) {
    for (const double l : space.straight_lengths) {
      for (const double roll : space.roll_angles) {
        Trajectory t;
        t.entry = space.entry;
        t.direction = space.direction;
        t.bend_plane_normal = space.bend_plane_normal;
        t.straight_length = l;
        t.curvature = k;
        t.total_length = space.screw.length;
        out.push_back({"T" + std::to_string(out.size() + 1), t.rolled(roll)});
      }
    }
  }
  return out;
}

FeasibilityFlags feasibility_check(const Trajectory& trajectory, const DensityVolume& volume,
                                   double robot_max_curvature, double springback_ratio) {
  FeasibilityFlags flags;
  const auto& g = volume.geometry();
  const double step = g.spacing.minCoeff() / 4.0;
  const auto steps = static_cast<std::size_t>(std::ceil(trajectory.total_length / step));
  for (std::size_t i = 0; i <= steps && flags.in_bone; ++i) {
    const double s = i == steps ? trajectory.total_length
                                : trajectory.total_length * static_cast<double>(i) / steps;
    const Vec3 p = trajectory.point_at(s);
    VoxelCoord c{};
    for (int a = 0; a < 3; ++a) {
      c[a] = static_cast<std::int64_t>(std::floor((p[a] - g.origin[a]) / g.spacing[a]));
    }
    std::ostringstream why;
    if (!g.contains(c)) {
      why << "centerline leaves the volume at s = " << s << " mm";
      flags.in_bone = false;
    } else if (classify(volume.hu_at(static_cast<int>(c[0]), static_cast<int>(c[1]),
                                     static_cast<int>(c[2]))) == MaterialClass::Void) {
      why << "centerline crosses void at s = " << s << " mm";
      flags.in_bone = false;
    }
    if (!flags.in_bone) flags.reasons.push_back(why.str());
  }
  if (trajectory.curvature > 0.0) {
    flags.required_set_curvature = trajectory.curvature / (1.0 - springback_ratio);
    if (flags.required_set_curvature > robot_max_curvature) {
      flags.curvature_achievable = false;
      std::ostringstream why;
      why << "heat-set curvature " << flags.required_set_curvature << " /mm exceeds robot limit "
          << robot_max_curvature << " /mm";
      flags.reasons.push_back(why.str());
    }
  }
  return flags;
}

CandidateEvaluation evaluate_candidate(const DensityVolume& volume, const Candidate& candidate,
                                       const ScrewSpec& screw, const PlannerConfig& config) {
  candidate.trajectory.validate();
  screw.validate();
  const double springback =
      config.springback_ratio > 0.0 ? config.springback_ratio : default_springback_ratio();
  const auto flags = feasibility_check(candidate.trajectory, volume, config.robot_max_curvature,
                                       springback);
  CandidateEvaluation ev{candidate, {}, std::nullopt, std::nullopt};
  ev.report.trajectory_id = candidate.id;
  ev.report.in_bone = flags.in_bone;
  ev.report.curvature_achievable = flags.curvature_achievable;
  ev.report.reasons = flags.reasons;

  std::vector<std::size_t> screw_voxels;
  if (ev.report.in_bone) {
    try {
      screw_voxels = swept_screw_voxels(candidate.trajectory, screw, volume.geometry());
    } catch (const ScrewOutOfBounds& e) {
      ev.report.in_bone = false;
      ev.report.reasons.push_back(e.what());
    }
  }
  if (ev.report.in_bone) {
    for (const auto v : screw_voxels) {
      if (classify(volume.hu()[v]) == MaterialClass::Void) {
        ev.report.in_bone = false;
        ev.report.reasons.push_back("screw voxel " + std::to_string(v) + " lies outside bone");
        break;
      }
    }
  }
  if (!ev.report.feasible()) return ev;

  auto material = build_material_field(volume, screw_voxels);
  try {
    const auto model = build_model(material, candidate.trajectory, screw, config.load_n);
    auto fe = assemble_and_solve(model, config.solver);
    const auto ex = cancellous_extrema(fe, material);
    ev.report.max_von_mises_mpa = ex.max_von_mises;
    ev.report.max_principal_strain = ex.max_principal_strain;
    ev.fe = std::move(fe);
  } catch (const SolverError& e) {
    throw SolverError(candidate.id + ": " + e.what(), e.iterations(), e.relative_residual());
  } catch (const ModelError& e) {
    throw ModelError(candidate.id + ": " + e.what());
  }
  ev.material = std::move(material);
  return ev;
}

PlanResult plan(const DensityVolume& volume, const CandidateSpace& space,
                const PlannerConfig& config) {
  space.validate();
  PlanResult result;
  std::vector<std::size_t> order;
  std::vector<CandidateEvaluation> evaluated;
  for (const auto& c : enumerate_candidates(space)) {
    evaluated.push_back(evaluate_candidate(volume, c, space.screw, config));
  }
  for (std::size_t i = 0; i < evaluated.size(); ++i) {
    if (evaluated[i].report.feasible()) order.push_back(i);
  }
  if (order.empty()) {
    std::ostringstream msg;
    msg << "no feasible candidate:";
    for (const auto& ev : evaluated) {
      msg << "\n  " << ev.candidate.id << ":";
      for (const auto& r : ev.report.reasons) msg << " " << r << ";";
    }
    throw PlanningError(msg.str());
  }
  auto key_less = [&](std::size_t a, std::size_t b) {
    const auto& ra = evaluated[a].report;
    const auto& rb = evaluated[b].report;
    if (ra.max_von_mises_mpa != rb.max_von_mises_mpa) return ra.max_von_mises_mpa < rb.max_von_mises_mpa;
    if (ra.max_principal_strain != rb.max_principal_strain) {
      return ra.max_principal_strain < rb.max_principal_strain;
    }
    const double ka = evaluated[a].candidate.trajectory.curvature;
    const double kb = evaluated[b].candidate.trajectory.curvature;
    if (ka != kb) return ka < kb;
    return a < b;
  };
  std::sort(order.begin(), order.end(), key_less);

  std::ostringstream notes;
  const auto& best = evaluated[order.front()];
  if (order.size() == 1) {
    notes << best.candidate.id << " is the only feasible candidate";
  } else {
    const auto& next = evaluated[order[1]];
    const auto& rb = best.report;
    const auto& rn = next.report;
    notes << best.candidate.id << " ranks ahead of " << next.candidate.id << " on ";
    if (rb.max_von_mises_mpa != rn.max_von_mises_mpa) {
      notes << "max cancellous von Mises (" << rb.max_von_mises_mpa << " vs "
            << rn.max_von_mises_mpa << " MPa)";
    } else if (rb.max_principal_strain != rn.max_principal_strain) {
      notes << "max principal strain after a stress tie (" << rb.max_principal_strain << " vs "
            << rn.max_principal_strain << ")";
    } else if (best.candidate.trajectory.curvature != next.candidate.trajectory.curvature) {
      notes << "lower curvature after stress and strain ties";
    } else {
      notes << "enumeration order after stress, strain and curvature ties";
    }
    const bool strain_agrees = rb.max_principal_strain <= rn.max_principal_strain;
    notes << "; strain criterion " << (strain_agrees ? "agrees" : "disagrees");
  }
  result.dominance_notes = notes.str();
  result.winner = best.candidate.id;
  for (const auto i : order) result.ranked.push_back(std::move(evaluated[i]));
  for (auto& ev : evaluated) {
    if (!ev.report.feasible()) result.rejected.push_back(std::move(ev));
  }
  return result;
}

PhantomSpec reference_phantom_spec() {
  PhantomSpec spec;
  spec.size_mm = Vec3(60.0, 30.0, 36.0);
  spec.spacing_mm = Vec3(1.0, 1.0, 1.0);
  spec.cortical_thickness_mm = 2.0;
  spec.cancellous_hu = 400.0;
  spec.cortical_hu = 1800.0;
  spec.low_density = LowDensityEllipsoid{Vec3(35.0, 15.0, 12.0), Vec3(8.0, 6.0, 5.0), 120.0};
  spec.seed = 0;
  spec.noise_hu = 0.0;
  return spec;
}

CandidateSpace reference_candidate_space() {
  CandidateSpace space;
  space.curvatures = {0.0, 0.014388, 0.028571};
  space.straight_lengths = {25.0};
  space.roll_angles = {0.0};
  space.entry = Vec3(0.0, 15.0, 12.0);
  space.direction = Vec3(1.0, 0.0, 0.0);
  space.bend_plane_normal = Vec3(0.0, -1.0, 0.0);
  return space;
}

}  // namespace spinedrill
