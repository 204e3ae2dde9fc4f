#pragma once

#include "spinedrill/fem.hpp"
#include "spinedrill/metrics.hpp"
#include "spinedrill/trajectory.hpp"
#include "spinedrill/volume.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spinedrill {

/// Grid of trajectories sharing one entry pose. Candidate ids are T1, T2, ...
/// in curvature-major, then straight length, then roll order.
struct CandidateSpace {
  std::vector<double> curvatures{0.0, 0.014388, 0.028571};  ///< 1/mm
  std::vector<double> straight_lengths{25.0};                 ///< mm
  std::vector<double> roll_angles{0.0};                       ///< rad
  ScrewSpec screw;
  Vec3 entry{0.0, 0.0, 0.0};
  Vec3 direction{1.0, 0.0, 0.0};
  Vec3 bend_plane_normal{0.0, 0.0, 1.0};

  void validate() const;
};

struct PlannerConfig {
  double load_n = 400.0;
  SolverOptions solver;
  double robot_max_curvature = 0.035;  ///< tightest heat-set guide the robot can carry, 1/mm
  double springback_ratio = 0.0;       ///< 0 = use default_springback_ratio()
};

struct FeasibilityFlags {
  bool in_bone = true;
  bool curvature_achievable = true;
  double required_set_curvature = 0.0;
  std::vector<std::string> reasons;
};

struct Candidate {
  std::string id;
  Trajectory trajectory;
};

struct CandidateEvaluation {
  Candidate candidate;
  BiomechanicalReport report;
  std::optional<FeResult> fe;
  std::optional<MaterialField> material;
};

struct PlanResult {
  std::vector<CandidateEvaluation> ranked;    ///< feasible, best first
  std::vector<CandidateEvaluation> rejected;  ///< infeasible, enumeration order
  std::string winner;
  std::string dominance_notes;
};

std::vector<Candidate> enumerate_candidates(const CandidateSpace& space);

/// Centerline check: every curve sample inside the grid on a non-void voxel, and the
/// heat-set curvature kappa / (1 - springback) within the robot limit.
FeasibilityFlags feasibility_check(const Trajectory& trajectory, const DensityVolume& volume,
                                   double robot_max_curvature, double springback_ratio);

/// Screw sweep -> material -> FE solve -> cancellous extrema. Infeasible candidates
/// return without an FE run. SolverError is rethrown with the candidate id prepended.
CandidateEvaluation evaluate_candidate(const DensityVolume& volume, const Candidate& candidate,
                                       const ScrewSpec& screw, const PlannerConfig& config = {});

/// Exhaustive evaluation ranked by (max von Mises, max principal strain, curvature,
/// enumeration order). Throws PlanningError when nothing is feasible.
PlanResult plan(const DensityVolume& volume, const CandidateSpace& space,
                const PlannerConfig& config = {});

/// Bundled vertebral-body stand-in whose straight path crosses a low-BMD pocket.
PhantomSpec reference_phantom_spec();

/// The three reference trajectories (straight, 69.5 mm and 35 mm radius, bend
/// at 25 mm) posed on the reference phantom.
CandidateSpace reference_candidate_space();

}  // namespace spinedrill
