#pragma once

#include "spinedrill/geometry.hpp"
#include "spinedrill/trajectory.hpp"
#include "spinedrill/volume.hpp"

#include <array>
#include <span>
#include <vector>

namespace spinedrill {

class WorkerPool;

using ElementMatrix = Eigen::Matrix<double, 24, 24>;

/// Stiffness of a trilinear brick with unit Young's modulus, 2x2x2 Gauss rule.
/// Local node order: (0,0,0) (1,0,0) (1,1,0) (0,1,0) then the same at z = 1;
/// dof 3a+c is component c of local node a.
ElementMatrix hex_element_stiffness(const Vec3& size_mm, double poisson);

/// Strain-displacement matrix at the element centroid (engineering shear,
/// Voigt order xx yy zz xy yz zx).
Eigen::Matrix<double, 6, 24> hex_centroid_strain_matrix(const Vec3& size_mm);

/// Global node indices of voxel `voxel`, in the local order above.
std::array<std::size_t, 8> element_nodes(const GridGeometry& grid, std::size_t voxel);

/// Voxel FE problem: every non-void voxel is one hexahedron.
struct FeModel {
  MaterialField material;
  std::vector<std::size_t> loaded_nodes;
  Vec3 total_load{0.0, 0.0, -400.0};
  std::vector<std::size_t> clamped_nodes;

  /// Sorts and deduplicates the node sets and checks the model invariants.
  static FeModel make(MaterialField material, std::vector<std::size_t> loaded_nodes,
                      Vec3 total_load, std::vector<std::size_t> clamped_nodes);

  Vec3 nodal_load() const { return total_load / static_cast<double>(loaded_nodes.size()); }
  std::size_t dof_count() const { return 3 * material.geometry().node_count(); }
};

/// Load spread uniformly over the nodes of the highest non-void element layer
/// (downward `load_n` newtons); the screw is clamped on all nodes of Screw elements
/// within one voxel layer of the trajectory entry.
FeModel build_model(const MaterialField& material, const Trajectory& trajectory,
                    const ScrewSpec& screw, double load_n);

/// Matrix-free K = sum_e E_e * K_ref over non-void voxels.
class StiffnessOperator {
 public:
  explicit StiffnessOperator(const MaterialField& material);

  std::size_t dof_count() const noexcept { return dofs_; }
  const std::vector<std::size_t>& elements() const noexcept { return elements_; }
  const ElementMatrix& reference_matrix() const noexcept { return reference_; }

  /// y = K x. Elements are visited in eight parity colors so threads never share
  /// a node within a color; the result does not depend on the thread count.
  void apply(std::span<const double> x, std::span<double> y, WorkerPool* pool = nullptr) const;
  std::vector<double> diagonal() const;

 private:
  std::size_t dofs_ = 0;
  ElementMatrix reference_;
  std::vector<std::size_t> elements_;
  std::vector<double> modulus_;
  std::vector<std::array<std::size_t, 8>> nodes_;
  std::array<std::vector<std::size_t>, 8> colors_;
};

struct SolverOptions {
  double tolerance = 1e-8;
  int max_iterations = 0;  ///< 0 selects 20 * sqrt(free dofs)
  unsigned threads = 1;
};

struct SolverStats {
  int iterations = 0;
  double relative_residual = 0.0;
  std::size_t free_dofs = 0;
};

/// Per-element results, aligned with `elements` (ascending non-void voxel indices).
struct ElementFields {
  std::vector<std::size_t> elements;
  std::vector<Mat3> strain;
  std::vector<Mat3> stress;
  std::vector<double> von_mises;
  std::vector<double> max_principal_strain;  ///< signed eigenvalue of largest magnitude
};

struct FeResult {
  std::vector<Vec3> displacement;  ///< per grid node, mm
  ElementFields fields;
  SolverStats stats;
};

/// Jacobi-preconditioned conjugate gradients on the free dofs.
/// Throws SolverError on a floating component or when max_iterations is exhausted.
FeResult assemble_and_solve(const FeModel& model, const SolverOptions& options = {});

ElementFields recover_stress_strain(const FeModel& model, std::span<const Vec3> displacement);

double von_mises(const Mat3& stress);

/// Nodal reactions (K u - f) at the clamped nodes, in clamped_nodes order.
std::vector<Vec3> reaction_forces(const FeModel& model, std::span<const Vec3> displacement);

struct CancellousExtrema {
  double max_von_mises = 0.0;
  double max_principal_strain = 0.0;  ///< magnitude
  std::size_t von_mises_voxel = 0;
  std::size_t strain_voxel = 0;
};

CancellousExtrema cancellous_extrema(const FeResult& result, const MaterialField& material);

}  // namespace spinedrill
