#include "spinedrill/fem.hpp"

#include "spinedrill/errors.hpp"
#include "spinedrill/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace spinedrill {

namespace {

constexpr std::array<std::array<int, 3>, 8> kCorners{{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}}};

Eigen::Matrix<double, 6, 6> isotropic_elasticity(double young, double poisson) {
  const double lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
  const double mu = young / (2.0 * (1.0 + poisson));
  Eigen::Matrix<double, 6, 6> d = Eigen::Matrix<double, 6, 6>::Zero();
  d.topLeftCorner<3, 3>().setConstant(lambda);
  d.topLeftCorner<3, 3>().diagonal().array() += 2.0 * mu;
  d.bottomRightCorner<3, 3>().diagonal().setConstant(mu);
  return d;
}

Eigen::Matrix<double, 6, 24> strain_matrix(const Vec3& size, double xi, double eta, double zeta) {
  Eigen::Matrix<double, 6, 24> b = Eigen::Matrix<double, 6, 24>::Zero();
  const double nat[3] = {xi, eta, zeta};
  for (int a = 0; a < 8; ++a) {
    double sign[3];
    for (int c = 0; c < 3; ++c) sign[c] = kCorners[a][c] == 0 ? -1.0 : 1.0;
    const double f0 = 1.0 + sign[0] * nat[0];
    const double f1 = 1.0 + sign[1] * nat[1];
    const double f2 = 1.0 + sign[2] * nat[2];
    // dN/dx = dN/dxi * 2 / h
    const double dx = 0.125 * sign[0] * f1 * f2 * 2.0 / size.x();
    const double dy = 0.125 * sign[1] * f0 * f2 * 2.0 / size.y();
    const double dz = 0.125 * sign[2] * f0 * f1 * 2.0 / size.z();
    const int col = 3 * a;
    b(0, col) = dx;
    b(1, col + 1) = dy;
    b(2, col + 2) = dz;
    b(3, col) = dy;
    b(3, col + 1) = dx;
    b(4, col + 1) = dz;
    b(4, col + 2) = dy;
    b(5, col) = dz;
    b(5, col + 2) = dx;
  }
  return b;
}

Mat3 voigt_to_tensor(const Eigen::Matrix<double, 6, 1>& v, double shear_scale) {
  Mat3 t;
  t(0, 0) = v[0];
  t(1, 1) = v[1];
  t(2, 2) = v[2];
  t(0, 1) = t(1, 0) = shear_scale * v[3];
  t(1, 2) = t(2, 1) = shear_scale * v[4];
  t(0, 2) = t(2, 0) = shear_scale * v[5];
  return t;
}

constexpr std::size_t kReductionBlock = 4096;

// Fixed block partition, summed in block order: identical for any thread count.
double blocked_dot(std::span<const double> a, std::span<const double> b, WorkerPool& pool) {
  const std::size_t blocks = (a.size() + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks, 0.0);
  pool.run(blocks, [&](std::size_t blk) {
    const std::size_t lo = blk * kReductionBlock;
    const std::size_t hi = std::min(a.size(), lo + kReductionBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
    partial[blk] = s;
  });
  double total = 0.0;
  for (const double p : partial) total += p;
  return total;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Each connected set of elements needs three non-collinear clamped nodes,
// otherwise it has rigid-body modes and K is singular.
void check_supported(const FeModel& model, const StiffnessOperator& op) {
  const auto& g = model.material.geometry();
  UnionFind uf(g.node_count());
  for (const auto v : op.elements()) {
    const auto nodes = element_nodes(g, v);
    for (int a = 1; a < 8; ++a) uf.unite(nodes[0], nodes[a]);
  }
  std::vector<std::vector<Vec3>> clamped_by_root(g.node_count());
  for (const auto n : model.clamped_nodes) {
    const auto c = g.node_coord(n);
    clamped_by_root[uf.find(n)].push_back(g.node_position(c[0], c[1], c[2]));
  }
  std::vector<char> reported(g.node_count(), 0);
  std::size_t component = 0;
  for (const auto v : op.elements()) {
    const auto root = uf.find(element_nodes(g, v)[0]);
    if (reported[root]) continue;
    reported[root] = 1;
    ++component;
    const auto& pts = clamped_by_root[root];
    bool supported = false;
    if (pts.size() >= 3) {
      const Vec3 p0 = pts.front();
      Vec3 p1 = p0;
      for (const auto& p : pts) {
        if ((p - p0).squaredNorm() > (p1 - p0).squaredNorm()) p1 = p;
      }
      const Vec3 axis = p1 - p0;
      const double scale = axis.squaredNorm();
      for (const auto& p : pts) {
        if (axis.cross(p - p0).squaredNorm() > 1e-12 * scale * scale) {
          supported = true;
          break;
        }
      }
    }
    if (!supported) {
      std::size_t count = 0;
      for (const auto w : op.elements()) {
        if (uf.find(element_nodes(g, w)[0]) == root) ++count;
      }
      const auto c = g.voxel_coord(v);
      std::ostringstream msg;
      msg << "singular stiffness: component " << component << " (" << count
          << " elements, first voxel (" << c[0] << ", " << c[1] << ", " << c[2]
          << ")) is not held by three non-collinear clamped nodes";
      throw SolverError(msg.str(), 0, 1.0);
    }
  }
}

}  // namespace

ElementMatrix hex_element_stiffness(const Vec3& size_mm, double poisson) {
  const auto d = isotropic_elasticity(1.0, poisson);
  const double gp = 1.0 / std::sqrt(3.0);
  const double det_j = size_mm.prod() / 8.0;
  ElementMatrix k = ElementMatrix::Zero();
  for (const double xi : {-gp, gp}) {
    for (const double eta : {-gp, gp}) {
      for (const double zeta : {-gp, gp}) {
        const auto b = strain_matrix(size_mm, xi, eta, zeta);
        k.noalias() += b.transpose() * d * b * det_j;
      }
    }
  }
  return 0.5 * (k + k.transpose());
}

Eigen::Matrix<double, 6, 24> hex_centroid_strain_matrix(const Vec3& size_mm) {
  return strain_matrix(size_mm, 0.0, 0.0, 0.0);
}

std::array<std::size_t, 8> element_nodes(const GridGeometry& grid, std::size_t voxel) {
  const auto c = grid.voxel_coord(voxel);
  std::array<std::size_t, 8> nodes{};
  for (int a = 0; a < 8; ++a) {
    nodes[a] = grid.node_index(c[0] + kCorners[a][0], c[1] + kCorners[a][1], c[2] + kCorners[a][2]);
  }
  return nodes;
}

FeModel FeModel::make(MaterialField material, std::vector<std::size_t> loaded_nodes,
                      Vec3 total_load, std::vector<std::size_t> clamped_nodes) {
  auto normalize = [](std::vector<std::size_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  normalize(loaded_nodes);
  normalize(clamped_nodes);
  if (loaded_nodes.empty()) throw ModelError("FE model: no loaded nodes");
  if (clamped_nodes.empty()) throw ModelError("FE model: no clamped nodes");
  if (!total_load.allFinite()) throw ModelError("FE model: non-finite load");

  const auto& g = material.geometry();
  std::vector<char> active(g.node_count(), 0);
  for (std::size_t v = 0; v < g.voxel_count(); ++v) {
    if (material.classes()[v] == MaterialClass::Void) continue;
    for (const auto n : element_nodes(g, v)) active[n] = 1;
  }
  for (const auto* set : {&loaded_nodes, &clamped_nodes}) {
    for (const auto n : *set) {
      if (n >= g.node_count()) throw IndexError("FE model: node index outside grid");
      if (!active[n]) throw ModelError("FE model: node " + std::to_string(n) + " touches no element");
    }
  }
  std::vector<std::size_t> overlap;
  std::set_intersection(loaded_nodes.begin(), loaded_nodes.end(), clamped_nodes.begin(),
                        clamped_nodes.end(), std::back_inserter(overlap));
  if (!overlap.empty()) {
    throw ModelError("FE model: " + std::to_string(overlap.size()) +
                     " node(s) are both loaded and clamped");
  }
  return FeModel{std::move(material), std::move(loaded_nodes), total_load,
                 std::move(clamped_nodes)};
}

FeModel build_model(const MaterialField& material, const Trajectory& trajectory,
                    const ScrewSpec& screw, double load_n) {
  trajectory.validate();
  screw.validate();
  if (!std::isfinite(load_n)) throw ModelError("FE model: non-finite load");
  const auto& g = material.geometry();
  const auto classes = material.classes();

  int top = -1;
  for (std::size_t v = 0; v < g.voxel_count(); ++v) {
    if (classes[v] != MaterialClass::Void) top = std::max(top, g.voxel_coord(v)[2]);
  }
  if (top < 0) throw ModelError("FE model: material field has no bone");
  std::vector<std::size_t> loaded;
  for (int j = 0; j < g.dims[1]; ++j) {
    for (int i = 0; i < g.dims[0]; ++i) {
      if (classes[g.voxel_index(i, j, top)] == MaterialClass::Void) continue;
      for (int dj = 0; dj <= 1; ++dj) {
        for (int di = 0; di <= 1; ++di) loaded.push_back(g.node_index(i + di, j + dj, top + 1));
      }
    }
  }

  const double layer = trajectory.direction.cwiseAbs().dot(g.spacing);
  std::vector<std::size_t> clamped;
  for (std::size_t v = 0; v < g.voxel_count(); ++v) {
    if (classes[v] != MaterialClass::Screw) continue;
    const auto c = g.voxel_coord(v);
    const double axial = (g.voxel_center(c[0], c[1], c[2]) - trajectory.entry).dot(trajectory.direction);
    if (axial > layer) continue;
    for (const auto n : element_nodes(g, v)) clamped.push_back(n);
  }
  if (clamped.empty()) throw ModelError("FE model: no screw voxels in the entry layer to clamp");
  return FeModel::make(material, std::move(loaded), Vec3(0.0, 0.0, -load_n), std::move(clamped));
}

StiffnessOperator::StiffnessOperator(const MaterialField& material) {
  const auto& g = material.geometry();
  dofs_ = 3 * g.node_count();
  reference_ = hex_element_stiffness(g.spacing, material.poisson());
  for (std::size_t v = 0; v < g.voxel_count(); ++v) {
    if (material.classes()[v] == MaterialClass::Void) continue;
    const std::size_t e = elements_.size();
    elements_.push_back(v);
    modulus_.push_back(material.modulus()[v]);
    nodes_.push_back(element_nodes(g, v));
    const auto c = g.voxel_coord(v);
    colors_[(c[0] & 1) | ((c[1] & 1) << 1) | ((c[2] & 1) << 2)].push_back(e);
  }
}

void StiffnessOperator::apply(std::span<const double> x, std::span<double> y,
                              WorkerPool* pool) const {
  std::fill(y.begin(), y.end(), 0.0);
  constexpr std::size_t kChunk = 512;
  for (const auto& color : colors_) {
    auto work = [&](std::size_t chunk) {
      const std::size_t lo = chunk * kChunk;
      const std::size_t hi = std::min(color.size(), lo + kChunk);
      Eigen::Matrix<double, 24, 1> ue;
      Eigen::Matrix<double, 24, 1> fe;
      for (std::size_t idx = lo; idx < hi; ++idx) {
        const std::size_t e = color[idx];
        const auto& nodes = nodes_[e];
        for (int a = 0; a < 8; ++a) {
          for (int c = 0; c < 3; ++c) ue[3 * a + c] = x[3 * nodes[a] + c];
        }
        fe.noalias() = reference_ * ue;
        const double m = modulus_[e];
        for (int a = 0; a < 8; ++a) {
          for (int c = 0; c < 3; ++c) y[3 * nodes[a] + c] += m * fe[3 * a + c];
        }
      }
    };
    const std::size_t chunks = (color.size() + kChunk - 1) / kChunk;
    if (pool != nullptr) {
      pool->run(chunks, work);
    } else {
      for (std::size_t ch = 0; ch < chunks; ++ch) work(ch);
    }
  }
}

std::vector<double> StiffnessOperator::diagonal() const {
  std::vector<double> d(dofs_, 0.0);
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    for (int a = 0; a < 8; ++a) {
      for (int c = 0; c < 3; ++c) {
        d[3 * nodes_[e][a] + c] += modulus_[e] * reference_(3 * a + c, 3 * a + c);
      }
    }
  }
  return d;
}

FeResult assemble_and_solve(const FeModel& model, const SolverOptions& options) {
  if (!(options.tolerance > 0.0 && options.tolerance <= 1e-4)) {
    throw UsageError("assemble_and_solve: tolerance must lie in (0, 1e-4]");
  }
  const auto& g = model.material.geometry();
  const StiffnessOperator op(model.material);
  check_supported(model, op);

  const std::size_t n = op.dof_count();
  std::vector<double> diag = op.diagonal();
  std::vector<double> free(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) free[i] = diag[i] > 0.0 ? 1.0 : 0.0;
  for (const auto node : model.clamped_nodes) {
    for (int c = 0; c < 3; ++c) free[3 * node + c] = 0.0;
  }
  const auto free_dofs = static_cast<std::size_t>(std::count(free.begin(), free.end(), 1.0));

  std::vector<double> f(n, 0.0);
  const Vec3 nodal = model.nodal_load();
  for (const auto node : model.loaded_nodes) {
    for (int c = 0; c < 3; ++c) f[3 * node + c] = nodal[c];
  }
  std::vector<double> inv_diag(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] *= free[i];
    if (free[i] != 0.0) inv_diag[i] = 1.0 / diag[i];
  }

  WorkerPool pool(std::max(1u, options.threads));
  const int max_iter = options.max_iterations > 0
                           ? options.max_iterations
                           : static_cast<int>(std::ceil(20.0 * std::sqrt(static_cast<double>(free_dofs))));

  std::vector<double> u(n, 0.0);
  std::vector<double> r = f;
  std::vector<double> z(n), p(n), q(n), masked(n);
  const double f_norm = std::sqrt(blocked_dot(f, f, pool));

  auto apply_free = [&](std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < n; ++i) masked[i] = in[i] * free[i];
    op.apply(masked, out, &pool);
    for (std::size_t i = 0; i < n; ++i) out[i] *= free[i];
  };

  SolverStats stats;
  stats.free_dofs = free_dofs;
  if (f_norm > 0.0) {
    int iter = 0;
    double rel = 1.0;
    while (iter < max_iter) {
      // (Re)start from the true residual; the restart guards against drift of the
      // recursive residual on high-contrast moduli.
      apply_free(u, q);
      for (std::size_t i = 0; i < n; ++i) r[i] = f[i] - q[i];
      rel = std::sqrt(blocked_dot(r, r, pool)) / f_norm;
      if (rel <= options.tolerance) break;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] = inv_diag[i] * r[i];
      double rz = blocked_dot(r, z, pool);
      while (iter < max_iter) {
        apply_free(p, q);
        const double pq = blocked_dot(p, q, pool);
        if (!(pq > 0.0)) {
          throw SolverError("conjugate gradients lost positive definiteness", iter, rel);
        }
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
          u[i] += alpha * p[i];
          r[i] -= alpha * q[i];
        }
        ++iter;
        rel = std::sqrt(blocked_dot(r, r, pool)) / f_norm;
        if (rel <= options.tolerance) break;
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        const double rz_next = blocked_dot(r, z, pool);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
      }
    }
    apply_free(u, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = f[i] - q[i];
    rel = std::sqrt(blocked_dot(r, r, pool)) / f_norm;
    stats.iterations = iter;
    stats.relative_residual = rel;
    if (rel > options.tolerance) {
      std::ostringstream msg;
      msg << "conjugate gradients did not converge in " << iter
          << " iterations (relative residual " << rel << ")";
      throw SolverError(msg.str(), iter, rel);
    }
  }

  FeResult result;
  result.displacement.resize(g.node_count());
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    result.displacement[node] = Vec3(u[3 * node], u[3 * node + 1], u[3 * node + 2]);
  }
  result.fields = recover_stress_strain(model, result.displacement);
  result.stats = stats;
  return result;
}

double von_mises(const Mat3& s) {
  const double dxy = s(0, 0) - s(1, 1);
  const double dyz = s(1, 1) - s(2, 2);
  const double dzx = s(2, 2) - s(0, 0);
  const double shear = s(0, 1) * s(0, 1) + s(1, 2) * s(1, 2) + s(0, 2) * s(0, 2);
  return std::sqrt(std::max(0.0, 0.5 * (dxy * dxy + dyz * dyz + dzx * dzx) + 3.0 * shear));
}

ElementFields recover_stress_strain(const FeModel& model, std::span<const Vec3> displacement) {
  const auto& g = model.material.geometry();
  if (displacement.size() != g.node_count()) {
    throw UsageError("recover_stress_strain: displacement size does not match the grid");
  }
  const auto b = hex_centroid_strain_matrix(g.spacing);
  const auto d_unit = isotropic_elasticity(1.0, model.material.poisson());
  ElementFields out;
  for (std::size_t v = 0; v < g.voxel_count(); ++v) {
    if (model.material.classes()[v] == MaterialClass::Void) continue;
    const auto nodes = element_nodes(g, v);
    Eigen::Matrix<double, 24, 1> ue;
    for (int a = 0; a < 8; ++a) ue.segment<3>(3 * a) = displacement[nodes[a]];
    const Eigen::Matrix<double, 6, 1> eps = b * ue;
    const Eigen::Matrix<double, 6, 1> sig = model.material.modulus()[v] * (d_unit * eps);
    const Mat3 strain = voigt_to_tensor(eps, 0.5);
    const Mat3 stress = voigt_to_tensor(sig, 1.0);
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(strain, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    double principal = ev[0];
    for (int i = 1; i < 3; ++i) {
      if (std::abs(ev[i]) > std::abs(principal)) principal = ev[i];
    }
    out.elements.push_back(v);
    out.strain.push_back(strain);
    out.stress.push_back(stress);
    out.von_mises.push_back(von_mises(stress));
    out.max_principal_strain.push_back(principal);
  }
  return out;
}

std::vector<Vec3> reaction_forces(const FeModel& model, std::span<const Vec3> displacement) {
  const auto& g = model.material.geometry();
  if (displacement.size() != g.node_count()) {
    throw UsageError("reaction_forces: displacement size does not match the grid");
  }
  const StiffnessOperator op(model.material);
  std::vector<double> u(op.dof_count()), ku(op.dof_count());
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    for (int c = 0; c < 3; ++c) u[3 * node + c] = displacement[node][c];
  }
  op.apply(u, ku);
  const Vec3 nodal = model.nodal_load();
  std::vector<Vec3> reactions;
  reactions.reserve(model.clamped_nodes.size());
  for (const auto node : model.clamped_nodes) {
    Vec3 r(ku[3 * node], ku[3 * node + 1], ku[3 * node + 2]);
    if (std::binary_search(model.loaded_nodes.begin(), model.loaded_nodes.end(), node)) r -= nodal;
    reactions.push_back(r);
  }
  return reactions;
}

CancellousExtrema cancellous_extrema(const FeResult& result, const MaterialField& material) {
  CancellousExtrema ex;
  bool any = false;
  const auto& f = result.fields;
  for (std::size_t e = 0; e < f.elements.size(); ++e) {
    const auto v = f.elements[e];
    if (material.class_at(v) != MaterialClass::Cancellous) continue;
    const double strain = std::abs(f.max_principal_strain[e]);
    if (!any || f.von_mises[e] > ex.max_von_mises) {
      ex.max_von_mises = f.von_mises[e];
      ex.von_mises_voxel = v;
    }
    if (!any || strain > ex.max_principal_strain) {
      ex.max_principal_strain = strain;
      ex.strain_voxel = v;
    }
    any = true;
  }
  if (!any) throw DomainError("cancellous_extrema: model has no cancellous elements");
  return ex;
}

}  // namespace spinedrill
