#include "agfem/assembly.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace agfem {

double standard_tau_eigenvalue(const ForestMesh& mesh, int cell, const CellCutRule& rule) {
  if (rule.boundary.empty()) return 0.0;
  const CellId& c = mesh.leaves()[cell];
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d B = Eigen::Matrix4d::Zero();
  for (const InteriorPoint& q : rule.interior) {
    const auto g = q1_gradients(mesh, c, q.x);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        A(i, j) += q.w * (g[i].dot(g[j]));
      }
    }
  }
  for (const BoundaryPoint& q : rule.boundary) {
    const auto g = q1_gradients(mesh, c, q.x);
    double gn[4];
    for (int i = 0; i < 4; ++i) gn[i] = g[i].dot(q.n);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        B(i, j) += q.w * gn[i] * gn[j];
      }
    }
  }
  // lambda_max = sup ||grad v . n||^2_(cut) / ||grad v||^2_(interior): the
  // trace constant that makes Nitsche coercive. The volume form's kernel
  // (constants) is shared by the normal-flux form, so the pencil is solved on
  // the numerical range of A; the value blows up as the interior part of the
  // cell degenerates.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(A);
  const double amax = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(amax > 0.0)) return 0.0;
  std::vector<int> keep;
  for (int i = 0; i < 4; ++i) {
    if (es.eigenvalues()(i) > 1e-12 * amax) keep.push_back(i);
  }
  if (keep.empty()) return 0.0;
  Eigen::MatrixXd V(4, int(keep.size()));
  for (int k = 0; k < int(keep.size()); ++k) {
    V.col(k) = es.eigenvectors().col(keep[k]) / std::sqrt(es.eigenvalues()(keep[k]));
  }
  const Eigen::MatrixXd R = V.transpose() * B * V;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(R);
  const double lam = er.eigenvalues().maxCoeff();
  if (lam < 0.0) {
    throw SolverError("standard_tau_eigenvalue: negative maximum eigenvalue");
  }
  return lam;
}

LinearSystem assemble(const ForestMesh& mesh, const CellClassification& classes,
                      const CutQuadrature& cut, const DofTable& dofs,
                      const ConstraintSet& cs, const WeakFormConfig& cfg,
                      const ManufacturedSolution& problem) {
  if (!(cfg.beta > 0.0)) throw ParameterError("assemble: beta must be positive");
  LinearSystem sys;
  sys.n_free = cs.n_free;
  sys.b = Eigen::VectorXd::Zero(cs.n_free);
  sys.cell_tau.assign(mesh.n_leaves(), 0.0);

  using Trip = Eigen::Triplet<double>;
  std::vector<Trip> trips_A, trips_M;

  // Reduced expansion of each local DOF: list of (free index, weight).
  std::vector<std::pair<int, double>> expansion[4];

  for (int cell = 0; cell < mesh.n_leaves(); ++cell) {
    if (!classes.is_active(cell)) continue;
    const CellCutRule& rule = cut.cells[cell];
    if (rule.interior.empty() && rule.boundary.empty()) continue;
    const CellId& id = mesh.leaves()[cell];

    double Ke[4][4] = {}, Me[4][4] = {}, be[4] = {};
    for (const InteriorPoint& q : rule.interior) {
      const auto n = q1_values(mesh, id, q.x);
      const auto g = q1_gradients(mesh, id, q.x);
      const double fv = problem.f(q.x);
      for (int i = 0; i < 4; ++i) {
        be[i] += q.w * n[i] * fv;
        for (int j = 0; j < 4; ++j) {
          Ke[i][j] += q.w * g[i].dot(g[j]);
          Me[i][j] += q.w * n[i] * n[j];
        }
      }
    }

    if (!rule.boundary.empty()) {
      double tau = 0.0;
      if (cfg.tau_policy == TauPolicy::Aggregated) {
        tau = cfg.beta / mesh.cell_size(id);
      } else {
        tau = cfg.beta * standard_tau_eigenvalue(mesh, cell, rule);
      }
      sys.cell_tau[cell] = tau;
      for (const BoundaryPoint& q : rule.boundary) {
        const auto n = q1_values(mesh, id, q.x);
        const auto g = q1_gradients(mesh, id, q.x);
        double gn[4];
        for (int i = 0; i < 4; ++i) gn[i] = g[i].dot(q.n);
        const double gv = problem.u(q.x);
        for (int i = 0; i < 4; ++i) {
          be[i] += q.w * (tau * n[i] * gv - gn[i] * gv);
          for (int j = 0; j < 4; ++j) {
            Ke[i][j] += q.w * (tau * n[i] * n[j] - n[i] * gn[j] - n[j] * gn[i]);
          }
        }
      }
    }

    for (int k = 0; k < 4; ++k) {
      const int dof = dofs.cell_dofs[cell][k];
      expansion[k].clear();
      if (cs.free_index[dof] >= 0) {
        expansion[k].emplace_back(cs.free_index[dof], 1.0);
      } else {
        for (const auto& [m, w] : cs.constraints[cs.constraint_index[dof]].masters) {
          expansion[k].emplace_back(cs.free_index[m], w);
        }
      }
    }
    for (int i = 0; i < 4; ++i) {
      for (const auto& [p, wp] : expansion[i]) {
        sys.b(p) += wp * be[i];
        for (int j = 0; j < 4; ++j) {
          for (const auto& [q, wq] : expansion[j]) {
            trips_A.emplace_back(p, q, wp * wq * Ke[i][j]);
            trips_M.emplace_back(p, q, wp * wq * Me[i][j]);
          }
        }
      }
    }
  }

  sys.A.resize(cs.n_free, cs.n_free);
  sys.A.setFromTriplets(trips_A.begin(), trips_A.end());
  sys.M.resize(cs.n_free, cs.n_free);
  sys.M.setFromTriplets(trips_M.begin(), trips_M.end());
  return sys;
}

EnergyError energy_error(const ForestMesh& mesh, const CellClassification& classes,
                         const CutQuadrature& cut, const DofTable& dofs,
                         const std::vector<double>& full_values,
                         const ManufacturedSolution& problem) {
  EnergyError e;
  e.per_cell.assign(mesh.n_leaves(), 0.0);
  double err2 = 0.0, ref2 = 0.0;
  for (int cell = 0; cell < mesh.n_leaves(); ++cell) {
    if (!classes.is_active(cell)) continue;
    const CellId& id = mesh.leaves()[cell];
    double cell_err2 = 0.0;
    for (const InteriorPoint& q : cut.cells[cell].interior) {
      const auto g = q1_gradients(mesh, id, q.x);
      Vec2 gh{0.0, 0.0};
      for (int k = 0; k < 4; ++k) {
        gh = gh + g[k] * full_values[dofs.cell_dofs[cell][k]];
      }
      const Vec2 ge = problem.grad_u(q.x);
      const Vec2 d = ge - gh;
      cell_err2 += q.w * d.dot(d);
      ref2 += q.w * ge.dot(ge);
    }
    cell_err2 = std::max(cell_err2, 0.0);
    e.per_cell[cell] = std::sqrt(cell_err2);
    err2 += cell_err2;
  }
  e.global = std::sqrt(std::max(err2, 0.0));
  e.exact_norm = std::sqrt(std::max(ref2, 0.0));
  return e;
}

std::vector<double> interpolate_at_free_dofs(const DofTable& dofs, const ConstraintSet& cs,
                                             const ManufacturedSolution& problem) {
  std::vector<double> out(cs.n_free, 0.0);
  for (int d = 0; d < dofs.n_dofs; ++d) {
    if (cs.free_index[d] >= 0) out[cs.free_index[d]] = problem.u(dofs.coords[d]);
  }
  return out;
}

}  // namespace agfem
