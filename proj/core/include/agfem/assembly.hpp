#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "agfem/cut_geometry.hpp"
#include "agfem/fe_space.hpp"
#include "agfem/problems.hpp"

namespace agfem {

enum class TauPolicy : std::uint8_t {
  Aggregated,  // tau = beta / h_T on every boundary-carrying cell
  Standard,    // tau = beta * lambda_max of the per-cell generalized
               // eigenproblem grad-grad vs normal-flux
};

struct WeakFormConfig {
  TauPolicy tau_policy = TauPolicy::Aggregated;
  double beta = 25.0;
  int quadrature_order = 2;
};

/// Reduced symmetric system on the free DOFs after constraint substitution,
/// plus the reduced mass matrix.
struct LinearSystem {
  Eigen::SparseMatrix<double> A;
  Eigen::SparseMatrix<double> M;
  Eigen::VectorXd b;
  int n_free = 0;
  std::vector<double> cell_tau;  // Nitsche coefficient per leaf (0 if unused)
};

/// Assembles the Nitsche weak form of the Poisson problem
///   a(u,v) = (grad u, grad v)_Omega + (tau u - n.grad u, v)_dOmega - (u, n.grad v)_dOmega
///   b(v)   = (f, v)_Omega + (tau g, v)_dOmega - (g, n.grad v)_dOmega
/// with constraints applied by substitution during scatter, so slave rows and
/// columns never exist. Element contributions accumulate in leaf order, which
/// keeps the result deterministic.
LinearSystem assemble(const ForestMesh& mesh, const CellClassification& classes,
                      const CutQuadrature& cut, const DofTable& dofs,
                      const ConstraintSet& cs, const WeakFormConfig& cfg,
                      const ManufacturedSolution& problem);

/// Largest finite eigenvalue of the per-cell pencil
///   (n.grad mu, n.grad xi)_{T cap dOmega} = lambda (grad mu, grad xi)_{T cap Omega},
/// i.e. the trace constant entering the coercivity bound; it grows without
/// bound as the interior part of the cut degenerates. Returns 0 when the cell
/// has no boundary intersection.
double standard_tau_eigenvalue(const ForestMesh& mesh, int cell, const CellCutRule& rule);

struct EnergyError {
  double global = 0.0;       // ||u - u_h||_a over Omega
  double exact_norm = 0.0;   // ||u||_a
  std::vector<double> per_cell;  // gamma_T, indexed by leaf

  double relative() const { return exact_norm > 0.0 ? global / exact_norm : global; }
};

/// Energy-norm error of the prolongated solution against the exact gradient,
/// integrated cell by cell on the interior cut rules.
EnergyError energy_error(const ForestMesh& mesh, const CellClassification& classes,
                         const CutQuadrature& cut, const DofTable& dofs,
                         const std::vector<double>& full_values,
                         const ManufacturedSolution& problem);

/// Interpolates the exact solution at the free DOFs (test/diagnostic helper).
std::vector<double> interpolate_at_free_dofs(const DofTable& dofs, const ConstraintSet& cs,
                                             const ManufacturedSolution& problem);

}  // namespace agfem
