#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "agfem/assembly.hpp"
#include "agfem/solver.hpp"

namespace agfem {

enum class SpaceKind : std::uint8_t { Aggregated, Standard };

/// Everything a run needs besides the mesh.
struct ProblemSetup {
  BoxDomain domain{Vec2{-1.0, -1.0}, Vec2{1.0, 1.0}};
  LevelSet levelset;
  ManufacturedSolution solution;
  SpaceKind space = SpaceKind::Aggregated;
  double eta0 = 0.25;
  double beta = 25.0;
  int quad_order = 2;
  int max_subdiv = 5;
  double solver_tol = 1e-9;
  int solver_maxit = 5000;
};

/// Mesh plus every derived structure up to the constraint set.
struct BuiltSpace {
  ForestMesh mesh;
  VefTable vefs;
  CutQuadrature cut;
  CellClassification classes;
  RootCellMap roots;  // empty (all -1) for the standard space
  DofTable dofs;
  DofClassification dclass;
  std::vector<Constraint> hanging;
  ConstraintSet cs;
};

/// Balances the mesh and builds classification, aggregation and constraints.
BuiltSpace build_space(const ProblemSetup& setup, ForestMesh mesh);

enum class CriterionKind : std::uint8_t { Uniform, LiBettess, OnateBugeda };

struct RemeshCriterion {
  CriterionKind kind = CriterionKind::LiBettess;
  int m = 1;  // interpolation degree
  int d = 2;  // space dimension
};

/// Refinement flags from the per-cell error indicators. Uniform flags every
/// active cell; the error-driven criteria flag cells whose indicator exceeds
/// the optimal-mesh threshold. Exterior cells are never flagged.
std::vector<bool> mark_cells(const ForestMesh& mesh, const CellClassification& classes,
                             const CutQuadrature& cut, const std::vector<double>& gamma_T,
                             double gamma, const RemeshCriterion& crit);

struct SolveRecord {
  double gamma_target = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  int n_dofs = 0;
  int n_cells = 0;
  int cg_iterations = 0;
  bool cg_converged = false;
  bool solver_failed = false;  // breakdown (indefinite/degenerate system)
  double kappa_A = 0.0;
  double max_abs_constraint = 0.0;
  double wall_seconds = 0.0;
};

struct AmrState {
  BuiltSpace space;
  std::vector<double> solution;  // full DOF vector (prolongated)
  EnergyError error;
  std::vector<SolveRecord> history;
  bool converged = false;
  int iterations = 0;
};

struct AmrOptions {
  int max_iters = 25;
  bool record_kappa = true;
  bool stop_on_solver_failure = true;  // record the failure instead of throwing
  // Invoked with each target's final state (VTK dumps and the like).
  std::function<void(int target_index, const AmrState&)> on_target;
};

/// One solve on the given mesh (no adaptation).
AmrState solve_once(const ProblemSetup& setup, ForestMesh mesh,
                    const AmrOptions& opts = {});

/// Error-driven loop: solve, indicate, mark, refine, rebalance, rebuild until
/// the absolute energy error drops below gamma or max_iters is hit.
AmrState adapt_until(const ProblemSetup& setup, ForestMesh initial_mesh,
                     const RemeshCriterion& crit, double gamma,
                     const AmrOptions& opts = {});

/// One convergence-curve row per target. Error-driven criteria warm-start
/// each target from the previous target's mesh; the uniform criterion solves
/// once per refinement level.
struct ConvergenceTable {
  std::vector<SolveRecord> rows;
  bool completed = true;  // false when a solver failure cut the run short
};

ConvergenceTable convergence_test(const ProblemSetup& setup, ForestMesh initial_mesh,
                                  const RemeshCriterion& crit,
                                  const std::vector<double>& gamma_sequence,
                                  const AmrOptions& opts = {});

/// Least-squares slope of log(rel_error) against log(sqrt(n_dofs)) over the
/// last `points` rows.
double fitted_convergence_slope(const std::vector<SolveRecord>& rows, int points);

}  // namespace agfem
