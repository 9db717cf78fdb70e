#include "agfem/amr.hpp"

#include <chrono>
#include <cmath>

namespace agfem {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// Solve the current space and fill a record; returns the free solution.
std::optional<Eigen::VectorXd> solve_space(const ProblemSetup& setup,
                                           const BuiltSpace& space,
                                           const AmrOptions& opts, double gamma,
                                           SolveRecord& rec) {
  const double t0 = now_seconds();
  WeakFormConfig cfg;
  cfg.tau_policy = setup.space == SpaceKind::Aggregated ? TauPolicy::Aggregated
                                                        : TauPolicy::Standard;
  cfg.beta = setup.beta;
  cfg.quadrature_order = setup.quad_order;
  const LinearSystem sys =
      assemble(space.mesh, space.classes, space.cut, space.dofs, space.cs, cfg,
               setup.solution);
  rec.gamma_target = gamma;
  rec.n_dofs = sys.n_free;
  rec.n_cells = space.mesh.n_leaves();
  rec.max_abs_constraint = space.cs.max_abs_coefficient();

  std::optional<Eigen::VectorXd> x;
  try {
    PcgResult pcg = solve_pcg(sys.A, sys.b, setup.solver_tol, setup.solver_maxit);
    rec.cg_iterations = pcg.iterations;
    rec.cg_converged = pcg.converged;
    x = std::move(pcg.x);
  } catch (const SolverError&) {
    if (!opts.stop_on_solver_failure) throw;
    rec.solver_failed = true;
  }
  if (opts.record_kappa) {
    rec.kappa_A = spectral_report(sys.A).kappa;
  }
  rec.wall_seconds = now_seconds() - t0;
  return x;
}

}  // namespace

BuiltSpace build_space(const ProblemSetup& setup, ForestMesh mesh) {
  BuiltSpace s{std::move(mesh)};
  if (!s.mesh.is_two_one_balanced()) {
    s.mesh = enforce_two_one_balance(s.mesh).first;
  }
  s.vefs = build_vef_table(s.mesh);
  s.cut = cut_quadrature(s.mesh, setup.levelset, setup.quad_order, setup.max_subdiv);
  s.classes = classify_cells(s.mesh, s.cut, setup.eta0);
  s.dofs = distribute_dofs(s.mesh, s.classes, s.vefs);
  s.hanging = hanging_constraints(s.dofs, s.vefs, s.mesh, s.classes);
  if (setup.space == SpaceKind::Aggregated) {
    s.roots = build_root_map(s.mesh, s.classes, setup.levelset);
    s.dclass = classify_dofs(s.dofs, s.classes, s.hanging);
    s.cs = aggregation_constraints(s.dofs, s.dclass, s.roots, s.hanging, s.mesh,
                                   s.classes);
  } else {
    s.roots.root.assign(s.mesh.n_leaves(), -1);
    s.dclass = classify_dofs(s.dofs, s.classes, s.hanging);
    s.cs = standard_constraints(s.dofs, s.hanging);
  }
  return s;
}

std::vector<bool> mark_cells(const ForestMesh& mesh, const CellClassification& classes,
                             const CutQuadrature& cut, const std::vector<double>& gamma_T,
                             double gamma, const RemeshCriterion& crit) {
  if (int(gamma_T.size()) != mesh.n_leaves()) {
    throw ParameterError("mark_cells: indicator size mismatch");
  }
  std::vector<bool> flags(mesh.n_leaves(), false);
  if (crit.kind == CriterionKind::Uniform) {
    for (int i = 0; i < mesh.n_leaves(); ++i) flags[i] = classes.is_active(i);
    return flags;
  }
  if (crit.kind == CriterionKind::LiBettess) {
    // Estimated optimal cell count M* = gamma^(-d/m) (sum_T e_T^p)^(1/p') with
    // p = d/(m + d/2); uniform target error gamma / sqrt(M*).
    const double m = crit.m, d = crit.d;
    const double p = d / (m + 0.5 * d);
    double sum = 0.0;
    for (int i = 0; i < mesh.n_leaves(); ++i) {
      if (classes.is_active(i)) sum += std::pow(gamma_T[i], p);
    }
    if (sum <= 0.0) return flags;  // all indicators zero: converged
    const double m_star = std::pow(gamma, -d / m) * std::pow(sum, (m + 0.5 * d) / m);
    if (m_star <= 0.0) return flags;
    const double threshold = gamma / std::sqrt(m_star);
    for (int i = 0; i < mesh.n_leaves(); ++i) {
      if (classes.is_active(i) && gamma_T[i] > threshold) flags[i] = true;
    }
    return flags;
  }
  // Onate-Bugeda: uniform error density, threshold scaled by the local
  // interior measure.
  const double omega = cut.domain_measure();
  for (int i = 0; i < mesh.n_leaves(); ++i) {
    if (!classes.is_active(i)) continue;
    const double measure = cut.cells[i].interior_measure;
    const double threshold = gamma * std::sqrt(measure / omega);
    if (gamma_T[i] > threshold) flags[i] = true;
  }
  return flags;
}

AmrState solve_once(const ProblemSetup& setup, ForestMesh mesh, const AmrOptions& opts) {
  AmrState st{build_space(setup, std::move(mesh))};
  SolveRecord rec;
  const auto x = solve_space(setup, st.space, opts, 0.0, rec);
  if (x) {
    std::vector<double> free_vals(x->data(), x->data() + x->size());
    st.solution = st.space.cs.prolongate(free_vals);
    st.error = energy_error(st.space.mesh, st.space.classes, st.space.cut,
                            st.space.dofs, st.solution, setup.solution);
    rec.abs_error = st.error.global;
    rec.rel_error = st.error.relative();
    st.converged = true;
  }
  st.history.push_back(rec);
  return st;
}

AmrState adapt_until(const ProblemSetup& setup, ForestMesh initial_mesh,
                     const RemeshCriterion& crit, double gamma, const AmrOptions& opts) {
  if (!(gamma > 0.0)) throw ParameterError("adapt_until: gamma must be positive");
  AmrState st{build_space(setup, std::move(initial_mesh))};
  for (int iter = 0;; ++iter) {
    SolveRecord rec;
    const auto x = solve_space(setup, st.space, opts, gamma, rec);
    if (!x) {
      st.history.push_back(rec);
      st.converged = false;
      return st;
    }
    std::vector<double> free_vals(x->data(), x->data() + x->size());
    st.solution = st.space.cs.prolongate(free_vals);
    st.error = energy_error(st.space.mesh, st.space.classes, st.space.cut,
                            st.space.dofs, st.solution, setup.solution);
    rec.abs_error = st.error.global;
    rec.rel_error = st.error.relative();
    st.history.push_back(rec);
    st.iterations = iter;

    if (st.error.global <= gamma) {
      st.converged = true;
      return st;
    }
    if (iter >= opts.max_iters) {
      st.converged = false;
      return st;
    }
    const auto flags = mark_cells(st.space.mesh, st.space.classes, st.space.cut,
                                  st.error.per_cell, gamma, crit);
    bool any = false;
    for (bool f : flags) any = any || f;
    if (!any) {
      st.converged = false;  // indicators below threshold but target unmet
      return st;
    }
    ForestMesh next = refine(st.space.mesh, flags).first;
    st.space = build_space(setup, std::move(next));
  }
}

ConvergenceTable convergence_test(const ProblemSetup& setup, ForestMesh initial_mesh,
                                  const RemeshCriterion& crit,
                                  const std::vector<double>& gamma_sequence,
                                  const AmrOptions& opts) {
  for (std::size_t i = 1; i < gamma_sequence.size(); ++i) {
    if (!(gamma_sequence[i] < gamma_sequence[i - 1])) {
      throw ParameterError("convergence_test: gamma sequence must strictly decrease");
    }
  }
  ConvergenceTable table;
  ForestMesh mesh = std::move(initial_mesh);
  if (crit.kind == CriterionKind::Uniform) {
    // One row per uniform refinement level.
    for (int t = 0; t < int(gamma_sequence.size()); ++t) {
      AmrState st = solve_once(setup, mesh, opts);
      SolveRecord rec = st.history.back();
      rec.gamma_target = gamma_sequence[t];
      table.rows.push_back(rec);
      if (opts.on_target) opts.on_target(t, st);
      if (rec.solver_failed) {
        table.completed = false;
        return table;
      }
      std::vector<bool> all(st.space.mesh.n_leaves());
      for (int i = 0; i < st.space.mesh.n_leaves(); ++i) {
        all[i] = st.space.classes.is_active(i);
      }
      mesh = refine(st.space.mesh, all).first;
    }
    return table;
  }
  for (int t = 0; t < int(gamma_sequence.size()); ++t) {
    AmrState st = adapt_until(setup, std::move(mesh), crit, gamma_sequence[t], opts);
    table.rows.push_back(st.history.back());
    if (opts.on_target) opts.on_target(t, st);
    if (st.history.back().solver_failed) {
      table.completed = false;
      return table;
    }
    mesh = st.space.mesh;  // warm start the next target
  }
  return table;
}

double fitted_convergence_slope(const std::vector<SolveRecord>& rows, int points) {
  const int n = int(rows.size());
  const int k = std::min(points, n);
  if (k < 2) throw ParameterError("fitted_convergence_slope: need at least 2 rows");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i = n - k; i < n; ++i) {
    const double x = 0.5 * std::log(double(rows[i].n_dofs));
    const double y = std::log(rows[i].rel_error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

}  // namespace agfem
