#include "agfem/partition_sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

namespace agfem {

namespace {

// All DOFs carried by cells of the given set.
std::vector<int> dofs_in_cells(const GlobalBuild& g, const std::vector<int>& cells) {
  std::vector<int> out;
  for (int c : cells) {
    if (!g.classes.is_active(c)) continue;
    for (int d : g.dofs.cell_dofs[c]) out.push_back(d);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> coarser_neighbors(const GlobalBuild& g, int cell) {
  std::vector<int> out;
  const int level = g.mesh.leaves()[cell].level;
  for (int nb : g.mesh.closure_neighbors(cell)) {
    if (g.mesh.leaves()[nb].level < level) out.push_back(nb);
  }
  return out;
}

}  // namespace

PartitionLayout partition_sfc(const ForestMesh& mesh, int n_subdomains) {
  const int n = mesh.n_leaves();
  if (n_subdomains < 1 || n_subdomains > n) {
    throw ParameterError("partition_sfc: need 1 <= P <= leaf count");
  }
  PartitionLayout layout;
  layout.n_subdomains = n_subdomains;
  layout.owner.assign(n, 0);
  layout.local.resize(n_subdomains);
  layout.true_ghost.resize(n_subdomains);
  layout.remote_ghost.resize(n_subdomains);
  const int base = n / n_subdomains;
  const int extra = n % n_subdomains;
  int cursor = 0;
  for (int s = 0; s < n_subdomains; ++s) {
    const int count = base + (s < extra ? 1 : 0);
    for (int i = 0; i < count; ++i) {
      layout.owner[cursor] = s;
      layout.local[s].push_back(cursor);
      ++cursor;
    }
  }
  return layout;
}

void build_ghost_layers(PartitionLayout& layout, const GlobalBuild& g) {
  const int P = layout.n_subdomains;
  for (int s = 0; s < P; ++s) {
    std::set<int> tg;
    for (int c : layout.local[s]) {
      for (int nb : g.mesh.closure_neighbors(c)) {
        if (layout.owner[nb] != s) tg.insert(nb);
      }
    }
    layout.true_ghost[s].assign(tg.begin(), tg.end());

    std::unordered_set<int> scope(layout.local[s].begin(), layout.local[s].end());
    scope.insert(tg.begin(), tg.end());

    // Roots referenced by constraints of local DOFs: directly by ill-posed
    // free DOFs, and through the hanging layer by ill-posed hanging DOFs.
    std::set<int> relevant_roots;
    const std::vector<int> local_dofs = dofs_in_cells(g, layout.local[s]);
    std::vector<const Constraint*> hanging_of(g.dofs.n_dofs, nullptr);
    for (const Constraint& c : g.hanging) hanging_of[c.dof] = &c;
    for (int d : local_dofs) {
      if (g.dclass.label[d] == DofLabel::IllFree) {
        relevant_roots.insert(assigned_root_cell(g.dofs, g.classes, g.roots, d));
      } else if (g.dclass.label[d] == DofLabel::IllHanging) {
        for (const auto& [m, coeff] : hanging_of[d]->masters) {
          if (g.dclass.label[m] == DofLabel::IllFree) {
            relevant_roots.insert(assigned_root_cell(g.dofs, g.classes, g.roots, m));
          }
        }
      }
    }
    std::set<int> rg;
    for (int root : relevant_roots) {
      if (!scope.count(root)) rg.insert(root);
      for (int nb : coarser_neighbors(g, root)) {
        if (!scope.count(nb)) rg.insert(nb);
      }
    }
    layout.remote_ghost[s].assign(rg.begin(), rg.end());
  }
}

ExchangeResult exchange_wellposed_status(const PartitionLayout& layout,
                                         const GlobalBuild& g) {
  const int P = layout.n_subdomains;
  const int n = g.dofs.n_dofs;

  std::vector<const Constraint*> hanging_of(n, nullptr);
  for (const Constraint& c : g.hanging) hanging_of[c.dof] = &c;

  // Which subdomains see each DOF in their local+TG scope; a DOF's flags
  // travel only among these (they share cells, hence are nearest neighbours).
  std::vector<std::vector<int>> scope_of(P);
  for (int s = 0; s < P; ++s) {
    scope_of[s] = layout.local[s];
    scope_of[s].insert(scope_of[s].end(), layout.true_ghost[s].begin(),
                       layout.true_ghost[s].end());
  }

  std::vector<char> merged_wp(n, 0), merged_masters_wh(n, 0), is_local(n, 0);
  int exchanged = 0;

  for (int s = 0; s < P; ++s) {
    std::unordered_set<int> scope(scope_of[s].begin(), scope_of[s].end());
    const std::vector<int> scope_dofs = dofs_in_cells(g, scope_of[s]);
    const std::vector<int> local_dofs = dofs_in_cells(g, layout.local[s]);
    for (int d : local_dofs) is_local[d] = 1;

    // Provisional well-posed support from the subdomain's own scope.
    std::unordered_set<int> wp_scope;
    for (int d : scope_dofs) {
      for (int cell : g.dofs.support[d]) {
        if (scope.count(cell) && g.classes.label[cell] == CellClass::WellPosed) {
          wp_scope.insert(d);
          break;
        }
      }
    }
    for (int d : scope_dofs) {
      if (wp_scope.count(d)) {
        if (!merged_wp[d] && !std::binary_search(local_dofs.begin(), local_dofs.end(), d)) {
          ++exchanged;
        }
        merged_wp[d] = 1;
      }
    }
    // Provisional "masters a well-posed hanging DOF": the hanging relation is
    // visible when the subdomain holds a fine support cell of the hanging DOF
    // (the coarse owner is then in scope by adjacency).
    for (int d : scope_dofs) {
      const Constraint* c = hanging_of[d];
      if (!c || !wp_scope.count(d)) continue;
      bool fine_side_visible = false;
      for (int cell : g.dofs.support[d]) {
        if (scope.count(cell)) {
          fine_side_visible = true;
          break;
        }
      }
      if (!fine_side_visible) continue;
      for (const auto& [m, coeff] : c->masters) merged_masters_wh[m] = 1;
    }
  }

  ExchangeResult res;
  res.exchanged_flags = exchanged;
  res.merged.resize(n);
  for (int d = 0; d < n; ++d) {
    if (hanging_of[d]) {
      res.merged[d] = merged_wp[d] ? DofLabel::WellHanging : DofLabel::IllHanging;
    } else {
      res.merged[d] = (merged_wp[d] || merged_masters_wh[d]) ? DofLabel::WellFree
                                                             : DofLabel::IllFree;
    }
  }
  for (int d = 0; d < n; ++d) {
    if (is_local[d] && res.merged[d] != g.dclass.label[d]) {
      throw InvariantViolation(
          "exchange_wellposed_status: DOF " + std::to_string(d) +
          " classified differently after one exchange round");
    }
  }
  return res;
}

namespace {

// Per-subdomain constraint rebuild with every access checked against the
// restricted cell view.
struct RestrictedView {
  const GlobalBuild& g;
  std::unordered_set<int> cells;
  int subdomain = 0;

  bool has_cell(int c) const { return cells.count(c) != 0; }

  void require_cell(int c, int dof) const {
    if (!has_cell(c)) {
      throw InvariantViolation("verify_distributed_constraints: DOF " +
                               std::to_string(dof) + " of subdomain " +
                               std::to_string(subdomain) + " needs cell " +
                               std::to_string(c) + " outside local+TG+RG");
    }
  }

  // A DOF is resolvable when some active cell around it is in the view.
  void require_dof(int d, int for_dof) const {
    for (int cell : g.dofs.support[d]) {
      if (has_cell(cell)) return;
    }
    throw InvariantViolation("verify_distributed_constraints: master DOF " +
                             std::to_string(d) + " for DOF " + std::to_string(for_dof) +
                             " of subdomain " + std::to_string(subdomain) +
                             " is not carried by any view cell");
  }
};

std::vector<std::pair<int, double>> rebuild_constraint(const RestrictedView& view,
                                                       int dof,
                                                       const std::vector<const Constraint*>& hanging_of);

// Aggregation extrapolation of an ill-posed free DOF inside the view.
std::vector<std::pair<int, double>> rebuild_aggregation(const RestrictedView& view,
                                                        int dof,
                                                        const std::vector<const Constraint*>& hanging_of) {
  const GlobalBuild& g = view.g;
  // The DOF-to-root assignment is part of the imported root-map restriction;
  // the view must hold the root cell itself and everything its constraint
  // touches.
  const int root = assigned_root_cell(g.dofs, g.classes, g.roots, dof);
  view.require_cell(root, dof);

  const auto vals = q1_values(g.mesh, g.mesh.leaves()[root], g.dofs.coords[dof]);
  std::map<int, double> acc;
  for (int k = 0; k < 4; ++k) {
    const int master = g.dofs.cell_dofs[root][k];
    if (vals[k] == 0.0) continue;
    if (g.dclass.label[master] == DofLabel::WellHanging) {
      // The hanging constraint of a root-cell DOF lives on the coarser cells
      // around the root; they must be in the view.
      view.require_dof(master, dof);
      for (const auto& [mm, cc] : hanging_of[master]->masters) {
        view.require_dof(mm, dof);
        acc[mm] += vals[k] * cc;
      }
    } else {
      view.require_dof(master, dof);
      acc[master] += vals[k];
    }
  }
  std::vector<std::pair<int, double>> out;
  for (const auto& [m, v] : acc) {
    if (std::abs(v) >= 1e-12) out.emplace_back(m, v);
  }
  return out;
}

std::vector<std::pair<int, double>> rebuild_constraint(
    const RestrictedView& view, int dof,
    const std::vector<const Constraint*>& hanging_of) {
  const GlobalBuild& g = view.g;
  switch (g.dclass.label[dof]) {
    case DofLabel::WellHanging: {
      std::vector<std::pair<int, double>> out;
      for (const auto& [m, c] : hanging_of[dof]->masters) {
        view.require_dof(m, dof);
        out.emplace_back(m, c);
      }
      return out;
    }
    case DofLabel::IllFree:
      return rebuild_aggregation(view, dof, hanging_of);
    case DofLabel::IllHanging: {
      std::map<int, double> acc;
      for (const auto& [m, c] : hanging_of[dof]->masters) {
        if (g.dclass.label[m] == DofLabel::WellFree) {
          view.require_dof(m, dof);
          acc[m] += c;
        } else {
          for (const auto& [mm, cc] : rebuild_aggregation(view, m, hanging_of)) {
            acc[mm] += c * cc;
          }
        }
      }
      std::vector<std::pair<int, double>> out;
      for (const auto& [m, v] : acc) {
        if (std::abs(v) >= 1e-12) out.emplace_back(m, v);
      }
      return out;
    }
    default:
      throw InvariantViolation("rebuild_constraint: DOF is not constrained");
  }
}

}  // namespace

DistributedCheckReport verify_distributed_constraints(const PartitionLayout& layout,
                                                      const GlobalBuild& g) {
  DistributedCheckReport report;
  std::vector<const Constraint*> hanging_of(g.dofs.n_dofs, nullptr);
  for (const Constraint& c : g.hanging) hanging_of[c.dof] = &c;

  for (int s = 0; s < layout.n_subdomains; ++s) {
    RestrictedView view{g, {}, s};
    view.cells.insert(layout.local[s].begin(), layout.local[s].end());
    view.cells.insert(layout.true_ghost[s].begin(), layout.true_ghost[s].end());
    view.cells.insert(layout.remote_ghost[s].begin(), layout.remote_ghost[s].end());

    SubdomainReport row;
    row.subdomain = s;
    row.n_local = int(layout.local[s].size());
    row.n_true_ghost = int(layout.true_ghost[s].size());
    row.n_remote_ghost = int(layout.remote_ghost[s].size());

    for (int dof : dofs_in_cells(g, layout.local[s])) {
      if (g.dclass.label[dof] == DofLabel::WellFree) continue;
      const auto rebuilt = rebuild_constraint(view, dof, hanging_of);
      const Constraint* serial = g.cs.constraint_for(dof);
      if (!serial || serial->masters.size() != rebuilt.size()) {
        throw InvariantViolation(
            "verify_distributed_constraints: master count mismatch for DOF " +
            std::to_string(dof) + " on subdomain " + std::to_string(s));
      }
      for (std::size_t k = 0; k < rebuilt.size(); ++k) {
        if (serial->masters[k].first != rebuilt[k].first ||
            std::abs(serial->masters[k].second - rebuilt[k].second) > 1e-14) {
          throw InvariantViolation(
              "verify_distributed_constraints: coefficient mismatch for DOF " +
              std::to_string(dof) + " on subdomain " + std::to_string(s));
        }
      }
      ++row.constraints_checked;
      row.max_masters = std::max(row.max_masters, int(rebuilt.size()));
    }
    report.total_constraints_checked += row.constraints_checked;
    report.max_remote_ghost = std::max(report.max_remote_ghost, row.n_remote_ghost);
    if (row.n_local > 0) {
      report.ghost_overhead_ratio =
          std::max(report.ghost_overhead_ratio,
                   double(row.n_true_ghost + row.n_remote_ghost) / row.n_local);
    }
    report.subdomains.push_back(row);
  }
  return report;
}

}  // namespace agfem
