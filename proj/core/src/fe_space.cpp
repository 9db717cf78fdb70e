#include "agfem/fe_space.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace agfem {

namespace {

std::uint64_t lattice_key(std::int64_t x, std::int64_t y) {
  return (std::uint64_t(x) << 31) | std::uint64_t(y);
}

// Exact position of a lattice point along an edge, as a fraction.
double edge_parameter(const std::array<std::int64_t, 2>& p,
                      const std::array<std::int64_t, 2>& a,
                      const std::array<std::int64_t, 2>& b) {
  const std::int64_t dx = b[0] - a[0], dy = b[1] - a[1];
  if (dx != 0) return double(p[0] - a[0]) / double(dx);
  return double(p[1] - a[1]) / double(dy);
}

}  // namespace

int DofClassification::count(DofLabel l) const {
  int n = 0;
  for (DofLabel v : label) n += (v == l);
  return n;
}

double ConstraintSet::max_abs_coefficient() const {
  double m = 0.0;
  for (const Constraint& c : constraints) {
    for (const auto& [dof, coeff] : c.masters) m = std::max(m, std::abs(coeff));
  }
  return m;
}

std::vector<double> ConstraintSet::prolongate(const std::vector<double>& free_values) const {
  if (int(free_values.size()) != n_free) {
    throw ParameterError("prolongate: free vector size mismatch");
  }
  std::vector<double> out(n_dofs, 0.0);
  for (int dof = 0; dof < n_dofs; ++dof) {
    if (free_index[dof] >= 0) {
      out[dof] = free_values[free_index[dof]];
    } else {
      const Constraint& c = constraints[constraint_index[dof]];
      double v = 0.0;
      for (const auto& [m, coeff] : c.masters) v += coeff * free_values[free_index[m]];
      out[dof] = v;
    }
  }
  return out;
}

DofTable distribute_dofs(const ForestMesh& mesh, const CellClassification& classes,
                         const VefTable& vefs) {
  DofTable t;
  t.cell_dofs.assign(mesh.n_leaves(), {-1, -1, -1, -1});
  std::unordered_map<std::uint64_t, int> ids;
  for (int cell = 0; cell < mesh.n_leaves(); ++cell) {
    if (!classes.is_active(cell)) continue;
    for (int k = 0; k < 4; ++k) {
      const int v = vefs.cell_vertices[cell][k];
      const auto& p = vefs.vertices[v];
      auto [it, inserted] = ids.emplace(lattice_key(p[0], p[1]), t.n_dofs);
      if (inserted) {
        t.coords.push_back(mesh.to_physical(p[0], p[1]));
        t.lattice.push_back(p);
        t.support.emplace_back();
        ++t.n_dofs;
      }
      t.cell_dofs[cell][k] = it->second;
      t.support[it->second].push_back(cell);
    }
  }
  return t;
}

std::vector<Constraint> hanging_constraints(const DofTable& dofs, const VefTable& vefs,
                                            const ForestMesh& mesh,
                                            const CellClassification& classes) {
  // Edge id -> owning cell (the unique cell listing the edge as a side).
  // Coarse owner edges are listed by the coarse cell only.
  std::unordered_map<int, int> edge_cell;
  for (int cell = 0; cell < mesh.n_leaves(); ++cell) {
    for (int e : vefs.cell_edges[cell]) {
      auto [it, inserted] = edge_cell.emplace(e, cell);
      if (!inserted && mesh.leaves()[cell].level < mesh.leaves()[it->second].level) {
        it->second = cell;
      }
    }
  }
  std::unordered_map<std::uint64_t, int> dof_at;
  for (int d = 0; d < dofs.n_dofs; ++d) {
    dof_at.emplace(lattice_key(dofs.lattice[d][0], dofs.lattice[d][1]), d);
  }
  auto dof_of_vertex = [&](int v) {
    auto it = dof_at.find(lattice_key(vefs.vertices[v][0], vefs.vertices[v][1]));
    return it == dof_at.end() ? -1 : it->second;
  };

  std::vector<Constraint> out;
  for (const HangingEntry& h : vefs.hanging) {
    if (h.kind != VefKind::Vertex) continue;  // only vertex DOFs exist for Q1
    const int slave = dof_of_vertex(h.hanging);
    if (slave < 0) continue;  // no active cell carries the vertex
    auto owner_it = edge_cell.find(h.owner_edge);
    if (owner_it == edge_cell.end() || !classes.is_active(owner_it->second)) {
      continue;  // owner side is exterior: no conformity requirement
    }
    const auto [v0, v1] = std::pair{vefs.edges[h.owner_edge][0], vefs.edges[h.owner_edge][1]};
    const int m0 = dof_of_vertex(v0);
    const int m1 = dof_of_vertex(v1);
    if (m0 < 0 || m1 < 0) {
      throw InvariantViolation("hanging_constraints: owner edge endpoint is not a DOF");
    }
    if (vefs.vertex_owner_edge[v0] != -1 || vefs.vertex_owner_edge[v1] != -1) {
      throw InvariantViolation(
          "hanging_constraints: owner VEF carries another hanging DOF (mesh is not "
          "2:1 balanced)");
    }
    const double t = edge_parameter(dofs.lattice[slave], vefs.vertices[v0], vefs.vertices[v1]);
    Constraint c;
    c.dof = slave;
    c.kind = ConstraintKind::Hanging;
    if (1.0 - t != 0.0) c.masters.emplace_back(m0, 1.0 - t);
    if (t != 0.0) c.masters.emplace_back(m1, t);
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(),
            [](const Constraint& a, const Constraint& b) { return a.dof < b.dof; });
  return out;
}

DofClassification classify_dofs(const DofTable& dofs, const CellClassification& classes,
                                const std::vector<Constraint>& hanging) {
  const int n = dofs.n_dofs;
  std::vector<char> is_hanging(n, 0);
  for (const Constraint& c : hanging) is_hanging[c.dof] = 1;

  std::vector<char> wp_support(n, 0);
  for (int d = 0; d < n; ++d) {
    for (int cell : dofs.support[d]) {
      if (classes.label[cell] == CellClass::WellPosed) {
        wp_support[d] = 1;
        break;
      }
    }
  }
  // Free DOFs mastering a well-posed hanging DOF are well-posed too.
  std::vector<char> masters_wp_hanging(n, 0);
  for (const Constraint& c : hanging) {
    if (is_hanging[c.dof] && wp_support[c.dof]) {
      for (const auto& [m, coeff] : c.masters) masters_wp_hanging[m] = 1;
    }
  }

  DofClassification out;
  out.label.resize(n);
  for (int d = 0; d < n; ++d) {
    if (is_hanging[d]) {
      out.label[d] = wp_support[d] ? DofLabel::WellHanging : DofLabel::IllHanging;
    } else {
      out.label[d] = (wp_support[d] || masters_wp_hanging[d]) ? DofLabel::WellFree
                                                              : DofLabel::IllFree;
    }
  }
  return out;
}

int assigned_root_cell(const DofTable& dofs, const CellClassification& classes,
                       const RootCellMap& roots, int dof) {
  int assigned = -1;
  for (int cell : dofs.support[dof]) {
    if (classes.label[cell] != CellClass::IllPosed) continue;
    if (assigned == -1 || roots.root[cell] > roots.root[assigned]) assigned = cell;
  }
  if (assigned == -1) {
    throw InvariantViolation(
        "assigned_root_cell: ill-posed free DOF without an ill-posed support cell");
  }
  return roots.root[assigned];
}

ConstraintSet standard_constraints(const DofTable& dofs,
                                   const std::vector<Constraint>& hanging) {
  ConstraintSet cs;
  cs.n_dofs = dofs.n_dofs;
  cs.free_index.assign(dofs.n_dofs, -1);
  cs.constraint_index.assign(dofs.n_dofs, -1);
  for (const Constraint& c : hanging) {
    cs.constraint_index[c.dof] = int(cs.constraints.size());
    cs.constraints.push_back(c);
  }
  for (int d = 0; d < dofs.n_dofs; ++d) {
    if (cs.constraint_index[d] < 0) cs.free_index[d] = cs.n_free++;
  }
  return cs;
}

std::array<double, 4> q1_values(const ForestMesh& mesh, const CellId& cell, Vec2 p) {
  const IntBox b = ForestMesh::cell_box(cell);
  const Vec2 lo = mesh.to_physical(b.x0, b.y0);
  const Vec2 hi = mesh.to_physical(b.x1, b.y1);
  const double xi = (p.x - lo.x) / (hi.x - lo.x);
  const double eta = (p.y - lo.y) / (hi.y - lo.y);
  return {(1.0 - xi) * (1.0 - eta), xi * (1.0 - eta), (1.0 - xi) * eta, xi * eta};
}

std::array<Vec2, 4> q1_gradients(const ForestMesh& mesh, const CellId& cell, Vec2 p) {
  const IntBox b = ForestMesh::cell_box(cell);
  const Vec2 lo = mesh.to_physical(b.x0, b.y0);
  const Vec2 hi = mesh.to_physical(b.x1, b.y1);
  const double hx = hi.x - lo.x, hy = hi.y - lo.y;
  const double xi = (p.x - lo.x) / hx;
  const double eta = (p.y - lo.y) / hy;
  return {Vec2{-(1.0 - eta) / hx, -(1.0 - xi) / hy},
          Vec2{(1.0 - eta) / hx, -xi / hy},
          Vec2{-eta / hx, (1.0 - xi) / hy},
          Vec2{eta / hx, xi / hy}};
}

ConstraintSet aggregation_constraints(const DofTable& dofs,
                                      const DofClassification& classif,
                                      const RootCellMap& roots,
                                      const std::vector<Constraint>& hanging,
                                      const ForestMesh& mesh,
                                      const CellClassification& classes) {
  const int n = dofs.n_dofs;
  ConstraintSet cs;
  cs.n_dofs = n;
  cs.free_index.assign(n, -1);
  cs.constraint_index.assign(n, -1);

  std::vector<const Constraint*> hanging_of(n, nullptr);
  for (const Constraint& c : hanging) hanging_of[c.dof] = &c;

  auto push = [&](Constraint c) {
    cs.constraint_index[c.dof] = int(cs.constraints.size());
    cs.constraints.push_back(std::move(c));
  };

  // Pass 1: well-posed hanging DOFs keep their hanging constraints.
  for (int d = 0; d < n; ++d) {
    if (classif.label[d] == DofLabel::WellHanging) push(*hanging_of[d]);
  }

  // Pass 2: ill-posed free DOFs extrapolate from their root cell's Q1 basis.
  // Root-cell hanging DOFs are substituted through their hanging constraints
  // (accumulating duplicates by summation).
  for (int d = 0; d < n; ++d) {
    if (classif.label[d] != DofLabel::IllFree) continue;
    const int root = assigned_root_cell(dofs, classes, roots, d);
    const auto vals = q1_values(mesh, mesh.leaves()[root], dofs.coords[d]);

    std::map<int, double> acc;
    for (int k = 0; k < 4; ++k) {
      const int master = dofs.cell_dofs[root][k];
      if (vals[k] == 0.0) continue;
      if (classif.label[master] == DofLabel::WellFree) {
        acc[master] += vals[k];
      } else if (classif.label[master] == DofLabel::WellHanging) {
        for (const auto& [mm, cc] : hanging_of[master]->masters) {
          acc[mm] += vals[k] * cc;
        }
      } else {
        throw InvariantViolation(
            "aggregation_constraints: root cell DOF is not well-posed");
      }
    }
    Constraint c;
    c.dof = d;
    c.kind = ConstraintKind::Aggregation;
    for (const auto& [m, v] : acc) {
      if (std::abs(v) >= 1e-12) c.masters.emplace_back(m, v);
    }
    push(std::move(c));
  }

  // Pass 3: ill-posed hanging DOFs go through the hanging layer first, then
  // ill-posed masters are replaced by their aggregation constraints.
  for (int d = 0; d < n; ++d) {
    if (classif.label[d] != DofLabel::IllHanging) continue;
    std::map<int, double> acc;
    for (const auto& [m, coeff] : hanging_of[d]->masters) {
      if (classif.label[m] == DofLabel::WellFree) {
        acc[m] += coeff;
      } else if (classif.label[m] == DofLabel::IllFree) {
        const Constraint& sub = cs.constraints[cs.constraint_index[m]];
        for (const auto& [mm, cc] : sub.masters) acc[mm] += coeff * cc;
      } else {
        // Under 2:1 balance, masters of hanging DOFs are free.
        throw InvariantViolation(
            "aggregation_constraints: hanging DOF constrained by a hanging DOF");
      }
    }
    Constraint c;
    c.dof = d;
    c.kind = ConstraintKind::Mixed;
    for (const auto& [m, v] : acc) {
      if (std::abs(v) >= 1e-12) c.masters.emplace_back(m, v);
    }
    push(std::move(c));
  }

  // Every final master must be a free well-posed DOF (no cycles by
  // construction; checked anyway).
  for (const Constraint& c : cs.constraints) {
    for (const auto& [m, coeff] : c.masters) {
      if (classif.label[m] != DofLabel::WellFree) {
        throw InvariantViolation("aggregation_constraints: master " + std::to_string(m) +
                                 " of DOF " + std::to_string(c.dof) +
                                 " is not a free well-posed DOF");
      }
    }
  }

  for (int d = 0; d < n; ++d) {
    if (classif.label[d] == DofLabel::WellFree) cs.free_index[d] = cs.n_free++;
  }
  return cs;
}

}  // namespace agfem
