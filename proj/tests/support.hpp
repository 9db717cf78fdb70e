#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// here must stay independent of the implementation paths it is used to check:
// the dense assembler below uses its own basis evaluation and loops.

#include <cmath>
#include <random>
#include <vector>

#include "agfem/amr.hpp"
#include "agfem/fe_space.hpp"

namespace agfem::testing {

inline LevelSet everything_inside() {
  return LevelSet([](Vec2) { return -1.0; });
}

/// Hand-made classification (bypasses quadrature) for constraint-logic mocks.
inline CellClassification make_classes(const std::vector<CellClass>& labels,
                                       double eta0 = 1.0) {
  CellClassification c;
  c.eta0 = eta0;
  c.label = labels;
  c.eta.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    c.eta[i] = labels[i] == CellClass::WellPosed
                   ? 1.0
                   : (labels[i] == CellClass::IllPosed ? 0.5 * eta0 : 0.0);
  }
  return c;
}

/// Leaf index of the cell whose lower-left corner is at the given physical
/// point (throws if absent).
inline int leaf_at(const ForestMesh& mesh, double x, double y) {
  const double fx = (x - mesh.domain().lo.x) / mesh.domain().width();
  const double fy = (y - mesh.domain().lo.y) / mesh.domain().height();
  const auto xi = std::int64_t(std::llround(fx * double(kNormScale)));
  const auto yi = std::int64_t(std::llround(fy * double(kNormScale)));
  const int leaf = mesh.find_leaf(xi, yi);
  if (leaf < 0) throw std::runtime_error("leaf_at: no leaf");
  return leaf;
}

inline int dof_at(const DofTable& dofs, double x, double y, double tol = 1e-12) {
  for (int d = 0; d < dofs.n_dofs; ++d) {
    if (std::abs(dofs.coords[d].x - x) < tol && std::abs(dofs.coords[d].y - y) < tol) {
      return d;
    }
  }
  return -1;
}

/// Random refinement of `rounds` rounds with per-leaf probability p.
inline ForestMesh random_refined_mesh(const BoxDomain& box, int base_level, int rounds,
                                      double p, std::mt19937_64& rng) {
  ForestMesh mesh = make_uniform_mesh(box, base_level);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int r = 0; r < rounds; ++r) {
    std::vector<bool> flags(mesh.n_leaves());
    for (int i = 0; i < mesh.n_leaves(); ++i) flags[i] = unit(rng) < p;
    mesh = refine(mesh, flags).first;
  }
  return enforce_two_one_balance(mesh).first;
}

/// Independent dense Q1 stiffness assembler for fully interior uniform
/// meshes: no constraints, no cut machinery, plain 2x2 Gauss on each cell.
inline std::vector<std::vector<double>> dense_interior_stiffness(
    const ForestMesh& mesh, const DofTable& dofs) {
  const int n = dofs.n_dofs;
  std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
  const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  for (int cell = 0; cell < mesh.n_leaves(); ++cell) {
    const IntBox b = ForestMesh::cell_box(mesh.leaves()[cell]);
    const Vec2 lo = mesh.to_physical(b.x0, b.y0);
    const Vec2 hi = mesh.to_physical(b.x1, b.y1);
    const double hx = hi.x - lo.x, hy = hi.y - lo.y;
    for (double gx : gp) {
      for (double gy : gp) {
        // gradients of (1-x)(1-y), x(1-y), (1-x)y, xy on the unit square
        const double dN[4][2] = {{-(1 - gy), -(1 - gx)},
                                 {(1 - gy), -gx},
                                 {-gy, (1 - gx)},
                                 {gy, gx}};
        for (int i = 0; i < 4; ++i) {
          for (int j = 0; j < 4; ++j) {
            const double v = (dN[i][0] / hx) * (dN[j][0] / hx) +
                             (dN[i][1] / hy) * (dN[j][1] / hy);
            A[dofs.cell_dofs[cell][i]][dofs.cell_dofs[cell][j]] +=
                0.25 * hx * hy * v;
          }
        }
      }
    }
  }
  return A;
}

}  // namespace agfem::testing
