#pragma once

#include <array>
#include <vector>

#include "agfem/aggregation.hpp"
#include "agfem/cut_geometry.hpp"
#include "agfem/forest_mesh.hpp"

namespace agfem {

/// Global Q1 DOF numbering over the active mesh: one DOF per distinct active
/// vertex position, glued through exact lattice coordinates.
struct DofTable {
  int n_dofs = 0;
  // Per active-cell slot (same indexing as mesh leaves; exterior cells hold
  // {-1,-1,-1,-1}) local corners (SW, SE, NW, NE) -> global DOF.
  std::vector<std::array<int, 4>> cell_dofs;
  std::vector<Vec2> coords;                       // per DOF
  std::vector<std::array<std::int64_t, 2>> lattice;  // per DOF, exact position
  std::vector<std::vector<int>> support;          // per DOF: active cells around
};

enum class DofLabel : std::uint8_t {
  WellFree,     // free with well-posed support, or mastering a well-posed hanging DOF
  WellHanging,  // hanging with well-posed support
  IllFree,
  IllHanging,
};

struct DofClassification {
  std::vector<DofLabel> label;

  bool is_free(int dof) const {
    return label[dof] == DofLabel::WellFree || label[dof] == DofLabel::IllFree;
  }
  bool is_constrained(int dof) const { return label[dof] != DofLabel::WellFree; }
  int count(DofLabel l) const;
};

enum class ConstraintKind : std::uint8_t { Hanging, Aggregation, Mixed };

struct Constraint {
  int dof = -1;
  ConstraintKind kind = ConstraintKind::Hanging;
  std::vector<std::pair<int, double>> masters;  // (global dof, coefficient)
};

/// Linear multipoint constraints mapping free well-posed DOFs to all DOFs.
struct ConstraintSet {
  int n_dofs = 0;
  int n_free = 0;
  std::vector<int> free_index;        // dof -> reduced index, -1 if constrained
  std::vector<int> constraint_index;  // dof -> constraint slot, -1 if free
  std::vector<Constraint> constraints;

  const Constraint* constraint_for(int dof) const {
    return constraint_index[dof] < 0 ? nullptr : &constraints[constraint_index[dof]];
  }
  double max_abs_coefficient() const;

  /// Fills constrained entries from free values; free entries are copied.
  std::vector<double> prolongate(const std::vector<double>& free_values) const;
};

/// Deterministic DOF distribution in space-filling-curve order.
DofTable distribute_dofs(const ForestMesh& mesh, const CellClassification& classes,
                         const VefTable& vefs);

/// Hanging-vertex constraints: masters are the owner-edge endpoint DOFs with
/// coarse Q1 shape values as coefficients (1/2, 1/2 at midpoints). Returned
/// as a ConstraintSet containing only hanging constraints; classification-
/// dependent reduction data (free_index) is left unset.
std::vector<Constraint> hanging_constraints(const DofTable& dofs, const VefTable& vefs,
                                            const ForestMesh& mesh,
                                            const CellClassification& classes);

/// Well/ill-posed x free/hanging classification. A free DOF is well-posed if
/// it has support on a well-posed cell or masters a well-posed hanging DOF.
DofClassification classify_dofs(const DofTable& dofs,
                                const CellClassification& classes,
                                const std::vector<Constraint>& hanging);

/// Unified constraint set: keeps hanging constraints of well-posed hanging
/// DOFs, extrapolates ill-posed free DOFs from their root cell's Q1 basis
/// (substituting hanging root DOFs), and rewrites ill-posed hanging DOFs
/// through both layers. All final masters are free well-posed DOFs.
ConstraintSet aggregation_constraints(const DofTable& dofs,
                                      const DofClassification& classif,
                                      const RootCellMap& roots,
                                      const std::vector<Constraint>& hanging,
                                      const ForestMesh& mesh,
                                      const CellClassification& classes);

/// Root cell an ill-posed free DOF extrapolates from: the root of the
/// surrounding ill-posed cell whose root has the highest space-filling-curve
/// index. Shared by the serial constraint build and the per-subdomain rebuild.
int assigned_root_cell(const DofTable& dofs, const CellClassification& classes,
                       const RootCellMap& roots, int dof);

/// Constraint set of the standard conforming space: hanging constraints only,
/// every non-hanging DOF free (no aggregation).
ConstraintSet standard_constraints(const DofTable& dofs,
                                   const std::vector<Constraint>& hanging);

/// Bilinear basis on a cell: values and gradients of the 4 corner functions
/// at point p; extrapolates smoothly outside the cell.
std::array<double, 4> q1_values(const ForestMesh& mesh, const CellId& cell, Vec2 p);
std::array<Vec2, 4> q1_gradients(const ForestMesh& mesh, const CellId& cell, Vec2 p);

}  // namespace agfem
