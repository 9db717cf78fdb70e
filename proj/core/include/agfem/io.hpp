#pragma once

#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "agfem/aggregation.hpp"
#include "agfem/amr.hpp"
#include "agfem/cut_geometry.hpp"
#include "agfem/fe_space.hpp"

namespace agfem {

/// Legacy-format VTK unstructured grid of the leaf cells with per-cell
/// integer fields "level", "class" (0 well-posed, 1 ill-posed, 2 exterior)
/// and "aggregate_root" (-1 outside), plus optional per-vertex point data.
void write_vtk_mesh(const std::string& path, const ForestMesh& mesh,
                    const CellClassification& classes, const RootCellMap& roots,
                    const std::vector<double>* point_data = nullptr,
                    const DofTable* dofs = nullptr);

/// Quadrature dump: cell, x, y, weight, kind (interior|boundary), nx, ny.
void write_quadrature_csv(const std::string& path, const CutQuadrature& cut);

/// Constraint dump: slave, kind (H|A|HA), master, coefficient.
void write_constraints_csv(const std::string& path, const ConstraintSet& cs);

/// Matrix Market coordinate format (general symmetric written in full).
void write_matrix_market(const std::string& path, const Eigen::SparseMatrix<double>& A);

/// Per-DOF solution values: dof, x, y, value.
void write_solution_csv(const std::string& path, const DofTable& dofs,
                        const std::vector<double>& values);

/// Convergence table in the experiment CSV layout. The header carries a
/// timestamp line followed by a key=value metadata line.
void write_convergence_csv(const std::string& path, const std::string& metadata,
                           const std::vector<SolveRecord>& rows);

}  // namespace agfem
