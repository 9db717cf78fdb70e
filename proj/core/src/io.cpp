#include "agfem/io.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>

namespace agfem {

namespace {

std::ofstream open_or_throw(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ParameterError("cannot open output file: " + path);
  f << std::setprecision(17);
  return f;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
  return buf;
}

}  // namespace

void write_vtk_mesh(const std::string& path, const ForestMesh& mesh,
                    const CellClassification& classes, const RootCellMap& roots,
                    const std::vector<double>* point_data, const DofTable* dofs) {
  auto f = open_or_throw(path);
  const int n = mesh.n_leaves();
  f << "# vtk DataFile Version 3.0\n"
    << "quadtree mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  f << "POINTS " << 4 * n << " double\n";
  for (int i = 0; i < n; ++i) {
    const IntBox b = ForestMesh::cell_box(mesh.leaves()[i]);
    for (const auto& [x, y] : {std::pair{b.x0, b.y0}, {b.x1, b.y0}, {b.x1, b.y1},
                               {b.x0, b.y1}}) {
      const Vec2 p = mesh.to_physical(x, y);
      f << p.x << ' ' << p.y << " 0\n";
    }
  }
  f << "CELLS " << n << ' ' << 5 * n << '\n';
  for (int i = 0; i < n; ++i) {
    f << "4 " << 4 * i << ' ' << 4 * i + 1 << ' ' << 4 * i + 2 << ' ' << 4 * i + 3
      << '\n';
  }
  f << "CELL_TYPES " << n << '\n';
  for (int i = 0; i < n; ++i) f << "9\n";  // VTK_QUAD
  f << "CELL_DATA " << n << '\n';
  f << "SCALARS level int 1\nLOOKUP_TABLE default\n";
  for (int i = 0; i < n; ++i) f << mesh.leaves()[i].level << '\n';
  f << "SCALARS class int 1\nLOOKUP_TABLE default\n";
  for (int i = 0; i < n; ++i) f << int(classes.label[i]) << '\n';
  f << "SCALARS aggregate_root int 1\nLOOKUP_TABLE default\n";
  for (int i = 0; i < n; ++i) {
    f << (roots.root.empty() ? -1 : roots.root[i]) << '\n';
  }
  if (point_data && dofs) {
    f << "POINT_DATA " << 4 * n << '\n';
    f << "SCALARS solution double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < n; ++i) {
      for (int k : {0, 1, 3, 2}) {  // corner order back to VTK quad order
        const int dof = dofs->cell_dofs[i][k];
        f << (dof >= 0 ? (*point_data)[dof] : 0.0) << '\n';
      }
    }
  }
}

void write_quadrature_csv(const std::string& path, const CutQuadrature& cut) {
  auto f = open_or_throw(path);
  f << "cell,x,y,weight,kind,nx,ny\n";
  for (std::size_t c = 0; c < cut.cells.size(); ++c) {
    for (const auto& q : cut.cells[c].interior) {
      f << c << ',' << q.x.x << ',' << q.x.y << ',' << q.w << ",interior,0,0\n";
    }
    for (const auto& q : cut.cells[c].boundary) {
      f << c << ',' << q.x.x << ',' << q.x.y << ',' << q.w << ",boundary," << q.n.x
        << ',' << q.n.y << '\n';
    }
  }
}

void write_constraints_csv(const std::string& path, const ConstraintSet& cs) {
  auto f = open_or_throw(path);
  f << "slave,kind,master,coefficient\n";
  for (const Constraint& c : cs.constraints) {
    const char* kind = c.kind == ConstraintKind::Hanging
                           ? "H"
                           : (c.kind == ConstraintKind::Aggregation ? "A" : "HA");
    for (const auto& [m, v] : c.masters) {
      f << c.dof << ',' << kind << ',' << m << ',' << v << '\n';
    }
  }
}

void write_matrix_market(const std::string& path, const Eigen::SparseMatrix<double>& A) {
  auto f = open_or_throw(path);
  f << "%%MatrixMarket matrix coordinate real general\n";
  f << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
  for (int k = 0; k < A.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
      f << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
}

void write_solution_csv(const std::string& path, const DofTable& dofs,
                        const std::vector<double>& values) {
  auto f = open_or_throw(path);
  f << "dof,x,y,value\n";
  for (int d = 0; d < dofs.n_dofs; ++d) {
    f << d << ',' << dofs.coords[d].x << ',' << dofs.coords[d].y << ',' << values[d]
      << '\n';
  }
}

void write_convergence_csv(const std::string& path, const std::string& metadata,
                           const std::vector<SolveRecord>& rows) {
  auto f = open_or_throw(path);
  f << "# timestamp=" << timestamp() << '\n';
  f << "# " << metadata << '\n';
  f << "target,rel_energy_error,n_dofs,n_cells,cg_iters,kappa_A,wall_seconds\n";
  for (const SolveRecord& r : rows) {
    f << r.gamma_target << ',' << r.rel_error << ',' << r.n_dofs << ',' << r.n_cells
      << ',' << r.cg_iterations << ',' << r.kappa_A << ',' << r.wall_seconds << '\n';
  }
}

}  // namespace agfem
