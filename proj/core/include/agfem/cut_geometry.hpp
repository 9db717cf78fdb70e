#pragma once

#include <vector>

#include "agfem/forest_mesh.hpp"
#include "agfem/level_set.hpp"

namespace agfem {

enum class CellClass : std::uint8_t { WellPosed, IllPosed, Exterior };

/// Per-leaf classification by interior volume fraction eta = |T cap Omega|/|T|
/// against the threshold eta0: well-posed iff eta >= eta0, exterior iff
/// eta == 0, ill-posed otherwise.
struct CellClassification {
  std::vector<CellClass> label;
  std::vector<double> eta;
  double eta0 = 1.0;

  bool is_active(int cell) const { return label[cell] != CellClass::Exterior; }
  int count(CellClass c) const;
};

struct InteriorPoint {
  Vec2 x;
  double w = 0.0;  // area weight
};

struct BoundaryPoint {
  Vec2 x;
  double w = 0.0;  // length weight
  Vec2 n;          // outward unit normal (toward phi > 0)
};

struct CellCutRule {
  std::vector<InteriorPoint> interior;
  std::vector<BoundaryPoint> boundary;
  double interior_measure = 0.0;
};

/// Interior and embedded-boundary quadrature for every leaf.
struct CutQuadrature {
  std::vector<CellCutRule> cells;
  int order = 2;
  int max_subdiv = 5;

  double domain_measure() const;
  double boundary_measure() const;
};

/// Builds cut-cell rules: recursive quadtree bisection of each leaf to depth
/// <= max_subdiv, marching squares on the sub-cell corner signs (edge roots
/// by bisection to 1e-12*h), interface chords refined into short polylines.
/// Uncut (sub-)cells carry plain tensor Gauss rules of the given order.
///
/// The uniform-sign shortcut assumes the level set does not vary faster than
/// distance (true for the signed-distance-style fields built here).
///
/// Throws DegenerateGeometryError when a leaf has all four corner values
/// exactly zero, or when the interior part of a single leaf is disconnected
/// at the resolved scale (the background mesh must be refined).
CutQuadrature cut_quadrature(const ForestMesh& mesh, const LevelSet& ls, int order,
                             int max_subdiv);

/// Classification with eta computed by the same subdivision quadrature.
CellClassification classify_cells(const ForestMesh& mesh, const CutQuadrature& cut,
                                  double eta0);
CellClassification classify_cells(const ForestMesh& mesh, const LevelSet& ls,
                                  double eta0, int order = 2, int max_subdiv = 5);

/// Facet-cut test used by the aggregation candidate rule: true iff the level
/// set is negative at one of 5 equispaced samples on [a, b] or changes sign
/// between consecutive samples.
bool facet_is_cut(const LevelSet& ls, Vec2 a, Vec2 b);

/// Number of worker threads for per-cell quadrature generation, from the
/// AGFEM_THREADS environment variable (default 1). Per-cell output is
/// deterministic regardless of the thread count.
int quadrature_thread_count();

}  // namespace agfem
