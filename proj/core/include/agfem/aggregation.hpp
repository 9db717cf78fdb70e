#pragma once

#include <vector>

#include "agfem/cut_geometry.hpp"
#include "agfem/forest_mesh.hpp"
#include "agfem/level_set.hpp"

namespace agfem {

/// Root cell map: every active cell is attached to exactly one well-posed
/// root cell; well-posed cells are their own roots.
struct RootCellMap {
  // Per leaf: root leaf index, or -1 for exterior cells.
  std::vector<int> root;
  // Per leaf, round the cell was attached in (0 for roots, -1 exterior).
  std::vector<int> round;
  // Per leaf, the winning relative distance at attachment (0 for roots).
  std::vector<double> distance;
  // Per root leaf index: members of its aggregate (including the root).
  std::vector<std::vector<int>> members_of;

  bool is_root(int cell) const { return root[cell] == cell; }
  double max_attach_distance() const;
};

/// Builds the root map by round-based incremental attachment: in each round,
/// every unaggregated ill-posed cell looks at already-aggregated neighbors
/// across facets that intersect the physical domain and attaches to the
/// candidate whose root minimizes the relative vertex distance; ties go to
/// the root with the higher space-filling-curve index.
RootCellMap build_root_map(const ForestMesh& mesh, const CellClassification& classes,
                           const LevelSet& ls);

struct AggregateDiagnostics {
  bool partition_ok = false;     // aggregates partition the active cells
  bool connectivity_ok = false;  // each aggregate is facet-connected
  double max_diameter_ratio = 0.0;  // max over aggregates of diam / root h
  double max_attach_distance = 0.0;
  int max_aggregate_size = 0;
};

AggregateDiagnostics validate_aggregates(const RootCellMap& map, const ForestMesh& mesh,
                                         const CellClassification& classes);

}  // namespace agfem
