#include "agfem/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <unordered_map>

namespace agfem {

namespace {

// Relative vertex distance of Definition "closest root": max inf-norm
// distance between vertices of T and vertices of the candidate's root,
// normalized by the root's own vertex spread (its side length).
double relative_distance(const ForestMesh& mesh, int cell, int root) {
  const IntBox cb = ForestMesh::cell_box(mesh.leaves()[cell]);
  const IntBox rb = ForestMesh::cell_box(mesh.leaves()[root]);
  const Vec2 c0 = mesh.to_physical(cb.x0, cb.y0);
  const Vec2 c1 = mesh.to_physical(cb.x1, cb.y1);
  const Vec2 r0 = mesh.to_physical(rb.x0, rb.y0);
  const Vec2 r1 = mesh.to_physical(rb.x1, rb.y1);
  double num = 0.0;
  for (double cx : {c0.x, c1.x}) {
    for (double cy : {c0.y, c1.y}) {
      for (double rx : {r0.x, r1.x}) {
        for (double ry : {r0.y, r1.y}) {
          num = std::max(num, std::max(std::abs(cx - rx), std::abs(cy - ry)));
        }
      }
    }
  }
  const double den = std::max(r1.x - r0.x, r1.y - r0.y);
  return num / den;
}

}  // namespace

double RootCellMap::max_attach_distance() const {
  double m = 0.0;
  for (double d : distance) m = std::max(m, d);
  return m;
}

RootCellMap build_root_map(const ForestMesh& mesh, const CellClassification& classes,
                           const LevelSet& ls) {
  const int n = mesh.n_leaves();
  RootCellMap out;
  out.root.assign(n, -1);
  out.round.assign(n, -1);
  out.distance.assign(n, 0.0);

  int n_unaggregated = 0;
  for (int i = 0; i < n; ++i) {
    if (classes.label[i] == CellClass::WellPosed) {
      out.root[i] = i;
      out.round[i] = 0;
    } else if (classes.label[i] == CellClass::IllPosed) {
      ++n_unaggregated;
    }
  }
  if (n_unaggregated > 0 && classes.count(CellClass::WellPosed) == 0) {
    throw AggregationError("build_root_map: no well-posed cells to aggregate to");
  }

  // Facet adjacency restricted to facets that intersect the physical domain.
  std::vector<std::vector<int>> cut_neighbors(n);
  for (int i = 0; i < n; ++i) {
    if (classes.label[i] != CellClass::IllPosed) continue;
    for (const FacetNeighbor& fn : mesh.facet_neighbors(i)) {
      if (!classes.is_active(fn.neighbor)) continue;
      // Shared facet endpoints; the span is along y for x-sides and along x
      // for y-sides.
      const IntBox b = ForestMesh::cell_box(mesh.leaves()[i]);
      Vec2 a, bp;
      if (fn.side < 2) {
        const std::int64_t x = (fn.side == 0) ? b.x0 : b.x1;
        a = mesh.to_physical(x, fn.span_lo);
        bp = mesh.to_physical(x, fn.span_hi);
      } else {
        const std::int64_t y = (fn.side == 2) ? b.y0 : b.y1;
        a = mesh.to_physical(fn.span_lo, y);
        bp = mesh.to_physical(fn.span_hi, y);
      }
      if (facet_is_cut(ls, a, bp)) cut_neighbors[i].push_back(fn.neighbor);
    }
  }

  int round = 0;
  while (n_unaggregated > 0) {
    ++round;
    // Candidates are frozen at round start: strict strata make the result
    // independent of traversal order.
    struct Attach {
      int cell, root;
      double dist;
    };
    std::vector<Attach> attach;
    for (int i = 0; i < n; ++i) {
      if (classes.label[i] != CellClass::IllPosed || out.root[i] != -1) continue;
      int best_root = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int nb : cut_neighbors[i]) {
        if (out.root[nb] == -1 || out.round[nb] >= round) continue;
        const int r = out.root[nb];
        const double d = relative_distance(mesh, i, r);
        if (d < best || (d == best && r > best_root)) {
          best = d;
          best_root = r;
        }
      }
      if (best_root != -1) attach.push_back({i, best_root, best});
    }
    if (attach.empty()) {
      for (int i = 0; i < n; ++i) {
        if (classes.label[i] == CellClass::IllPosed && out.root[i] == -1) {
          throw AggregationError("build_root_map: ill-posed cell " + std::to_string(i) +
                                 " is not facet-connected to any aggregate");
        }
      }
    }
    for (const auto& a : attach) {
      out.root[a.cell] = a.root;
      out.round[a.cell] = round;
      out.distance[a.cell] = a.dist;
      --n_unaggregated;
    }
  }

  out.members_of.assign(n, {});
  for (int i = 0; i < n; ++i) {
    if (out.root[i] >= 0) out.members_of[out.root[i]].push_back(i);
  }
  return out;
}

AggregateDiagnostics validate_aggregates(const RootCellMap& map, const ForestMesh& mesh,
                                         const CellClassification& classes) {
  AggregateDiagnostics d;
  d.max_attach_distance = map.max_attach_distance();

  // Partition: every active cell has a root, the root is well-posed and its
  // own root; no exterior cell is mapped.
  d.partition_ok = true;
  for (int i = 0; i < mesh.n_leaves(); ++i) {
    const bool active = classes.is_active(i);
    if (active != (map.root[i] >= 0)) d.partition_ok = false;
    if (map.root[i] >= 0) {
      if (classes.label[map.root[i]] != CellClass::WellPosed) d.partition_ok = false;
      if (map.root[map.root[i]] != map.root[i]) d.partition_ok = false;
      if (classes.label[i] == CellClass::WellPosed && map.root[i] != i) {
        d.partition_ok = false;
      }
    }
  }

  // Connectivity within each aggregate through facet adjacency, and the
  // diameter-to-root-size ratio.
  d.connectivity_ok = true;
  for (int r = 0; r < mesh.n_leaves(); ++r) {
    const auto& members = map.members_of[r];
    if (members.empty()) continue;
    d.max_aggregate_size = std::max(d.max_aggregate_size, int(members.size()));
    if (members.size() > 1) {
      std::unordered_map<int, char> seen;
      for (int m : members) seen.emplace(m, 0);
      std::deque<int> queue{r};
      seen[r] = 1;
      int reached = 0;
      while (!queue.empty()) {
        const int c = queue.front();
        queue.pop_front();
        ++reached;
        for (const FacetNeighbor& fn : mesh.facet_neighbors(c)) {
          auto it = seen.find(fn.neighbor);
          if (it != seen.end() && !it->second) {
            it->second = 1;
            queue.push_back(fn.neighbor);
          }
        }
      }
      if (reached != int(members.size())) d.connectivity_ok = false;
    }

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (int m : members) {
      const IntBox b = ForestMesh::cell_box(mesh.leaves()[m]);
      const Vec2 lo = mesh.to_physical(b.x0, b.y0);
      const Vec2 hi = mesh.to_physical(b.x1, b.y1);
      xmin = std::min(xmin, lo.x);
      ymin = std::min(ymin, lo.y);
      xmax = std::max(xmax, hi.x);
      ymax = std::max(ymax, hi.y);
    }
    const double diam = std::max(xmax - xmin, ymax - ymin);
    d.max_diameter_ratio =
        std::max(d.max_diameter_ratio, diam / mesh.cell_size(mesh.leaves()[r]));
  }
  return d;
}

}  // namespace agfem
