#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "agfem/aggregation.hpp"
#include "support.hpp"

using namespace agfem;
using testing::everything_inside;
using testing::leaf_at;
using testing::make_classes;

namespace {
const BoxDomain kUnit{{0.0, 0.0}, {1.0, 1.0}};
}

TEST_CASE("single neighbor attachment has relative distance 2") {
  // 2x2 mesh, left column well-posed, right column ill-posed: each ill-posed
  // cell attaches to its same-size left neighbor; num = 2h, den = h.
  const ForestMesh mesh = make_uniform_mesh(kUnit, 1);
  std::vector<CellClass> labels(4, CellClass::WellPosed);
  labels[leaf_at(mesh, 0.5, 0.0)] = CellClass::IllPosed;
  labels[leaf_at(mesh, 0.5, 0.5)] = CellClass::IllPosed;
  const CellClassification cls = make_classes(labels);
  const RootCellMap map = build_root_map(mesh, cls, everything_inside());

  const int se = leaf_at(mesh, 0.5, 0.0);
  CHECK(map.root[se] == leaf_at(mesh, 0.0, 0.0));
  CHECK(map.distance[se] == doctest::Approx(2.0));
  CHECK(map.round[se] == 1);

  // Well-posed cells map to themselves in round 0.
  const int sw = leaf_at(mesh, 0.0, 0.0);
  CHECK(map.root[sw] == sw);
  CHECK(map.round[sw] == 0);
  CHECK(map.distance[sw] == 0.0);
}

TEST_CASE("closest root wins over a farther root") {
  // 4x1-style strip: roots at both ends of an ill-posed pair; each ill cell
  // attaches to the nearer root.
  const ForestMesh mesh = make_uniform_mesh(kUnit, 2);
  std::vector<CellClass> labels(16, CellClass::Exterior);
  const int r_left = leaf_at(mesh, 0.0, 0.0);
  const int i1 = leaf_at(mesh, 0.25, 0.0);
  const int i2 = leaf_at(mesh, 0.5, 0.0);
  const int r_right = leaf_at(mesh, 0.75, 0.0);
  labels[r_left] = CellClass::WellPosed;
  labels[i1] = CellClass::IllPosed;
  labels[i2] = CellClass::IllPosed;
  labels[r_right] = CellClass::WellPosed;
  const CellClassification cls = make_classes(labels);
  const RootCellMap map = build_root_map(mesh, cls, everything_inside());
  CHECK(map.root[i1] == r_left);
  CHECK(map.root[i2] == r_right);
  CHECK(map.round[i1] == 1);
  CHECK(map.round[i2] == 1);
}

TEST_CASE("relative distance prefers larger roots at equal hops") {
  // An ill-posed fine cell between a fine root and a coarse root: the coarse
  // root has num/den = 3h/2h = 1.5 < 2, so it wins despite equal adjacency.
  ForestMesh mesh = make_uniform_mesh(kUnit, 1);
  std::vector<bool> flags{true, false, true, false};  // refine SW and NW
  mesh = refine(mesh, flags).first;
  REQUIRE(mesh.is_two_one_balanced());
  // Cells now: SW block 4 fine, NW block 4 fine, SE and NE coarse.
  std::vector<CellClass> labels(mesh.n_leaves(), CellClass::Exterior);
  const int ill = leaf_at(mesh, 0.25, 0.25);     // fine cell, upper-right of SW
  const int fine_root = leaf_at(mesh, 0.0, 0.25);  // fine west neighbor
  const int coarse_root = leaf_at(mesh, 0.5, 0.0);  // coarse east neighbor
  labels[ill] = CellClass::IllPosed;
  labels[fine_root] = CellClass::WellPosed;
  labels[coarse_root] = CellClass::WellPosed;
  const CellClassification cls = make_classes(labels);
  const RootCellMap map = build_root_map(mesh, cls, everything_inside());
  CHECK(map.root[ill] == coarse_root);
  CHECK(map.distance[ill] == doctest::Approx(1.5));
}

TEST_CASE("ties go to the root with the higher SFC index") {
  const ForestMesh mesh = make_uniform_mesh(kUnit, 2);
  std::vector<CellClass> labels(16, CellClass::Exterior);
  const int ill = leaf_at(mesh, 0.25, 0.25);
  const int west = leaf_at(mesh, 0.0, 0.25);
  const int south = leaf_at(mesh, 0.25, 0.0);
  labels[ill] = CellClass::IllPosed;
  labels[west] = CellClass::WellPosed;
  labels[south] = CellClass::WellPosed;
  const CellClassification cls = make_classes(labels);
  const RootCellMap map = build_root_map(mesh, cls, everything_inside());
  CHECK(map.root[ill] == std::max(west, south));
}

TEST_CASE("rounds build strict strata along a chain") {
  const ForestMesh mesh = make_uniform_mesh(kUnit, 2);
  std::vector<CellClass> labels(16, CellClass::Exterior);
  const int root = leaf_at(mesh, 0.0, 0.0);
  labels[root] = CellClass::WellPosed;
  const int c1 = leaf_at(mesh, 0.25, 0.0);
  const int c2 = leaf_at(mesh, 0.5, 0.0);
  const int c3 = leaf_at(mesh, 0.75, 0.0);
  labels[c1] = labels[c2] = labels[c3] = CellClass::IllPosed;
  const CellClassification cls = make_classes(labels);
  const RootCellMap map = build_root_map(mesh, cls, everything_inside());
  CHECK(map.round[c1] == 1);
  CHECK(map.round[c2] == 2);
  CHECK(map.round[c3] == 3);
  CHECK(map.root[c1] == root);
  CHECK(map.root[c2] == root);
  CHECK(map.root[c3] == root);
  CHECK(map.members_of[root].size() == 4);
}

TEST_CASE("unreachable ill-posed cell raises an error") {
  const ForestMesh mesh = make_uniform_mesh(kUnit, 2);
  std::vector<CellClass> labels(16, CellClass::Exterior);
  labels[leaf_at(mesh, 0.0, 0.0)] = CellClass::WellPosed;
  labels[leaf_at(mesh, 0.75, 0.75)] = CellClass::IllPosed;  // isolated island
  const CellClassification cls = make_classes(labels);
  CHECK_THROWS_AS(build_root_map(mesh, cls, everything_inside()), AggregationError);

  std::vector<CellClass> no_roots(16, CellClass::IllPosed);
  CHECK_THROWS_AS(build_root_map(mesh, make_classes(no_roots), everything_inside()),
                  AggregationError);
}

TEST_CASE("facets outside the physical domain are not aggregation paths") {
  // Ill-posed cell whose only neighbor facet lies entirely in phi > 0.
  const ForestMesh mesh = make_uniform_mesh(kUnit, 1);
  std::vector<CellClass> labels(4, CellClass::Exterior);
  const int root = leaf_at(mesh, 0.0, 0.0);
  const int ill = leaf_at(mesh, 0.5, 0.0);
  labels[root] = CellClass::WellPosed;
  labels[ill] = CellClass::IllPosed;
  // Negative only in a bubble inside each cell, positive on the shared facet.
  const LevelSet bubbles([](Vec2 p) {
    const double d1 = (p - Vec2{0.25, 0.25}).norm() - 0.15;
    const double d2 = (p - Vec2{0.75, 0.25}).norm() - 0.05;
    return std::min(d1, d2);
  });
  CHECK_THROWS_AS(build_root_map(mesh, make_classes(labels), bubbles),
                  AggregationError);
}

TEST_CASE("aggregate diagnostics") {
  SUBCASE("no cut cells means singleton aggregates") {
    const ForestMesh mesh = make_uniform_mesh(kUnit, 2);
    const std::vector<CellClass> labels(16, CellClass::WellPosed);
    const CellClassification cls = make_classes(labels);
    const RootCellMap map = build_root_map(mesh, cls, everything_inside());
    const AggregateDiagnostics d = validate_aggregates(map, mesh, cls);
    CHECK(d.partition_ok);
    CHECK(d.connectivity_ok);
    CHECK(d.max_aggregate_size == 1);
    CHECK(d.max_diameter_ratio == doctest::Approx(1.0));
    CHECK(d.max_attach_distance == 0.0);
  }
  SUBCASE("thin sliver along a mesh line gives depth-1 aggregates") {
    const ForestMesh mesh = make_uniform_mesh(kUnit, 2);
    const LevelSet half([](Vec2 p) { return p.x - (0.5 + 1e-6); });
    const CellClassification cls = classify_cells(mesh, half, 0.25, 2, 6);
    // Column x in [0.5, 0.75): eta = 4e-6, ill-posed. Beyond: exterior.
    const RootCellMap map = build_root_map(mesh, cls, half);
    for (int i = 0; i < mesh.n_leaves(); ++i) {
      if (cls.label[i] != CellClass::IllPosed) continue;
      CHECK(map.round[i] == 1);
      CHECK(map.distance[i] == doctest::Approx(2.0));
      const IntBox mine = ForestMesh::cell_box(mesh.leaves()[i]);
      const IntBox root = ForestMesh::cell_box(mesh.leaves()[map.root[i]]);
      CHECK(root.x1 == mine.x0);  // attached to the west interior neighbor
      CHECK(root.y0 == mine.y0);
    }
    const AggregateDiagnostics d = validate_aggregates(map, mesh, cls);
    CHECK(d.partition_ok);
    CHECK(d.connectivity_ok);
    CHECK(d.max_aggregate_size == 2);
  }
  SUBCASE("pacman rotations keep the aggregate ratio bounded") {
    const BoxDomain sym{{-1.0, -1.0}, {1.0, 1.0}};
    const ForestMesh mesh = make_uniform_mesh(sym, 4);
    double max_ratio = 0.0, max_dist = 0.0;
    for (int k = 0; k < 8; ++k) {
      const LevelSet pac = pacman_levelset(M_PI / 2.0, 0.8).rotated(k * 0.17);
      const CellClassification cls = classify_cells(mesh, pac, 0.25, 2, 5);
      const RootCellMap map = build_root_map(mesh, cls, pac);
      const AggregateDiagnostics d = validate_aggregates(map, mesh, cls);
      CHECK(d.partition_ok);
      CHECK(d.connectivity_ok);
      max_ratio = std::max(max_ratio, d.max_diameter_ratio);
      max_dist = std::max(max_dist, d.max_attach_distance);
    }
    CHECK(max_ratio < 6.0);  // a few cells per aggregate at eta0 = 0.25
    CHECK(max_dist < 6.0);
  }
}

TEST_CASE("determinism of the root map") {
  std::mt19937_64 rng(7);
  const ForestMesh mesh = testing::random_refined_mesh(kUnit, 3, 1, 0.3, rng);
  const LevelSet circ = circle_levelset({0.47, 0.53}, 0.36);
  const CellClassification cls = classify_cells(mesh, circ, 0.3, 2, 5);
  const RootCellMap a = build_root_map(mesh, cls, circ);
  const RootCellMap b = build_root_map(mesh, cls, circ);
  CHECK(a.root == b.root);
  CHECK(a.round == b.round);
}
