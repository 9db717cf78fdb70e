#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <random>

#include "agfem/fe_space.hpp"
#include "support.hpp"

using namespace agfem;
using testing::everything_inside;
using testing::leaf_at;
using testing::dof_at;
using testing::make_classes;

namespace {

const BoxDomain kUnit{{0.0, 0.0}, {1.0, 1.0}};

struct Space {
  ForestMesh mesh;
  VefTable vefs;
  CellClassification classes;
  RootCellMap roots;
  DofTable dofs;
  DofClassification dclass;
  std::vector<Constraint> hanging;
  ConstraintSet cs;
};

Space build(ForestMesh mesh, const CellClassification& classes, const LevelSet& ls) {
  Space s{std::move(mesh)};
  s.classes = classes;
  s.vefs = build_vef_table(s.mesh);
  s.roots = build_root_map(s.mesh, s.classes, ls);
  s.dofs = distribute_dofs(s.mesh, s.classes, s.vefs);
  s.hanging = hanging_constraints(s.dofs, s.vefs, s.mesh, s.classes);
  s.dclass = classify_dofs(s.dofs, s.classes, s.hanging);
  s.cs = aggregation_constraints(s.dofs, s.dclass, s.roots, s.hanging, s.mesh, s.classes);
  return s;
}

std::map<int, double> masters_of(const ConstraintSet& cs, int dof) {
  std::map<int, double> m;
  const Constraint* c = cs.constraint_for(dof);
  REQUIRE(c != nullptr);
  for (const auto& [master, coeff] : c->masters) m[master] = coeff;
  return m;
}

// The mixed-constraint mock: domain [0,4]^2, one refined quadrant, a single
// well-posed fine root cell [1,2]x[0,1] that carries a hanging DOF at (2,1).
Space figure_mock() {
  const BoxDomain box{{0.0, 0.0}, {4.0, 4.0}};
  ForestMesh mesh = make_uniform_mesh(box, 1);
  std::vector<bool> flags{true, false, false, false};
  mesh = refine(mesh, flags).first;
  REQUIRE(mesh.is_two_one_balanced());
  std::vector<CellClass> labels(mesh.n_leaves(), CellClass::IllPosed);
  labels[leaf_at(mesh, 1.0, 0.0)] = CellClass::WellPosed;  // the root
  return build(std::move(mesh), make_classes(labels), everything_inside());
}

}  // namespace

TEST_CASE("DOF distribution") {
  SUBCASE("uniform 2x2 mesh has 9 DOFs") {
    const ForestMesh mesh = make_uniform_mesh(kUnit, 1);
    const VefTable vefs = build_vef_table(mesh);
    const auto classes = make_classes(std::vector<CellClass>(4, CellClass::WellPosed));
    const DofTable dofs = distribute_dofs(mesh, classes, vefs);
    CHECK(dofs.n_dofs == 9);
    // Deterministic SFC-first-touch numbering: DOF 0 is the SW corner of the
    // first leaf.
    CHECK(dofs.coords[0].x == doctest::Approx(0.0));
    CHECK(dofs.coords[0].y == doctest::Approx(0.0));
  }
  SUBCASE("one refined cell adds 5 DOFs") {
    ForestMesh mesh = make_uniform_mesh(kUnit, 1);
    std::vector<bool> flags{true, false, false, false};
    mesh = refine(mesh, flags).first;
    const VefTable vefs = build_vef_table(mesh);
    const auto classes =
        make_classes(std::vector<CellClass>(mesh.n_leaves(), CellClass::WellPosed));
    const DofTable dofs = distribute_dofs(mesh, classes, vefs);
    CHECK(dofs.n_dofs == 14);
  }
  SUBCASE("exterior-only vertices carry no DOF") {
    const ForestMesh mesh = make_uniform_mesh(kUnit, 1);
    const VefTable vefs = build_vef_table(mesh);
    std::vector<CellClass> labels(4, CellClass::Exterior);
    labels[leaf_at(mesh, 0.0, 0.0)] = CellClass::WellPosed;
    labels[leaf_at(mesh, 0.0, 0.5)] = CellClass::WellPosed;
    const DofTable dofs = distribute_dofs(mesh, make_classes(labels), vefs);
    CHECK(dofs.n_dofs == 6);
    CHECK(dof_at(dofs, 1.0, 0.0) == -1);
    CHECK(dof_at(dofs, 1.0, 1.0) == -1);
    CHECK(dof_at(dofs, 0.5, 0.5) >= 0);
  }
}

TEST_CASE("hanging constraints") {
  SUBCASE("uniform mesh has none") {
    const ForestMesh mesh = make_uniform_mesh(kUnit, 2);
    const VefTable vefs = build_vef_table(mesh);
    const auto classes =
        make_classes(std::vector<CellClass>(16, CellClass::WellPosed));
    const DofTable dofs = distribute_dofs(mesh, classes, vefs);
    CHECK(hanging_constraints(dofs, vefs, mesh, classes).empty());
  }
  SUBCASE("midpoint vertex gets (1/2, 1/2) from the owner endpoints") {
    ForestMesh mesh = make_uniform_mesh(kUnit, 1);
    std::vector<bool> flags{true, false, false, false};
    mesh = refine(mesh, flags).first;
    const VefTable vefs = build_vef_table(mesh);
    const auto classes =
        make_classes(std::vector<CellClass>(mesh.n_leaves(), CellClass::WellPosed));
    const DofTable dofs = distribute_dofs(mesh, classes, vefs);
    const auto hc = hanging_constraints(dofs, vefs, mesh, classes);
    REQUIRE(hc.size() == 2);  // one per nonconforming side
    for (const Constraint& c : hc) {
      REQUIRE(c.masters.size() == 2);
      CHECK(c.masters[0].second == doctest::Approx(0.5));
      CHECK(c.masters[1].second == doctest::Approx(0.5));
      // Coefficients are the coarse Q1 shape values at the slave position.
      const Vec2 xs = dofs.coords[c.dof];
      for (const auto& [m, w] : c.masters) {
        // Each master is an endpoint of the owner edge through xs.
        const Vec2 xm = dofs.coords[m];
        CHECK((std::abs(xm.x - xs.x) < 1e-14 || std::abs(xm.y - xs.y) < 1e-14));
      }
    }
  }
  SUBCASE("owner on an exterior cell releases the vertex") {
    ForestMesh mesh = make_uniform_mesh(kUnit, 1);
    std::vector<bool> flags{true, false, false, false};
    mesh = refine(mesh, flags).first;
    const VefTable vefs = build_vef_table(mesh);
    std::vector<CellClass> labels(mesh.n_leaves(), CellClass::WellPosed);
    labels[leaf_at(mesh, 0.5, 0.0)] = CellClass::Exterior;  // SE coarse cell
    const auto classes = make_classes(labels);
    const DofTable dofs = distribute_dofs(mesh, classes, vefs);
    const auto hc = hanging_constraints(dofs, vefs, mesh, classes);
    CHECK(hc.size() == 1);  // only the NW-side hanging vertex remains
  }
}

TEST_CASE("DOF classification") {
  SUBCASE("all cells well-posed") {
    ForestMesh mesh = make_uniform_mesh(kUnit, 1);
    std::vector<bool> flags{true, false, false, false};
    mesh = refine(mesh, flags).first;
    const VefTable vefs = build_vef_table(mesh);
    const auto classes =
        make_classes(std::vector<CellClass>(mesh.n_leaves(), CellClass::WellPosed));
    const DofTable dofs = distribute_dofs(mesh, classes, vefs);
    const auto hc = hanging_constraints(dofs, vefs, mesh, classes);
    const DofClassification dc = classify_dofs(dofs, classes, hc);
    CHECK(dc.count(DofLabel::IllFree) == 0);
    CHECK(dc.count(DofLabel::IllHanging) == 0);
    CHECK(dc.count(DofLabel::WellHanging) == 2);
    CHECK(dc.count(DofLabel::WellFree) == dofs.n_dofs - 2);
  }
  SUBCASE("free DOF surrounded by ill-posed cells masters a well-posed hanging DOF") {
    // NE quadrant refined; only the fine cell [0.75,1]x[0.5,0.75] well-posed.
    ForestMesh mesh = make_uniform_mesh(kUnit, 1);
    std::vector<bool> flags(4, false);
    flags[leaf_at(mesh, 0.5, 0.5)] = true;
    mesh = refine(mesh, flags).first;
    const VefTable vefs = build_vef_table(mesh);
    std::vector<CellClass> labels(mesh.n_leaves(), CellClass::IllPosed);
    labels[leaf_at(mesh, 0.75, 0.5)] = CellClass::WellPosed;
    const auto classes = make_classes(labels);
    const DofTable dofs = distribute_dofs(mesh, classes, vefs);
    const auto hc = hanging_constraints(dofs, vefs, mesh, classes);
    const DofClassification dc = classify_dofs(dofs, classes, hc);

    const int sigma_p = dof_at(dofs, 0.75, 0.5);  // hanging, well-posed support
    REQUIRE(sigma_p >= 0);
    CHECK(dc.label[sigma_p] == DofLabel::WellHanging);
    const int sigma = dof_at(dofs, 0.5, 0.5);  // surrounded by ill-posed cells
    REQUIRE(sigma >= 0);
    CHECK(dc.label[sigma] == DofLabel::WellFree);
    // The other hanging vertex has no well-posed support at all.
    const int sigma_ih = dof_at(dofs, 0.5, 0.75);
    REQUIRE(sigma_ih >= 0);
    CHECK(dc.label[sigma_ih] == DofLabel::IllHanging);
  }
  SUBCASE("free DOF on ill-posed cells mastering nothing is ill-posed") {
    const ForestMesh mesh = make_uniform_mesh(kUnit, 1);
    const VefTable vefs = build_vef_table(mesh);
    std::vector<CellClass> labels(4, CellClass::IllPosed);
    labels[leaf_at(mesh, 0.0, 0.0)] = CellClass::WellPosed;
    const auto classes = make_classes(labels);
    const DofTable dofs = distribute_dofs(mesh, classes, vefs);
    const DofClassification dc = classify_dofs(dofs, classes, {});
    CHECK(dc.label[dof_at(dofs, 1.0, 1.0)] == DofLabel::IllFree);
    CHECK(dc.label[dof_at(dofs, 0.5, 0.5)] == DofLabel::WellFree);
  }
}

TEST_CASE("bilinear extrapolation") {
  const BoxDomain box{{0.0, 0.0}, {4.0, 4.0}};
  const ForestMesh mesh = make_uniform_mesh(box, 2);  // 16 unit cells
  const CellId root = mesh.leaves()[leaf_at(mesh, 0.0, 0.0)];  // [0,1]^2
  const auto vals = q1_values(mesh, root, {2.0, 0.0});
  CHECK(vals[0] == doctest::Approx(-1.0));  // (0,0)
  CHECK(vals[1] == doctest::Approx(2.0));   // (1,0)
  CHECK(vals[2] == doctest::Approx(0.0));   // (0,1)
  CHECK(vals[3] == doctest::Approx(0.0));   // (1,1)
  // Coinciding with a root vertex: nodal interpolation.
  const auto nodal = q1_values(mesh, root, {1.0, 0.0});
  CHECK(nodal[0] == doctest::Approx(0.0));
  CHECK(nodal[1] == doctest::Approx(1.0));
  CHECK(nodal[2] == doctest::Approx(0.0));
  CHECK(nodal[3] == doctest::Approx(0.0));
}

TEST_CASE("aggregation constraints on a conforming strip") {
  // Root [0,1]^2, ill-posed neighbor [1,2]x[0,1], everything else exterior.
  const BoxDomain box{{0.0, 0.0}, {4.0, 4.0}};
  ForestMesh mesh = make_uniform_mesh(box, 2);
  std::vector<CellClass> labels(16, CellClass::Exterior);
  labels[leaf_at(mesh, 0.0, 0.0)] = CellClass::WellPosed;
  labels[leaf_at(mesh, 1.0, 0.0)] = CellClass::IllPosed;
  const Space s = build(std::move(mesh), make_classes(labels), everything_inside());

  const int d20 = dof_at(s.dofs, 2.0, 0.0);
  REQUIRE(d20 >= 0);
  CHECK(s.dclass.label[d20] == DofLabel::IllFree);
  const auto m = masters_of(s.cs, d20);
  CHECK(m.size() == 2);
  CHECK(m.at(dof_at(s.dofs, 0.0, 0.0)) == doctest::Approx(-1.0));
  CHECK(m.at(dof_at(s.dofs, 1.0, 0.0)) == doctest::Approx(2.0));

  const auto m21 = masters_of(s.cs, dof_at(s.dofs, 2.0, 1.0));
  CHECK(m21.at(dof_at(s.dofs, 0.0, 1.0)) == doctest::Approx(-1.0));
  CHECK(m21.at(dof_at(s.dofs, 1.0, 1.0)) == doctest::Approx(2.0));
}

TEST_CASE("mixed two-layer constraints match the symbolic oracle") {
  const Space s = figure_mock();

  // Root [1,2]x[0,1]; hanging DOF at (2,1) owned by edge (2,0)-(2,2).
  const int h21 = dof_at(s.dofs, 2.0, 1.0);
  REQUIRE(h21 >= 0);
  CHECK(s.dclass.label[h21] == DofLabel::WellHanging);
  const auto hm = masters_of(s.cs, h21);
  CHECK(hm.at(dof_at(s.dofs, 2.0, 0.0)) == doctest::Approx(0.5));
  CHECK(hm.at(dof_at(s.dofs, 2.0, 2.0)) == doctest::Approx(0.5));
  CHECK(s.cs.constraint_for(h21)->kind == ConstraintKind::Hanging);

  // (2,2) is well-posed free through Definition (ii): it masters (2,1).
  CHECK(s.dclass.label[dof_at(s.dofs, 2.0, 2.0)] == DofLabel::WellFree);

  // Ill-posed free DOF at (4,2): direct masters (1,0), (2,0), (1,1) and the
  // hanging corner (2,1) substituted. Symbolic substitution by hand:
  //   C^AA = (2, -3, -4, 6) on ((1,0),(2,0),(1,1),(2,1));
  //   6*(2,1) -> 3*(2,0) + 3*(2,2);
  //   (2,0): -3 + 3 = 0 (dropped), leaving (1,0):2, (1,1):-4, (2,2):3.
  {
    const int d = dof_at(s.dofs, 4.0, 2.0);
    REQUIRE(d >= 0);
    CHECK(s.dclass.label[d] == DofLabel::IllFree);
    const auto m = masters_of(s.cs, d);
    CHECK(s.cs.constraint_for(d)->kind == ConstraintKind::Aggregation);
    CHECK(m.size() == 3);
    CHECK(m.at(dof_at(s.dofs, 1.0, 0.0)) == doctest::Approx(2.0));
    CHECK(m.at(dof_at(s.dofs, 1.0, 1.0)) == doctest::Approx(-4.0));
    CHECK(m.at(dof_at(s.dofs, 2.0, 2.0)) == doctest::Approx(3.0));
    CHECK(m.count(dof_at(s.dofs, 2.0, 0.0)) == 0);
  }
  // Ill-posed free DOF at (0,2):
  //   C^AA = (-2, 1, 4, -2); -2*(2,1) -> -1*(2,0) -1*(2,2);
  //   (2,0): 1 - 1 = 0 (dropped): (1,0):-2, (1,1):4, (2,2):-1.
  {
    const auto m = masters_of(s.cs, dof_at(s.dofs, 0.0, 2.0));
    CHECK(m.size() == 3);
    CHECK(m.at(dof_at(s.dofs, 1.0, 0.0)) == doctest::Approx(-2.0));
    CHECK(m.at(dof_at(s.dofs, 1.0, 1.0)) == doctest::Approx(4.0));
    CHECK(m.at(dof_at(s.dofs, 2.0, 2.0)) == doctest::Approx(-1.0));
  }
  // Ill-posed hanging DOF at (1,2): 0.5*(0,2) + 0.5*(2,2) with (0,2)
  // substituted; (2,2) cancels: (1,0):-1, (1,1):2.
  {
    const int d = dof_at(s.dofs, 1.0, 2.0);
    CHECK(s.dclass.label[d] == DofLabel::IllHanging);
    CHECK(s.cs.constraint_for(d)->kind == ConstraintKind::Mixed);
    const auto m = masters_of(s.cs, d);
    CHECK(m.size() == 2);
    CHECK(m.at(dof_at(s.dofs, 1.0, 0.0)) == doctest::Approx(-1.0));
    CHECK(m.at(dof_at(s.dofs, 1.0, 1.0)) == doctest::Approx(2.0));
  }
  // Pure direct case at (4,0).
  {
    const auto m = masters_of(s.cs, dof_at(s.dofs, 4.0, 0.0));
    CHECK(m.size() == 2);
    CHECK(m.at(dof_at(s.dofs, 1.0, 0.0)) == doctest::Approx(-2.0));
    CHECK(m.at(dof_at(s.dofs, 2.0, 0.0)) == doctest::Approx(3.0));
  }

  // Every master of every constraint is free well-posed; partition of unity.
  for (const Constraint& c : s.cs.constraints) {
    double sum = 0.0;
    for (const auto& [m, w] : c.masters) {
      CHECK(s.dclass.label[m] == DofLabel::WellFree);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("prolongation") {
  SUBCASE("identity without constraints") {
    const ForestMesh mesh = make_uniform_mesh(kUnit, 1);
    const auto classes = make_classes(std::vector<CellClass>(4, CellClass::WellPosed));
    const Space s = build(mesh, classes, everything_inside());
    CHECK(s.cs.n_free == 9);
    std::vector<double> v(9);
    for (int i = 0; i < 9; ++i) v[i] = i * 1.25 - 3.0;
    CHECK(s.cs.prolongate(v) == v);
    CHECK_THROWS_AS(s.cs.prolongate(std::vector<double>(5, 0.0)), ParameterError);
  }
  SUBCASE("affine functions are reproduced exactly through both layers") {
    const Space s = figure_mock();
    auto f = [](Vec2 p) { return 2.0 * p.x - p.y + 3.0; };
    std::vector<double> free_vals(s.cs.n_free);
    for (int d = 0; d < s.dofs.n_dofs; ++d) {
      if (s.cs.free_index[d] >= 0) free_vals[s.cs.free_index[d]] = f(s.dofs.coords[d]);
    }
    const std::vector<double> full = s.cs.prolongate(free_vals);
    for (int d = 0; d < s.dofs.n_dofs; ++d) {
      CHECK(full[d] == doctest::Approx(f(s.dofs.coords[d])).epsilon(1e-13));
    }
    // Constant reproduction (partition of unity).
    const std::vector<double> ones_free(s.cs.n_free, 1.0);
    for (double v : s.cs.prolongate(ones_free)) CHECK(v == doctest::Approx(1.0));
  }
}

TEST_CASE("conformity and nesting on randomized geometries") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const ForestMesh mesh = testing::random_refined_mesh(kUnit, 2, 2, 0.3, rng);
    const LevelSet geo = circle_levelset({0.35 + 0.3 * unit(rng), 0.35 + 0.3 * unit(rng)},
                                         0.22 + 0.2 * unit(rng));
    const CellClassification classes = classify_cells(mesh, geo, 0.3, 2, 5);
    if (classes.count(CellClass::WellPosed) == 0) continue;
    Space s;
    try {
      s = build(mesh, classes, geo);
    } catch (const AggregationError&) {
      continue;  // disconnected slivers are legitimate rejections
    }

    // Random free vector, prolongated.
    std::vector<double> free_vals(s.cs.n_free);
    for (double& v : free_vals) v = 2.0 * unit(rng) - 1.0;
    const std::vector<double> u = s.cs.prolongate(free_vals);

    // Nesting: the aggregated function satisfies every hanging constraint.
    for (const Constraint& c : s.hanging) {
      double v = 0.0;
      for (const auto& [m, w] : c.masters) v += w * u[m];
      CHECK(std::abs(u[c.dof] - v) <= 1e-12 * std::max(1.0, std::abs(v)));
    }

    // Trace continuity across hanging facets: compare both sides at samples.
    for (const Constraint& c : s.hanging) {
      // The owner edge spans the two masters' positions.
      const Vec2 a = s.dofs.coords[c.masters.front().first];
      const Vec2 b = s.dofs.coords[c.masters.back().first];
      for (int k = 1; k < 10; ++k) {
        const Vec2 p = a + (b - a) * (k / 10.0);
        // Locate the cells on both sides of the edge.
        const bool vertical = std::abs(a.x - b.x) < 1e-14;
        const double fx = (p.x - kUnit.lo.x) / kUnit.width();
        const double fy = (p.y - kUnit.lo.y) / kUnit.height();
        const auto xi = std::int64_t(std::llround(fx * double(kNormScale)));
        const auto yi = std::int64_t(std::llround(fy * double(kNormScale)));
        const int left = vertical ? s.mesh.find_leaf(xi - 1, yi) : s.mesh.find_leaf(xi, yi - 1);
        const int right = s.mesh.find_leaf(xi, yi);
        if (left < 0 || right < 0) continue;
        if (!s.classes.is_active(left) || !s.classes.is_active(right)) continue;
        double uv[2] = {0.0, 0.0};
        int side = 0;
        for (int cell : {left, right}) {
          const auto n = q1_values(s.mesh, s.mesh.leaves()[cell], p);
          double v = 0.0;
          for (int k2 = 0; k2 < 4; ++k2) v += n[k2] * u[s.dofs.cell_dofs[cell][k2]];
          uv[side++] = v;
        }
        CHECK(std::abs(uv[0] - uv[1]) <= 1e-12 * std::max(1.0, std::abs(uv[0])));
      }
    }
  }
}

TEST_CASE("standard-space constraints keep all free DOFs") {
  const Space s = figure_mock();
  const ConstraintSet std_cs = standard_constraints(s.dofs, s.hanging);
  CHECK(std_cs.n_free == s.dofs.n_dofs - int(s.hanging.size()));
  for (const Constraint& c : std_cs.constraints) {
    CHECK(c.kind == ConstraintKind::Hanging);
  }
  // Affine reproduction holds for the standard space too.
  auto f = [](Vec2 p) { return -p.x + 0.5 * p.y + 1.0; };
  std::vector<double> free_vals(std_cs.n_free);
  for (int d = 0; d < s.dofs.n_dofs; ++d) {
    if (std_cs.free_index[d] >= 0) free_vals[std_cs.free_index[d]] = f(s.dofs.coords[d]);
  }
  const auto full = std_cs.prolongate(free_vals);
  for (int d = 0; d < s.dofs.n_dofs; ++d) {
    CHECK(full[d] == doctest::Approx(f(s.dofs.coords[d])).epsilon(1e-13));
  }
}
