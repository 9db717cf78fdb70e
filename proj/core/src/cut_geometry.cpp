#include "agfem/cut_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace agfem {

namespace {

// ---- 1D Gauss-Legendre rules on [0,1], 1..5 points ----
struct Rule1d {
  const double* t;
  const double* w;
  int n;
};

const double g1_t[] = {0.5};
const double g1_w[] = {1.0};
const double g2_t[] = {0.21132486540518711775, 0.78867513459481288225};
const double g2_w[] = {0.5, 0.5};
const double g3_t[] = {0.11270166537925831148, 0.5, 0.88729833462074168852};
const double g3_w[] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
const double g4_t[] = {0.06943184420297371239, 0.33000947820757186760,
                       0.66999052179242813240, 0.93056815579702628761};
const double g4_w[] = {0.17392742256872692869, 0.32607257743127307131,
                       0.32607257743127307131, 0.17392742256872692869};
const double g5_t[] = {0.04691007703066800360, 0.23076534494715845448, 0.5,
                       0.76923465505284154552, 0.95308992296933199640};
const double g5_w[] = {0.11846344252809454376, 0.23931433524968323402,
                       0.28444444444444444444, 0.23931433524968323402,
                       0.11846344252809454376};

Rule1d gauss1d(int order) {
  switch (order) {
    case 1: return {g1_t, g1_w, 1};
    case 2: return {g2_t, g2_w, 2};
    case 3: return {g3_t, g3_w, 3};
    case 4: return {g4_t, g4_w, 4};
    default: return {g5_t, g5_w, 5};
  }
}

// ---- symmetric triangle rules (positive weights), barycentric ----
struct TriPoint {
  double a, b, w;  // point (a, b) in the reference triangle, weight rel. area
};

const TriPoint tri_d1[] = {{1.0 / 3.0, 1.0 / 3.0, 1.0}};
const TriPoint tri_d2[] = {{2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0},
                           {1.0 / 6.0, 2.0 / 3.0, 1.0 / 3.0},
                           {1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0}};
const TriPoint tri_d4[] = {
    {0.108103018168070, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.108103018168070, 0.223381589678011},
    {0.445948490915965, 0.445948490915965, 0.223381589678011},
    {0.816847572980459, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.816847572980459, 0.109951743655322},
    {0.091576213509771, 0.091576213509771, 0.109951743655322}};
const TriPoint tri_d5[] = {
    {1.0 / 3.0, 1.0 / 3.0, 0.225},
    {0.059715871789770, 0.470142064105115, 0.132394152788506},
    {0.470142064105115, 0.059715871789770, 0.132394152788506},
    {0.470142064105115, 0.470142064105115, 0.132394152788506},
    {0.797426985353087, 0.101286507323456, 0.125939180544827},
    {0.101286507323456, 0.797426985353087, 0.125939180544827},
    {0.101286507323456, 0.101286507323456, 0.125939180544827}};

std::pair<const TriPoint*, int> tri_rule(int order) {
  switch (order) {
    case 1: return {tri_d1, 1};
    case 2: return {tri_d2, 3};
    case 3: return {tri_d4, 6};
    default: return {tri_d5, 7};
  }
}

struct PolyVertex {
  Vec2 x;
  bool on_curve = false;
};

// Interval of region boundary lying on a sub-box side line; used by the
// per-cell connectedness check.
struct SideInterval {
  int axis = 0;  // 0: vertical line x = coord, 1: horizontal line y = coord
  double coord = 0.0;
  double lo = 0.0, hi = 0.0;
  int poly = 0;
};

struct CellBuildState {
  const LevelSet* ls = nullptr;
  double h_cell = 1.0;  // background cell size; sets nudge/bisection scales
  int order = 2;
  int max_subdiv = 5;
  CellCutRule rule;
  std::vector<SideInterval> intervals;
  int n_polys = 0;
};

double nudged(const LevelSet& ls, Vec2 p, double h) {
  const double v = ls(p);
  // Deterministic removal of measure-zero vertex hits.
  return std::abs(v) < 1e-14 * h ? 1e-14 * h : v;
}

Vec2 bisect_edge(const LevelSet& ls, Vec2 a, Vec2 b, double fa, double h) {
  double t0 = 0.0, t1 = 1.0;
  const double len = (b - a).norm();
  const int iters =
      std::max(20, int(std::ceil(std::log2(std::max(2.0, len / (1e-12 * h)))))) + 2;
  for (int i = 0; i < iters; ++i) {
    const double tm = 0.5 * (t0 + t1);
    const double fm = nudged(ls, a + (b - a) * tm, h);
    ((fm < 0.0) == (fa < 0.0) ? t0 : t1) = tm;
  }
  return a + (b - a) * (0.5 * (t0 + t1));
}

void register_box_intervals(CellBuildState& st, int poly_id, Vec2 lo, double sx,
                            double sy) {
  st.intervals.push_back({0, lo.x, lo.y, lo.y + sy, poly_id});
  st.intervals.push_back({0, lo.x + sx, lo.y, lo.y + sy, poly_id});
  st.intervals.push_back({1, lo.y, lo.x, lo.x + sx, poly_id});
  st.intervals.push_back({1, lo.y + sy, lo.x, lo.x + sx, poly_id});
}

void add_tensor_rule(CellBuildState& st, Vec2 lo, double sx, double sy) {
  const Rule1d g = gauss1d(st.order);
  for (int j = 0; j < g.n; ++j) {
    for (int i = 0; i < g.n; ++i) {
      st.rule.interior.push_back(
          {{lo.x + sx * g.t[i], lo.y + sy * g.t[j]}, sx * sy * g.w[i] * g.w[j]});
    }
  }
  st.rule.interior_measure += sx * sy;
  register_box_intervals(st, st.n_polys++, lo, sx, sy);
}

// Refine the chord a-b toward the zero set by projecting midpoints along the
// chord normal. Emits the curve points strictly between a and b, in order.
void refine_chord(const LevelSet& ls, Vec2 a, Vec2 b, double h, int depth,
                  std::vector<Vec2>& out) {
  if (depth <= 0) return;
  const Vec2 m = (a + b) * 0.5;
  const Vec2 d = b - a;
  const double len = d.norm();
  if (len < 1e-13 * h) return;
  const Vec2 n{-d.y / len, d.x / len};
  const double f0 = nudged(ls, m, h);
  double step = 0.0;
  for (double s = 0.05 * len; s <= 0.6 * len; s *= 2.0) {
    if ((nudged(ls, m + n * s, h) < 0.0) != (f0 < 0.0)) {
      step = s;
      break;
    }
    if ((nudged(ls, m + n * (-s), h) < 0.0) != (f0 < 0.0)) {
      step = -s;
      break;
    }
  }
  if (step == 0.0) return;  // flat, or kinked beyond reach: keep the chord
  const Vec2 p = bisect_edge(ls, m, m + n * step, f0, h);
  if ((p - m).norm() <= 0.005 * len) return;
  refine_chord(ls, a, p, h, depth - 1, out);
  out.push_back(p);
  refine_chord(ls, p, b, h, depth - 1, out);
}

double polygon_signed_area(const std::vector<PolyVertex>& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i].x;
    const Vec2& q = poly[(i + 1) % poly.size()].x;
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * s;
}

// Integrate one interior polygon and its on-curve sides; record the sub-box
// side intervals it owns.
void emit_polygon(CellBuildState& st, std::vector<PolyVertex> poly, Vec2 lo, double sx,
                  double sy) {
  if (poly.size() < 3) return;
  if (polygon_signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());

  // Fan triangulation from the centroid. Marching-squares polygons are convex;
  // the polyline refinement only bows the curved side slightly.
  Vec2 c{0.0, 0.0};
  for (const auto& v : poly) c = c + v.x;
  c = c * (1.0 / double(poly.size()));
  const auto [tp, tn] = tri_rule(st.order);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 p = poly[i].x;
    const Vec2 q = poly[(i + 1) % poly.size()].x;
    const double area = 0.5 * ((p.x - c.x) * (q.y - c.y) - (q.x - c.x) * (p.y - c.y));
    if (std::abs(area) < 1e-300) continue;
    for (int k = 0; k < tn; ++k) {
      const double u = tp[k].a, v = tp[k].b;
      st.rule.interior.push_back(
          {{c.x + u * (p.x - c.x) + v * (q.x - c.x),
            c.y + u * (p.y - c.y) + v * (q.y - c.y)},
           area * tp[k].w});
    }
    st.rule.interior_measure += area;
  }

  // Boundary rule on the on-curve sides. The polygon is CCW, so the domain
  // lies left of each directed side and the outward normal is the right-hand
  // perpendicular.
  const Rule1d g = gauss1d(st.order);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const PolyVertex& p = poly[i];
    const PolyVertex& q = poly[(i + 1) % poly.size()];
    if (!(p.on_curve && q.on_curve)) continue;
    const Vec2 d = q.x - p.x;
    const double len = d.norm();
    if (len < 1e-300) continue;
    const Vec2 n{d.y / len, -d.x / len};
    for (int k = 0; k < g.n; ++k) {
      st.rule.boundary.push_back({p.x + d * g.t[k], len * g.w[k], n});
    }
  }

  const int poly_id = st.n_polys++;
  const double tol = 1e-12 * st.h_cell;
  auto on_line = [tol](double v, double line) { return std::abs(v - line) <= tol; };
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 p = poly[i].x;
    const Vec2 q = poly[(i + 1) % poly.size()].x;
    for (double linex : {lo.x, lo.x + sx}) {
      if (on_line(p.x, linex) && on_line(q.x, linex)) {
        st.intervals.push_back({0, linex, std::min(p.y, q.y), std::max(p.y, q.y), poly_id});
      }
    }
    for (double liney : {lo.y, lo.y + sy}) {
      if (on_line(p.y, liney) && on_line(q.y, liney)) {
        st.intervals.push_back({1, liney, std::min(p.x, q.x), std::max(p.x, q.x), poly_id});
      }
    }
  }
}

// Marching squares on one leaf sub-box with precomputed corner values
// (SW, SE, NE, NW order).
void marching_squares(CellBuildState& st, Vec2 lo, double sx, double sy,
                      const double f[4]) {
  const LevelSet& ls = *st.ls;
  const Vec2 v[4] = {lo, {lo.x + sx, lo.y}, {lo.x + sx, lo.y + sy}, {lo.x, lo.y + sy}};
  bool in[4];
  int n_in = 0;
  for (int i = 0; i < 4; ++i) {
    in[i] = f[i] < 0.0;
    n_in += in[i];
  }
  if (n_in == 0) return;
  if (n_in == 4) {
    emit_polygon(st, {{v[0], false}, {v[1], false}, {v[2], false}, {v[3], false}}, lo,
                 sx, sy);
    return;
  }

  auto cut_point = [&](int i, int j) { return bisect_edge(ls, v[i], v[j], f[i], st.h_cell); };
  auto append_curve = [&](Vec2 a, Vec2 b, std::vector<PolyVertex>& poly) {
    std::vector<Vec2> pts;
    refine_chord(ls, a, b, st.h_cell, 3, pts);
    for (const Vec2& p : pts) poly.push_back({p, true});
  };

  const bool saddle = (in[0] && in[2] && !in[1] && !in[3]) ||
                      (in[1] && in[3] && !in[0] && !in[2]);
  if (!saddle) {
    // Contiguous CCW run of inside corners with one entry and one exit point.
    int start = -1;
    for (int i = 0; i < 4; ++i) {
      if (in[i] && !in[(i + 3) % 4]) start = i;
    }
    std::vector<int> run;
    for (int i = start; in[i % 4] && run.size() < 4; ++i) run.push_back(i % 4);
    const int first = run.front();
    const int last = run.back();
    const Vec2 enter = cut_point((first + 3) % 4, first);
    const Vec2 exit = cut_point(last, (last + 1) % 4);
    std::vector<PolyVertex> poly;
    poly.push_back({enter, true});
    for (int idx : run) poly.push_back({v[idx], false});
    poly.push_back({exit, true});
    append_curve(exit, enter, poly);
    emit_polygon(st, std::move(poly), lo, sx, sy);
  } else {
    const int a = in[0] ? 0 : 1;
    const int b = (a + 2) % 4;
    const Vec2 center{lo.x + 0.5 * sx, lo.y + 0.5 * sy};
    const bool center_in = nudged(ls, center, st.h_cell) < 0.0;
    if (center_in) {
      // One band through the cell: a, cut(a,a+1) ~curve~ cut(a+1,b), b,
      // cut(b,b+1) ~curve~ cut(b+1,a), all CCW.
      const Vec2 c1 = cut_point(a, (a + 1) % 4);
      const Vec2 c2 = cut_point((a + 1) % 4, b);
      const Vec2 c3 = cut_point(b, (b + 1) % 4);
      const Vec2 c4 = cut_point((b + 1) % 4, a);
      std::vector<PolyVertex> poly;
      poly.push_back({v[a], false});
      poly.push_back({c1, true});
      append_curve(c1, c2, poly);
      poly.push_back({c2, true});
      poly.push_back({v[b], false});
      poly.push_back({c3, true});
      append_curve(c3, c4, poly);
      poly.push_back({c4, true});
      emit_polygon(st, std::move(poly), lo, sx, sy);
    } else {
      // Two disjoint corner triangles.
      for (int corner : {a, b}) {
        const Vec2 c1 = cut_point(corner, (corner + 1) % 4);
        const Vec2 c2 = cut_point((corner + 3) % 4, corner);
        std::vector<PolyVertex> poly;
        poly.push_back({c2, true});
        poly.push_back({v[corner], false});
        poly.push_back({c1, true});
        append_curve(c1, c2, poly);
        emit_polygon(st, std::move(poly), lo, sx, sy);
      }
    }
  }
}

void build_recursive(CellBuildState& st, Vec2 lo, double sx, double sy, int depth) {
  const LevelSet& ls = *st.ls;
  const double h = st.h_cell;
  double f[3][3];
  double min_abs = std::numeric_limits<double>::max();
  bool has_neg = false, has_pos = false;
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      const double val = nudged(ls, {lo.x + 0.5 * sx * i, lo.y + 0.5 * sy * j}, h);
      f[i][j] = val;
      min_abs = std::min(min_abs, std::abs(val));
      (val < 0.0 ? has_neg : has_pos) = true;
    }
  }
  // Distance certificate: the field cannot reach zero inside the box if its
  // magnitude everywhere on the 3x3 stencil exceeds the covering radius.
  const double diag = std::hypot(sx, sy);
  if (!(has_neg && has_pos) && min_abs > 0.71 * diag) {
    if (has_neg) add_tensor_rule(st, lo, sx, sy);
    return;
  }
  if (depth < st.max_subdiv) {
    const double hx = 0.5 * sx, hy = 0.5 * sy;
    build_recursive(st, lo, hx, hy, depth + 1);
    build_recursive(st, {lo.x + hx, lo.y}, hx, hy, depth + 1);
    build_recursive(st, {lo.x, lo.y + hy}, hx, hy, depth + 1);
    build_recursive(st, {lo.x + hx, lo.y + hy}, hx, hy, depth + 1);
    return;
  }
  const double corners[4] = {f[0][0], f[2][0], f[2][2], f[0][2]};
  marching_squares(st, lo, sx, sy, corners);
}

// Union-find over the per-cell interior regions through shared side-interval
// overlaps; the interior part of every background cell must be connected.
bool interior_is_connected(const CellBuildState& st) {
  if (st.n_polys <= 1) return true;
  std::vector<int> parent(st.n_polys);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };

  std::vector<SideInterval> iv = st.intervals;
  std::sort(iv.begin(), iv.end(), [](const SideInterval& a, const SideInterval& b) {
    if (a.axis != b.axis) return a.axis < b.axis;
    if (a.coord != b.coord) return a.coord < b.coord;
    return a.lo < b.lo;
  });
  const double tol = 1e-10 * st.h_cell;
  for (std::size_t i = 0; i < iv.size(); ++i) {
    for (std::size_t j = i + 1; j < iv.size(); ++j) {
      if (iv[j].axis != iv[i].axis || iv[j].coord - iv[i].coord > tol) break;
      if (std::min(iv[i].hi, iv[j].hi) - std::max(iv[i].lo, iv[j].lo) > tol) {
        parent[find(iv[i].poly)] = find(iv[j].poly);
      }
    }
  }
  const int root = find(0);
  for (int p = 1; p < st.n_polys; ++p) {
    if (find(p) != root) return false;
  }
  return true;
}

CellCutRule build_cell_rule(const ForestMesh& mesh, int cell, const LevelSet& ls,
                            int order, int max_subdiv) {
  const CellId& c = mesh.leaves()[cell];
  const IntBox b = ForestMesh::cell_box(c);
  const Vec2 lo = mesh.to_physical(b.x0, b.y0);
  const Vec2 hi = mesh.to_physical(b.x1, b.y1);
  const double h = mesh.cell_size(c);

  const double c00 = ls(lo), c10 = ls({hi.x, lo.y}), c11 = ls(hi), c01 = ls({lo.x, hi.y});
  if (c00 == 0.0 && c10 == 0.0 && c11 == 0.0 && c01 == 0.0) {
    throw DegenerateGeometryError(
        "cut_quadrature: level set vanishes at all four corners of cell " +
        std::to_string(cell));
  }

  CellBuildState st;
  st.ls = &ls;
  st.h_cell = h;
  st.order = order;
  st.max_subdiv = max_subdiv;
  build_recursive(st, lo, hi.x - lo.x, hi.y - lo.y, 0);
  if (!interior_is_connected(st)) {
    throw DegenerateGeometryError(
        "cut_quadrature: interior part of cell " + std::to_string(cell) +
        " is disconnected; refine the background mesh to resolve the geometry");
  }
  return std::move(st.rule);
}

}  // namespace

int CellClassification::count(CellClass c) const {
  int n = 0;
  for (CellClass l : label) n += (l == c);
  return n;
}

double CutQuadrature::domain_measure() const {
  double s = 0.0;
  for (const auto& c : cells) s += c.interior_measure;
  return s;
}

double CutQuadrature::boundary_measure() const {
  double s = 0.0;
  for (const auto& c : cells) {
    for (const auto& q : c.boundary) s += q.w;
  }
  return s;
}

int quadrature_thread_count() {
  const char* env = std::getenv("AGFEM_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n > 0 ? n : 1;
}

CutQuadrature cut_quadrature(const ForestMesh& mesh, const LevelSet& ls, int order,
                             int max_subdiv) {
  if (order < 1 || order > 5) throw ParameterError("cut_quadrature: order must be 1..5");
  if (max_subdiv < 0 || max_subdiv > 8) {
    throw ParameterError("cut_quadrature: max_subdiv must be 0..8");
  }
  CutQuadrature out;
  out.order = order;
  out.max_subdiv = max_subdiv;
  out.cells.resize(mesh.n_leaves());

  const int n_threads = std::min(quadrature_thread_count(), std::max(1, mesh.n_leaves()));
  if (n_threads <= 1) {
    for (int i = 0; i < mesh.n_leaves(); ++i) {
      out.cells[i] = build_cell_rule(mesh, i, ls, order, max_subdiv);
    }
  } else {
    std::vector<std::thread> workers;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int t = 0; t < n_threads; ++t) {
      workers.emplace_back([&, t]() {
        try {
          for (int i = t; i < mesh.n_leaves(); i += n_threads) {
            out.cells[i] = build_cell_rule(mesh, i, ls, order, max_subdiv);
          }
        } catch (...) {
          std::scoped_lock lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
  }
  return out;
}

CellClassification classify_cells(const ForestMesh& mesh, const CutQuadrature& cut,
                                  double eta0) {
  if (!(eta0 > 0.0 && eta0 <= 1.0)) {
    throw ParameterError("classify_cells: eta0 must be in (0, 1]");
  }
  CellClassification out;
  out.eta0 = eta0;
  out.label.resize(mesh.n_leaves());
  out.eta.resize(mesh.n_leaves());
  for (int i = 0; i < mesh.n_leaves(); ++i) {
    const double eta = cut.cells[i].interior_measure / mesh.cell_area(mesh.leaves()[i]);
    out.eta[i] = std::clamp(eta, 0.0, 1.0);
    if (out.eta[i] <= 0.0) {
      out.label[i] = CellClass::Exterior;
    } else if (out.eta[i] >= eta0) {
      out.label[i] = CellClass::WellPosed;
    } else {
      out.label[i] = CellClass::IllPosed;
    }
  }
  return out;
}

CellClassification classify_cells(const ForestMesh& mesh, const LevelSet& ls,
                                  double eta0, int order, int max_subdiv) {
  if (!(eta0 > 0.0 && eta0 <= 1.0)) {
    throw ParameterError("classify_cells: eta0 must be in (0, 1]");
  }
  return classify_cells(mesh, cut_quadrature(mesh, ls, order, max_subdiv), eta0);
}

bool facet_is_cut(const LevelSet& ls, Vec2 a, Vec2 b) {
  double prev = 0.0;
  for (int k = 0; k < 5; ++k) {
    const double t = k / 4.0;
    const double v = ls(a + (b - a) * t);
    if (v < 0.0) return true;
    if (k > 0 && ((v < 0.0) != (prev < 0.0))) return true;
    prev = v;
  }
  return false;
}

}  // namespace agfem
