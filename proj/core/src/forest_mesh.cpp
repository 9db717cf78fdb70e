#include "agfem/forest_mesh.hpp"

#include <algorithm>
#include <cmath>

namespace agfem {

namespace {

// Normalized SFC key: the Morton index promoted to kMaxLevel resolution.
// Unique across leaves of a non-overlapping tiling and totally ordered in
// space-filling-curve order.
std::uint64_t norm_key(const CellId& c) {
  return c.morton << (2 * (kMaxLevel - c.level));
}

}  // namespace

BoxDomain::BoxDomain(Vec2 lo_, Vec2 hi_) : lo(lo_), hi(hi_) {
  if (!(hi.x > lo.x) || !(hi.y > lo.y)) {
    throw ParameterError("BoxDomain: hi must exceed lo componentwise");
  }
}

std::uint64_t morton_encode(std::uint32_t ix, std::uint32_t iy) {
  auto spread = [](std::uint64_t v) {
    v &= 0xffffffffull;
    v = (v | (v << 16)) & 0x0000ffff0000ffffull;
    v = (v | (v << 8)) & 0x00ff00ff00ff00ffull;
    v = (v | (v << 4)) & 0x0f0f0f0f0f0f0f0full;
    v = (v | (v << 2)) & 0x3333333333333333ull;
    v = (v | (v << 1)) & 0x5555555555555555ull;
    return v;
  };
  return spread(ix) | (spread(iy) << 1);
}

void morton_decode(std::uint64_t m, std::uint32_t& ix, std::uint32_t& iy) {
  auto compact = [](std::uint64_t v) {
    v &= 0x5555555555555555ull;
    v = (v | (v >> 1)) & 0x3333333333333333ull;
    v = (v | (v >> 2)) & 0x0f0f0f0f0f0f0f0full;
    v = (v | (v >> 4)) & 0x00ff00ff00ff00ffull;
    v = (v | (v >> 8)) & 0x0000ffff0000ffffull;
    v = (v | (v >> 16)) & 0x00000000ffffffffull;
    return static_cast<std::uint32_t>(v);
  };
  ix = compact(m);
  iy = compact(m >> 1);
}

ForestMesh::ForestMesh(BoxDomain domain, std::vector<CellId> leaves,
                       std::uint64_t generation)
    : domain_(domain), leaves_(std::move(leaves)), generation_(generation) {
  std::sort(leaves_.begin(), leaves_.end(),
            [](const CellId& a, const CellId& b) { return norm_key(a) < norm_key(b); });
  rebuild_index();
}

void ForestMesh::rebuild_index() {
  index_.clear();
  index_.reserve(leaves_.size() * 2);
  for (int i = 0; i < n_leaves(); ++i) {
    index_.emplace(norm_key(leaves_[i]), std::make_pair(leaves_[i].level, i));
  }
}

IntBox ForestMesh::cell_box(const CellId& c) {
  std::uint32_t ix, iy;
  morton_decode(c.morton, ix, iy);
  const std::int64_t s = std::int64_t(1) << (kMaxLevel - c.level);
  const std::int64_t x0 = std::int64_t(ix) * s;
  const std::int64_t y0 = std::int64_t(iy) * s;
  return {x0, y0, x0 + s, y0 + s};
}

double ForestMesh::cell_size(const CellId& c) const {
  return domain_.width() / double(std::uint64_t(1) << c.level);
}

Vec2 ForestMesh::to_physical(std::int64_t x, std::int64_t y) const {
  const double t = 1.0 / double(kNormScale);
  return {domain_.lo.x + domain_.width() * (double(x) * t),
          domain_.lo.y + domain_.height() * (double(y) * t)};
}

Vec2 ForestMesh::cell_lo(const CellId& c) const {
  const IntBox b = cell_box(c);
  return to_physical(b.x0, b.y0);
}

double ForestMesh::cell_area(const CellId& c) const {
  const double f = 1.0 / double(std::uint64_t(1) << (2 * c.level));
  return domain_.area() * f;
}

int ForestMesh::find_leaf(std::int64_t x, std::int64_t y) const {
  if (x < 0 || y < 0 || x >= kNormScale || y >= kNormScale) return -1;
  // Descend from the root along the branch containing (x, y).
  std::uint64_t m = 0;
  for (int level = 0; level <= kMaxLevel; ++level) {
    auto it = index_.find(m << (2 * (kMaxLevel - level)));
    if (it != index_.end() && it->second.first == level) return it->second.second;
    if (level == kMaxLevel) break;
    const int shift = kMaxLevel - level - 1;
    const std::uint64_t dx = (x >> shift) & 1;
    const std::uint64_t dy = (y >> shift) & 1;
    m = (m << 2) | (dy << 1) | dx;
  }
  return -1;
}

int ForestMesh::leaf_index(const CellId& c) const {
  auto it = index_.find(norm_key(c));
  if (it == index_.end() || it->second.first != c.level) return -1;
  return it->second.second;
}

void ForestMesh::collect(const CellId& node, const IntBox& query, bool vertex_inclusive,
                         std::vector<int>& out) const {
  const IntBox b = cell_box(node);
  const bool hit = vertex_inclusive ? b.touches(query) : b.overlaps(query);
  if (!hit) return;
  const int idx = leaf_index(node);
  if (idx >= 0) {
    out.push_back(idx);
    return;
  }
  if (node.level >= kMaxLevel) return;
  for (std::uint64_t k = 0; k < 4; ++k) {
    collect({node.level + 1, (node.morton << 2) | k}, query, vertex_inclusive, out);
  }
}

std::vector<int> ForestMesh::leaves_overlapping(const IntBox& box) const {
  std::vector<int> out;
  collect({0, 0}, box, false, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> ForestMesh::leaves_touching(const IntBox& box) const {
  std::vector<int> out;
  collect({0, 0}, box, true, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<FacetNeighbor> ForestMesh::facet_neighbors(int leaf) const {
  if (leaf < 0 || leaf >= n_leaves()) {
    throw ParameterError("facet_neighbors: index out of range");
  }
  const IntBox b = cell_box(leaves_[leaf]);
  std::vector<FacetNeighbor> out;
  // One-lattice-unit-thick probe strip just outside each side.
  const struct {
    int side;
    IntBox probe;
  } sides[4] = {
      {0, {b.x0 - 1, b.y0, b.x0, b.y1}},
      {1, {b.x1, b.y0, b.x1 + 1, b.y1}},
      {2, {b.x0, b.y0 - 1, b.x1, b.y0}},
      {3, {b.x0, b.y1, b.x1, b.y1 + 1}},
  };
  for (const auto& s : sides) {
    if (s.probe.x1 <= 0 || s.probe.y1 <= 0 || s.probe.x0 >= kNormScale ||
        s.probe.y0 >= kNormScale) {
      continue;  // domain boundary
    }
    for (int nb : leaves_overlapping(s.probe)) {
      const IntBox nbb = cell_box(leaves_[nb]);
      FacetNeighbor fn;
      fn.neighbor = nb;
      fn.side = s.side;
      if (s.side < 2) {
        fn.span_lo = std::max(b.y0, nbb.y0);
        fn.span_hi = std::min(b.y1, nbb.y1);
      } else {
        fn.span_lo = std::max(b.x0, nbb.x0);
        fn.span_hi = std::min(b.x1, nbb.x1);
      }
      out.push_back(fn);
    }
  }
  return out;
}

std::vector<int> ForestMesh::closure_neighbors(int leaf) const {
  const IntBox b = cell_box(leaves_[leaf]);
  std::vector<int> out = leaves_touching(b);
  out.erase(std::remove(out.begin(), out.end(), leaf), out.end());
  return out;
}

bool ForestMesh::is_two_one_balanced() const {
  for (int i = 0; i < n_leaves(); ++i) {
    for (int nb : closure_neighbors(i)) {
      if (std::abs(leaves_[i].level - leaves_[nb].level) > 1) return false;
    }
  }
  return true;
}

double ForestMesh::sum_leaf_areas() const {
  double sum = 0.0;
  for (const CellId& c : leaves_) sum += cell_area(c);
  return sum;
}

ForestMesh make_uniform_mesh(const BoxDomain& domain, int level) {
  if (level < 0 || level > kMaxLevel) {
    throw ParameterError("make_uniform_mesh: level must be in [0, 30]");
  }
  std::vector<CellId> leaves;
  leaves.reserve(std::size_t(1) << (2 * level));
  const std::uint64_t n = std::uint64_t(1) << (2 * level);
  for (std::uint64_t m = 0; m < n; ++m) leaves.push_back({level, m});
  return ForestMesh(domain, std::move(leaves), 0);
}

std::pair<ForestMesh, std::vector<int>> refine(const ForestMesh& mesh,
                                               const std::vector<bool>& flags) {
  if (static_cast<int>(flags.size()) != mesh.n_leaves()) {
    throw ParameterError("refine: flag vector size must equal leaf count");
  }
  std::vector<CellId> leaves;
  std::vector<int> parent;
  leaves.reserve(mesh.n_leaves());
  parent.reserve(mesh.n_leaves());
  for (int i = 0; i < mesh.n_leaves(); ++i) {
    const CellId& c = mesh.leaves()[i];
    if (flags[i]) {
      if (c.level >= kMaxLevel) {
        throw ParameterError("refine: cell already at maximum level");
      }
      for (std::uint64_t k = 0; k < 4; ++k) {
        leaves.push_back({c.level + 1, (c.morton << 2) | k});
        parent.push_back(i);
      }
    } else {
      leaves.push_back(c);
      parent.push_back(i);
    }
  }
  // Children of a leaf are contiguous in SFC order, so the ordering is
  // preserved and parent[] stays aligned after the constructor's sort.
  return {ForestMesh(mesh.domain(), std::move(leaves), mesh.generation() + 1),
          std::move(parent)};
}

std::pair<ForestMesh, std::vector<int>> enforce_two_one_balance(const ForestMesh& mesh) {
  ForestMesh cur = mesh;
  // parent chain composed across sweeps; starts as identity.
  std::vector<int> to_original(cur.n_leaves());
  for (int i = 0; i < cur.n_leaves(); ++i) to_original[i] = i;

  for (;;) {
    std::vector<bool> flags(cur.n_leaves(), false);
    bool any = false;
    for (int i = 0; i < cur.n_leaves(); ++i) {
      if (flags[i]) continue;
      for (int nb : cur.closure_neighbors(i)) {
        if (cur.leaves()[nb].level - cur.leaves()[i].level > 1) {
          flags[i] = true;
          any = true;
          break;
        }
      }
    }
    if (!any) break;
    auto [next, parent] = refine(cur, flags);
    std::vector<int> composed(next.n_leaves());
    for (int i = 0; i < next.n_leaves(); ++i) composed[i] = to_original[parent[i]];
    cur = std::move(next);
    to_original = std::move(composed);
  }
  return {std::move(cur), std::move(to_original)};
}

int VefTable::find_vertex(std::int64_t x, std::int64_t y) const {
  const std::uint64_t key = (std::uint64_t(x) << 31) | std::uint64_t(y);
  auto it = vertex_index.find(key);
  return it == vertex_index.end() ? -1 : it->second;
}

VefTable build_vef_table(const ForestMesh& mesh) {
  if (!mesh.is_two_one_balanced()) {
    throw InvariantViolation("build_vef_table: mesh is not 2:1 balanced");
  }
  VefTable t;
  std::unordered_map<std::uint64_t, int> edge_index;

  auto get_vertex = [&](std::int64_t x, std::int64_t y) {
    const std::uint64_t key = (std::uint64_t(x) << 31) | std::uint64_t(y);
    auto [it, inserted] = t.vertex_index.emplace(key, int(t.vertices.size()));
    if (inserted) t.vertices.push_back({x, y});
    return it->second;
  };
  auto get_edge = [&](int v0, int v1) {
    if (v0 > v1) std::swap(v0, v1);
    const std::uint64_t key = (std::uint64_t(v0) << 32) | std::uint64_t(v1);
    auto [it, inserted] = edge_index.emplace(key, int(t.edges.size()));
    if (inserted) t.edges.push_back({v0, v1});
    return it->second;
  };

  const int n = mesh.n_leaves();
  t.cell_vertices.resize(n);
  t.cell_edges.resize(n);
  for (int i = 0; i < n; ++i) {
    const IntBox b = ForestMesh::cell_box(mesh.leaves()[i]);
    const int sw = get_vertex(b.x0, b.y0);
    const int se = get_vertex(b.x1, b.y0);
    const int nw = get_vertex(b.x0, b.y1);
    const int ne = get_vertex(b.x1, b.y1);
    t.cell_vertices[i] = {sw, se, nw, ne};
    t.cell_edges[i] = {get_edge(sw, nw), get_edge(se, ne), get_edge(sw, se),
                       get_edge(nw, ne)};
  }

  // Hanging entries. Under 2:1 balance a nonconforming side of a fine leaf
  // faces exactly one coarser leaf; the fine side edge and the fine vertex in
  // the interior of the coarse edge are owned by that coarse edge.
  t.vertex_owner_edge.assign(t.vertices.size(), -1);
  t.edge_owner_edge.assign(t.edges.size(), -1);
  auto add_hanging = [&](VefKind kind, int id, int owner) {
    int& slot = (kind == VefKind::Vertex) ? t.vertex_owner_edge[id] : t.edge_owner_edge[id];
    if (slot == owner) return;
    if (slot != -1) {
      throw InvariantViolation("build_vef_table: hanging VEF with two owners");
    }
    slot = owner;
    t.hanging.push_back({kind, id, owner});
  };

  for (int i = 0; i < n; ++i) {
    const CellId& c = mesh.leaves()[i];
    for (const FacetNeighbor& fn : mesh.facet_neighbors(i)) {
      const CellId& nb = mesh.leaves()[fn.neighbor];
      if (nb.level >= c.level) continue;  // only fine-against-coarse sides hang
      const int my_edge = t.cell_edges[i][fn.side];
      // Owner is the coarse cell's opposite-side edge.
      const int owner_side = fn.side ^ 1;
      const int owner_edge = t.cell_edges[fn.neighbor][owner_side];
      add_hanging(VefKind::Edge, my_edge, owner_edge);
      // Fine side endpoints strictly inside the coarse edge hang on it.
      const auto [e0, e1] = std::pair{t.edges[my_edge][0], t.edges[my_edge][1]};
      const auto [o0, o1] = std::pair{t.edges[owner_edge][0], t.edges[owner_edge][1]};
      for (int v : {e0, e1}) {
        if (v != o0 && v != o1) add_hanging(VefKind::Vertex, v, owner_edge);
      }
    }
  }
  return t;
}

}  // namespace agfem
