#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "agfem/common.hpp"

namespace agfem {

/// Rectangular background (artificial) domain.
struct BoxDomain {
  Vec2 lo;
  Vec2 hi;

  BoxDomain() = default;
  BoxDomain(Vec2 lo_, Vec2 hi_);

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  double area() const { return width() * height(); }
};

/// Address of a quadtree cell: refinement level plus Z-order index within it.
struct CellId {
  int level = 0;
  std::uint64_t morton = 0;

  bool operator==(const CellId&) const = default;
};

// Cells live on an integer lattice of 2^kMaxLevel units per axis, so
// containment and adjacency tests are exact.
inline constexpr int kMaxLevel = 30;
inline constexpr std::int64_t kNormScale = std::int64_t(1) << kMaxLevel;

std::uint64_t morton_encode(std::uint32_t ix, std::uint32_t iy);
void morton_decode(std::uint64_t m, std::uint32_t& ix, std::uint32_t& iy);

/// Axis-aligned integer bounding box on the normalized lattice.
struct IntBox {
  std::int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(std::int64_t x, std::int64_t y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
  bool overlaps(const IntBox& o) const {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
  }
  /// True if the closed boxes touch or overlap (vertex-inclusive adjacency).
  bool touches(const IntBox& o) const {
    return x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1;
  }
};

struct FacetNeighbor {
  int neighbor = -1;    // leaf index
  int side = 0;         // side of the queried cell: 0 -x, 1 +x, 2 -y, 3 +y
  std::int64_t span_lo = 0;  // shared segment along the facet axis (normalized)
  std::int64_t span_hi = 0;
};

/// 2:1-balanceable quadtree mesh over a box, one root tree, leaves kept in
/// space-filling-curve (Morton) order.
class ForestMesh {
 public:
  /// Single root cell over the unit square.
  ForestMesh() : ForestMesh(BoxDomain{{0.0, 0.0}, {1.0, 1.0}}, {CellId{}}, 0) {}
  ForestMesh(BoxDomain domain, std::vector<CellId> leaves, std::uint64_t generation);

  const BoxDomain& domain() const { return domain_; }
  const std::vector<CellId>& leaves() const { return leaves_; }
  int n_leaves() const { return static_cast<int>(leaves_.size()); }
  std::uint64_t generation() const { return generation_; }

  /// Integer bounds of a cell on the normalized lattice.
  static IntBox cell_box(const CellId& c);
  /// Physical side length of a cell.
  double cell_size(const CellId& c) const;
  Vec2 to_physical(std::int64_t x, std::int64_t y) const;
  Vec2 cell_lo(const CellId& c) const;
  double cell_area(const CellId& c) const;

  /// Leaf index containing the given lattice point, or -1 if the point is
  /// outside [0, 2^kMaxLevel)^2. Points on internal cell boundaries resolve
  /// to the cell whose half-open box contains them.
  int find_leaf(std::int64_t x, std::int64_t y) const;
  int leaf_index(const CellId& c) const;

  /// All leaves whose half-open box overlaps the query box.
  std::vector<int> leaves_overlapping(const IntBox& box) const;
  /// All leaves whose closed box touches the query box (includes corner
  /// contact).
  std::vector<int> leaves_touching(const IntBox& box) const;

  /// Leaves sharing a (full or partial) edge with the given leaf.
  std::vector<FacetNeighbor> facet_neighbors(int leaf) const;

  /// Leaves whose closure intersects the closure of the given leaf
  /// (edge or vertex contact), excluding the leaf itself.
  std::vector<int> closure_neighbors(int leaf) const;

  bool is_two_one_balanced() const;

  double sum_leaf_areas() const;

 private:
  friend ForestMesh make_uniform_mesh(const BoxDomain&, int);
  friend std::pair<ForestMesh, std::vector<int>> refine(const ForestMesh&,
                                                        const std::vector<bool>&);

  void rebuild_index();
  void collect(const CellId& node, const IntBox& query, bool vertex_inclusive,
               std::vector<int>& out) const;

  BoxDomain domain_;
  std::vector<CellId> leaves_;
  // norm_key of a leaf -> (level, leaf index); norm_key is unique among leaves.
  std::unordered_map<std::uint64_t, std::pair<int, int>> index_;
  std::uint64_t generation_ = 0;
};

/// Uniformly refined mesh with 4^level congruent leaves.
ForestMesh make_uniform_mesh(const BoxDomain& domain, int level);

/// Replace every flagged leaf by its four children. Returns the new mesh and
/// a map from new-leaf index to the old-leaf index it descends from. The
/// result is not necessarily 2:1 balanced.
std::pair<ForestMesh, std::vector<int>> refine(const ForestMesh& mesh,
                                               const std::vector<bool>& flags);

/// Minimal extra refinement so that edge- and vertex-adjacent leaves differ
/// by at most one level. Idempotent.
std::pair<ForestMesh, std::vector<int>> enforce_two_one_balance(const ForestMesh& mesh);

/// -------- VEF (vertex/edge) table --------

enum class VefKind : std::uint8_t { Vertex, Edge };

struct HangingEntry {
  VefKind kind = VefKind::Vertex;
  int hanging = -1;  // vertex id or edge id, per kind
  int owner_edge = -1;
};

struct VefTable {
  // Vertex coordinates on the normalized lattice, deduplicated.
  std::vector<std::array<std::int64_t, 2>> vertices;
  // Edges as sorted vertex-id pairs, deduplicated. A coarse edge and the fine
  // half-edges it contains are distinct entries.
  std::vector<std::array<int, 2>> edges;
  // Per leaf: corner vertices in local order (SW, SE, NW, NE) and side edges
  // in side order (-x, +x, -y, +y).
  std::vector<std::array<int, 4>> cell_vertices;
  std::vector<std::array<int, 4>> cell_edges;
  std::vector<HangingEntry> hanging;
  // vertex id -> owner edge id, or -1 when the vertex is not hanging.
  std::vector<int> vertex_owner_edge;
  // edge id -> owner edge id, or -1.
  std::vector<int> edge_owner_edge;

  int find_vertex(std::int64_t x, std::int64_t y) const;
  std::unordered_map<std::uint64_t, int> vertex_index;
};

/// Global deduplicated vertices/edges with the hanging-ownership map.
/// Requires a 2:1-balanced mesh.
VefTable build_vef_table(const ForestMesh& mesh);

}  // namespace agfem
