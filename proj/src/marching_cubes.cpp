#include "agr/error.hpp"
#include "agr/field.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace agr {

namespace {

using EdgeTable = std::array<std::array<std::int8_t, 2>, 12>;

constexpr EdgeTable kEdges = {{{0, 1}, {2, 3}, {4, 5}, {6, 7},
                               {0, 2}, {1, 3}, {4, 6}, {5, 7},
                               {0, 4}, {1, 5}, {2, 6}, {3, 7}}};

Eigen::Vector3d corner_pos(int k) { return {double(k & 1), double((k >> 1) & 1), double((k >> 2) & 1)}; }

int edge_between(int a, int b) {
  for (int e = 0; e < 12; ++e) {
    if ((kEdges[e][0] == a && kEdges[e][1] == b) || (kEdges[e][0] == b && kEdges[e][1] == a)) return e;
  }
  return -1;
}

Eigen::Vector3d edge_mid(int e) { return 0.5 * (corner_pos(kEdges[e][0]) + corner_pos(kEdges[e][1])); }

struct Segment {
  int from, to;
};

// Oriented boundary segments of the surface patch on one cube face.
// Diagonal configurations keep the inside corners apart.
void face_segments(int mask, int axis, int side, std::vector<Segment>& out) {
  const int u = (axis + 1) % 3, v = (axis + 2) % 3;
  const int base = side << axis;
  const std::array<int, 4> ring = {base, base | (1 << u), base | (1 << u) | (1 << v), base | (1 << v)};
  std::array<bool, 4> in;
  for (int i = 0; i < 4; ++i) in[i] = (mask >> ring[i]) & 1;
  const int n_in = in[0] + in[1] + in[2] + in[3];
  if (n_in == 0 || n_in == 4) return;

  Eigen::Vector3d f = Eigen::Vector3d::Zero();
  f[axis] = side ? 1.0 : -1.0;

  auto emit = [&](int e1, int e2, const Eigen::Vector3d& g) {
    const Eigen::Vector3d d = edge_mid(e2) - edge_mid(e1);
    if (d.dot(g.cross(f)) > 0) {
      out.push_back({e1, e2});
    } else {
      out.push_back({e2, e1});
    }
  };

  const bool diagonal = n_in == 2 && in[0] == in[2];
  if (diagonal) {
    for (int i = 0; i < 4; ++i) {
      if (!in[i]) continue;
      const int e1 = edge_between(ring[i], ring[(i + 1) % 4]);
      const int e2 = edge_between(ring[i], ring[(i + 3) % 4]);
      const Eigen::Vector3d mid = 0.5 * (edge_mid(e1) + edge_mid(e2));
      emit(e1, e2, mid - corner_pos(ring[i]));
    }
    return;
  }
  std::vector<int> crossed;
  Eigen::Vector3d cin = Eigen::Vector3d::Zero(), cout = Eigen::Vector3d::Zero();
  for (int i = 0; i < 4; ++i) {
    if (in[i] != in[(i + 1) % 4]) crossed.push_back(edge_between(ring[i], ring[(i + 1) % 4]));
    (in[i] ? cin : cout) += corner_pos(ring[i]);
  }
  emit(crossed[0], crossed[1], cout / (4 - n_in) - cin / n_in);
}

std::array<std::vector<std::array<std::int8_t, 3>>, 256> build_table() {
  std::array<std::vector<std::array<std::int8_t, 3>>, 256> table;
  for (int mask = 1; mask < 255; ++mask) {
    std::vector<Segment> segs;
    for (int axis = 0; axis < 3; ++axis) {
      for (int side = 0; side < 2; ++side) face_segments(mask, axis, side, segs);
    }
    std::array<int, 12> next;
    next.fill(-1);
    for (const auto& s : segs) next[s.from] = s.to;
    std::array<bool, 12> used{};
    for (const auto& s : segs) {
      if (used[s.from]) continue;
      std::vector<int> cycle;
      for (int e = s.from; !used[e]; e = next[e]) {
        used[e] = true;
        cycle.push_back(e);
      }
      for (size_t i = 1; i + 1 < cycle.size(); ++i) {
        table[mask].push_back({static_cast<std::int8_t>(cycle[0]), static_cast<std::int8_t>(cycle[i]),
                               static_cast<std::int8_t>(cycle[i + 1])});
      }
    }
  }
  return table;
}

const auto& table() {
  static const auto t = build_table();
  return t;
}

constexpr double kMinT = 1e-3;

}  // namespace

const std::array<std::array<std::int8_t, 2>, 12>& cube_edges() { return kEdges; }

const std::vector<std::array<std::int8_t, 3>>& marching_cubes_case(int mask) {
  require(mask >= 0 && mask < 256, "marching_cubes_case: mask must be in [0, 255]");
  return table()[static_cast<size_t>(mask)];
}

TriangleMesh marching_cubes(const QueryGrid& grid, const IndicatorField& field, const Transform& transform) {
  require(field.values.size() == grid.corners.rows(), "marching_cubes: one value per grid corner required");
  const double iso = field.iso_value;
  const auto& values = field.values;

  std::unordered_map<std::uint64_t, std::int32_t> welded;
  std::vector<Vec3> verts;
  TriangleMesh mesh;
  bool straddled = false;

  for (const auto& cell : grid.cells) {
    int mask = 0;
    for (int k = 0; k < 8; ++k) {
      if (values[cell[static_cast<size_t>(k)]] >= iso) mask |= 1 << k;
    }
    if (mask == 0 || mask == 255) continue;
    straddled = true;
    std::array<std::int32_t, 12> ids;
    ids.fill(-1);
    for (const auto& tri : table()[static_cast<size_t>(mask)]) {
      std::array<std::int32_t, 3> t;
      for (int i = 0; i < 3; ++i) {
        const int e = tri[static_cast<size_t>(i)];
        if (ids[static_cast<size_t>(e)] < 0) {
          std::int32_t a = cell[static_cast<size_t>(kEdges[e][0])];
          std::int32_t b = cell[static_cast<size_t>(kEdges[e][1])];
          if (a > b) std::swap(a, b);
          const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
          auto [it, inserted] = welded.try_emplace(key, static_cast<std::int32_t>(verts.size()));
          if (inserted) {
            const double va = values[a], vb = values[b];
            const double t_ab = std::clamp((iso - va) / (vb - va), kMinT, 1.0 - kMinT);
            const Vec3 pa = grid.corners.row(a).transpose();
            const Vec3 pb = grid.corners.row(b).transpose();
            verts.push_back(pa + t_ab * (pb - pa));
          }
          ids[static_cast<size_t>(e)] = it->second;
        }
        t[static_cast<size_t>(i)] = ids[static_cast<size_t>(e)];
      }
      mesh.triangles.push_back(t);
    }
  }
  if (!straddled || mesh.triangles.empty()) {
    throw Error(ErrorKind::no_surface, "no surface crossed: no grid cell straddles the iso-value; try a smaller alpha or a larger depth");
  }
  mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
  for (size_t i = 0; i < verts.size(); ++i) {
    mesh.vertices.row(static_cast<Eigen::Index>(i)) = transform.to_original(verts[i]).transpose();
  }
  return mesh;
}

MeshTopology mesh_topology(const TriangleMesh& mesh) {
  MeshTopology topo;
  topo.vertices = mesh.vertex_count();
  topo.faces = static_cast<std::int64_t>(mesh.triangle_count());

  struct EdgeUse {
    int count = 0;
    int forward = 0;  // traversals from the smaller to the larger index
  };
  std::unordered_map<std::uint64_t, EdgeUse> edges;
  edges.reserve(mesh.triangle_count() * 2);

  std::vector<std::int64_t> parent(static_cast<size_t>(mesh.vertex_count()));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::int64_t x) {
    while (parent[static_cast<size_t>(x)] != x) {
      parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
      x = parent[static_cast<size_t>(x)];
    }
    return x;
  };

  for (const auto& t : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      const std::int32_t a = t[static_cast<size_t>(i)], b = t[static_cast<size_t>((i + 1) % 3)];
      const auto lo = std::min(a, b), hi = std::max(a, b);
      auto& use = edges[(static_cast<std::uint64_t>(lo) << 32) | static_cast<std::uint32_t>(hi)];
      ++use.count;
      if (a < b) ++use.forward;
      const auto ra = find(a), rb = find(b);
      if (ra != rb) parent[static_cast<size_t>(ra)] = rb;
    }
  }
  topo.edges = static_cast<std::int64_t>(edges.size());
  for (const auto& [key, use] : edges) {
    if (use.count == 1) ++topo.boundary_edges;
    if (use.count > 2) ++topo.nonmanifold_edges;
    if (use.count == 2 && use.forward != 1) ++topo.misoriented_edges;
  }
  std::vector<bool> referenced(parent.size(), false);
  for (const auto& t : mesh.triangles) {
    for (auto v : t) referenced[static_cast<size_t>(v)] = true;
  }
  for (size_t v = 0; v < parent.size(); ++v) {
    if (referenced[v] && find(static_cast<std::int64_t>(v)) == static_cast<std::int64_t>(v)) ++topo.components;
  }
  return topo;
}

double min_triangle_area(const TriangleMesh& mesh) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : mesh.triangles) {
    const Vec3 a = mesh.vertices.row(t[0]).transpose();
    const Vec3 b = mesh.vertices.row(t[1]).transpose();
    const Vec3 c = mesh.vertices.row(t[2]).transpose();
    best = std::min(best, 0.5 * (b - a).cross(c - a).norm());
  }
  return best;
}

}  // namespace agr
