#pragma once

// Everything downstream of the solved surface elements: per-point normals,
// the query lattice, the averaged indicator, its iso-value and the
// triangulated level set.

#include "agr/adaptive.hpp"
#include "agr/kernel.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace agr {

enum class NormalFlag : std::uint8_t { ok, degenerate_fallback };

struct OrientedCloud {
  Points positions;
  Points normals;  // unit rows
  std::vector<NormalFlag> flags;

  Eigen::Index size() const { return positions.rows(); }
};

/// Normals from the LSE rows. Rows shorter than 1e-14 take the normal of the
/// nearest well-defined row. Throws ErrorKind::numerical_breakdown if every
/// row is degenerate.
OrientedCloud extract_normals(const Eigen::VectorXd& mu, const PointCloud& cloud);

inline constexpr double kGridMargin = 0.05;

/// Integer lattice coordinates of a cell or corner.
using LatticeIndex = std::array<std::int32_t, 3>;

/// Cells of a uniform lattice at `depth` over [−margin, 1+margin]^3. Corner
/// bit order within a cell is dx + 2dy + 4dz.
struct QueryGrid {
  int depth = 0;
  Points corners;                                     // normalized coordinates
  std::vector<LatticeIndex> corner_lattice;           // corners = lattice / 2^depth
  std::vector<LatticeIndex> cell_lattice;             // lower corner of each cell
  std::vector<std::array<std::int32_t, 8>> cells;     // corner indices

  double cell_size() const { return 1.0 / static_cast<double>(1 << depth); }
};

/// Inclusive-exclusive range of valid cell indices per axis at `depth`.
std::pair<std::int32_t, std::int32_t> lattice_bounds(int depth, double margin = kGridMargin);

/// Grid over the given (deduplicated and sorted internally) cells.
QueryGrid make_grid(int depth, std::vector<LatticeIndex> cells);

/// Cells containing at least one input point, dilated by `dilation` rings in
/// 26-connectivity and clipped to the margin box.
QueryGrid build_query_grid(const PointCloud& cloud, int depth, int dilation);

struct IndicatorField {
  Eigen::VectorXd values;  // one per grid corner
  double iso_value = 0.5;
};

/// Evaluates (1/m) Σ_i A_{c_i}(Q; P) μ at arbitrary query points, N_s at a time.
class IndicatorEvaluator {
 public:
  IndicatorEvaluator(Eigen::VectorXd mu, const VelocitySet& velocities, const PointCloud& cloud,
                     const WidthParams& width_params, int batch_size = 5000);

  Eigen::VectorXd operator()(const Points& queries) const;

  /// Mean indicator over the input points themselves.
  double isovalue() const;

 private:
  Eigen::VectorXd mu_;
  std::vector<Velocity> velocities_;
  const PointCloud& cloud_;
  WidthEstimator widths_;
  Eigen::Index batch_;
};

IndicatorField evaluate_indicator(const Eigen::VectorXd& mu, const VelocitySet& velocities,
                                  const QueryGrid& grid, const PointCloud& cloud,
                                  const WidthParams& width_params, int batch_size = 5000);

double compute_isovalue(const Eigen::VectorXd& mu, const VelocitySet& velocities, const PointCloud& cloud,
                        const WidthParams& width_params, int batch_size = 5000);

struct BandOptions {
  int depth = 8;
  int dilation = 2;      // rings around occupied cells on the starting level
  int start_depth = 5;   // first (coarsest) level
  double margin = kGridMargin;
};

/// Coarse-to-fine query band. Starts from build_query_grid at start_depth.
/// On every level the band grows through each face the level set crosses
/// until the crossing cells are closed. Finer levels are seeded with the
/// cells holding input points, plus the children of any crossing parent
/// that the growth did not reach. Returns the finest-level grid with its
/// values.
std::pair<QueryGrid, IndicatorField> build_surface_band(const IndicatorEvaluator& indicator,
                                                        const PointCloud& cloud, double iso_value,
                                                        const BandOptions& options);

struct TriangleMesh {
  Points vertices;  // original input coordinates
  std::vector<std::array<std::int32_t, 3>> triangles;

  Eigen::Index vertex_count() const { return vertices.rows(); }
  std::size_t triangle_count() const { return triangles.size(); }
};

/// Marching cubes over the grid cells at field.iso_value. Triangles face
/// toward decreasing indicator. Throws ErrorKind::no_surface when no cell
/// straddles the iso-value.
TriangleMesh marching_cubes(const QueryGrid& grid, const IndicatorField& field, const Transform& transform);

/// Triangle list for one of the 256 corner-sign cases (bit c set when corner
/// c is at or above the iso-value), as triples of cube edge ids.
const std::vector<std::array<std::int8_t, 3>>& marching_cubes_case(int mask);

/// Corner pair of each of the 12 cube edges.
const std::array<std::array<std::int8_t, 2>, 12>& cube_edges();

struct MeshTopology {
  std::int64_t vertices = 0, edges = 0, faces = 0;
  std::int64_t boundary_edges = 0;      // used by one triangle
  std::int64_t nonmanifold_edges = 0;   // used by more than two
  std::int64_t misoriented_edges = 0;   // shared edge traversed twice the same way
  std::int64_t components = 0;

  std::int64_t euler() const { return vertices - edges + faces; }
  bool watertight() const { return boundary_edges == 0 && nonmanifold_edges == 0 && misoriented_edges == 0; }
};

MeshTopology mesh_topology(const TriangleMesh& mesh);

/// Smallest triangle area measured in the given frame.
double min_triangle_area(const TriangleMesh& mesh);

}  // namespace agr
