#include "agr/error.hpp"
#include "agr/field.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace agr {

namespace {

constexpr std::int64_t kKeyOffset = 1 << 20;

std::uint64_t pack(const LatticeIndex& c) {
  return static_cast<std::uint64_t>(c[0] + kKeyOffset) |
         (static_cast<std::uint64_t>(c[1] + kKeyOffset) << 21) |
         (static_cast<std::uint64_t>(c[2] + kKeyOffset) << 42);
}

bool lattice_less(const LatticeIndex& a, const LatticeIndex& b) {
  if (a[2] != b[2]) return a[2] < b[2];
  if (a[1] != b[1]) return a[1] < b[1];
  return a[0] < b[0];
}

std::vector<LatticeIndex> occupied_cells(const PointCloud& cloud, int depth) {
  const std::int32_t res = 1 << depth;
  std::vector<LatticeIndex> cells;
  cells.reserve(static_cast<size_t>(cloud.size()));
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    LatticeIndex c;
    for (int a = 0; a < 3; ++a) {
      const auto v = static_cast<std::int32_t>(std::floor(cloud.positions()(i, a) * res));
      c[a] = std::clamp(v, 0, res - 1);
    }
    cells.push_back(c);
  }
  return cells;
}

void sort_unique(std::vector<LatticeIndex>& cells) {
  std::sort(cells.begin(), cells.end(), lattice_less);
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
}

}  // namespace

std::pair<std::int32_t, std::int32_t> lattice_bounds(int depth, double margin) {
  const std::int32_t res = 1 << depth;
  const auto pad = static_cast<std::int32_t>(std::floor(margin * res));
  return {-pad, res + pad};
}

QueryGrid make_grid(int depth, std::vector<LatticeIndex> cells) {
  sort_unique(cells);
  QueryGrid g;
  g.depth = depth;
  g.cells.reserve(cells.size());
  std::unordered_map<std::uint64_t, std::int32_t> corner_ids;
  corner_ids.reserve(cells.size() * 2);
  for (const auto& c : cells) {
    std::array<std::int32_t, 8> ids;
    for (int k = 0; k < 8; ++k) {
      const LatticeIndex v{c[0] + (k & 1), c[1] + ((k >> 1) & 1), c[2] + ((k >> 2) & 1)};
      auto [it, inserted] = corner_ids.try_emplace(pack(v), static_cast<std::int32_t>(g.corner_lattice.size()));
      if (inserted) g.corner_lattice.push_back(v);
      ids[static_cast<size_t>(k)] = it->second;
    }
    g.cells.push_back(ids);
  }
  g.cell_lattice = std::move(cells);
  const double h = g.cell_size();
  g.corners.resize(static_cast<Eigen::Index>(g.corner_lattice.size()), 3);
  for (size_t i = 0; i < g.corner_lattice.size(); ++i) {
    for (int a = 0; a < 3; ++a) g.corners(static_cast<Eigen::Index>(i), a) = g.corner_lattice[i][static_cast<size_t>(a)] * h;
  }
  return g;
}

QueryGrid build_query_grid(const PointCloud& cloud, int depth, int dilation) {
  require(depth >= 1 && depth <= 10, "build_query_grid: depth must be in [1, 10]");
  require(dilation >= 0, "build_query_grid: dilation must be >= 0");
  require(cloud.size() > 0, "build_query_grid: empty cloud");
  auto cells = occupied_cells(cloud, depth);
  sort_unique(cells);
  if (dilation > 0) {
    const auto [lo, hi] = lattice_bounds(depth);
    std::vector<LatticeIndex> grown;
    grown.reserve(cells.size() * static_cast<size_t>((2 * dilation + 1) * (2 * dilation + 1)));
    for (const auto& c : cells) {
      for (int dz = -dilation; dz <= dilation; ++dz)
        for (int dy = -dilation; dy <= dilation; ++dy)
          for (int dx = -dilation; dx <= dilation; ++dx) {
            const LatticeIndex n{c[0] + dx, c[1] + dy, c[2] + dz};
            if (n[0] >= lo && n[0] < hi && n[1] >= lo && n[1] < hi && n[2] >= lo && n[2] < hi) grown.push_back(n);
          }
    }
    cells = std::move(grown);
  }
  return make_grid(depth, std::move(cells));
}

namespace {

// Cells of one level grown through crossing faces. Corner values are shared
// across levels through a cache keyed at the finest lattice.
class LevelFlood {
 public:
  LevelFlood(const IndicatorEvaluator& indicator, std::unordered_map<std::uint64_t, double>& cache,
             double iso, int depth, int finest, double margin)
      : indicator_(indicator), cache_(cache), iso_(iso), depth_(depth), to_finest_(1 << (finest - depth)) {
    std::tie(lo_, hi_) = lattice_bounds(depth, margin);
  }

  void grow(const std::vector<LatticeIndex>& seeds) {
    std::vector<LatticeIndex> frontier;
    for (const auto& c : seeds) {
      if (inside(c) && present_.insert(pack(c)).second) frontier.push_back(c);
    }
    while (!frontier.empty()) {
      evaluate(frontier);
      std::vector<LatticeIndex> next;
      for (const auto& c : frontier) {
        const int mask = corner_mask(c);
        cells_.push_back(c);
        straddles_.push_back(mask != 0 && mask != 255);
        if (!straddles_.back()) continue;
        for (int axis = 0; axis < 3; ++axis) {
          for (int side = 0; side < 2; ++side) {
            int in = 0;
            for (int k = 0; k < 8; ++k) {
              if (((k >> axis) & 1) == side && ((mask >> k) & 1)) ++in;
            }
            if (in == 0 || in == 4) continue;
            LatticeIndex n = c;
            n[static_cast<size_t>(axis)] += side ? 1 : -1;
            if (inside(n) && present_.insert(pack(n)).second) next.push_back(n);
          }
        }
      }
      frontier = std::move(next);
    }
  }

  bool reached_crossing(const LatticeIndex& c) const { return crossing_.contains(pack(c)); }

  void index_crossing() {
    crossing_.clear();
    for (size_t i = 0; i < cells_.size(); ++i) {
      if (straddles_[i]) crossing_.insert(pack(cells_[i]));
    }
  }

  const std::vector<LatticeIndex>& cells() const { return cells_; }
  const std::vector<bool>& straddles() const { return straddles_; }

  double value(const LatticeIndex& corner) const { return cache_.at(key(corner)); }

 private:
  bool inside(const LatticeIndex& c) const {
    return c[0] >= lo_ && c[0] < hi_ && c[1] >= lo_ && c[1] < hi_ && c[2] >= lo_ && c[2] < hi_;
  }

  std::uint64_t key(const LatticeIndex& corner) const {
    return pack({corner[0] * to_finest_, corner[1] * to_finest_, corner[2] * to_finest_});
  }

  static LatticeIndex corner(const LatticeIndex& c, int k) {
    return {c[0] + (k & 1), c[1] + ((k >> 1) & 1), c[2] + ((k >> 2) & 1)};
  }

  void evaluate(const std::vector<LatticeIndex>& cells) {
    std::vector<LatticeIndex> missing;
    std::unordered_set<std::uint64_t> queued;
    for (const auto& c : cells) {
      for (int k = 0; k < 8; ++k) {
        const LatticeIndex v = corner(c, k);
        const std::uint64_t id = key(v);
        if (!cache_.contains(id) && queued.insert(id).second) missing.push_back(v);
      }
    }
    if (missing.empty()) return;
    const double h = 1.0 / (1 << depth_);
    Points q(static_cast<Eigen::Index>(missing.size()), 3);
    for (size_t i = 0; i < missing.size(); ++i) {
      for (int a = 0; a < 3; ++a) q(static_cast<Eigen::Index>(i), a) = missing[i][static_cast<size_t>(a)] * h;
    }
    const Eigen::VectorXd v = indicator_(q);
    for (size_t i = 0; i < missing.size(); ++i) cache_.emplace(key(missing[i]), v[static_cast<Eigen::Index>(i)]);
  }

  int corner_mask(const LatticeIndex& c) const {
    int mask = 0;
    for (int k = 0; k < 8; ++k) {
      if (value(corner(c, k)) >= iso_) mask |= 1 << k;
    }
    return mask;
  }

  const IndicatorEvaluator& indicator_;
  std::unordered_map<std::uint64_t, double>& cache_;
  double iso_;
  int depth_;
  std::int32_t to_finest_;
  std::int32_t lo_ = 0, hi_ = 0;
  std::unordered_set<std::uint64_t> present_;
  std::unordered_set<std::uint64_t> crossing_;
  std::vector<LatticeIndex> cells_;
  std::vector<bool> straddles_;
};

std::vector<LatticeIndex> children(const LatticeIndex& p) {
  std::vector<LatticeIndex> out;
  out.reserve(8);
  for (int k = 0; k < 8; ++k) out.push_back({2 * p[0] + (k & 1), 2 * p[1] + ((k >> 1) & 1), 2 * p[2] + ((k >> 2) & 1)});
  return out;
}

}  // namespace

std::pair<QueryGrid, IndicatorField> build_surface_band(const IndicatorEvaluator& indicator,
                                                        const PointCloud& cloud, double iso_value,
                                                        const BandOptions& options) {
  require(options.depth >= 1 && options.depth <= 10, "surface band: depth must be in [1, 10]");
  require(std::isfinite(iso_value), "surface band: iso-value must be finite");
  const int finest = options.depth;
  int depth = std::clamp(options.start_depth, 1, finest);
  std::unordered_map<std::uint64_t, double> cache;

  auto level = std::make_unique<LevelFlood>(indicator, cache, iso_value, depth, finest, options.margin);
  level->grow(build_query_grid(cloud, depth, options.dilation).cell_lattice);

  while (depth < finest) {
    ++depth;
    auto next = std::make_unique<LevelFlood>(indicator, cache, iso_value, depth, finest, options.margin);
    auto seeds = occupied_cells(cloud, depth);
    sort_unique(seeds);
    next->grow(seeds);
    // Every crossing parent must contain a crossing child.
    for (;;) {
      next->index_crossing();
      std::vector<LatticeIndex> missed;
      for (size_t i = 0; i < level->cells().size(); ++i) {
        if (!level->straddles()[i]) continue;
        const auto kids = children(level->cells()[i]);
        if (std::none_of(kids.begin(), kids.end(), [&](const LatticeIndex& k) { return next->reached_crossing(k); })) {
          missed.insert(missed.end(), kids.begin(), kids.end());
        }
      }
      const size_t before = next->cells().size();
      next->grow(missed);
      if (next->cells().size() == before) break;
    }
    level = std::move(next);
  }

  QueryGrid grid = make_grid(finest, level->cells());
  Eigen::VectorXd values(static_cast<Eigen::Index>(grid.corner_lattice.size()));
  for (size_t i = 0; i < grid.corner_lattice.size(); ++i) values[static_cast<Eigen::Index>(i)] = level->value(grid.corner_lattice[i]);
  return {std::move(grid), IndicatorField{std::move(values), iso_value}};
}

}  // namespace agr
