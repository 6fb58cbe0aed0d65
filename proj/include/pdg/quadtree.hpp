#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pdg/types.hpp"

namespace pdg {

/// Rectangular search domain. With an integer flag set, sample coordinates
/// along that axis snap to the nearest integer >= 1 inside the bounds.
struct ParamDomain {
  double u_lo = 0.0;
  double u_hi = 1.0;
  double v_lo = 0.0;
  double v_hi = 1.0;
  bool integer_u = false;
  bool integer_v = false;

  void validate() const {
    if (!(u_lo < u_hi) || !(v_lo < v_hi))
      throw std::invalid_argument("domain bounds must satisfy lo < hi");
  }
};

/// Square region of the value matrix, in units of depth-d cells.
struct Block {
  Index row0 = 0;
  Index col0 = 0;
  Index side = 0;
};

struct QuadtreeSample {
  double u = 0.0;
  double v = 0.0;
  double value = 0.0;
  int level = 0;
};

using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Adaptive evaluation of an objective over a 2^d x 2^d value grid. q is a
/// union of homogeneous square blocks; samples lists every evaluation
/// performed, in evaluation order; evals_per_level records the exact count
/// at each refinement level (level 0 is the single root evaluation).
struct QuadtreeResult {
  int depth = 0;
  ParamDomain domain;
  std::vector<double> ratios;
  Matrix q;
  BoolGrid penalized;
  std::vector<QuadtreeSample> samples;
  std::vector<long> evals_per_level;

  double min_value() const;
  /// First-recorded sample attaining min_value().
  const QuadtreeSample& best_sample() const;
  bool all_penalized() const { return penalized.all(); }

  /// Same values on a finer grid: each cell becomes a 2^(target-depth)
  /// square. Used to aggregate trees built at different resolutions.
  QuadtreeResult expanded(int target_depth) const;
};

using Objective2D = std::function<double(double, double)>;

/// The ceil(ratio * count) blocks with smallest values; ties broken by
/// row-major block origin. ratio must lie in (0, 1].
std::vector<Block> select_blocks(
    const std::vector<std::pair<Block, double>>& blocks, double ratio);

/// Lower-left corner of the block's image in the domain (with integer
/// snapping when the corresponding flag is set).
std::pair<double, double> sample_point(const Block& block,
                                       const ParamDomain& domain, int depth);

/// (row, col) of the depth-d cell containing a domain point, clamped to the
/// grid.
std::pair<Index, Index> cell_of(const ParamDomain& domain, int depth,
                                double u, double v);

/// Breadth-first quadtree refinement: the root is evaluated once, then for
/// each level the fraction ratios[i-1] of current blocks with smallest
/// values is subdivided into four children, each evaluated at one point.
/// An objective that throws marks its cell penalized (value kPenalty)
/// instead of aborting the build. extra_points are evaluated at the end and
/// painted onto the finest cell containing them; they never seed
/// subdivisions.
QuadtreeResult build_quadtree(
    const Objective2D& f, const ParamDomain& domain, int depth,
    const std::vector<double>& ratios,
    const std::vector<std::pair<double, double>>& extra_points = {});

/// Writes a P3 portable pixmap of q with values clipped to
/// [min, scale_max_factor * min] (blue = min, yellow = top of scale,
/// red = penalized).
void write_quadtree_ppm(const QuadtreeResult& result, const std::string& path,
                        double scale_max_factor = 1.5);

/// Writes all samples as CSV with header "u,v,value,level".
void write_quadtree_csv(const QuadtreeResult& result, const std::string& path);

/// Image plus sample table, the standard artifact pair.
void render_quadtree(const QuadtreeResult& result,
                     const std::string& path_prefix,
                     double scale_max_factor = 1.5);

}  // namespace pdg
