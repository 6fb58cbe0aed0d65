#include "pdg/quadtree.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "pdg/runtime_model.hpp"  // kPenalty

namespace pdg {

double QuadtreeResult::min_value() const { return best_sample().value; }

const QuadtreeSample& QuadtreeResult::best_sample() const {
  if (samples.empty())
    throw std::logic_error("quadtree holds no samples");
  const QuadtreeSample* best = &samples.front();
  for (const auto& s : samples)
    if (s.value < best->value) best = &s;
  return *best;
}

QuadtreeResult QuadtreeResult::expanded(int target_depth) const {
  if (target_depth < depth)
    throw std::invalid_argument("cannot shrink a quadtree");
  if (target_depth == depth) return *this;
  const Index scale = Index(1) << (target_depth - depth);
  const Index n = q.rows() * scale;
  QuadtreeResult out = *this;
  out.depth = target_depth;
  out.q = Matrix(n, n);
  out.penalized = BoolGrid(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) {
      out.q(r, c) = q(r / scale, c / scale);
      out.penalized(r, c) = penalized(r / scale, c / scale);
    }
  return out;
}

std::vector<Block> select_blocks(
    const std::vector<std::pair<Block, double>>& blocks, double ratio) {
  if (!(ratio > 0.0) || ratio > 1.0)
    throw std::invalid_argument("ratio must lie in (0, 1]");
  if (blocks.empty()) return {};
  std::vector<std::pair<Block, double>> sorted = blocks;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    if (a.first.row0 != b.first.row0) return a.first.row0 < b.first.row0;
    return a.first.col0 < b.first.col0;
  });
  const auto keep = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(sorted.size())));
  std::vector<Block> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep && i < sorted.size(); ++i)
    out.push_back(sorted[i].first);
  return out;
}

std::pair<double, double> sample_point(const Block& block,
                                       const ParamDomain& domain, int depth) {
  const double cells = static_cast<double>(Index(1) << depth);
  double u = domain.u_lo +
             static_cast<double>(block.col0) / cells * (domain.u_hi - domain.u_lo);
  double v = domain.v_lo +
             static_cast<double>(block.row0) / cells * (domain.v_hi - domain.v_lo);
  auto snap = [](double x, double lo, double hi) {
    double s = std::round(x);
    s = std::max(s, 1.0);
    s = std::max(s, std::ceil(lo));
    s = std::min(s, std::floor(hi));
    return s;
  };
  if (domain.integer_u) u = snap(u, domain.u_lo, domain.u_hi);
  if (domain.integer_v) v = snap(v, domain.v_lo, domain.v_hi);
  return {u, v};
}

std::pair<Index, Index> cell_of(const ParamDomain& domain, int depth,
                                double u, double v) {
  const Index cells = Index(1) << depth;
  auto axis = [cells](double x, double lo, double hi) {
    const double t = (x - lo) / (hi - lo) * static_cast<double>(cells);
    return std::clamp<Index>(static_cast<Index>(std::floor(t)), 0, cells - 1);
  };
  return {axis(v, domain.v_lo, domain.v_hi), axis(u, domain.u_lo, domain.u_hi)};
}

namespace {

void paint(Matrix& q, BoolGrid& penalized, const Block& b, double value) {
  const bool bad = !(value < kPenalty) || !std::isfinite(value);
  q.block(b.row0, b.col0, b.side, b.side).setConstant(value);
  penalized.block(b.row0, b.col0, b.side, b.side).setConstant(bad);
}

double safe_eval(const Objective2D& f, double u, double v) {
  try {
    const double value = f(u, v);
    return std::isfinite(value) ? value : kPenalty;
  } catch (const std::exception&) {
    return kPenalty;
  }
}

}  // namespace

QuadtreeResult build_quadtree(
    const Objective2D& f, const ParamDomain& domain, int depth,
    const std::vector<double>& ratios,
    const std::vector<std::pair<double, double>>& extra_points) {
  domain.validate();
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (ratios.size() != static_cast<std::size_t>(depth))
    throw std::invalid_argument("need one subdivision ratio per level");
  for (double s : ratios)
    if (!(s > 0.0) || s > 1.0)
      throw std::invalid_argument("ratios must lie in (0, 1]");

  const Index cells = Index(1) << depth;
  QuadtreeResult result;
  result.depth = depth;
  result.domain = domain;
  result.ratios = ratios;
  result.q = Matrix(cells, cells);
  result.penalized = BoolGrid(cells, cells);

  const Block root{0, 0, cells};
  auto evaluate = [&](const Block& b, int level) {
    const auto [u, v] = sample_point(b, domain, depth);
    const double value = safe_eval(f, u, v);
    paint(result.q, result.penalized, b, value);
    result.samples.push_back({u, v, value, level});
    return value;
  };

  std::vector<std::pair<Block, double>> current;
  current.emplace_back(root, evaluate(root, 0));
  result.evals_per_level.push_back(1);

  for (int level = 1; level <= depth; ++level) {
    std::vector<Block> chosen =
        select_blocks(current, ratios[static_cast<std::size_t>(level - 1)]);
    std::sort(chosen.begin(), chosen.end(), [](const Block& a, const Block& b) {
      return a.row0 != b.row0 ? a.row0 < b.row0 : a.col0 < b.col0;
    });
    std::vector<std::pair<Block, double>> next;
    next.reserve(chosen.size() * 4);
    for (const Block& b : chosen) {
      const Index h = b.side / 2;
      const Block children[4] = {{b.row0, b.col0, h},
                                 {b.row0, b.col0 + h, h},
                                 {b.row0 + h, b.col0, h},
                                 {b.row0 + h, b.col0 + h, h}};
      for (const Block& child : children)
        next.emplace_back(child, evaluate(child, level));
    }
    result.evals_per_level.push_back(static_cast<long>(next.size()));
    current = std::move(next);
  }

  for (const auto& [u, v] : extra_points) {
    const double value = safe_eval(f, u, v);
    const auto [row, col] = cell_of(domain, depth, u, v);
    paint(result.q, result.penalized, Block{row, col, 1}, value);
    result.samples.push_back({u, v, value, depth});
  }
  return result;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_quadtree_ppm(const QuadtreeResult& result, const std::string& path,
                        double scale_max_factor) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open image file: " + path);
  const Index n = result.q.rows();

  double lo = 0.0, hi = 1.0;
  bool have_range = false;
  if (!result.penalized.all()) {
    lo = std::numeric_limits<double>::infinity();
    double max_seen = -std::numeric_limits<double>::infinity();
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c)
        if (!result.penalized(r, c)) {
          lo = std::min(lo, result.q(r, c));
          max_seen = std::max(max_seen, result.q(r, c));
        }
    hi = lo > 0.0 ? scale_max_factor * lo : max_seen;
    if (!(hi > lo)) hi = lo + 1.0;
    have_range = true;
  }

  f << "P3\n" << n << ' ' << n << "\n255\n";
  // Row 0 of q at the bottom: v increases upward in the image.
  for (Index r = n - 1; r >= 0; --r) {
    for (Index c = 0; c < n; ++c) {
      if (c) f << ' ';
      if (result.penalized(r, c) || !have_range) {
        f << "255 0 0";
      } else {
        const double t =
            std::clamp((result.q(r, c) - lo) / (hi - lo), 0.0, 1.0);
        const int ry = static_cast<int>(std::lround(255.0 * t));
        f << ry << ' ' << ry << ' ' << 255 - ry;
      }
    }
    f << '\n';
  }
}

void write_quadtree_csv(const QuadtreeResult& result,
                        const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open csv file: " + path);
  f << "u,v,value,level\n";
  for (const auto& s : result.samples)
    f << format_double(s.u) << ',' << format_double(s.v) << ','
      << format_double(s.value) << ',' << s.level << '\n';
}

void render_quadtree(const QuadtreeResult& result,
                     const std::string& path_prefix,
                     double scale_max_factor) {
  write_quadtree_ppm(result, path_prefix + ".ppm", scale_max_factor);
  write_quadtree_csv(result, path_prefix + ".csv");
}

}  // namespace pdg
