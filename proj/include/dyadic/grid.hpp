#ifndef DYADIC_GRID_HPP_
#define DYADIC_GRID_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dyadic {

using Index = std::int64_t;

template <typename Scalar>
using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape of the finest grid on [0,1)^dim: 2^levels cells per axis.
struct GridLayout {
  int dim = 1;
  int levels = 0;

  GridLayout() = default;
  GridLayout(int d, int l) : dim(d), levels(l) {
    if (d != 1 && d != 2) throw Error("grid: dimension must be 1 or 2, got " + std::to_string(d));
    if (l < 0 || l > 24 / d) throw Error("grid: resolution out of range: " + std::to_string(l));
  }

  Index side() const { return Index{1} << levels; }
  Index cell_count() const { return Index{1} << (dim * levels); }
  double cell_measure() const { return std::ldexp(1.0, -dim * levels); }
  double cell_side() const { return std::ldexp(1.0, -levels); }

  /// Integer coordinates of a finest cell; row-major, axis 0 most significant.
  std::array<Index, 2> coords(Index cell) const {
    if (dim == 1) return {cell, 0};
    return {cell >> levels, cell & (side() - 1)};
  }
  Index cell_at(Index i0, Index i1 = 0) const { return dim == 1 ? i0 : (i0 << levels) + i1; }

  Eigen::Vector2d center(Index cell) const {
    const auto c = coords(cell);
    const double h = cell_side();
    return {(static_cast<double>(c[0]) + 0.5) * h, dim == 1 ? 0.0 : (static_cast<double>(c[1]) + 0.5) * h};
  }

  friend bool operator==(const GridLayout&, const GridLayout&) = default;
};

/// Q = prod_i [k_i 2^-j, (k_i+1) 2^-j).
struct DyadicCube {
  int dim = 1;
  int level = 0;
  std::array<Index, 2> origin{0, 0};

  static DyadicCube unit(int dim) { return DyadicCube{dim, 0, {0, 0}}; }

  double side() const { return std::ldexp(1.0, -level); }
  double measure() const { return std::ldexp(1.0, -dim * level); }

  /// Position of this cube among the cubes of its level.
  Index linear_index() const { return dim == 1 ? origin[0] : (origin[0] << level) + origin[1]; }

  static DyadicCube from_linear(int dim, int level, Index idx) {
    if (dim == 1) return DyadicCube{1, level, {idx, 0}};
    return DyadicCube{2, level, {idx >> level, idx & ((Index{1} << level) - 1)}};
  }

  DyadicCube parent() const {
    if (level == 0) throw Error("grid: the unit cube has no parent");
    return DyadicCube{dim, level - 1, {origin[0] >> 1, origin[1] >> 1}};
  }

  /// Ancestor at a coarser level (or this cube itself).
  DyadicCube ancestor(int at_level) const {
    const int shift = level - at_level;
    if (shift < 0) throw Error("grid: ancestor level below cube level");
    return DyadicCube{dim, at_level, {origin[0] >> shift, origin[1] >> shift}};
  }

  bool contains(const DyadicCube& other) const {
    return other.level >= level && other.ancestor(level) == *this;
  }
  bool disjoint(const DyadicCube& other) const { return !contains(other) && !other.contains(*this); }

  Eigen::Vector2d center() const {
    const double h = side();
    return {(static_cast<double>(origin[0]) + 0.5) * h, dim == 1 ? 0.0 : (static_cast<double>(origin[1]) + 0.5) * h};
  }

  std::string to_string() const {
    std::string s = "Q(level=" + std::to_string(level) + ", k=" + std::to_string(origin[0]);
    if (dim == 2) s += "," + std::to_string(origin[1]);
    return s + ")";
  }

  friend bool operator==(const DyadicCube&, const DyadicCube&) = default;
  friend auto operator<=>(const DyadicCube& a, const DyadicCube& b) {
    if (auto c = a.level <=> b.level; c != 0) return c;
    return a.origin <=> b.origin;
  }
};

/// Exactly 2^dim subcubes one level down; throws on a leaf of the lattice.
inline std::vector<DyadicCube> children(const DyadicCube& q, int max_level) {
  if (q.level >= max_level) throw Error("grid: leaf cube " + q.to_string() + " has no children at resolution " + std::to_string(max_level));
  std::vector<DyadicCube> out;
  out.reserve(std::size_t{1} << q.dim);
  const Index b0 = q.origin[0] << 1, b1 = q.origin[1] << 1;
  if (q.dim == 1) {
    out.push_back({1, q.level + 1, {b0, 0}});
    out.push_back({1, q.level + 1, {b0 + 1, 0}});
  } else {
    for (Index a = 0; a < 2; ++a)
      for (Index c = 0; c < 2; ++c) out.push_back({2, q.level + 1, {b0 + a, b1 + c}});
  }
  return out;
}

/// Finest cells inside Q, ascending.
inline std::vector<Index> cells(const DyadicCube& q, int levels) {
  if (q.level > levels) throw Error("grid: cube finer than the grid");
  const int shift = levels - q.level;
  const Index width = Index{1} << shift;
  std::vector<Index> out;
  const GridLayout layout(q.dim, levels);
  if (q.dim == 1) {
    out.resize(static_cast<std::size_t>(width));
    for (Index i = 0; i < width; ++i) out[static_cast<std::size_t>(i)] = (q.origin[0] << shift) + i;
  } else {
    out.reserve(static_cast<std::size_t>(width * width));
    for (Index i = 0; i < width; ++i)
      for (Index j = 0; j < width; ++j) out.push_back(layout.cell_at((q.origin[0] << shift) + i, (q.origin[1] << shift) + j));
  }
  return out;
}

/// Dyadic cube at `level` containing a finest cell.
inline DyadicCube cube_of_cell(const GridLayout& layout, Index cell, int level) {
  const auto c = layout.coords(cell);
  const int shift = layout.levels - level;
  return DyadicCube{layout.dim, level, {c[0] >> shift, layout.dim == 1 ? 0 : c[1] >> shift}};
}

/// Cells whose centers fall in the concentric dilate factor*Q, clipped to [0,1)^n.
inline std::vector<Index> dilate_clip(const DyadicCube& q, double factor, int levels) {
  if (!(factor >= 1.0)) throw Error("grid: dilation factor must be >= 1");
  const GridLayout layout(q.dim, levels);
  const Eigen::Vector2d c = q.center();
  const double half = 0.5 * factor * q.side();
  const double h = layout.cell_side();
  std::array<Index, 2> lo{0, 0}, hi{1, 1};
  for (int a = 0; a < q.dim; ++a) {
    // cell i is inside when c-half <= (i+1/2)h < c+half
    const double from = (c[a] - half) / h - 0.5;
    const double to = (c[a] + half) / h - 0.5;
    lo[a] = std::clamp<Index>(static_cast<Index>(std::ceil(from)), 0, layout.side());
    Index last = static_cast<Index>(std::ceil(to)) - 1;
    hi[a] = std::clamp<Index>(last + 1, 0, layout.side());
  }
  std::vector<Index> out;
  for (Index i = lo[0]; i < hi[0]; ++i) {
    if (q.dim == 1) {
      out.push_back(i);
    } else {
      for (Index j = lo[1]; j < hi[1]; ++j) out.push_back(layout.cell_at(i, j));
    }
  }
  return out;
}

/// All dyadic cubes of [0,1)^dim at levels 0..levels.
class DyadicLattice {
 public:
  DyadicLattice(int dim, int levels) : layout_(dim, levels) {}
  explicit DyadicLattice(const GridLayout& layout) : layout_(layout) {}

  const GridLayout& layout() const { return layout_; }
  int dim() const { return layout_.dim; }
  int levels() const { return layout_.levels; }

  Index cubes_at_level(int j) const { return Index{1} << (layout_.dim * j); }
  Index cube_count() const {
    Index n = 0;
    for (int j = 0; j <= layout_.levels; ++j) n += cubes_at_level(j);
    return n;
  }

  std::vector<DyadicCube> cubes(int level) const {
    std::vector<DyadicCube> out;
    out.reserve(static_cast<std::size_t>(cubes_at_level(level)));
    for (Index i = 0; i < cubes_at_level(level); ++i) out.push_back(DyadicCube::from_linear(layout_.dim, level, i));
    return out;
  }

  /// Coarse to fine.
  std::vector<DyadicCube> cubes() const {
    std::vector<DyadicCube> out;
    out.reserve(static_cast<std::size_t>(cube_count()));
    for (int j = 0; j <= layout_.levels; ++j) {
      for (Index i = 0; i < cubes_at_level(j); ++i) out.push_back(DyadicCube::from_linear(layout_.dim, j, i));
    }
    return out;
  }

 private:
  GridLayout layout_;
};

//-----------------------------------------------------------------------------
// functions on the finest grid

template <typename Scalar = double>
class GridFunction {
 public:
  using scalar_type = Scalar;

  GridFunction() = default;
  explicit GridFunction(const GridLayout& layout) : layout_(layout), values_(Values<Scalar>::Zero(layout.cell_count())) {}

  template <typename Derived>
  GridFunction(const GridLayout& layout, const Eigen::ArrayBase<Derived>& values) : layout_(layout), values_(values) {
    if (values_.size() != layout_.cell_count())
      throw Error("grid: value count " + std::to_string(values_.size()) + " does not match 2^{nL} = " + std::to_string(layout_.cell_count()));
  }

  static GridFunction constant(const GridLayout& layout, Scalar c) {
    return GridFunction(layout, Values<Scalar>::Constant(layout.cell_count(), c));
  }

  static GridFunction indicator(const GridLayout& layout, const DyadicCube& q) {
    GridFunction f(layout);
    for (Index c : cells(q, layout.levels)) f[c] = Scalar(1);
    return f;
  }

  static GridFunction indicator(const GridLayout& layout, const std::vector<Index>& cell_set) {
    GridFunction f(layout);
    for (Index c : cell_set) f[c] = Scalar(1);
    return f;
  }

  const GridLayout& layout() const { return layout_; }
  int dim() const { return layout_.dim; }
  int levels() const { return layout_.levels; }
  Index size() const { return values_.size(); }

  const Values<Scalar>& values() const { return values_; }
  Values<Scalar>& values() { return values_; }

  Scalar operator[](Index i) const { return values_[i]; }
  Scalar& operator[](Index i) { return values_[i]; }

  /// Lebesgue integral of the piecewise-constant function.
  Scalar integral() const { return values_.sum() * Scalar(layout_.cell_measure()); }

  GridFunction abs() const { return GridFunction(layout_, values_.abs()); }
  GridFunction restricted(const std::vector<Index>& cell_set) const {
    GridFunction out(layout_);
    for (Index c : cell_set) out[c] = values_[c];
    return out;
  }

  GridFunction& operator+=(const GridFunction& o) { check(o); values_ += o.values_; return *this; }
  GridFunction& operator-=(const GridFunction& o) { check(o); values_ -= o.values_; return *this; }
  GridFunction& operator*=(const GridFunction& o) { check(o); values_ *= o.values_; return *this; }
  GridFunction& operator*=(Scalar c) { values_ *= c; return *this; }

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(GridFunction a, const GridFunction& b) { return a *= b; }
  friend GridFunction operator*(Scalar c, GridFunction a) { return a *= c; }
  friend GridFunction operator*(GridFunction a, Scalar c) { return a *= c; }

 private:
  void check(const GridFunction& o) const {
    if (!(o.layout_ == layout_)) throw Error("grid: layout mismatch");
  }

  GridLayout layout_;
  Values<Scalar> values_;
};

/// A strictly positive GridFunction.
template <typename Scalar = double>
class Weight : public GridFunction<Scalar> {
 public:
  Weight() = default;
  explicit Weight(GridFunction<Scalar> f) : GridFunction<Scalar>(std::move(f)) {
    const auto& v = this->values();
    for (Index i = 0; i < v.size(); ++i) {
      if (!(v[i] > Scalar(0)) || !std::isfinite(static_cast<double>(v[i])))
        throw Error("weight: value at cell " + std::to_string(i) + " is not strictly positive and finite");
    }
  }
  template <typename Derived>
  Weight(const GridLayout& layout, const Eigen::ArrayBase<Derived>& values) : Weight(GridFunction<Scalar>(layout, values)) {}

  static Weight unit(const GridLayout& layout) { return Weight(GridFunction<Scalar>::constant(layout, Scalar(1))); }

  /// Cellwise power; stays positive.
  Weight pow(Scalar e) const { return Weight(this->layout(), this->values().pow(e)); }

  /// mu(Q) = integral of the weight over Q.
  Scalar measure(const std::vector<Index>& cell_set) const {
    Scalar s(0);
    for (Index c : cell_set) s += this->values()[c];
    return s * Scalar(this->layout().cell_measure());
  }
};

//-----------------------------------------------------------------------------
// per-cube fields, indexed by (level, linear index)

template <typename Scalar = double>
class CubeField {
 public:
  CubeField() = default;
  explicit CubeField(const GridLayout& layout, Scalar fill = Scalar(0)) : layout_(layout) {
    levels_.reserve(static_cast<std::size_t>(layout.levels + 1));
    for (int j = 0; j <= layout.levels; ++j) levels_.push_back(Values<Scalar>::Constant(Index{1} << (layout.dim * j), fill));
  }

  const GridLayout& layout() const { return layout_; }
  Values<Scalar>& level(int j) { return levels_[static_cast<std::size_t>(j)]; }
  const Values<Scalar>& level(int j) const { return levels_[static_cast<std::size_t>(j)]; }

  Scalar operator()(const DyadicCube& q) const { return levels_[static_cast<std::size_t>(q.level)][q.linear_index()]; }
  Scalar& operator()(const DyadicCube& q) { return levels_[static_cast<std::size_t>(q.level)][q.linear_index()]; }

  Scalar max() const {
    Scalar m = levels_.front().maxCoeff();
    for (const auto& l : levels_) m = std::max(m, l.maxCoeff());
    return m;
  }

  /// Cube attaining the max (coarsest first on ties).
  DyadicCube argmax() const {
    DyadicCube best = DyadicCube::unit(layout_.dim);
    Scalar m = levels_.front()[0];
    for (int j = 0; j <= layout_.levels; ++j) {
      const auto& l = levels_[static_cast<std::size_t>(j)];
      for (Index i = 0; i < l.size(); ++i) {
        if (l[i] > m) {
          m = l[i];
          best = DyadicCube::from_linear(layout_.dim, j, i);
        }
      }
    }
    return best;
  }

 private:
  GridLayout layout_;
  std::vector<Values<Scalar>> levels_;
};

namespace detail {

/// Index of the parent at level j-1 of cube `i` at level j.
inline Index parent_index(int dim, int j, Index i) {
  if (dim == 1) return i >> 1;
  const Index row = i >> j, col = i & ((Index{1} << j) - 1);
  return ((row >> 1) << (j - 1)) + (col >> 1);
}

}  // namespace detail

/// Sums over every dyadic cube of cell values (no cell measure applied), built bottom-up.
template <typename Derived>
CubeField<typename Derived::Scalar> cube_sums(const GridLayout& layout, const Eigen::ArrayBase<Derived>& cellvals) {
  using Scalar = typename Derived::Scalar;
  CubeField<Scalar> out(layout);
  out.level(layout.levels) = cellvals;
  for (int j = layout.levels; j > 0; --j) {
    const auto& fine = out.level(j);
    auto& coarse = out.level(j - 1);
    for (Index i = 0; i < fine.size(); ++i) coarse[detail::parent_index(layout.dim, j, i)] += fine[i];
  }
  return out;
}

/// Cells per cube at level j.
inline double cells_per_cube(const GridLayout& layout, int j) { return std::ldexp(1.0, layout.dim * (layout.levels - j)); }

/// Cellwise sup over containing cubes: top-down running max, returned at the finest level.
template <typename Scalar>
Values<Scalar> sup_over_containing(const CubeField<Scalar>& field) {
  const GridLayout& layout = field.layout();
  Values<Scalar> running = field.level(0);
  for (int j = 1; j <= layout.levels; ++j) {
    const auto& lv = field.level(j);
    Values<Scalar> next(lv.size());
    for (Index i = 0; i < lv.size(); ++i) next[i] = std::max(lv[i], running[detail::parent_index(layout.dim, j, i)]);
    running = std::move(next);
  }
  return running;
}

/// Cellwise sum over containing cubes.
template <typename Scalar>
Values<Scalar> sum_over_containing(const CubeField<Scalar>& field) {
  const GridLayout& layout = field.layout();
  Values<Scalar> running = field.level(0);
  for (int j = 1; j <= layout.levels; ++j) {
    const auto& lv = field.level(j);
    Values<Scalar> next(lv.size());
    for (Index i = 0; i < lv.size(); ++i) next[i] = lv[i] + running[detail::parent_index(layout.dim, j, i)];
    running = std::move(next);
  }
  return running;
}

}  // namespace dyadic

#endif  // DYADIC_GRID_HPP_
