#include "dyadic/czop.hpp"

#include "dyadic/weights.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace dyadic {

namespace {

std::string point_string(const Point& p, int dim) {
  std::ostringstream os;
  os.precision(17);
  os << '(' << p[0];
  if (dim == 2) os << ", " << p[1];
  os << ')';
  return os.str();
}

double binomial(int n, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Golub-Welsch nodes and weights on [-1,1]
struct GaussRule {
  Eigen::VectorXd nodes, weights;
};

GaussRule gauss_legendre(int m) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i < m; ++i) j(i, i - 1) = j(i - 1, i) = i / std::sqrt(4.0 * i * i - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  return {es.eigenvalues(), 2.0 * es.eigenvectors().row(0).transpose().array().square().matrix()};
}

void check_cap(const GridLayout& layout) {
  const int cap = resolution_cap(layout.dim);
  if (layout.levels > cap) {
    const double n = static_cast<double>(layout.cell_count());
    std::ostringstream os;
    os << "operator: resolution L=" << layout.levels << " exceeds the cap L<=" << cap << " for dim " << layout.dim << " ("
       << n * n * n << " kernel evaluations per application)";
    throw Error(os.str());
  }
}

}  // namespace

KernelSpec KernelSpec::reference(int dim) { return with_exponent(dim, 2.0 * dim); }

KernelSpec KernelSpec::with_exponent(int dim, double exponent) {
  if (dim != 1 && dim != 2) throw Error("kernel: dim must be 1 or 2");
  KernelSpec k;
  k.dim = dim;
  k.exponent = exponent;
  k.c_k = 1;
  k.c0 = std::pow(4.0, dim);
  // |D^{-2n} - D'^{-2n}| <= 2n * 2|h| * (D/4)^{-2n-1} for |h| <= max(|x-y1|,|x-y2|)/2, doubled for slack
  k.c_omega = 8.0 * dim * std::pow(4.0, 2 * dim + 1);
  return k;
}

double kernel_eval(const KernelSpec& k, const Point& x, const Point& y1, const Point& y2) {
  const double d = (x - y1).norm() + (x - y2).norm();
  if (d == 0 && k.diagonal == DiagonalPolicy::ExcludeCoincident) throw Error("kernel: diagonal triple x = y1 = y2");
  if (k.custom) return k.custom(x, y1, y2);
  const double eps = k.diagonal == DiagonalPolicy::EpsilonRegularize ? k.epsilon : 0.0;
  return std::pow(d + eps, -k.exponent);
}

double dini_norm(const std::function<double(double)>& omega) {
  static const GaussRule rule = gauss_legendre(12);
  double total = 0;
  for (int j = 0; j < 1000; ++j) {
    const double a = std::ldexp(1.0, -j - 1), b = std::ldexp(1.0, -j);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double part = 0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
      const double t = mid + half * rule.nodes[i];
      part += rule.weights[i] * omega(t) / t;
    }
    part *= half;
    total += part;
    if (!std::isfinite(total)) return total;
    if (j > 8 && std::abs(part) <= 1e-17 * std::abs(total)) break;
  }
  return total;
}

KernelReport validate_kernel(const KernelSpec& k, const GridLayout& layout, int samples, std::uint64_t seed) {
  if (samples < 1) throw Error("validate_kernel: need at least one sample");
  if (layout.dim != k.dim) throw Error("validate_kernel: kernel and grid dimension differ");
  KernelReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick(0, layout.cell_count() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double n2 = 2.0 * k.dim;
  const double tol = 1e-12;
  auto direction = [&]() {
    if (k.dim == 1) return Point(unit(rng) < 0.5 ? -1.0 : 1.0, 0.0);
    const double th = 2 * M_PI * unit(rng);
    return Point(std::cos(th), std::sin(th));
  };
  std::string size_witness, smooth_witness;
  for (int s = 0; s < samples; ++s) {
    const Point x = layout.center(pick(rng)), y1 = layout.center(pick(rng)), y2 = layout.center(pick(rng));
    const double d = (x - y1).norm() + (x - y2).norm();
    if (d == 0) continue;
    const double kv = kernel_eval(k, x, y1, y2);
    const double size_ratio = std::abs(kv) * std::pow(d, n2) / k.c_k;
    if (size_ratio > rep.max_size_ratio) {
      rep.max_size_ratio = size_ratio;
      size_witness = "x=" + point_string(x, k.dim) + " y1=" + point_string(y1, k.dim) + " y2=" + point_string(y2, k.dim);
    }
    // smoothness, one perturbed slot at a time
    const double big = std::max((x - y1).norm(), (x - y2).norm());
    for (int slot = 0; slot < 3; ++slot) {
      const Point h = direction() * (0.5 * big * (1.0 - unit(rng)));
      Point xs = x, a = y1, b = y2;
      (slot == 0 ? xs : slot == 1 ? a : b) += h;
      const double kh = kernel_eval(k, xs, a, b);
      const double denom = k.c_k * k.omega(h.norm() / d) / std::pow(d, n2);
      if (!(denom > 0)) continue;
      const double q = std::abs(kv - kh) / denom;
      if (q > rep.max_smooth_ratio) {
        rep.max_smooth_ratio = q;
        smooth_witness = "slot " + std::to_string(slot) + " x=" + point_string(x, k.dim) + " y1=" + point_string(y1, k.dim) +
                         " y2=" + point_string(y2, k.dim) + " h=" + point_string(h, k.dim);
      }
    }
    // non-degeneracy: x = y + r e_axis lies outside B(y,r)
    const Point y = layout.center(pick(rng));
    const double r = layout.cell_side() * std::pow(static_cast<double>(layout.side()), unit(rng));
    Point w = y;
    w[k.dim == 1 ? 0 : static_cast<int>(unit(rng) * 2) % 2] += r;
    const double kd = std::abs(kernel_eval(k, w, y, y));
    rep.measured_c0 = std::max(rep.measured_c0, kd > 0 ? 1.0 / (kd * std::pow(r, n2)) : kInfinity);
  }
  rep.dini = dini_norm([&](double t) { return k.omega(t); });
  if (rep.max_size_ratio > 1 + tol) {
    rep.size_ok = false;
    rep.failures.push_back("size: |K| (|x-y1|+|x-y2|)^{2n} / c_K = " + std::to_string(rep.max_size_ratio) + " at " + size_witness);
  }
  if (rep.max_smooth_ratio > 1 + tol) {
    rep.smooth_ok = false;
    rep.failures.push_back("smoothness: quotient " + std::to_string(rep.max_smooth_ratio) + " at " + smooth_witness);
  }
  if (!std::isfinite(rep.dini)) {
    rep.dini_ok = false;
    rep.failures.push_back("dini: modulus integral diverges");
  }
  if (rep.measured_c0 > k.c0 * (1 + tol)) {
    rep.nondegenerate_ok = false;
    rep.failures.push_back("non-degeneracy: measured c0 " + std::to_string(rep.measured_c0) + " > " + std::to_string(k.c0));
  }
  return rep;
}

int resolution_cap(int dim) { return dim == 1 ? 8 : 4; }

//-----------------------------------------------------------------------------

OperatorInstance::OperatorInstance(KernelSpec kernel, const GridLayout& layout) : kernel_(std::move(kernel)), layout_(layout) {
  if (kernel_.dim != layout.dim) throw Error("operator: kernel and grid dimension differ");
  check_cap(layout);
  const Index n = layout.cell_count();
  centers_.reserve(static_cast<std::size_t>(n));
  for (Index c = 0; c < n; ++c) centers_.push_back(layout.center(c));
  if (!kernel_.custom) {
    dist_.resize(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) dist_(i, j) = (centers_[static_cast<std::size_t>(i)] - centers_[static_cast<std::size_t>(j)]).norm();
  }
}

double OperatorInstance::at(Index x, Index y1, Index y2) const {
  if (x == y1 && x == y2 && kernel_.diagonal == DiagonalPolicy::ExcludeCoincident) return 0.0;
  if (kernel_.custom) return kernel_.custom(center(x), center(y1), center(y2));
  const double eps = kernel_.diagonal == DiagonalPolicy::EpsilonRegularize ? kernel_.epsilon : 0.0;
  return std::pow(dist_(x, y1) + dist_(x, y2) + eps, -kernel_.exponent);
}

Eigen::MatrixXd OperatorInstance::partial(const GridFunction<double>& f2, std::span<const Index> xs, std::span<const Index> ys) const {
  const double h = layout_.cell_measure();
  Eigen::MatrixXd g(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      double acc = 0;
      for (Index y2 : ys) {
        const double v = f2[y2];
        if (v != 0) acc += at(xs[i], ys[j], y2) * v;
      }
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc * h;
    }
  }
  return g;
}

GridFunction<double> apply_T(const OperatorInstance& op, const GridFunction<double>& f1, const GridFunction<double>& f2) {
  if (f1.layout() != op.layout() || f2.layout() != op.layout()) throw Error("apply_T: resolution mismatch");
  std::vector<Index> all(static_cast<std::size_t>(op.layout().cell_count()));
  std::iota(all.begin(), all.end(), Index{0});
  const Eigen::MatrixXd g = op.partial(f2, all, all);
  const Eigen::VectorXd t = g * f1.values().matrix() * op.layout().cell_measure();
  return GridFunction<double>(op.layout(), t.array());
}

GridFunction<double> commutator(const OperatorInstance& op, const GridFunction<double>& b, const GridFunction<double>& f1,
                                const GridFunction<double>& f2, int k, CommutatorMode mode) {
  if (k < 0) throw Error("commutator: k must be >= 0");
  const GridLayout& layout = op.layout();
  if (b.layout() != layout || f1.layout() != layout || f2.layout() != layout) throw Error("commutator: resolution mismatch");
  if (mode == CommutatorMode::ExpansionForm) {
    GridFunction<double> out(layout);
    for (int j = 0; j <= k; ++j) {
      const GridFunction<double> bj(layout, b.values().pow(j));
      const GridFunction<double> t = apply_T(op, bj * f1, f2);
      const double c = binomial(k, j) * (j % 2 ? -1.0 : 1.0);
      out.values() += c * b.values().pow(k - j) * t.values();
    }
    return out;
  }
  const Index n = layout.cell_count();
  const double h2 = layout.cell_measure() * layout.cell_measure();
  GridFunction<double> out(layout);
  for (Index x = 0; x < n; ++x) {
    double acc = 0;
    for (Index y1 = 0; y1 < n; ++y1) {
      if (f1[y1] == 0) continue;
      const double w = std::pow(b[x] - b[y1], k) * f1[y1];
      if (w == 0) continue;
      for (Index y2 = 0; y2 < n; ++y2) acc += w * op.at(x, y1, y2) * f2[y2];
    }
    out[x] = acc * h2;
  }
  return out;
}

//-----------------------------------------------------------------------------

namespace {

double pair_oscillation(const std::vector<double>& d, double s) {
  if (std::isinf(s)) {
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    return *hi - *lo;
  }
  double acc = 0;
  for (double a : d)
    for (double b : d) acc += std::pow(std::abs(a - b), s);
  return std::pow(acc / static_cast<double>(d.size() * d.size()), 1.0 / s);
}

/// T(f1 chi_S, f2 chi_S) at the cells xs.
Eigen::VectorXd truncated(const OperatorInstance& op, const GridFunction<double>& f1, const GridFunction<double>& f2,
                          std::span<const Index> xs, std::span<const Index> support) {
  const Eigen::MatrixXd g = op.partial(f2, xs, support);
  Eigen::VectorXd v(static_cast<Eigen::Index>(support.size()));
  for (std::size_t j = 0; j < support.size(); ++j) v[static_cast<Eigen::Index>(j)] = f1[support[j]];
  return g * v * op.layout().cell_measure();
}

}  // namespace

GridFunction<double> grand_sharp_maximal(const OperatorInstance& op, const GridFunction<double>& f1,
                                         const GridFunction<double>& f2, double s, std::size_t sample_cubes,
                                         std::uint64_t seed) {
  if (!(s >= 1)) throw Error("grand sharp maximal: need 1 <= s <= infinity");
  const GridLayout& layout = op.layout();
  const GridFunction<double> full = apply_T(op, f1, f2);
  std::vector<DyadicCube> cubes = DyadicLattice(layout).cubes();
  if (sample_cubes > 0 && sample_cubes < cubes.size()) {
    std::mt19937_64 rng(seed);
    std::shuffle(cubes.begin(), cubes.end(), rng);
    cubes.resize(sample_cubes);
    std::sort(cubes.begin(), cubes.end());
  }
  CubeField<double> osc(layout);
  for (const auto& q : cubes) {
    const auto xs = cells(q, layout.levels);
    const auto support = dilate_clip(q, 3.0, layout.levels);
    const Eigen::VectorXd local = truncated(op, f1, f2, xs, support);
    std::vector<double> d(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) d[i] = full[xs[i]] - local[static_cast<Eigen::Index>(i)];
    osc(q) = pair_oscillation(d, s);
  }
  return GridFunction<double>(layout, sup_over_containing(osc));
}

std::vector<WeakTrial> make_weak_trials(const GridLayout& layout, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<WeakTrial> out;
  const int top = std::max(0, layout.levels - 1);
  for (int t = 0; t < count; ++t) {
    const int level = std::uniform_int_distribution<int>(0, top)(rng);
    const Index span = Index{1} << level;
    std::uniform_int_distribution<Index> pos(0, span - 1);
    DyadicCube q{layout.dim, level, {pos(rng), layout.dim == 2 ? pos(rng) : 0}};
    const bool flat = unit(rng) < 0.25;
    GridFunction<double> f1(layout), f2(layout);
    for (Index c : cells(q, layout.levels)) {
      f1[c] = flat ? 1.0 : unit(rng);
      f2[c] = flat ? 1.0 : unit(rng);
    }
    out.push_back({q, std::move(f1), std::move(f2)});
  }
  return out;
}

LocalOperator local_T(const OperatorInstance& op) {
  return [&op](const DyadicCube& q, const GridFunction<double>& f1, const GridFunction<double>& f2) {
    const auto xs = cells(q, op.layout().levels);
    const Eigen::VectorXd v = truncated(op, f1, f2, xs, xs);
    return std::vector<double>(v.data(), v.data() + v.size());
  };
}

LocalOperator local_grand_sharp(const OperatorInstance& op, double s) {
  return [&op, s](const DyadicCube& q, const GridFunction<double>& f1, const GridFunction<double>& f2) {
    const GridFunction<double> m = grand_sharp_maximal(op, f1, f2, s);
    std::vector<double> out;
    for (Index c : cells(q, op.layout().levels)) out.push_back(m[c]);
    return out;
  };
}

WeakBoundEstimate estimate_local_weak_bound(const LocalOperator& op, double r1, double r2, double lambda,
                                            std::span<const WeakTrial> trials) {
  if (!(lambda > 0 && lambda < 1)) throw Error("local weak bound: need 0 < lambda < 1");
  WeakBoundEstimate est;
  int flat = 0;
  for (const auto& t : trials) {
    const double a = average(t.f1, t.cube, r1) * average(t.f2, t.cube, r2);
    if (!(a > 0)) continue;
    std::vector<double> v = op(t.cube, t.f1, t.f2);
    for (double& x : v) x = std::abs(x) / a;
    std::sort(v.begin(), v.end(), std::greater<>());
    const auto idx = static_cast<std::size_t>(std::floor(lambda * static_cast<double>(v.size())));
    est.phi = std::max(est.phi, idx < v.size() ? v[idx] : 0.0);
    ++est.used_trials;
    if ((t.f1.values() == t.f1.values().maxCoeff()).count() == static_cast<Eigen::Index>(cells(t.cube, t.f1.levels()).size())) ++flat;
  }
  std::ostringstream os;
  os << est.used_trials << " nonzero trials (" << flat << " with constant f1), lambda=" << lambda << ", r=(" << r1 << ',' << r2 << ')';
  est.ensemble = os.str();
  return est;
}

PartnerCube select_partner_cube(const DyadicCube& q, double a, const KernelSpec& k, int levels) {
  if (!(a >= 3)) throw Error("partner cube: need A >= 3");
  if (q.level > levels) throw Error("partner cube: cube finer than the grid");
  const Index m = static_cast<Index>(std::ceil(a));
  const double reach = std::pow(k.c0 * k.c_k, 1.0 / (2.0 * q.dim)) * a;
  if (static_cast<double>(m) > reach) throw Error("partner cube: centre distance exceeds the admissible window");
  const Index span = Index{1} << q.level;
  for (int axis = 0; axis < q.dim; ++axis) {
    for (Index sign : {Index{1}, Index{-1}}) {
      DyadicCube p = q;
      p.origin[static_cast<std::size_t>(axis)] += sign * m;
      if (p.origin[static_cast<std::size_t>(axis)] < 0 || p.origin[static_cast<std::size_t>(axis)] >= span) continue;
      const GridLayout layout(q.dim, levels);
      const auto xs = cells(p, levels), ys = cells(q, levels);
      double lo = kInfinity;
      for (Index x : xs)
        for (Index y1 : ys)
          for (Index y2 : ys) lo = std::min(lo, kernel_eval(k, layout.center(x), layout.center(y1), layout.center(y2)));
      return {p, lo * q.measure() * q.measure(), static_cast<double>(m) * q.side()};
    }
  }
  throw Error("partner cube: cube does not fit (A=" + std::to_string(a) + ", Q=" + q.to_string() + ")");
}

}  // namespace dyadic
