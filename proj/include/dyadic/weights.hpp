#ifndef DYADIC_WEIGHTS_HPP_
#define DYADIC_WEIGHTS_HPP_

#include "dyadic/grid.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace dyadic {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Hoelder conjugate; 1 <-> infinity.
inline double conjugate(double p) {
  if (std::isinf(p)) return 1.0;
  if (p == 1.0) return kInfinity;
  return p / (p - 1.0);
}

enum class Branch { DiagonalUp, DiagonalDown };  // p1 <= q1, q1 < p1

/// Lebesgue and weight exponents of the bilinear two-weight problem.
/// Only the primary exponents are stored; everything else is derived on demand.
struct ExponentTuple {
  double p1 = 2, p2 = 2, q1 = 2, r1 = 1, r2 = 1, s = kInfinity;
  int k1 = 1;

  double p() const { return 1.0 / (1.0 / p1 + 1.0 / p2); }
  double q() const { return 1.0 / (1.0 / q1 + 1.0 / p2); }
  double s_conj() const { return conjugate(s); }
  double alpha1() const { return k1 == 0 ? 0.0 : 1.0 / (p1 * k1) - 1.0 / (q1 * k1); }  // no Bloom weight at k1 = 0
  double beta1() const { return r1 * (1.0 / p1 - 1.0 / q1); }
  std::optional<double> t1() const {
    const double a = alpha1();
    if (a < 0) return -1.0 / a;
    return std::nullopt;
  }
  Branch branch() const { return p1 <= q1 ? Branch::DiagonalUp : Branch::DiagonalDown; }

  /// Empty when admissible, otherwise a diagnostic naming the violated constraint.
  std::string admissibility_error() const {
    std::ostringstream os;
    if (!(r1 >= 1 && r1 < p1)) os << "need 1 <= r1 < p1 (r1=" << r1 << ", p1=" << p1 << "); ";
    if (!(r1 < q1)) os << "need r1 < q1 (r1=" << r1 << ", q1=" << q1 << "); ";
    if (!(r2 >= 1 && r2 < p2)) os << "need 1 <= r2 < p2 (r2=" << r2 << ", p2=" << p2 << "); ";
    if (!(p() > 1 && p() < s)) os << "need 1 < p < s (p=" << p() << ", s=" << s << "); ";
    if (!(q() > 1 && q() < s)) os << "need 1 < q < s (q=" << q() << ", s=" << s << "); ";
    if (k1 < 0) os << "need k1 >= 0; ";
    if (!(1.0 + alpha1() > 0)) os << "need 1 + alpha1 > 0; ";
    return os.str();
  }
  void validate() const {
    if (auto e = admissibility_error(); !e.empty()) throw Error("exponents: " + e);
  }
};

/// Exponents of an A_{p,r} class for a pair of weights: (p1,p2) with r = (r1, r2, s').
struct AprExponents {
  double p1 = 2, p2 = 2, r1 = 1, r2 = 1, s = kInfinity;

  double p() const { return 1.0 / (1.0 / p1 + 1.0 / p2); }

  /// (omega1, omega2) pair: vec p = (p1, p2).
  static AprExponents primal(const ExponentTuple& e) { return {e.p1, e.p2, e.r1, e.r2, e.s}; }
  /// (lambda1, omega2) pair: vec q = (q1, p2).
  static AprExponents target(const ExponentTuple& e) { return {e.q1, e.p2, e.r1, e.r2, e.s}; }

  void validate() const {
    std::ostringstream os;
    if (!(r1 >= 1 && r1 <= p1)) os << "need 1 <= r1 <= p1; ";
    if (!(r2 >= 1 && r2 <= p2)) os << "need 1 <= r2 <= p2; ";
    if (!(p() < s)) os << "need p < r3' = s; ";
    if (!os.str().empty()) throw Error("A_{p,r} exponents: " + os.str());
  }
};

struct WeightTriple {
  Weight<double> omega1, omega2, lambda1;

  Weight<double> omega() const { return Weight<double>(omega1.layout(), omega1.values() * omega2.values()); }
  Weight<double> target() const { return Weight<double>(lambda1.layout(), lambda1.values() * omega2.values()); }
};

//-----------------------------------------------------------------------------
// averages

/// <f>^mu_{r,Q}; Lebesgue when mu is null; r = infinity gives the max of |f| over the cells of Q.
template <typename Scalar>
Scalar average(const GridFunction<Scalar>& f, const DyadicCube& q, double r, const Weight<Scalar>* mu = nullptr) {
  if (!(r > 0)) throw Error("average: exponent r must be positive");
  const auto cs = cells(q, f.levels());
  if (std::isinf(r)) {
    Scalar m(0);
    for (Index c : cs) m = std::max<Scalar>(m, std::abs(f[c]));
    return m;
  }
  Scalar num(0), den(0);
  for (Index c : cs) {
    const Scalar w = mu ? (*mu)[c] : Scalar(1);
    num += std::pow(std::abs(f[c]), Scalar(r)) * w;
    den += w;
  }
  return std::pow(num / den, Scalar(1.0 / r));
}

/// <f>^mu_{r,Q} for every cube at once.
template <typename Scalar>
CubeField<Scalar> cube_averages(const GridFunction<Scalar>& f, double r, const Weight<Scalar>* mu = nullptr) {
  if (!(r > 0)) throw Error("average: exponent r must be positive");
  const GridLayout& layout = f.layout();
  if (std::isinf(r)) {
    CubeField<Scalar> out(layout);
    out.level(layout.levels) = f.values().abs();
    for (int j = layout.levels; j > 0; --j) {
      for (Index i = 0; i < out.level(j).size(); ++i) {
        Scalar& p = out.level(j - 1)[detail::parent_index(layout.dim, j, i)];
        p = std::max(p, out.level(j)[i]);
      }
    }
    return out;
  }
  const Values<Scalar> powered = f.values().abs().pow(Scalar(r));
  if (mu) {
    CubeField<Scalar> num = cube_sums(layout, (powered * mu->values()).eval());
    const CubeField<Scalar> den = cube_sums(layout, mu->values());
    for (int j = 0; j <= layout.levels; ++j) num.level(j) = (num.level(j) / den.level(j)).pow(Scalar(1.0 / r));
    return num;
  }
  CubeField<Scalar> num = cube_sums(layout, powered);
  for (int j = 0; j <= layout.levels; ++j) num.level(j) = (num.level(j) / Scalar(cells_per_cube(layout, j))).pow(Scalar(1.0 / r));
  return num;
}

/// mu(Q) for every cube.
template <typename Scalar>
CubeField<Scalar> cube_measures(const Weight<Scalar>& mu) {
  CubeField<Scalar> out = cube_sums(mu.layout(), mu.values());
  for (int j = 0; j <= mu.layout().levels; ++j) out.level(j) *= Scalar(mu.layout().cell_measure());
  return out;
}

//-----------------------------------------------------------------------------
// characteristics, by exhaustive enumeration of the lattice

/// [w]_{A_p} = max_Q <w>_Q <w^{1-p'}>_Q^{p-1}.
template <typename Scalar>
Scalar ap_characteristic(const Weight<Scalar>& w, double p) {
  if (!(p > 1) || std::isinf(p)) throw Error("A_p: need 1 < p < infinity");
  const double dual = 1.0 - conjugate(p);
  const auto a = cube_averages(w, 1.0);
  const auto b = cube_averages(Weight<Scalar>(w.pow(Scalar(dual))), 1.0);
  Scalar best(0);
  for (int j = 0; j <= w.levels(); ++j) best = std::max(best, (a.level(j) * b.level(j).pow(Scalar(p - 1))).maxCoeff());
  return best;
}

/// Fujii-Wilson [w]_{A_inf} with the dyadic maximal operator localized to Q:
/// max_Q w(Q)^{-1} int_Q sup_{x in R subset Q} <w>_R dx.
template <typename Scalar>
Scalar ainfty_characteristic(const Weight<Scalar>& w) {
  const GridLayout& layout = w.layout();
  const auto avg = cube_averages(w, 1.0);
  const auto sums = cube_sums(layout, w.values());
  Scalar best(0);
  for (int j = 0; j <= layout.levels; ++j) {
    for (Index i = 0; i < avg.level(j).size(); ++i) {
      const DyadicCube q = DyadicCube::from_linear(layout.dim, j, i);
      Scalar integral(0);
      for (Index c : cells(q, layout.levels)) {
        // localized maximal function: ancestors of the cell up to Q itself
        Scalar m(0);
        for (int l = layout.levels; l >= j; --l) m = std::max(m, avg(cube_of_cell(layout, c, l)));
        integral += m;
      }
      best = std::max(best, integral / sums.level(j)[i]);
    }
  }
  return best;
}

namespace detail {

/// <g>_{t,Q} for all cubes where t may be infinite; g positive.
template <typename Scalar>
CubeField<Scalar> power_means(const Weight<Scalar>& g, double t) {
  return cube_averages(static_cast<const GridFunction<Scalar>&>(g), t);
}

}  // namespace detail

/// [(w1,w2)]_{A_{p,r}} with r = (r1, r2, s'). Degenerate exponents: r3 = 1 (s = infinity)
/// uses <w>_{p,Q}; p_i = r_i uses the max of w_i^{-1} over Q.
template <typename Scalar>
Scalar bilinear_apr_characteristic(const Weight<Scalar>& w1, const Weight<Scalar>& w2, const AprExponents& e) {
  e.validate();
  const GridLayout& layout = w1.layout();
  const Weight<Scalar> w(layout, w1.values() * w2.values());
  const double t0 = std::isinf(e.s) ? e.p() : e.s * e.p() / (e.s - e.p());
  const double t1 = e.p1 == e.r1 ? kInfinity : e.r1 * e.p1 / (e.p1 - e.r1);
  const double t2 = e.p2 == e.r2 ? kInfinity : e.r2 * e.p2 / (e.p2 - e.r2);
  const auto a0 = detail::power_means(w, t0);
  const auto a1 = detail::power_means(w1.pow(Scalar(-1)), t1);
  const auto a2 = detail::power_means(w2.pow(Scalar(-1)), t2);
  Scalar best(0);
  for (int j = 0; j <= layout.levels; ++j) best = std::max(best, (a0.level(j) * a1.level(j) * a2.level(j)).maxCoeff());
  return best;
}

template <typename Scalar>
Scalar bilinear_apr_characteristic(const Weight<Scalar>& w1, const Weight<Scalar>& w2, const ExponentTuple& e) {
  return bilinear_apr_characteristic(w1, w2, AprExponents::primal(e));
}

struct BloomWeight {
  Weight<double> nu;
  double alpha1 = 0;
  std::optional<double> t1;  // only when alpha1 < 0
};

/// nu1 = (omega1^{1/k1} lambda1^{-1/k1})^{1/(1+alpha1)}.
inline BloomWeight bloom_weight(const Weight<double>& omega1, const Weight<double>& lambda1, const ExponentTuple& e) {
  const double a = e.alpha1();
  if (!(1.0 + a > 0)) throw Error("bloom weight: requires 1 + alpha1 > 0");
  if (e.k1 < 1) throw Error("bloom weight: requires k1 >= 1");
  const double k = e.k1;
  Values<double> base = omega1.values().pow(1.0 / k) * lambda1.values().pow(-1.0 / k);
  return {Weight<double>(omega1.layout(), base.pow(1.0 / (1.0 + a))), a, e.t1()};
}

/// prod <w_i>_Q^{t_i} / <prod w_i^{t_i}>_Q.
template <typename Scalar>
Scalar reverse_holder_ratio(std::span<const Weight<Scalar>> weights, std::span<const double> exps, const DyadicCube& q) {
  if (weights.size() != exps.size() || weights.empty()) throw Error("reverse Hoelder: weights and exponents must pair up");
  for (double t : exps)
    if (!(t > 0)) throw Error("reverse Hoelder: exponents must be positive");
  const GridLayout& layout = weights.front().layout();
  Values<Scalar> prod = Values<Scalar>::Ones(layout.cell_count());
  Scalar num(1);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    num *= std::pow(average(static_cast<const GridFunction<Scalar>&>(weights[i]), q, 1.0), Scalar(exps[i]));
    prod *= weights[i].values().pow(Scalar(exps[i]));
  }
  return num / average(GridFunction<Scalar>(layout, prod), q, 1.0);
}

/// Smallest and largest reverse-Hoelder ratio over the lattice.
template <typename Scalar>
std::pair<Scalar, Scalar> reverse_holder_extremes(std::span<const Weight<Scalar>> weights, std::span<const double> exps) {
  const GridLayout& layout = weights.front().layout();
  CubeField<Scalar> num(layout, Scalar(1));
  Values<Scalar> prod = Values<Scalar>::Ones(layout.cell_count());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto a = cube_averages(static_cast<const GridFunction<Scalar>&>(weights[i]), 1.0);
    for (int j = 0; j <= layout.levels; ++j) num.level(j) *= a.level(j).pow(Scalar(exps[i]));
    prod *= weights[i].values().pow(Scalar(exps[i]));
  }
  const auto den = cube_averages(GridFunction<Scalar>(layout, prod), 1.0);
  Scalar lo = std::numeric_limits<Scalar>::max(), hi(0);
  for (int j = 0; j <= layout.levels; ++j) {
    const Values<Scalar> r = num.level(j) / den.level(j);
    lo = std::min(lo, r.minCoeff());
    hi = std::max(hi, r.maxCoeff());
  }
  return {lo, hi};
}

/// L^p(mu) norm of a grid function, mu Lebesgue when null.
template <typename Scalar>
Scalar lp_norm(const GridFunction<Scalar>& f, double p, const Weight<Scalar>* mu = nullptr) {
  if (std::isinf(p)) return f.values().abs().maxCoeff();
  Values<Scalar> a = f.values().abs().pow(Scalar(p));
  if (mu) a *= mu->values();
  return std::pow(a.sum() * Scalar(f.layout().cell_measure()), Scalar(1.0 / p));
}

}  // namespace dyadic

#endif  // DYADIC_WEIGHTS_HPP_
