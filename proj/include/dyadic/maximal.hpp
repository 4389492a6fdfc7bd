#ifndef DYADIC_MAXIMAL_HPP_
#define DYADIC_MAXIMAL_HPP_

#include "dyadic/grid.hpp"
#include "dyadic/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace dyadic {

// Every supremum over cubes in this header runs over the dyadic lattice of the grid.

/// M_{r,mu} f: cellwise max over containing dyadic cubes of <|f|>^mu_{r,Q}.
template <typename Scalar>
GridFunction<Scalar> maximal(const GridFunction<Scalar>& f, double r, const Weight<Scalar>* mu = nullptr) {
  if (!(r > 0) || std::isinf(r)) throw Error("maximal: need 0 < r < infinity");
  return GridFunction<Scalar>(f.layout(), sup_over_containing(cube_averages(f, r, mu)));
}

/// M_{(r1,r2)}(f1,f2): cellwise sup of <|f1|>_{r1,Q} <|f2|>_{r2,Q}.
template <typename Scalar>
GridFunction<Scalar> bimaximal(const GridFunction<Scalar>& f1, const GridFunction<Scalar>& f2, double r1, double r2) {
  if (!(r1 > 0) || !(r2 > 0) || std::isinf(r1) || std::isinf(r2)) throw Error("bimaximal: need 0 < r_i < infinity");
  auto a = cube_averages(f1, r1);
  const auto b = cube_averages(f2, r2);
  for (int j = 0; j <= f1.levels(); ++j) a.level(j) *= b.level(j);
  return GridFunction<Scalar>(f1.layout(), sup_over_containing(a));
}

/// int_Q |b - <b>_Q| dx for every cube (Lebesgue mean and measure).
template <typename Scalar>
CubeField<Scalar> oscillation_integrals(const GridFunction<Scalar>& b) {
  const GridLayout& layout = b.layout();
  CubeField<Scalar> signed_mean = cube_sums(layout, b.values());
  for (int j = 0; j <= layout.levels; ++j) signed_mean.level(j) /= Scalar(cells_per_cube(layout, j));
  // value spread per cube; a constant cube has exactly zero oscillation regardless of rounding in the mean
  CubeField<Scalar> hi(layout, -std::numeric_limits<Scalar>::infinity()), lo(layout, std::numeric_limits<Scalar>::infinity());
  CubeField<Scalar> out(layout);
  const Scalar h = Scalar(layout.cell_measure());
  for (Index c = 0; c < layout.cell_count(); ++c) {
    for (int j = 0; j <= layout.levels; ++j) {
      const DyadicCube q = cube_of_cell(layout, c, j);
      out(q) += std::abs(b[c] - signed_mean(q)) * h;
      hi(q) = std::max(hi(q), b[c]);
      lo(q) = std::min(lo(q), b[c]);
    }
  }
  for (int j = 0; j <= layout.levels; ++j) out.level(j) = (hi.level(j) == lo.level(j)).select(Scalar(0), out.level(j));
  return out;
}

/// Omega_nu(b,Q) = nu(Q)^{-1} int_Q |b - <b>_Q| for every cube.
template <typename Scalar>
CubeField<Scalar> oscillations(const GridFunction<Scalar>& b, const Weight<Scalar>& nu) {
  CubeField<Scalar> osc = oscillation_integrals(b);
  const auto meas = cube_measures(nu);
  for (int j = 0; j <= b.levels(); ++j) osc.level(j) /= meas.level(j);
  return osc;
}

struct Oscillation {
  DyadicCube cube;
  double value = 0;
};

inline Oscillation oscillation(const GridFunction<double>& b, const Weight<double>& nu, const DyadicCube& q) {
  const auto cs = cells(q, b.levels());
  const auto [lo, hi] = std::minmax_element(cs.begin(), cs.end(), [&](Index x, Index y) { return b[x] < b[y]; });
  if (b[*lo] == b[*hi]) return {q, 0.0};
  double mean = 0;
  for (Index c : cs) mean += b[c];
  mean /= static_cast<double>(cs.size());
  double integral = 0;
  for (Index c : cs) integral += std::abs(b[c] - mean);
  integral *= b.layout().cell_measure();
  return {q, integral / nu.measure(cs)};
}

/// M^#_{nu,d} f: cellwise sup over containing dyadic cubes of Omega_nu(f,Q).
template <typename Scalar>
GridFunction<Scalar> dyadic_sharp_maximal(const GridFunction<Scalar>& f, const Weight<Scalar>& nu) {
  return GridFunction<Scalar>(f.layout(), sup_over_containing(oscillations(f, nu)));
}

/// M^#_nu b. Over the dyadic lattice this is the same operator as dyadic_sharp_maximal.
template <typename Scalar>
GridFunction<Scalar> weighted_sharp_maximal(const GridFunction<Scalar>& b, const Weight<Scalar>& nu) {
  return dyadic_sharp_maximal(b, nu);
}

/// ||b||_{BMO^alpha_nu} = max_Q nu(Q)^{-(1+alpha)} int_Q |b - <b>_Q|.
template <typename Scalar>
Scalar bmo_norm(const GridFunction<Scalar>& b, const Weight<Scalar>& nu, double alpha = 0.0) {
  if (!(1.0 + alpha > 0)) throw Error("bmo: need 1 + alpha > 0");
  const auto osc = oscillation_integrals(b);
  const auto meas = cube_measures(nu);
  Scalar best(0);
  for (int j = 0; j <= b.levels(); ++j) best = std::max(best, (osc.level(j) / meas.level(j).pow(Scalar(1.0 + alpha))).maxCoeff());
  return best;
}

/// Lower median of b over the cells of Q: the smallest cell value beta with
/// |Q cap {b <= beta}| >= |Q|/2 and |Q cap {b >= beta}| >= |Q|/2.
template <typename Scalar>
Scalar median(const GridFunction<Scalar>& b, const DyadicCube& q) {
  const auto cs = cells(q, b.levels());
  std::vector<Scalar> v;
  v.reserve(cs.size());
  for (Index c : cs) v.push_back(b[c]);
  const std::size_t k = (v.size() + 1) / 2 - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

/// M^S_{p,mu} f: cellwise max over cubes of S containing the cell of (<|f|^p>^mu_Q)^{1/p}; 0 off S.
template <typename Scalar>
GridFunction<Scalar> sparse_maximal(const GridFunction<Scalar>& f, std::span<const DyadicCube> family, double p, const Weight<Scalar>& mu) {
  if (!(p > 0) || std::isinf(p)) throw Error("sparse maximal: need 0 < p < infinity");
  const auto avg = cube_averages(f, p, &mu);
  CubeField<Scalar> sel(f.layout(), Scalar(0));
  for (const auto& q : family) sel(q) = avg(q);
  return GridFunction<Scalar>(f.layout(), sup_over_containing(sel));
}

/// M^D_{alpha,mu} f: cellwise sup of mu(Q)^{alpha-1} int_Q |f| dmu.
template <typename Scalar>
GridFunction<Scalar> fractional_dyadic_maximal(const GridFunction<Scalar>& f, const Weight<Scalar>& mu, double alpha) {
  if (!(alpha >= 0 && alpha < 1)) throw Error("fractional maximal: need 0 <= alpha < 1");
  const GridLayout& layout = f.layout();
  CubeField<Scalar> num = cube_sums(layout, (f.values().abs() * mu.values()).eval());
  const auto meas = cube_measures(mu);
  for (int j = 0; j <= layout.levels; ++j) {
    num.level(j) *= Scalar(layout.cell_measure());
    num.level(j) *= meas.level(j).pow(Scalar(alpha - 1.0));
  }
  return GridFunction<Scalar>(layout, sup_over_containing(num));
}

}  // namespace dyadic

#endif  // DYADIC_MAXIMAL_HPP_
