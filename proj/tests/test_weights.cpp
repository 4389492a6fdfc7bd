#include "doctest.h"

#include "dyadic/weights.hpp"

#include <random>

using namespace dyadic;

namespace {

Weight<double> random_weight(const GridLayout& layout, std::mt19937_64& rng, double lo = 0.2, double hi = 5.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Values<double> v(layout.cell_count());
  for (Index c = 0; c < v.size(); ++c) v[c] = u(rng);
  return Weight<double>(layout, v);
}

Weight<double> two_valued(const GridLayout& layout, double left, double right) {
  Values<double> v(layout.cell_count());
  for (Index c = 0; c < v.size(); ++c) v[c] = layout.center(c)[0] < 0.5 ? left : right;
  return Weight<double>(layout, v);
}

// A_{p1,p2} constant written out with plain loops: sup <w^p>^{1/p} prod <w_i^{-p_i'}>^{1/p_i'}
double ap_vec_oracle(const Weight<double>& w1, const Weight<double>& w2, double p1, double p2) {
  const double p = 1.0 / (1.0 / p1 + 1.0 / p2);
  const double d1 = p1 / (p1 - 1), d2 = p2 / (p2 - 1);
  double best = 0;
  for (const auto& q : DyadicLattice(w1.layout()).cubes()) {
    double a = 0, b = 0, c = 0, n = 0;
    for (Index x : cells(q, w1.levels())) {
      a += std::pow(w1[x] * w2[x], p);
      b += std::pow(w1[x], -d1);
      c += std::pow(w2[x], -d2);
      n += 1;
    }
    best = std::max(best, std::pow(a / n, 1 / p) * std::pow(b / n, 1 / d1) * std::pow(c / n, 1 / d2));
  }
  return best;
}

}  // namespace

TEST_CASE("averages") {
  const GridLayout layout(1, 3);
  CHECK(average(GridFunction<double>::constant(layout, 3.0), DyadicCube{1, 1, {1, 0}}, 2.0) == doctest::Approx(3.0).epsilon(1e-15));
  const DyadicCube q{1, 1, {0, 0}};
  CHECK(average(GridFunction<double>::indicator(layout, DyadicCube{1, 2, {0, 0}}), q, 1.0) == 0.5);
  Values<double> idx(8);
  for (Index c = 0; c < 8; ++c) idx[c] = static_cast<double>(c);
  CHECK(average(GridFunction<double>(layout, idx), DyadicCube::unit(1), 1.0) == 3.5);
  CHECK(average(GridFunction<double>(layout, idx), DyadicCube::unit(1), kInfinity) == 7.0);
  CHECK_THROWS_AS(average(GridFunction<double>(layout, idx), q, 0.0), Error);
}

TEST_CASE("averages: homogeneity, power-mean monotonicity, batch agreement") {
  std::mt19937_64 rng(3);
  const GridLayout layout(2, 3);
  for (int t = 0; t < 20; ++t) {
    const auto f = random_weight(layout, rng);
    const auto mu = random_weight(layout, rng);
    const auto batch = cube_averages(static_cast<const GridFunction<double>&>(f), 1.5, &mu);
    for (const auto& q : DyadicLattice(layout).cubes()) {
      const double a1 = average<double>(f, q, 1.0), a2 = average<double>(f, q, 2.0), a3 = average<double>(f, q, 3.0);
      CHECK(a1 <= a2 * (1 + 1e-14));
      CHECK(a2 <= a3 * (1 + 1e-14));
      CHECK(average(GridFunction<double>(2.5 * f), q, 2.0) == doctest::Approx(2.5 * a2).epsilon(1e-13));
      CHECK(batch(q) == doctest::Approx(average<double>(f, q, 1.5, &mu)).epsilon(1e-13));
    }
  }
}

TEST_CASE("A_p characteristic") {
  const GridLayout layout(1, 3);
  CHECK(ap_characteristic(Weight<double>::unit(layout), 2.0) == doctest::Approx(1.0));
  CHECK(ap_characteristic(two_valued(layout, 2.0, 1.0), 2.0) == doctest::Approx(9.0 / 8.0).epsilon(1e-14));
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto w = random_weight(layout, rng);
    const double base = ap_characteristic(w, 3.0);
    CHECK(base >= 1.0 - 1e-14);
    CHECK(ap_characteristic(Weight<double>(7.3 * w), 3.0) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("A_inf characteristic") {
  const GridLayout layout(1, 4);
  CHECK(ainfty_characteristic(Weight<double>::unit(layout)) == doctest::Approx(1.0));
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) CHECK(ainfty_characteristic(random_weight(layout, rng)) >= 1.0 - 1e-13);
  // one large jump on the leftmost cell
  Values<double> v = Values<double>::Ones(16);
  v[0] = 50;
  CHECK(ainfty_characteristic(Weight<double>(layout, v)) > 1.0 + 1e-3);
}

TEST_CASE("bilinear A_{p,r} characteristic") {
  const GridLayout layout(2, 2);
  const ExponentTuple e{3, 3, 3, 1.5, 1.2, 8, 1};
  CHECK(bilinear_apr_characteristic(Weight<double>::unit(layout), Weight<double>::unit(layout), e) == doctest::Approx(1.0));
  std::mt19937_64 rng(17);
  for (int t = 0; t < 50; ++t) {
    const auto w1 = random_weight(layout, rng), w2 = random_weight(layout, rng);
    const AprExponents plain{2.5, 3.5, 1, 1, kInfinity};
    CHECK(bilinear_apr_characteristic(w1, w2, plain) == doctest::Approx(ap_vec_oracle(w1, w2, 2.5, 3.5)).epsilon(1e-12));
    const double base = bilinear_apr_characteristic(w1, w2, e);
    CHECK(bilinear_apr_characteristic(Weight<double>(4.0 * w1), Weight<double>(0.25 * w2), e) == doctest::Approx(base).epsilon(1e-12));
  }
  // p_i = r_i uses the max of the inverse weight
  const AprExponents edge{2, 2, 2, 1, kInfinity};
  CHECK_NOTHROW(bilinear_apr_characteristic(Weight<double>::unit(layout), Weight<double>::unit(layout), edge));
  CHECK_THROWS_AS(bilinear_apr_characteristic(Weight<double>::unit(layout), Weight<double>::unit(layout), AprExponents{2, 2, 3, 1, kInfinity}),
                  Error);
}

TEST_CASE("exponent tuple") {
  const ExponentTuple e{2, 3, 4, 1, 1, kInfinity, 1};
  CHECK(e.p() == doctest::Approx(1.2));
  CHECK(e.alpha1() == doctest::Approx(0.25));
  CHECK(e.branch() == Branch::DiagonalUp);
  CHECK(!e.t1());
  const ExponentTuple down{4, 3, 2, 1, 1, kInfinity, 2};
  CHECK(down.alpha1() == doctest::Approx(1.0 / 8 - 1.0 / 4));
  CHECK(*down.t1() == doctest::Approx(8.0));
  CHECK(down.branch() == Branch::DiagonalDown);
  CHECK(ExponentTuple{2, 2, 2, 2, 1, kInfinity, 1}.admissibility_error().find("r1 < p1") != std::string::npos);
  CHECK_THROWS_AS(ExponentTuple({1.5, 1.5, 1.5, 1, 1, 1.2, 1}).validate(), Error);
}

TEST_CASE("Bloom weight") {
  const GridLayout layout(1, 3);
  std::mt19937_64 rng(23);
  const auto w = random_weight(layout, rng);
  const auto same = bloom_weight(w, w, ExponentTuple{2, 2, 2, 1, 1, kInfinity, 1});
  CHECK(same.alpha1 == 0);
  for (Index c = 0; c < 8; ++c) CHECK(same.nu[c] == doctest::Approx(1.0).epsilon(1e-15));

  const auto b = bloom_weight(Weight<double>(16.0 * Weight<double>::unit(layout)), Weight<double>::unit(layout),
                              ExponentTuple{2, 2, 4, 1, 1, kInfinity, 1});
  CHECK(b.alpha1 == 0.25);
  for (Index c = 0; c < 8; ++c) CHECK(b.nu[c] == doctest::Approx(std::pow(16.0, 0.8)).epsilon(1e-14));

  for (int t = 0; t < 100; ++t) {
    const auto o = random_weight(layout, rng), l = random_weight(layout, rng);
    const ExponentTuple e{3, 2, 1.5 + (t % 5), 1, 1, kInfinity, 1 + t % 3};
    const auto r = bloom_weight(o, l, e);
    for (Index c = 0; c < 8; ++c) {
      const double back = std::pow(r.nu[c], 1 + r.alpha1) * std::pow(l[c], 1.0 / e.k1);
      CHECK(std::abs(back / std::pow(o[c], 1.0 / e.k1) - 1) <= 1e-12);
    }
  }
}

TEST_CASE("reverse Hoelder ratios") {
  const GridLayout layout(1, 4);
  const std::vector<Weight<double>> ones{Weight<double>::unit(layout), Weight<double>::unit(layout)};
  const std::vector<double> ts{0.5, 1.5};
  CHECK(reverse_holder_ratio<double>(ones, ts, DyadicCube::unit(1)) == doctest::Approx(1.0));
  std::mt19937_64 rng(29);
  const std::vector<Weight<double>> one{random_weight(layout, rng)};
  const std::vector<double> t1{1.0};
  for (const auto& q : DyadicLattice(layout).cubes()) CHECK(reverse_holder_ratio<double>(one, t1, q) == doctest::Approx(1.0).epsilon(1e-14));

  // two-valued pairs: ratio bounded on all cubes and unchanged by rescaling one weight
  const std::vector<Weight<double>> pair{two_valued(layout, 1.0, 9.0), two_valued(layout, 4.0, 0.5)};
  const std::vector<double> ex{0.5, 0.5};
  const auto [lo, hi] = reverse_holder_extremes<double>(pair, ex);
  for (const auto& q : DyadicLattice(layout).cubes()) {
    double num = 1, den = 0;
    const auto cs = cells(q, 4);
    for (std::size_t i = 0; i < 2; ++i) {
      double s = 0;
      for (Index c : cs) s += pair[i][c];
      num *= std::pow(s / static_cast<double>(cs.size()), 0.5);
    }
    for (Index c : cs) den += std::sqrt(pair[0][c] * pair[1][c]);
    const double r = num / (den / static_cast<double>(cs.size()));
    CHECK(r >= lo * (1 - 1e-13));
    CHECK(r <= hi * (1 + 1e-13));
  }
  const std::vector<Weight<double>> scaled{Weight<double>(3.0 * pair[0]), pair[1]};
  CHECK(reverse_holder_extremes<double>(scaled, ex).second == doctest::Approx(hi).epsilon(1e-13));
  CHECK(std::isfinite(hi));
}

TEST_CASE("lp norms") {
  const GridLayout layout(1, 2);
  Values<double> v(4);
  v << 1, -2, 0, 3;
  const GridFunction<double> f(layout, v);
  CHECK(lp_norm(f, 1.0) == doctest::Approx(1.5));
  CHECK(lp_norm(f, 2.0) == doctest::Approx(std::sqrt(14.0 / 4)));
  CHECK(lp_norm(f, kInfinity) == 3.0);
}
