#include "doctest.h"

#include "dyadic/czop.hpp"
#include "dyadic/weights.hpp"

#include <random>

using namespace dyadic;

namespace {

GridFunction<double> random_function(const GridLayout& layout, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  GridFunction<double> f(layout);
  for (Index c = 0; c < f.size(); ++c) f[c] = u(rng);
  return f;
}

double max_abs(const GridFunction<double>& f) { return f.values().abs().maxCoeff(); }

// T(f1,f2)(x) by the defining triple sum with explicit cell centres
GridFunction<double> brute_T(const KernelSpec& k, const GridFunction<double>& f1, const GridFunction<double>& f2) {
  const GridLayout& layout = f1.layout();
  const double h = layout.cell_measure();
  GridFunction<double> out(layout);
  for (Index x = 0; x < f1.size(); ++x)
    for (Index a = 0; a < f1.size(); ++a)
      for (Index b = 0; b < f1.size(); ++b) {
        if (x == a && x == b) continue;
        out[x] += kernel_eval(k, layout.center(x), layout.center(a), layout.center(b)) * f1[a] * f2[b] * h * h;
      }
  return out;
}

}  // namespace

TEST_CASE("reference kernel values") {
  const auto k = KernelSpec::reference(1);
  CHECK(kernel_eval(k, Point(0.75, 0), Point(0.25, 0), Point(0.25, 0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_WITH_AS(kernel_eval(k, Point(0.25, 0), Point(0.25, 0), Point(0.25, 0)), doctest::Contains("diagonal"), Error);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 200; ++t) {
    const auto k2 = KernelSpec::reference(2);
    const Point x(u(rng), u(rng)), a(u(rng), u(rng)), b(u(rng), u(rng));
    CHECK(kernel_eval(k2, x, a, b) == kernel_eval(k2, x, b, a));
    // K(x,y,y) = (2|x-y|)^{-2n}: c0 = 4^n makes the non-degeneracy bound an identity
    const double r = (x - a).norm();
    CHECK(1.0 / (kernel_eval(k2, x, a, a) * std::pow(r, 4)) == doctest::Approx(16.0).epsilon(1e-12));
  }
  auto eps = k;
  eps.diagonal = DiagonalPolicy::EpsilonRegularize;
  eps.epsilon = 0.01;
  CHECK(kernel_eval(eps, Point(0.25, 0), Point(0.25, 0), Point(0.25, 0)) == doctest::Approx(1e4));
}

TEST_CASE("Dini norm by quadrature") {
  CHECK(std::abs(dini_norm([](double t) { return t; }) - 1.0) <= 1e-8);
  CHECK(std::abs(dini_norm([](double t) { return std::sqrt(t); }) - 2.0) <= 1e-8);
  CHECK(std::abs(dini_norm([](double t) { return std::pow(t, 0.1); }) - 10.0) <= 1e-8);
}

TEST_CASE("kernel validation: reference passes, mutated exponent fails the size clause") {
  for (int dim : {1, 2}) {
    for (int levels = 1; levels <= (dim == 1 ? 7 : 4); ++levels) {
      const auto rep = validate_kernel(KernelSpec::reference(dim), GridLayout(dim, levels), 2000, 5);
      CHECK(rep.ok());
      CHECK(rep.measured_c0 <= std::pow(4.0, dim) * (1 + 1e-12));
      CHECK(rep.dini == doctest::Approx(KernelSpec::reference(dim).c_omega).epsilon(1e-8));
    }
    auto bad = KernelSpec::with_exponent(dim, 2.0 * dim - 1);
    const auto rep = validate_kernel(bad, GridLayout(dim, 5 - dim), 2000, 5);
    CHECK(!rep.size_ok);
    REQUIRE(!rep.failures.empty());
    CHECK(rep.failures.front().find("size:") == 0);
    CHECK(rep.failures.front().find("x=") != std::string::npos);
  }
}

TEST_CASE("apply_T: zero, bilinearity, positivity, brute force") {
  const GridLayout layout(1, 5);
  const OperatorInstance op(KernelSpec::reference(1), layout);
  std::mt19937_64 rng(3);
  const auto f2 = random_function(layout, rng);
  CHECK(max_abs(apply_T(op, GridFunction<double>(layout), f2)) == 0.0);
  for (int t = 0; t < 10; ++t) {
    const auto f1 = random_function(layout, rng), g1 = random_function(layout, rng);
    const double a = 1.7, b = -0.6;
    const auto lhs = apply_T(op, GridFunction<double>(a * f1 + b * g1), f2);
    const auto rhs = GridFunction<double>(a * apply_T(op, f1, f2) + b * apply_T(op, g1, f2));
    CHECK(max_abs(GridFunction<double>(lhs - rhs)) <= 1e-12 * max_abs(rhs));
    const auto p = apply_T(op, random_function(layout, rng, 0, 1), random_function(layout, rng, 0, 1));
    CHECK(p.values().minCoeff() >= 0.0);
  }
  const GridLayout small(2, 2);
  const OperatorInstance op2(KernelSpec::reference(2), small);
  const auto u = random_function(small, rng), v = random_function(small, rng);
  const auto fast = apply_T(op2, u, v), slow = brute_T(KernelSpec::reference(2), u, v);
  CHECK(max_abs(GridFunction<double>(fast - slow)) <= 1e-12 * max_abs(slow));
}

TEST_CASE("resolution caps") {
  CHECK_THROWS_WITH_AS(OperatorInstance(KernelSpec::reference(1), GridLayout(1, 9)), doctest::Contains("kernel evaluations"), Error);
  CHECK_THROWS_AS(OperatorInstance(KernelSpec::reference(2), GridLayout(2, 5)), Error);
  CHECK_NOTHROW(OperatorInstance(KernelSpec::reference(2), GridLayout(2, 4)));
}

TEST_CASE("commutator: both forms agree, trivial cases") {
  const GridLayout layout(1, 5);
  const OperatorInstance op(KernelSpec::reference(1), layout);
  std::mt19937_64 rng(7);
  const auto f1 = random_function(layout, rng), f2 = random_function(layout, rng), b = random_function(layout, rng);
  const auto c0 = commutator(op, b, f1, f2, 0), t = apply_T(op, f1, f2);
  CHECK(max_abs(GridFunction<double>(c0 - t)) <= 1e-13 * max_abs(t));
  CHECK(max_abs(commutator(op, GridFunction<double>::constant(layout, 2.0), f1, f2, 2)) == 0.0);
  CHECK_THROWS_AS(commutator(op, b, f1, f2, -1), Error);
  for (int k = 1; k <= 3; ++k) {
    const auto kf = commutator(op, b, f1, f2, k, CommutatorMode::KernelForm);
    const auto ef = commutator(op, b, f1, f2, k, CommutatorMode::ExpansionForm);
    CHECK(max_abs(GridFunction<double>(kf - ef)) <= 1e-10 * max_abs(kf));
    // shift invariance is exact for the kernel form up to rounding in b(x) - b(y1)
    const auto sh = commutator(op, GridFunction<double>(b + GridFunction<double>::constant(layout, 0.5)), f1, f2, k);
    CHECK(max_abs(GridFunction<double>(sh - kf)) <= 1e-12 * max_abs(kf));
  }
}

TEST_CASE("grand sharp maximal") {
  const GridLayout layout(1, 4);
  const OperatorInstance op(KernelSpec::reference(1), layout);
  std::mt19937_64 rng(11);
  const auto f1 = random_function(layout, rng), f2 = random_function(layout, rng);
  const auto s1 = grand_sharp_maximal(op, f1, f2, 1.0), s8 = grand_sharp_maximal(op, f1, f2, 8.0),
             si = grand_sharp_maximal(op, f1, f2, kInfinity);
  for (Index c = 0; c < f1.size(); ++c) {
    CHECK(s1[c] <= s8[c] * (1 + 1e-12));
    CHECK(s8[c] <= si[c] * (1 + 1e-12));
  }
  // only the unit cube: 3Q covers the domain and the difference is identically zero
  const auto whole = grand_sharp_maximal(op, f1, f2, 2.0, 1, 0);
  CHECK(whole.values().maxCoeff() >= 0.0);

  // far small supports: the oscillation on a far cube is that of the far-field tail
  const DyadicCube src{1, 3, {0, 0}}, q{1, 3, {7, 0}};
  const auto chi = GridFunction<double>::indicator(layout, src);
  std::vector<double> tail;
  for (Index x : cells(q, 4)) {
    double v = 0;
    for (Index a : cells(src, 4))
      for (Index b : cells(src, 4)) v += kernel_eval(op.kernel(), layout.center(x), layout.center(a), layout.center(b));
    tail.push_back(v * layout.cell_measure() * layout.cell_measure());
  }
  const double want = std::abs(tail[0] - tail[1]);
  const auto m = grand_sharp_maximal(op, chi, chi, kInfinity);
  // level-3 cube q = cells {14,15}; its 3Q is cells 12..15 so the source is entirely far
  CHECK(m[15] >= want * (1 - 1e-12));
  const auto sampled = grand_sharp_maximal(op, f1, f2, 2.0, 5, 9);
  const auto full = grand_sharp_maximal(op, f1, f2, 2.0);
  for (Index c = 0; c < f1.size(); ++c) CHECK(sampled[c] <= full[c] * (1 + 1e-12));
}

TEST_CASE("local weak bound estimate") {
  const GridLayout layout(1, 5);
  const OperatorInstance op(KernelSpec::reference(1), layout);
  const auto trials = make_weak_trials(layout, 40, 13);
  const auto t = local_T(op);
  const auto a = estimate_local_weak_bound(t, 1, 1, 0.1, trials), b = estimate_local_weak_bound(t, 1, 1, 0.5, trials),
             c = estimate_local_weak_bound(t, 1, 1, 0.9, trials);
  CHECK(a.phi >= b.phi);
  CHECK(b.phi >= c.phi);
  CHECK(a.used_trials == 40);
  CHECK(a.phi > 0);

  // constants on Q: phi is a quantile of |T(chi_Q, chi_Q)|
  const DyadicCube q{1, 1, {1, 0}};
  const auto chi = GridFunction<double>::indicator(layout, q);
  const std::vector<WeakTrial> flat{{q, chi, chi}};
  const auto e = estimate_local_weak_bound(t, 1, 1, 0.5, flat);
  const auto vals = t(q, chi, chi);
  std::vector<double> sorted(vals);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  CHECK(e.phi == doctest::Approx(sorted[8]));
  std::size_t above = 0;
  for (double v : vals) above += v > e.phi;
  CHECK(above <= 8);

  const std::vector<WeakTrial> zero{{q, GridFunction<double>(layout), chi}};
  const auto z = estimate_local_weak_bound(t, 1, 1, 0.5, zero);
  CHECK(z.phi == 0.0);
  CHECK(z.used_trials == 0);
}

TEST_CASE("partner cube") {
  const auto k = KernelSpec::reference(1);
  const DyadicCube q{1, 4, {0, 0}};
  const auto p = select_partner_cube(q, 4, k, 6);
  CHECK(p.cube == DyadicCube{1, 4, {4, 0}});
  CHECK(p.center_distance == doctest::Approx(0.25));
  double lo = 1e300;
  const GridLayout layout(1, 6);
  for (Index x : cells(p.cube, 6))
    for (Index a : cells(q, 6))
      for (Index b : cells(q, 6)) lo = std::min(lo, kernel_eval(k, layout.center(x), layout.center(a), layout.center(b)));
  CHECK(p.constant == doctest::Approx(lo * q.measure() * q.measure()).epsilon(1e-14));
  CHECK(p.constant > 0);
  double prev = 1e300;
  for (double a : {4.0, 8.0, 16.0}) {
    const double v = select_partner_cube({1, 6, {0, 0}}, a, k, 6).constant;
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_WITH_AS(select_partner_cube({1, 2, {1, 0}}, 5, k, 6), doctest::Contains("cube does not fit"), Error);
  // falls back to the negative direction near the right edge
  CHECK(select_partner_cube({1, 4, {15, 0}}, 4, k, 6).cube == DyadicCube{1, 4, {11, 0}});
}
