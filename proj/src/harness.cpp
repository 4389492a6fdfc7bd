#include "dyadic/harness.hpp"

#include "dyadic/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace dyadic::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::mt19937_64 trial_rng(const ExperimentConfig& cfg, std::uint64_t stream) { return std::mt19937_64(derive_seed(cfg.seed, stream)); }

int draw_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(std::floor(unit_draw(rng) * (hi - lo + 1)));
}

double draw_uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_draw(rng); }

DyadicCube draw_cube(std::mt19937_64& rng, int dim, int min_level, int max_level) {
  const int level = draw_int(rng, min_level, max_level);
  const int span = 1 << level;
  const Index a = draw_int(rng, 0, span - 1);
  const Index b = dim == 2 ? draw_int(rng, 0, span - 1) : 0;
  return DyadicCube{dim, level, {a, b}};
}

/// Nonnegative data, sometimes localized to a cube.
GridFunction<double> sample_data(const GridLayout& layout, std::mt19937_64& rng, double localize = 0.5) {
  GridFunction<double> f(layout);
  for (Index c = 0; c < layout.cell_count(); ++c) f[c] = 1.0 - unit_draw(rng);
  if (unit_draw(rng) < localize) {
    const DyadicCube q = draw_cube(rng, layout.dim, 0, std::max(0, layout.levels - 1));
    f = f.restricted(cells(q, layout.levels));
  }
  return f;
}

GridFunction<double> sample_signed(const GridLayout& layout, std::mt19937_64& rng) {
  GridFunction<double> f(layout);
  for (Index c = 0; c < layout.cell_count(); ++c) f[c] = draw_uniform(rng, -1, 1);
  return f;
}

/// ||v w||_{L^p} for cell arrays.
double weighted_norm(const Values<double>& v, const Values<double>& w, double p, double h) {
  return std::pow(((v * w).abs().pow(p)).sum() * h, 1.0 / p);
}

/// Kernel values at cell centres, tabulated when small enough.
class Trilinear {
 public:
  explicit Trilinear(const OperatorInstance& op, bool tabulate = true) : op_(op), n_(op.layout().cell_count()) {
    if (tabulate && n_ <= 128) {
      table_.resize(static_cast<std::size_t>(n_ * n_ * n_));
      for (Index x = 0; x < n_; ++x)
        for (Index y1 = 0; y1 < n_; ++y1)
          for (Index y2 = 0; y2 < n_; ++y2) table_[static_cast<std::size_t>((x * n_ + y1) * n_ + y2)] = op.at(x, y1, y2);
    }
  }
  Index size() const { return n_; }
  double h() const { return op_.layout().cell_measure(); }
  double operator()(Index x, Index y1, Index y2) const {
    return table_.empty() ? op_.at(x, y1, y2) : table_[static_cast<std::size_t>((x * n_ + y1) * n_ + y2)];
  }

 private:
  const OperatorInstance& op_;
  Index n_;
  std::vector<double> table_;
};

/// (b(x) - b(y1))^k.
Eigen::MatrixXd difference_powers(const GridFunction<double>& b, int k) {
  const Index n = b.size();
  Eigen::MatrixXd d(n, n);
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) d(x, y) = k == 0 ? 1.0 : std::pow(b[x] - b[y], k);
  return d;
}

std::vector<Index> support(const Values<double>& v) {
  std::vector<Index> out;
  for (Index i = 0; i < v.size(); ++i)
    if (v[i] != 0) out.push_back(i);
  return out;
}

/// C(x) = h^2 sum D(x,y1) K f1(y1) f2(y2).
Values<double> apply_c(const Trilinear& k, const Eigen::MatrixXd& d, const Values<double>& f1, const Values<double>& f2) {
  const Index n = k.size();
  const auto s1 = support(f1), s2 = support(f2);
  Values<double> out = Values<double>::Zero(n);
  for (Index x = 0; x < n; ++x) {
    double acc = 0;
    for (Index y1 : s1) {
      const double w = d(x, y1) * f1[y1];
      if (w == 0) continue;
      double inner = 0;
      for (Index y2 : s2) inner += k(x, y1, y2) * f2[y2];
      acc += w * inner;
    }
    out[x] = acc;
  }
  return out * (k.h() * k.h());
}

/// Coefficients a with <g, C(f1,f2)> = sum a f_slot: slot 1 varies f1 with f2 fixed, slot 2 the reverse.
Values<double> adjoint(const Trilinear& k, const Eigen::MatrixXd& d, const Values<double>& g, const Values<double>& other,
                       int slot) {
  const Index n = k.size();
  const auto sx = support(g), so = support(other);
  Values<double> out = Values<double>::Zero(n);
  const double h3 = k.h() * k.h() * k.h();
  for (Index x : sx) {
    for (Index y = 0; y < n; ++y) {
      double acc = 0;
      if (slot == 1) {
        if (d(x, y) == 0) continue;
        for (Index y2 : so) acc += k(x, y, y2) * other[y2];
        out[y] += g[x] * d(x, y) * acc;
      } else {
        for (Index y1 : so) acc += d(x, y1) * k(x, y1, y) * other[y1];
        out[y] += g[x] * acc;
      }
    }
  }
  return out * h3;
}

struct Quotient {
  const Trilinear& k;
  const Eigen::MatrixXd& d;
  Values<double> omega1, omega2, target;
  ExponentTuple e;
  double h;

  double denominator(const Values<double>& f1, const Values<double>& f2, const Values<double>& g) const {
    return weighted_norm(f1, omega1, e.p1, h) * weighted_norm(f2, omega2, e.p2, h) *
           weighted_norm(g, target.inverse(), conjugate(e.q()), h);
  }
  double operator()(const Values<double>& f1, const Values<double>& f2, const Values<double>& g) const {
    const double den = denominator(f1, f2, g);
    if (!(den > 0)) return 0;
    const Values<double> c = apply_c(k, d, f1, f2);
    return std::abs((g * c).sum() * h) / den;
  }
};

/// sign(a) |a|^{t-1} w^{-t}: the maximizer of |sum a f| / ||f w||_{t'} where t is the dual exponent.
Values<double> dual_maximizer(const Values<double>& a, const Values<double>& w, double t) {
  Values<double> out = a.sign() * a.abs().pow(t - 1.0) * w.pow(-t);
  const double m = out.abs().maxCoeff();
  return m > 0 ? Values<double>(out / m) : out;
}

TrialRecord base_record(int trial, std::uint64_t seed, const std::string& ensemble, const ExponentTuple& e) {
  TrialRecord r;
  r.trial = trial;
  r.seed = seed;
  r.ensemble = ensemble;
  r.exponents = e;
  r.apr_char = kNaN;
  r.ainfty_char = kNaN;
  r.bmo_norm = kNaN;
  r.aux_norm = kNaN;
  return r;
}

void set_ratio(TrialRecord& r, double lhs, double rhs) {
  r.lhs = lhs;
  r.rhs = rhs;
  if (rhs > 0) {
    r.ratio = lhs / rhs;
  } else {
    r.ratio = lhs == 0 ? 0.0 : kInfinity;
    r.flags.insert(r.flags.begin(), "degenerate");
  }
}

GridFunction<double> nonzero_data(const GridLayout& layout, std::mt19937_64& rng, TrialRecord& rec, double localize) {
  for (int i = 0; i < 100; ++i) {
    GridFunction<double> f = sample_data(layout, rng, localize);
    if (f.values().abs().maxCoeff() > 0) return f;
    rec.flags.push_back("resampled");
  }
  throw Error("data sampler produced only zero functions");
}

void fill_weights(TrialRecord& rec, const AdmissibleWeights& aw, const SymbolNorms& sn) {
  rec.apr_char = aw.apr_char;
  rec.ainfty_char = sn.ainfty;
  rec.bmo_norm = sn.bmo;
  rec.aux_norm = sn.aux;
  if (aw.resamples > 0) rec.flags.push_back("weight_resamples=" + std::to_string(aw.resamples));
}

}  // namespace

//-----------------------------------------------------------------------------
// sampling

WeightTriple sample_weights(const GridLayout& layout, Ensemble ens, const ExperimentConfig& cfg, std::mt19937_64& rng) {
  const Index n = layout.cell_count();
  auto one = [&]() -> Weight<double> {
    Values<double> v(n);
    switch (ens) {
      case Ensemble::Constant:
        v.setConstant(std::pow(cfg.jump_ratio, draw_uniform(rng, -1, 1)));
        break;
      case Ensemble::TwoValued: {
        v.setOnes();
        const DyadicCube q = draw_cube(rng, layout.dim, 1, layout.levels);
        const double rho = std::pow(cfg.jump_ratio, draw_uniform(rng, -1, 1));
        for (Index c : cells(q, layout.levels)) v[c] = rho;
        break;
      }
      case Ensemble::Power: {
        const double a = draw_uniform(rng, -cfg.power_max, cfg.power_max);
        const Eigen::Vector2d x0(1.0 / 3.0, layout.dim == 2 ? 1.0 / 3.0 : 0.0);
        for (Index c = 0; c < n; ++c) v[c] = std::pow((layout.center(c) - x0).norm(), a);
        break;
      }
      case Ensemble::DyadicMartingale: {
        v.setZero();
        for (int j = 1; j <= layout.levels; ++j) {
          Values<double> u(Index{1} << (layout.dim * j));
          for (Index i = 0; i < u.size(); ++i) u[i] = draw_uniform(rng, -1, 1);
          for (Index c = 0; c < n; ++c) v[c] += cfg.volatility * u[cube_of_cell(layout, c, j).linear_index()];
        }
        v = v.exp();
        break;
      }
    }
    return Weight<double>(layout, v);
  };
  WeightTriple w{one(), one(), one()};
  return w;
}

GridFunction<double> sample_symbol(const GridLayout& layout, BSampler s, std::mt19937_64& rng) {
  const Index n = layout.cell_count();
  if (s == BSampler::Mixed) {
    const int pick = draw_int(rng, 0, 2);
    s = pick == 0 ? BSampler::Martingale : pick == 1 ? BSampler::Sinusoid : BSampler::Jumps;
  }
  GridFunction<double> b(layout);
  switch (s) {
    case BSampler::Martingale:
      // sum over levels of child values minus the sibling mean
      for (int j = 1; j <= layout.levels; ++j) {
        Values<double> u(Index{1} << (layout.dim * j));
        for (Index i = 0; i < u.size(); ++i) u[i] = draw_uniform(rng, -1, 1);
        Values<double> parent = Values<double>::Zero(Index{1} << (layout.dim * (j - 1)));
        for (Index i = 0; i < u.size(); ++i) parent[detail::parent_index(layout.dim, j, i)] += u[i];
        parent /= static_cast<double>(1 << layout.dim);
        for (Index c = 0; c < n; ++c) {
          const DyadicCube q = cube_of_cell(layout, c, j);
          b[c] += u[q.linear_index()] - parent[q.parent().linear_index()];
        }
      }
      break;
    case BSampler::Sinusoid: {
      const int m0 = draw_int(rng, 1, 4), m1 = draw_int(rng, 1, 4);
      const double ph0 = draw_uniform(rng, 0, 2 * std::numbers::pi), ph1 = draw_uniform(rng, 0, 2 * std::numbers::pi);
      for (Index c = 0; c < n; ++c) {
        const auto x = layout.center(c);
        b[c] = std::sin(2 * std::numbers::pi * m0 * x[0] + ph0) + (layout.dim == 2 ? std::sin(2 * std::numbers::pi * m1 * x[1] + ph1) : 0.0);
      }
      break;
    }
    case BSampler::Jumps:
      for (int i = 0; i < 3; ++i) {
        const DyadicCube q = draw_cube(rng, layout.dim, 1, std::max(1, layout.levels - 1));
        const double a = draw_uniform(rng, -1, 1);
        for (Index c : cells(q, layout.levels)) b[c] += a;
      }
      break;
    case BSampler::Mixed:
      break;
  }
  return b;
}

AdmissibleWeights sample_admissible_weights(const GridLayout& layout, const ExperimentConfig& cfg, std::mt19937_64& rng) {
  const ExponentTuple& e = cfg.exponents;
  for (int attempt = 0; attempt <= cfg.max_resamples; ++attempt) {
    WeightTriple w = sample_weights(layout, cfg.ensemble, cfg, rng);
    const double a = bilinear_apr_characteristic(w.omega1, w.omega2, AprExponents::primal(e));
    const double b = bilinear_apr_characteristic(w.lambda1, w.omega2, AprExponents::target(e));
    const double c = std::max(a, b);
    if (std::isfinite(c) && c <= cfg.char_cap) return {std::move(w), c, attempt};
  }
  throw Error("weights: no admissible sample in " + std::to_string(cfg.max_resamples + 1) + " attempts (cap " +
              format_number(cfg.char_cap) + ")");
}

SymbolNorms symbol_norms(const GridFunction<double>& b, const WeightTriple& w, const ExponentTuple& e) {
  SymbolNorms out;
  if (e.k1 < 1) return out;
  const BloomWeight nu = bloom_weight(w.omega1, w.lambda1, e);
  out.ainfty = ainfty_characteristic(nu.nu);
  out.bmo = bmo_norm(b, nu.nu, nu.alpha1);
  if (nu.t1) {
    const GridFunction<double> m = weighted_sharp_maximal(b, nu.nu);
    out.aux = lp_norm(m, *nu.t1, &nu.nu);
    out.branch = out.aux;
  } else {
    out.branch = out.bmo;
  }
  return out;
}

SparseFamily stopping_family(const GridFunction<double>& f1, const GridFunction<double>& f2, double r1, double r2,
                             double* threshold) {
  const GridLayout& layout = f1.layout();
  // product of local averages over the dilate 3P, clipped to the unit cube
  CubeField<double> a(layout);
  for (const auto& q : DyadicLattice(layout).cubes()) {
    const auto cs = dilate_clip(q, 3.0, layout.levels);
    double s1 = 0, s2 = 0;
    for (Index c : cs) {
      s1 += std::pow(std::abs(f1[c]), r1);
      s2 += std::pow(std::abs(f2[c]), r2);
    }
    const double n = static_cast<double>(cs.size());
    a(q) = std::pow(s1 / n, 1 / r1) * std::pow(s2 / n, 1 / r2);
  }
  for (double theta = 2; theta < 1e12; theta *= 2) {
    std::vector<DyadicCube> selected{DyadicCube::unit(layout.dim)};
    for (std::size_t i = 0; i < selected.size(); ++i) {
      const DyadicCube top = selected[i];
      const double bound = theta * a(top);
      std::vector<DyadicCube> stack;
      if (top.level < layout.levels) stack = children(top, layout.levels);
      while (!stack.empty()) {
        const DyadicCube q = stack.back();
        stack.pop_back();
        if (a(q) > bound) {
          selected.push_back(q);
        } else if (q.level < layout.levels) {
          for (const auto& c : children(q, layout.levels)) stack.push_back(c);
        }
      }
    }
    auto cert = certify_sparse(layout, selected, 0.5);
    if (cert.ok()) {
      if (threshold) *threshold = theta;
      return std::move(*cert.family);
    }
  }
  throw Error("stopping family: no threshold certified");
}

double norm_quotient(const OperatorInstance& op, const GridFunction<double>& b, int k, const WeightTriple& w,
                     const ExponentTuple& e, const GridFunction<double>& f1, const GridFunction<double>& f2,
                     const GridFunction<double>& g) {
  const Trilinear tri(op, false);
  const Eigen::MatrixXd d = difference_powers(b, k);
  const Quotient quot{tri, d, w.omega1.values(), w.omega2.values(), w.target().values(), e, op.layout().cell_measure()};
  return quot(f1.values(), f2.values(), g.values());
}

double fractional_form_rhs(const GridFunction<double>& f1, const GridFunction<double>& f2, const GridFunction<double>& g,
                           const WeightTriple& w, const ExponentTuple& e) {
  const double h = f1.layout().cell_measure();
  return weighted_norm(f1.values(), w.lambda1.values(), e.p1, h) * weighted_norm(f2.values(), w.omega2.values(), e.p2, h) *
         weighted_norm(g.values(), w.target().values().inverse(), conjugate(e.q()), h);
}

//-----------------------------------------------------------------------------
// experiments

RunResult run_upper(const ExperimentConfig& cfg) {
  cfg.validate();
  RunResult res;
  res.config = cfg;
  const GridLayout layout(cfg.dim, cfg.levels);
  const OperatorInstance op(cfg.kernel(), layout);
  const Trilinear tri(op);
  const ExponentTuple& e = cfg.exponents;
  const double h = layout.cell_measure();
  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
    std::mt19937_64 rng(seed);
    TrialRecord rec = base_record(t, seed, to_string(cfg.ensemble), e);
    const AdmissibleWeights aw = sample_admissible_weights(layout, cfg, rng);
    GridFunction<double> b = sample_symbol(layout, cfg.b_sampler, rng);
    b *= cfg.b_scale;
    const GridFunction<double> f1 = cfg.f1_scale * nonzero_data(layout, rng, rec, cfg.localize);
    const GridFunction<double> f2 = nonzero_data(layout, rng, rec, cfg.localize);
    const SymbolNorms sn = symbol_norms(b, aw.w, e);
    fill_weights(rec, aw, sn);
    const Values<double> c = apply_c(tri, difference_powers(b, e.k1), f1.values(), f2.values());
    const double lhs = weighted_norm(c, aw.w.target().values(), e.q(), h);
    const double rhs = std::pow(sn.branch, e.k1) * weighted_norm(f1.values(), aw.w.omega1.values(), e.p1, h) *
                       weighted_norm(f2.values(), aw.w.omega2.values(), e.p2, h);
    rec.flags.push_back(e.branch() == Branch::DiagonalUp ? "branch=bmo" : "branch=sharp");
    set_ratio(rec, lhs, rhs);
    res.records.push_back(std::move(rec));
  }
  res.metadata.emplace_back("b norm", e.branch() == Branch::DiagonalUp ? "BMO^alpha1_nu1" : "||M^#_nu1 b||_{L^t1(nu1)}");
  return res;
}

RunResult run_lower(const ExperimentConfig& cfg) {
  cfg.validate();
  RunResult res;
  res.config = cfg;
  const GridLayout layout(cfg.dim, cfg.levels);
  const KernelSpec kernel = cfg.kernel();
  const OperatorInstance op(kernel, layout);
  const Trilinear tri(op);
  const ExponentTuple& e = cfg.exponents;
  const double h = layout.cell_measure();
  const double q = e.q(), p1d = conjugate(e.p1), p2d = conjugate(e.p2);
  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
    std::mt19937_64 rng(seed);
    TrialRecord rec = base_record(t, seed, to_string(cfg.ensemble), e);
    const AdmissibleWeights aw = sample_admissible_weights(layout, cfg, rng);
    GridFunction<double> b = sample_symbol(layout, cfg.b_sampler, rng);
    b *= cfg.b_scale;
    const SymbolNorms sn = symbol_norms(b, aw.w, e);
    fill_weights(rec, aw, sn);
    const Eigen::MatrixXd d = difference_powers(b, e.k1);
    const Values<double> w1 = aw.w.omega1.values(), w2 = aw.w.omega2.values(), wt = aw.w.target().values();
    const Quotient quot{tri, d, w1, w2, wt, e, h};

    // median test functions on every cube with a partner
    const Values<double> sigma1 = w1.pow(-p1d), sigma2 = w2.pow(-p2d), gw = wt.pow(q);
    double test = 0;
    Values<double> bf1, bf2, bg;
    int skipped = 0;
    for (int j = 1; j <= layout.levels; ++j) {
      for (const auto& cube : DyadicLattice(layout).cubes(j)) {
        PartnerCube partner;
        try {
          partner = select_partner_cube(cube, cfg.partner_a, kernel, layout.levels);
        } catch (const Error&) {
          ++skipped;
          continue;
        }
        const double beta = median(b, partner.cube);
        const auto qc = cells(cube, layout.levels), pc = cells(partner.cube, layout.levels);
        for (int side = 0; side < 2; ++side) {
          Values<double> f1 = Values<double>::Zero(layout.cell_count()), f2 = f1, g = f1;
          for (Index c : qc) {
            f2[c] = sigma2[c];
            if (side == 0 ? b[c] <= beta : b[c] >= beta) f1[c] = sigma1[c];
          }
          for (Index c : pc)
            if (side == 0 ? b[c] >= beta : b[c] <= beta) g[c] = gw[c];
          const double v = quot(f1, f2, g);
          if (v > test) {
            test = v;
            bf1 = f1;
            bf2 = f2;
            bg = g;
          }
        }
      }
    }
    if (skipped > 0) res.log.push_back("trial " + std::to_string(t) + ": " + std::to_string(skipped) + " cubes skipped, partner outside the grid");

    // alternating exact-dual ascent
    double ascent = test;
    for (int r = 0; r < cfg.ascent_restarts; ++r) {
      std::mt19937_64 start = trial_rng(cfg, (static_cast<std::uint64_t>(t) << 8) + static_cast<std::uint64_t>(r) + (1ULL << 40));
      Values<double> f1, f2, g;
      if (r == 0 && bf1.size() > 0) {
        f1 = bf1;
        f2 = bf2;
        g = bg;
      } else {
        f1 = sample_signed(layout, start).values();
        f2 = sample_signed(layout, start).values();
        g = sample_signed(layout, start).values();
      }
      double prev = quot(f1, f2, g);
      ascent = std::max(ascent, prev);
      for (int it = 0; it < cfg.ascent_iterations; ++it) {
        const Values<double> c = apply_c(tri, d, f1, f2);
        if (c.abs().maxCoeff() == 0) break;
        g = dual_maximizer(c, wt.inverse(), q);
        const Values<double> a1 = adjoint(tri, d, g, f2, 1);
        if (a1.abs().maxCoeff() == 0) break;
        f1 = dual_maximizer(a1, w1, p1d);
        const Values<double> a2 = adjoint(tri, d, g, f1, 2);
        if (a2.abs().maxCoeff() == 0) break;
        f2 = dual_maximizer(a2, w2, p2d);
        const double den = quot.denominator(f1, f2, g);
        const double v = den > 0 ? std::abs((a2 * f2).sum()) / den : 0.0;
        ascent = std::max(ascent, v);
        if (v <= prev * (1 + 1e-12)) break;
        prev = v;
      }
    }
    res.test_estimates.push_back(test);
    res.ascent_estimates.push_back(ascent);
    rec.flags.push_back(e.branch() == Branch::DiagonalUp ? "branch=bmo" : "branch=sharp");
    rec.flags.push_back("test_quotient=" + format_number(test));
    set_ratio(rec, std::pow(sn.branch, e.k1), ascent);
    res.records.push_back(std::move(rec));
  }
  return res;
}

RunResult run_sparse_dom(const ExperimentConfig& cfg) {
  cfg.validate();
  RunResult res;
  res.config = cfg;
  const GridLayout layout(cfg.dim, cfg.levels);
  const OperatorInstance op(cfg.kernel(), layout);
  const Trilinear tri(op);
  const ExponentTuple& e = cfg.exponents;
  const double h = layout.cell_measure();
  const Eigen::MatrixXd ones = difference_powers(GridFunction<double>(layout), 0);
  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
    std::mt19937_64 rng(seed);
    TrialRecord rec = base_record(t, seed, "unweighted", e);
    GridFunction<double> b = sample_symbol(layout, cfg.b_sampler, rng);
    b *= cfg.b_scale;
    const GridFunction<double> f1 = nonzero_data(layout, rng, rec, cfg.localize);
    const GridFunction<double> f2 = nonzero_data(layout, rng, rec, cfg.localize);
    const GridFunction<double> g = nonzero_data(layout, rng, rec, cfg.localize);
    double theta = 0;
    const SparseFamily fam = stopping_family(f1, f2, e.r1, e.r2, &theta);
    const Values<double> c = apply_c(tri, e.k1 == 0 ? ones : difference_powers(b, e.k1), f1.values(), f2.values());
    const double lhs = (c.abs() * g.values().abs()).sum() * h;
    const SparseFormTerms terms = commutator_sparse_form(fam.cubes(), b, f1, f2, g, e, e.k1);
    rec.flags.push_back("family=" + std::to_string(fam.size()));
    rec.flags.push_back("theta=" + format_number(theta));
    set_ratio(rec, lhs, terms.total());
    res.records.push_back(std::move(rec));
  }
  // empirical local weak constants of T and of the grand truncation sharp maximal operator
  if (cfg.phi_trials > 0) {
    const GridLayout small(cfg.dim, std::min(cfg.levels, cfg.dim == 1 ? 5 : 3));
    const OperatorInstance sop(cfg.kernel(), small);
    const auto trials = make_weak_trials(small, cfg.phi_trials, derive_seed(cfg.seed, 1ULL << 32));
    const double lambda = 0.25;
    const auto phi_t = estimate_local_weak_bound(local_T(sop), e.r1, e.r2, lambda, trials);
    const auto phi_m = estimate_local_weak_bound(local_grand_sharp(sop, e.s), e.r1, e.r2, lambda, trials);
    res.metadata.emplace_back("phi_T", format_number(phi_t.phi) + " (" + phi_t.ensemble + ", levels " + std::to_string(small.levels) + ")");
    res.metadata.emplace_back("phi_sharp", format_number(phi_m.phi) + " (" + phi_m.ensemble + ", levels " + std::to_string(small.levels) + ")");
  }
  return res;
}

RunResult run_sparse_form(const ExperimentConfig& cfg) {
  cfg.validate();
  RunResult res;
  res.config = cfg;
  const GridLayout layout(cfg.dim, cfg.levels);
  const ExponentTuple& e = cfg.exponents;
  const double h = layout.cell_measure();
  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
    std::mt19937_64 rng(seed);
    TrialRecord rec = base_record(t, seed, to_string(cfg.ensemble), e);
    const AdmissibleWeights aw = sample_admissible_weights(layout, cfg, rng);
    GridFunction<double> b = sample_symbol(layout, cfg.b_sampler, rng);
    b *= cfg.b_scale;
    const GridFunction<double> f1 = nonzero_data(layout, rng, rec, cfg.localize);
    const GridFunction<double> f2 = nonzero_data(layout, rng, rec, cfg.localize);
    const GridFunction<double> g = nonzero_data(layout, rng, rec, cfg.localize);
    const SparseFamily fam = stopping_family(f1, f2, e.r1, e.r2);
    rec.flags.push_back("study=" + to_string(cfg.study));
    rec.flags.push_back("family=" + std::to_string(fam.size()));
    if (cfg.study == FormStudy::Fractional) {
      fill_weights(rec, aw, SymbolNorms{});
      set_ratio(rec, fractional_sparse_form(fam.cubes(), f1, f2, g, e), fractional_form_rhs(f1, f2, g, aw.w, e));
    } else {
      const SymbolNorms sn = symbol_norms(b, aw.w, e);
      fill_weights(rec, aw, sn);
      const double lhs = commutator_sparse_form(fam.cubes(), b, f1, f2, g, e, e.k1).term1;
      const double rhs = std::pow(sn.branch, e.k1) * weighted_norm(f1.values(), aw.w.omega1.values(), e.p1, h) *
                         weighted_norm(f2.values(), aw.w.omega2.values(), e.p2, h) *
                         weighted_norm(g.values(), aw.w.target().values().inverse(), conjugate(e.q()), h);
      rec.flags.push_back(e.branch() == Branch::DiagonalUp ? "branch=bmo" : "branch=sharp");
      set_ratio(rec, lhs, rhs);
    }
    res.records.push_back(std::move(rec));
  }
  return res;
}

//-----------------------------------------------------------------------------
// exact suites

namespace {

SuiteResult exact_suite(std::string name) {
  SuiteResult s;
  s.name = std::move(name);
  return s;
}

SuiteResult ratio_study(std::string name) {
  SuiteResult s = exact_suite(std::move(name));
  s.exact = false;
  return s;
}

void note_ratio(SuiteResult& s, double r) {
  if (!std::isfinite(r)) return;
  s.min_ratio = std::min(s.min_ratio, r);
  s.max_ratio = std::max(s.max_ratio, r);
}

std::string dump(const GridFunction<double>& f) {
  std::string s;
  for (Index i = 0; i < f.size(); ++i) s += (i ? " " : "") + format_number(f[i]);
  return s;
}

CarlesonSequence random_carleson(const GridLayout& layout, std::mt19937_64& rng) {
  CarlesonSequence lam{layout, {}};
  const double density = draw_uniform(rng, 0.1, 0.6);
  for (const auto& q : DyadicLattice(layout).cubes())
    if (unit_draw(rng) < density) lam.terms.push_back({q, 1.0 - unit_draw(rng)});
  return lam;
}

std::string dump(const CarlesonSequence& lam) {
  std::string s;
  for (const auto& t : lam.terms) s += (s.empty() ? "" : "; ") + t.cube.to_string() + " " + format_number(t.lambda);
  return s;
}

}  // namespace

RunResult run_lemmas(const ExperimentConfig& cfg) {
  cfg.validate();
  RunResult res;
  res.config = cfg;
  const GridLayout layout(cfg.dim, cfg.levels);
  std::ostringstream counter;
  const double exps[] = {1.0, 1.5, 2.0, 3.0};

  // interpolation of the oscillation powers c_k <= c_0 + c_k1
  SuiteResult ck = exact_suite("ck-interpolation");
  const int ck_cases = std::max(cfg.trials, 1000);
  for (int t = 0; t < ck_cases; ++t) {
    std::mt19937_64 rng = trial_rng(cfg, 0x100000ULL + static_cast<std::uint64_t>(t));
    ExponentTuple e;
    e.k1 = draw_int(rng, 1, 4);
    e.r1 = exps[draw_int(rng, 0, 3)];
    e.s = conjugate(exps[draw_int(rng, 0, 3)]);
    const int k = draw_int(rng, 0, e.k1);
    const GridFunction<double> b = sample_symbol(layout, BSampler::Mixed, rng);
    const GridFunction<double> f = sample_signed(layout, rng), g = sample_signed(layout, rng);
    const DyadicCube q = draw_cube(rng, layout.dim, 0, layout.levels);
    const CkTriple c = ck_interpolation_check(b, f, g, q, e, k);
    ++ck.cases;
    const double bound = c.c0 + c.ck1;
    note_ratio(ck, bound > 0 ? c.ck / bound : 0.0);
    TrialRecord rec = base_record(t, 0, "suite=ck", e);
    rec.flags.push_back("k=" + std::to_string(k));
    set_ratio(rec, c.ck, bound);
    res.records.push_back(std::move(rec));
    if (c.ck > bound * (1 + 1e-12)) {
      ++ck.violations;
      if (ck.witness.empty()) ck.witness = q.to_string() + " k=" + std::to_string(k) + " c_k=" + format_number(c.ck) + " c_0+c_k1=" + format_number(bound);
      counter << "ck " << q.to_string() << " k=" << k << " k1=" << e.k1 << "\nb: " << dump(b) << "\nf: " << dump(f) << "\ng: " << dump(g) << "\n";
    }
  }
  res.suites.push_back(ck);

  // pointwise power inequality for Carleson sums
  SuiteResult cp = exact_suite(cfg.mutate ? "carleson-power (factor dropped)" : "carleson-power");
  for (int t = 0; t < 200; ++t) {
    std::mt19937_64 rng = trial_rng(cfg, 0x200000ULL + static_cast<std::uint64_t>(t));
    const CarlesonSequence lam = random_carleson(layout, rng);
    for (double p : exps) {
      const CarlesonCheck chk = carleson_power_check(lam, p, cfg.mutate ? 1.0 : p);
      ++cp.cases;
      note_ratio(cp, chk.max_ratio);
      if (!chk.holds) {
        ++cp.violations;
        if (cp.witness.empty())
          cp.witness = "p=" + format_number(p) + " cell " + std::to_string(chk.worst_cell) + " lhs=" + format_number(chk.lhs) + " rhs=" + format_number(chk.rhs);
        counter << "carleson p=" << format_number(p) << " cell " << chk.worst_cell << "\n" << dump(lam) << "\n";
      }
    }
  }
  res.suites.push_back(cp);

  // empty families
  SuiteResult empty = exact_suite("empty-family");
  {
    const CarlesonSequence none{layout, {}};
    const GridFunction<double> one = GridFunction<double>::constant(layout, 1.0);
    for (double p : exps) {
      ++empty.cases;
      if (!carleson_power_check(none, p).holds) ++empty.violations;
    }
    ExponentTuple e = cfg.exponents;
    ++empty.cases;
    if (commutator_sparse_form({}, one, one, one, one, e, 1).total() != 0) ++empty.violations;
    ++empty.cases;
    if (!certify_sparse(layout, {}, 0.5).ok()) ++empty.violations;
  }
  res.suites.push_back(empty);

  // level-set sparse family and the sharp maximal domination
  SuiteResult ls = exact_suite("levelset-domination");
  SuiteResult os = exact_suite("oscillation-domination");
  for (int t = 0; t < 50; ++t) {
    std::mt19937_64 rng = trial_rng(cfg, 0x300000ULL + static_cast<std::uint64_t>(t));
    const GridFunction<double> f = sample_symbol(layout, BSampler::Mixed, rng);
    const Weight<double> nu = sample_weights(layout, cfg.ensemble, cfg, rng).omega1;
    const LevelsetSparse fam = build_levelset_sparse(f, nu);
    const auto osc = oscillations(f, nu);
    const Values<double> sharp = sup_over_containing(osc);
    CubeField<double> chosen(layout);
    for (const auto& q : fam.family.cubes()) chosen(q) = osc(q);
    const Values<double> sum = sum_over_containing(chosen);
    ++ls.cases;
    bool ok = certify_sparse(layout, fam.family.cubes(), 0.5).ok() && fam.domination_constant <= fam.c0;
    for (Index c = 0; c < layout.cell_count(); ++c)
      if (sharp[c] > fam.domination_constant * sum[c] * (1 + 1e-12)) ok = false;
    note_ratio(ls, fam.domination_constant / fam.c0);
    if (!ok) {
      ++ls.violations;
      if (ls.witness.empty()) ls.witness = "input " + std::to_string(t) + " C=" + format_number(fam.domination_constant);
      counter << "levelset input " << t << "\nf: " << dump(f) << "\nnu: " << dump(nu) << "\n";
    }

    const OscillationSparse ofam = build_oscillation_sparse(f, nu, DyadicCube::unit(layout.dim));
    const auto [left, right] = oscillation_domination_sides(f, nu, DyadicCube::unit(layout.dim), ofam.family);
    ++os.cases;
    bool ook = certify_sparse(layout, ofam.family.cubes(), 0.5, &nu).ok();
    for (Index c = 0; c < layout.cell_count(); ++c)
      if (left[c] > ofam.domination_constant * right[c] * (1 + 1e-12) + 1e-300) ook = false;
    note_ratio(os, ofam.domination_constant);
    if (!ook) {
      ++os.violations;
      if (os.witness.empty()) os.witness = "input " + std::to_string(t);
      counter << "oscillation input " << t << "\nf: " << dump(f) << "\nsigma: " << dump(nu) << "\n";
    }
  }
  res.suites.push_back(ls);
  res.suites.push_back(os);

  // ratio studies
  SuiteResult ne = ratio_study("carleson-norm-equivalence");
  SuiteResult fb = ratio_study("sparse-fractional-bound");
  SuiteResult rh = ratio_study("reverse-holder");
  for (int t = 0; t < 50; ++t) {
    std::mt19937_64 rng = trial_rng(cfg, 0x400000ULL + static_cast<std::uint64_t>(t));
    const WeightTriple w = sample_weights(layout, cfg.ensemble, cfg, rng);
    const CarlesonSequence lam = random_carleson(layout, rng);
    for (double p : {1.5, 2.0, 3.0}) {
      const auto [a, b] = carleson_norm_equivalence(lam, p, w.omega1);
      ++ne.cases;
      if (b > 0) note_ratio(ne, a / b);
    }
    const GridFunction<double> f = sample_data(layout, rng);
    const SparseFamily fam = stopping_family(f, f, 1.0, 1.0);
    const auto [a, b] = sparse_fractional_bound_check(fam.cubes(), f, w.omega2, 2.0, 3.0);
    ++fb.cases;
    if (b > 0) note_ratio(fb, a / b);
    const std::vector<Weight<double>> ws{w.omega1, w.omega2};
    const std::vector<double> te{0.5, 0.5};
    const auto [lo, hi] = reverse_holder_extremes<double>(ws, te);
    ++rh.cases;
    note_ratio(rh, lo);
    note_ratio(rh, hi);
  }
  res.suites.push_back(ne);
  res.suites.push_back(fb);
  res.suites.push_back(rh);

  const std::string text = counter.str();
  if (!text.empty()) {
    res.log.push_back("counterexamples recorded");
    if (!cfg.out.empty()) {
      std::filesystem::create_directories(cfg.out);
      std::ofstream(std::filesystem::path(cfg.out) / "lemmas_counterexamples.txt") << text;
    }
  }
  return res;
}

RunResult run_kernel_validate(const ExperimentConfig& cfg) {
  cfg.validate();
  RunResult res;
  res.config = cfg;
  KernelSpec k = cfg.mutate ? KernelSpec::with_exponent(cfg.dim, 2.0 * cfg.dim - 1.0) : cfg.kernel();
  const double c0_cap = std::pow(4.0, cfg.dim);
  for (int level = 1; level <= cfg.levels; ++level) {
    const GridLayout layout(cfg.dim, level);
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(level));
    const KernelReport rep = validate_kernel(k, layout, cfg.kernel_samples, seed);
    SuiteResult s = exact_suite("kernel levels=" + std::to_string(level));
    s.cases = 1;
    s.min_ratio = rep.measured_c0;
    s.max_ratio = rep.max_size_ratio;
    const bool c0_ok = rep.measured_c0 <= c0_cap * (1 + 1e-12);
    if (!rep.ok() || !c0_ok) {
      s.violations = 1;
      s.witness = !rep.failures.empty() ? rep.failures.front() : "measured c0 " + format_number(rep.measured_c0) + " exceeds " + format_number(c0_cap);
    }
    TrialRecord rec = base_record(level, seed, cfg.mutate ? "mutated-kernel" : "reference-kernel", cfg.exponents);
    rec.flags.push_back("smooth=" + format_number(rep.max_smooth_ratio));
    rec.flags.push_back("dini=" + format_number(rep.dini));
    rec.flags.push_back("c0=" + format_number(rep.measured_c0));
    if (!s.passed()) rec.flags.push_back("fail");
    set_ratio(rec, rep.max_size_ratio, 1.0);
    res.records.push_back(std::move(rec));
    res.suites.push_back(std::move(s));
  }
  return res;
}

RunResult run(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::Upper: return run_upper(cfg);
    case Experiment::Lower: return run_lower(cfg);
    case Experiment::SparseDom: return run_sparse_dom(cfg);
    case Experiment::SparseForm: return run_sparse_form(cfg);
    case Experiment::Lemmas: return run_lemmas(cfg);
    case Experiment::KernelValidate: return run_kernel_validate(cfg);
  }
  throw Error("unknown experiment");
}

}  // namespace dyadic::harness
