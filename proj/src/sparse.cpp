#include "dyadic/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace dyadic {

struct SparseFamilyBuilder {
  static SparseFamily make(const GridLayout& layout, std::vector<DyadicCube> cubes, std::vector<std::vector<Index>> majors,
                           double eta, const Weight<double>* base) {
    SparseFamily s;
    s.layout_ = layout;
    s.cubes_ = std::move(cubes);
    s.majors_ = std::move(majors);
    s.eta_ = eta;
    if (base) s.base_ = *base;
    return s;
  }
};

namespace {

double cell_mass(const GridLayout& layout, const Weight<double>* base, Index c) {
  return base ? (*base)[c] * layout.cell_measure() : layout.cell_measure();
}

double mass(const GridLayout& layout, const Weight<double>* base, const std::vector<Index>& cs) {
  if (!base) return static_cast<double>(cs.size()) * layout.cell_measure();
  return base->measure(cs);
}

/// measure(E) >= eta measure(Q); exact on Lebesgue cell counts.
bool major_large_enough(const GridLayout& layout, const Weight<double>* base, std::size_t major_cells, double major_mass,
                        const DyadicCube& q, double eta) {
  if (!base) return static_cast<double>(major_cells) >= eta * cells_per_cube(layout, q.level);
  return major_mass >= eta * base->measure(cells(q, layout.levels)) * (1.0 - 1e-12);
}

std::optional<SparseViolation> check_invariants(const GridLayout& layout, const std::vector<DyadicCube>& cubes,
                                                const std::vector<std::vector<Index>>& majors, double eta,
                                                const Weight<double>* base) {
  std::vector<int> owner(static_cast<std::size_t>(layout.cell_count()), -1);
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    const DyadicCube& q = cubes[i];
    double m = 0;
    for (Index c : majors[i]) {
      if (c < 0 || c >= layout.cell_count() || !q.contains(cube_of_cell(layout, c, layout.levels)))
        return SparseViolation{"major not inside cube", q, 0, 0};
      if (owner[static_cast<std::size_t>(c)] >= 0) return SparseViolation{"majors overlap", q, 0, 0};
      owner[static_cast<std::size_t>(c)] = static_cast<int>(i);
      m += cell_mass(layout, base, c);
    }
    if (!major_large_enough(layout, base, majors[i].size(), m, q, eta))
      return SparseViolation{"insufficient major subset", q, m, eta * mass(layout, base, cells(q, layout.levels))};
  }
  return std::nullopt;
}

std::string format_ranges(const std::vector<Index>& cs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < cs.size();) {
    std::size_t j = i;
    while (j + 1 < cs.size() && cs[j + 1] == cs[j] + 1) ++j;
    if (i > 0) os << ',';
    os << cs[i] << '-' << cs[j];
    i = j + 1;
  }
  return os.str();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// (<|h|^r>_Q)^{1/r} over the given cells, Lebesgue.
double local_average(const std::vector<Index>& cs, double r, auto&& value) {
  if (std::isinf(r)) {
    double m = 0;
    for (Index c : cs) m = std::max(m, std::abs(value(c)));
    return m;
  }
  double s = 0;
  for (Index c : cs) s += std::pow(std::abs(value(c)), r);
  return std::pow(s / static_cast<double>(cs.size()), 1.0 / r);
}

double mean_over(const GridFunction<double>& b, const std::vector<Index>& cs) {
  // constant on Q: return the value itself so that b - <b>_Q vanishes exactly
  const auto [lo, hi] = std::minmax_element(cs.begin(), cs.end(), [&](Index x, Index y) { return b[x] < b[y]; });
  if (b[*lo] == b[*hi]) return b[*lo];
  double s = 0;
  for (Index c : cs) s += b[c];
  return s / static_cast<double>(cs.size());
}

}  // namespace

std::string SparseViolation::describe() const {
  std::ostringstream os;
  os << kind << " at " << cube.to_string();
  if (kind == "insufficient major subset") os << ": major measure " << major_measure << " < required " << required;
  return os.str();
}

bool SparseFamily::contains(const DyadicCube& q) const { return std::binary_search(cubes_.begin(), cubes_.end(), q); }

Certification certify_sparse(const GridLayout& layout, std::span<const DyadicCube> input, double eta, const Weight<double>* base) {
  if (!(eta > 0 && eta <= 1)) throw Error("certify_sparse: eta must lie in (0,1]");
  std::vector<DyadicCube> cubes(input.begin(), input.end());
  for (const auto& q : cubes) {
    if (q.dim != layout.dim || q.level < 0 || q.level > layout.levels) throw Error("certify_sparse: cube " + q.to_string() + " is not in the lattice");
  }
  std::sort(cubes.begin(), cubes.end());
  cubes.erase(std::unique(cubes.begin(), cubes.end()), cubes.end());

  // canonical majors: every cell belongs to the deepest family cube containing it
  std::map<DyadicCube, std::size_t> pos;
  for (std::size_t i = 0; i < cubes.size(); ++i) pos.emplace(cubes[i], i);
  std::vector<std::vector<Index>> majors(cubes.size());
  for (Index c = 0; c < layout.cell_count(); ++c) {
    for (int l = layout.levels; l >= 0; --l) {
      auto it = pos.find(cube_of_cell(layout, c, l));
      if (it != pos.end()) {
        majors[it->second].push_back(c);
        break;
      }
    }
  }
  auto violation = check_invariants(layout, cubes, majors, eta, base);
  if (!violation) return {SparseFamilyBuilder::make(layout, std::move(cubes), std::move(majors), eta, base), std::nullopt};

  // fallback: finest cubes first, each taking just enough free cells
  std::vector<std::size_t> order(cubes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cubes[a].level > cubes[b].level; });
  std::vector<char> taken(static_cast<std::size_t>(layout.cell_count()), 0);
  std::vector<std::vector<Index>> greedy(cubes.size());
  for (std::size_t i : order) {
    const DyadicCube& q = cubes[i];
    const auto cs = cells(q, layout.levels);
    const double need = eta * mass(layout, base, cs);
    double got = 0;
    for (Index c : cs) {
      if (taken[static_cast<std::size_t>(c)]) continue;
      if (major_large_enough(layout, base, greedy[i].size(), got, q, eta)) break;
      greedy[i].push_back(c);
      taken[static_cast<std::size_t>(c)] = 1;
      got += cell_mass(layout, base, c);
    }
    if (!major_large_enough(layout, base, greedy[i].size(), got, q, eta))
      return {std::nullopt, SparseViolation{"insufficient major subset", q, got, need}};
  }
  for (auto& m : greedy) std::sort(m.begin(), m.end());
  if (auto v = check_invariants(layout, cubes, greedy, eta, base)) return {std::nullopt, v};
  return {SparseFamilyBuilder::make(layout, std::move(cubes), std::move(greedy), eta, base), std::nullopt};
}

bool packing_bound_holds(const SparseFamily& family) {
  const GridLayout& layout = family.layout();
  const Weight<double>* base = family.base_measure() ? &*family.base_measure() : nullptr;
  std::vector<char> covered(static_cast<std::size_t>(layout.cell_count()), 0);
  double total = 0;
  for (const auto& q : family.cubes()) {
    const auto cs = cells(q, layout.levels);
    total += mass(layout, base, cs);
    for (Index c : cs) covered[static_cast<std::size_t>(c)] = 1;
  }
  double uni = 0;
  for (Index c = 0; c < layout.cell_count(); ++c)
    if (covered[static_cast<std::size_t>(c)]) uni += cell_mass(layout, base, c);
  return total <= uni / family.eta() * (1.0 + 1e-12);
}

std::string SparseFamily::serialize() const {
  std::ostringstream os;
  os.precision(17);
  os << "# dim=" << layout_.dim << " levels=" << layout_.levels << " measure=" << (base_ ? "weighted" : "lebesgue") << '\n';
  for (std::size_t i = 0; i < cubes_.size(); ++i) {
    const auto& q = cubes_[i];
    os << q.level << ' ' << q.origin[0];
    if (q.dim == 2) os << ' ' << q.origin[1];
    os << " ; " << eta_ << " ; " << format_ranges(majors_[i]) << '\n';
  }
  return os.str();
}

SparseFamily SparseFamily::deserialize(std::string_view text, const Weight<double>* base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int dim = 0, levels = -1;
  bool weighted = false;
  std::vector<DyadicCube> cubes;
  std::vector<std::vector<Index>> majors;
  double eta = -1;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      std::istringstream hs(t.substr(1));
      std::string kv;
      while (hs >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
        if (key == "dim") dim = std::stoi(val);
        else if (key == "levels") levels = std::stoi(val);
        else if (key == "measure") weighted = (val == "weighted");
      }
      continue;
    }
    if (dim == 0 || levels < 0) throw Error("sparse family: missing '# dim=.. levels=..' header");
    const auto s1 = t.find(';'), s2 = t.find(';', s1 == std::string::npos ? 0 : s1 + 1);
    if (s1 == std::string::npos || s2 == std::string::npos) throw Error("sparse family: malformed line '" + t + "'");
    std::istringstream cs(t.substr(0, s1));
    DyadicCube q{dim, 0, {0, 0}};
    if (!(cs >> q.level >> q.origin[0]) || (dim == 2 && !(cs >> q.origin[1])))
      throw Error("sparse family: malformed cube in '" + t + "'");
    const double line_eta = std::stod(trim(t.substr(s1 + 1, s2 - s1 - 1)));
    if (eta >= 0 && line_eta != eta) throw Error("sparse family: inconsistent eta across lines");
    eta = line_eta;
    std::vector<Index> m;
    std::istringstream rs(trim(t.substr(s2 + 1)));
    std::string range;
    while (std::getline(rs, range, ',')) {
      range = trim(range);
      if (range.empty()) continue;
      const auto dash = range.find('-');
      if (dash == std::string::npos) throw Error("sparse family: malformed range '" + range + "'");
      const Index a = std::stoll(range.substr(0, dash)), b = std::stoll(range.substr(dash + 1));
      for (Index c = a; c <= b; ++c) m.push_back(c);
    }
    cubes.push_back(q);
    majors.push_back(std::move(m));
  }
  if (dim == 0 || levels < 0) throw Error("sparse family: missing '# dim=.. levels=..' header");
  if (weighted && !base) throw Error("sparse family: weighted family needs its base measure to be re-checked");
  const GridLayout layout(dim, levels);
  if (eta < 0) eta = 1.0;
  for (const auto& q : cubes)
    if (q.level > levels) throw Error("sparse family: cube " + q.to_string() + " finer than the grid");
  if (auto v = check_invariants(layout, cubes, majors, eta, weighted ? base : nullptr)) throw Error("sparse family: " + v->describe());
  // keep the canonical cube order
  std::vector<std::size_t> order(cubes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cubes[a] < cubes[b]; });
  std::vector<DyadicCube> sc;
  std::vector<std::vector<Index>> sm;
  for (std::size_t i : order) {
    if (!sc.empty() && sc.back() == cubes[i]) throw Error("sparse family: duplicate cube " + cubes[i].to_string());
    sc.push_back(cubes[i]);
    sm.push_back(std::move(majors[i]));
  }
  return SparseFamilyBuilder::make(layout, std::move(sc), std::move(sm), eta, weighted ? base : nullptr);
}

//-----------------------------------------------------------------------------
// constructions

namespace {

/// Maximal dyadic cubes (coarsest first) satisfying pred, searched below `root` inclusive or exclusive.
template <typename Pred>
void maximal_cubes(const DyadicCube& root, bool include_root, int levels, Pred&& pred, std::vector<DyadicCube>& out) {
  std::vector<DyadicCube> stack;
  if (include_root) {
    stack.push_back(root);
  } else if (root.level < levels) {
    for (const auto& c : children(root, levels)) stack.push_back(c);
  }
  while (!stack.empty()) {
    const DyadicCube q = stack.back();
    stack.pop_back();
    if (pred(q)) {
      out.push_back(q);
    } else if (q.level < levels) {
      const auto ch = children(q, levels);
      stack.insert(stack.end(), ch.rbegin(), ch.rend());
    }
  }
}

}  // namespace

LevelsetSparse build_levelset_sparse(const GridFunction<double>& f, const Weight<double>& nu, double c0) {
  if (!(c0 > 1)) throw Error("levelset sparse: C0 must exceed 1");
  const GridLayout& layout = f.layout();
  const CubeField<double> osc = oscillations(f, nu);
  double lo = kInfinity, hi = 0;
  for (int j = 0; j <= layout.levels; ++j) {
    for (Index i = 0; i < osc.level(j).size(); ++i) {
      const double v = osc.level(j)[i];
      if (v > 0) lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi == 0) {
    auto cert = certify_sparse(layout, {}, 0.5);
    return {std::move(*cert.family), c0, 0.0, 0};
  }
  const DyadicCube root = DyadicCube::unit(layout.dim);
  for (double base = c0; base < 1e12; base *= 2) {
    const double lb = std::log(base);
    // one spare stratum at each end absorbs rounding in the logarithms
    const long kmin = static_cast<long>(std::floor(std::log(lo) / lb)) - 1;
    const long kmax = static_cast<long>(std::ceil(std::log(hi) / lb));
    std::vector<DyadicCube> selected;
    int strata = 0;
    for (long k = kmin; k <= kmax; ++k) {
      const double t = std::pow(base, static_cast<double>(k));
      const std::size_t before = selected.size();
      maximal_cubes(root, true, layout.levels, [&](const DyadicCube& q) { return osc(q) > t; }, selected);
      if (selected.size() > before) ++strata;
    }
    auto cert = certify_sparse(layout, selected, 0.5);
    if (!cert.ok()) continue;
    const SparseFamily& fam = *cert.family;
    const Values<double> sharp = sup_over_containing(osc);
    CubeField<double> chosen(layout);
    for (const auto& q : fam.cubes()) chosen(q) = osc(q);
    const Values<double> sum = sum_over_containing(chosen);
    double constant = 0;
    for (Index c = 0; c < layout.cell_count(); ++c) {
      if (sharp[c] > 0) constant = std::max(constant, sum[c] > 0 ? sharp[c] / sum[c] : kInfinity);
    }
    return {std::move(*cert.family), base, constant, strata};
  }
  throw Error("levelset sparse: certification failed for every threshold base up to 1e12");
}

std::pair<GridFunction<double>, GridFunction<double>> oscillation_domination_sides(const GridFunction<double>& b,
                                                                                   const Weight<double>& sigma,
                                                                                   const DyadicCube& q0,
                                                                                   const SparseFamily& family) {
  const GridLayout& layout = b.layout();
  auto sigma_mean = [&](const std::vector<Index>& cs) {
    double num = 0, den = 0;
    for (Index c : cs) {
      num += b[c] * sigma[c];
      den += sigma[c];
    }
    return num / den;
  };
  GridFunction<double> lhs(layout), rhs(layout);
  const auto c0 = cells(q0, layout.levels);
  const double m0 = sigma_mean(c0);
  for (Index c : c0) lhs[c] = std::abs(b[c] - m0);
  for (const auto& q : family.cubes()) {
    const auto cs = cells(q, layout.levels);
    const double m = sigma_mean(cs);
    double num = 0, den = 0;
    for (Index c : cs) {
      num += std::abs(b[c] - m) * sigma[c];
      den += sigma[c];
    }
    const double a = num / den;
    for (Index c : cs) rhs[c] += a;
  }
  return {lhs, rhs};
}

OscillationSparse build_oscillation_sparse(const GridFunction<double>& b, const Weight<double>& sigma, const DyadicCube& q0) {
  const GridLayout& layout = b.layout();
  std::vector<DyadicCube> family;
  std::vector<DyadicCube> stack{q0};
  while (!stack.empty()) {
    const DyadicCube q = stack.back();
    stack.pop_back();
    family.push_back(q);
    const auto cs = cells(q, layout.levels);
    double num = 0, den = 0;
    for (Index c : cs) {
      num += b[c] * sigma[c];
      den += sigma[c];
    }
    const double m = num / den;
    // sigma-averages of |b - <b>^sigma_Q| over every subcube of Q
    Values<double> dev(layout.cell_count());
    dev.setZero();
    double tot = 0;
    for (Index c : cs) {
      dev[c] = std::abs(b[c] - m) * sigma[c];
      tot += dev[c];
    }
    const double a = tot / den;
    if (!(a > 0)) continue;
    const CubeField<double> ds = cube_sums(layout, dev);
    const CubeField<double> ss = cube_sums(layout, sigma.values());
    std::vector<DyadicCube> stops;
    maximal_cubes(q, false, layout.levels, [&](const DyadicCube& p) { return ds(p) / ss(p) > 2.0 * a; }, stops);
    stack.insert(stack.end(), stops.rbegin(), stops.rend());
  }
  auto cert = certify_sparse(layout, family, 0.5, &sigma);
  if (!cert.ok()) throw Error("oscillation sparse: stopping family failed sigma-certification: " + cert.violation->describe());
  auto [lhs, rhs] = oscillation_domination_sides(b, sigma, q0, *cert.family);
  double constant = 0;
  for (Index c = 0; c < layout.cell_count(); ++c) {
    if (lhs[c] > 0) constant = std::max(constant, rhs[c] > 0 ? lhs[c] / rhs[c] : kInfinity);
  }
  return {std::move(*cert.family), constant};
}

//-----------------------------------------------------------------------------
// sparse forms

SparseFormTerms commutator_sparse_form(std::span<const DyadicCube> family, const GridFunction<double>& b,
                                       const GridFunction<double>& f1, const GridFunction<double>& f2,
                                       const GridFunction<double>& g, const ExponentTuple& e, int k) {
  if (k < 0) throw Error("commutator sparse form: k must be >= 0");
  const double sc = e.s_conj();
  SparseFormTerms out;
  for (const auto& q : family) {
    const auto cs = cells(q, b.levels());
    const double m = mean_over(b, cs);
    auto osc = [&](Index c) { return k == 0 ? 1.0 : std::pow(std::abs(b[c] - m), k); };
    const double a1 = local_average(cs, e.r1, [&](Index c) { return f1[c]; });
    const double a2 = local_average(cs, e.r2, [&](Index c) { return f2[c]; });
    const double ag = local_average(cs, sc, [&](Index c) { return g[c]; });
    const double o1 = local_average(cs, e.r1, [&](Index c) { return osc(c) * f1[c]; });
    const double og = local_average(cs, sc, [&](Index c) { return osc(c) * g[c]; });
    out.term1 += o1 * a2 * ag * q.measure();
    out.term2 += a1 * a2 * og * q.measure();
  }
  return out;
}

double fractional_sparse_form(std::span<const DyadicCube> family, const GridFunction<double>& f1, const GridFunction<double>& f2,
                              const GridFunction<double>& g, const ExponentTuple& e) {
  const double beta = e.beta1();
  if (beta < 0) throw Error("fractional sparse form: needs beta1 >= 0 (p1 <= q1)");
  const double t1 = e.r1 / (1.0 + beta), sc = e.s_conj();
  double total = 0;
  for (const auto& q : family) {
    const auto cs = cells(q, f1.levels());
    total += local_average(cs, t1, [&](Index c) { return f1[c]; }) * local_average(cs, e.r2, [&](Index c) { return f2[c]; }) *
             local_average(cs, sc, [&](Index c) { return g[c]; }) * std::pow(q.measure(), 1.0 + beta / e.r1);
  }
  return total;
}

CkTriple ck_interpolation_check(const GridFunction<double>& b, const GridFunction<double>& f, const GridFunction<double>& g,
                                const DyadicCube& q, const ExponentTuple& e, int k) {
  if (k < 0 || k > e.k1) throw Error("ck check: need 0 <= k <= k1");
  const auto cs = cells(q, b.levels());
  const double m = mean_over(b, cs);
  const double sc = e.s_conj();
  auto c_at = [&](int j) {
    const int fp = e.k1 - j;
    auto pw = [&](Index c, int n) { return n == 0 ? 1.0 : std::pow(std::abs(b[c] - m), n); };
    return local_average(cs, e.r1, [&](Index c) { return pw(c, fp) * f[c]; }) * local_average(cs, sc, [&](Index c) { return pw(c, j) * g[c]; });
  };
  return {c_at(k), c_at(0), c_at(e.k1)};
}

namespace {

CubeField<double> lambda_field(const CarlesonSequence& lam) {
  CubeField<double> f(lam.layout);
  for (const auto& t : lam.terms) {
    if (t.lambda < 0) throw Error("carleson: lambda must be nonnegative");
    f(t.cube) += t.lambda;
  }
  return f;
}

}  // namespace

CarlesonCheck carleson_power_check(const CarlesonSequence& lam, double p, double factor) {
  if (!(p >= 1) || std::isinf(p)) throw Error("carleson power check: need 1 <= p < infinity");
  const GridLayout& layout = lam.layout;
  const CubeField<double> lf = lambda_field(lam);
  CarlesonCheck out;
  std::vector<double> chain(static_cast<std::size_t>(layout.levels + 1));
  for (Index c = 0; c < layout.cell_count(); ++c) {
    for (int l = 0; l <= layout.levels; ++l) chain[static_cast<std::size_t>(l)] = lf(cube_of_cell(layout, c, l));
    // tail[l] = sum over cubes at levels >= l containing the cell
    double tail = 0, rhs = 0;
    for (int l = layout.levels; l >= 0; --l) {
      const double v = chain[static_cast<std::size_t>(l)];
      tail += v;
      if (v > 0) rhs += v * std::pow(tail, p - 1.0);
    }
    rhs *= factor;
    const double lhs = std::pow(tail, p);
    if (lhs == 0) continue;
    const double ratio = rhs > 0 ? lhs / rhs : kInfinity;
    if (ratio > out.max_ratio) {
      out.max_ratio = ratio;
      out.worst_cell = c;
      out.lhs = lhs;
      out.rhs = rhs;
    }
    if (lhs > rhs * (1.0 + 1e-12)) out.holds = false;
  }
  return out;
}

std::pair<double, double> carleson_norm_equivalence(const CarlesonSequence& lam, double p, const Weight<double>& w) {
  if (!(p > 1) || std::isinf(p)) throw Error("carleson norm equivalence: need 1 < p < infinity");
  const GridLayout& layout = lam.layout;
  const CubeField<double> lf = lambda_field(lam);
  const CubeField<double> wq = cube_measures(w);
  const Values<double> s = sum_over_containing(lf);
  const double lhs = std::pow((s.pow(p) * w.values()).sum() * layout.cell_measure(), 1.0 / p);
  // subtree sums of lambda_Q' w(Q'), bottom-up
  CubeField<double> sub(layout);
  for (int j = 0; j <= layout.levels; ++j) sub.level(j) = lf.level(j) * wq.level(j);
  for (int j = layout.levels; j > 0; --j) {
    for (Index i = 0; i < sub.level(j).size(); ++i) sub.level(j - 1)[detail::parent_index(layout.dim, j, i)] += sub.level(j)[i];
  }
  double acc = 0;
  for (int j = 0; j <= layout.levels; ++j) {
    for (Index i = 0; i < lf.level(j).size(); ++i) {
      const double l = lf.level(j)[i];
      if (l > 0) acc += l * std::pow(sub.level(j)[i] / wq.level(j)[i], p - 1.0) * wq.level(j)[i];
    }
  }
  return {lhs, std::pow(acc, 1.0 / p)};
}

std::pair<double, double> sparse_fractional_bound_check(std::span<const DyadicCube> family, const GridFunction<double>& f,
                                                        const Weight<double>& zeta, double p, double q) {
  if (!(p > 1 && p <= q) || std::isinf(q)) throw Error("sparse fractional bound: need 1 < p <= q < infinity");
  const double a = 1.0 / p - 1.0 / q;
  const GridLayout& layout = f.layout();
  const auto avg = cube_averages(f, 1.0 / (1.0 + a), &zeta);
  const auto zq = cube_measures(zeta);
  CubeField<double> coeff(layout);
  for (const auto& cube : family) coeff(cube) += avg(cube) * std::pow(zq(cube), a);
  const GridFunction<double> sum(layout, sum_over_containing(coeff));
  return {lp_norm(sum, q, &zeta), lp_norm(f, p, &zeta)};
}

}  // namespace dyadic
