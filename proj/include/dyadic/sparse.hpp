#ifndef DYADIC_SPARSE_HPP_
#define DYADIC_SPARSE_HPP_

#include "dyadic/grid.hpp"
#include "dyadic/maximal.hpp"
#include "dyadic/weights.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dyadic {

struct SparseViolation {
  std::string kind;  // "insufficient major subset", "major not inside cube", "majors overlap"
  DyadicCube cube;
  double major_measure = 0;
  double required = 0;

  std::string describe() const;
};

/// Dyadic cubes with pairwise disjoint major subsets E_Q of measure >= eta * measure(Q).
/// Only certify_sparse and deserialize produce instances, so the invariants hold by construction.
class SparseFamily {
 public:
  const GridLayout& layout() const { return layout_; }
  std::span<const DyadicCube> cubes() const { return cubes_; }
  const std::vector<Index>& major(std::size_t i) const { return majors_[i]; }
  double eta() const { return eta_; }
  const std::optional<Weight<double>>& base_measure() const { return base_; }
  std::size_t size() const { return cubes_.size(); }
  bool empty() const { return cubes_.empty(); }
  bool contains(const DyadicCube& q) const;

  /// Line format: "level k1 [k2] ; eta ; a-b,c-d" with inclusive major-cell ranges.
  /// A leading "# dim=.. levels=.. measure=.." comment carries the layout.
  std::string serialize() const;
  /// Re-checks every invariant; the base measure must be supplied for sigma-sparse families.
  static SparseFamily deserialize(std::string_view text, const Weight<double>* base = nullptr);

 private:
  friend struct SparseFamilyBuilder;
  GridLayout layout_;
  std::vector<DyadicCube> cubes_;
  std::vector<std::vector<Index>> majors_;
  double eta_ = 1.0;
  std::optional<Weight<double>> base_;
};

struct Certification {
  std::optional<SparseFamily> family;
  std::optional<SparseViolation> violation;
  bool ok() const { return family.has_value(); }
};

/// Assigns E_Q = Q minus its maximal proper subcubes in the family, falling back to a
/// bottom-up greedy assignment, and verifies all three sparse invariants exactly.
Certification certify_sparse(const GridLayout& layout, std::span<const DyadicCube> cubes, double eta,
                             const Weight<double>* base_measure = nullptr);

/// Sum over the family of measure(Q) <= (1/eta) measure(union), the packing consequence of sparsity.
bool packing_bound_holds(const SparseFamily& family);

struct LevelsetSparse {
  SparseFamily family;
  double c0 = 2;                   // threshold base actually used
  double domination_constant = 0;  // fitted C in M^# f <= C sum chi_Q Omega(f,Q)
  int strata = 0;
};

/// Maximal dyadic cubes with Omega_nu(f,Q) > C0^k over all strata k, certified 1/2-sparse.
/// C0 is doubled until certification passes.
LevelsetSparse build_levelset_sparse(const GridFunction<double>& f, const Weight<double>& nu, double c0 = 2.0);

struct OscillationSparse {
  SparseFamily family;
  double domination_constant = 0;  // fitted C in |b - <b>^sigma_Q0| <= C sum <|b - <b>^sigma_Q|>^sigma_Q chi_Q
};

/// Stopping-time family inside Q0, 1/2-sparse with respect to sigma.
OscillationSparse build_oscillation_sparse(const GridFunction<double>& b, const Weight<double>& sigma, const DyadicCube& q0);

/// Pointwise (left, right) sides of the oscillation domination, for inspection.
std::pair<GridFunction<double>, GridFunction<double>> oscillation_domination_sides(const GridFunction<double>& b,
                                                                                   const Weight<double>& sigma,
                                                                                   const DyadicCube& q0,
                                                                                   const SparseFamily& family);

//-----------------------------------------------------------------------------
// sparse forms

struct SparseFormTerms {
  double term1 = 0;  // oscillation factor on f1
  double term2 = 0;  // oscillation factor on g
  double total() const { return term1 + term2; }
};

/// Both sums on the right of the commutator sparse bound with the oscillation power k.
SparseFormTerms commutator_sparse_form(std::span<const DyadicCube> family, const GridFunction<double>& b,
                                       const GridFunction<double>& f1, const GridFunction<double>& f2,
                                       const GridFunction<double>& g, const ExponentTuple& e, int k);

/// sum_S <|f1|>_{r1/(1+beta1),Q} <|f2|>_{r2,Q} <|g|>_{s',Q} |Q|^{1+beta1/r1}; needs beta1 >= 0.
double fractional_sparse_form(std::span<const DyadicCube> family, const GridFunction<double>& f1,
                              const GridFunction<double>& f2, const GridFunction<double>& g, const ExponentTuple& e);

struct CkTriple {
  double ck = 0, c0 = 0, ck1 = 0;
};

/// c_j = <|b-<b>_Q|^{k1-j} |f|>_{r1,Q} <|b-<b>_Q|^j |g|>_{s',Q} at j = k, 0, k1.
CkTriple ck_interpolation_check(const GridFunction<double>& b, const GridFunction<double>& f,
                                const GridFunction<double>& g, const DyadicCube& q, const ExponentTuple& e, int k);

struct CarlesonTerm {
  DyadicCube cube;
  double lambda = 0;
};

struct CarlesonSequence {
  GridLayout layout;
  std::vector<CarlesonTerm> terms;
};

struct CarlesonCheck {
  bool holds = true;
  Index worst_cell = -1;  // cell with the largest lhs/rhs
  double lhs = 0, rhs = 0;
  double max_ratio = 0;
};

/// (sum lambda_Q chi_Q)^p <= factor * sum lambda_Q chi_Q (sum_{Q' in Q} lambda_Q' chi_Q')^{p-1} at every cell.
/// The inequality uses factor = p.
CarlesonCheck carleson_power_check(const CarlesonSequence& lam, double p, double factor);
inline CarlesonCheck carleson_power_check(const CarlesonSequence& lam, double p) { return carleson_power_check(lam, p, p); }

/// (||sum lambda_Q chi_Q||_{L^p(w)}, (sum lambda_Q (w(Q)^{-1} sum_{Q' in Q} lambda_Q' w(Q'))^{p-1} w(Q))^{1/p}).
std::pair<double, double> carleson_norm_equivalence(const CarlesonSequence& lam, double p, const Weight<double>& w);

/// (||sum_S <|f|>^zeta_{1/(1+a),Q} zeta(Q)^a chi_Q||_{L^q(zeta)}, ||f||_{L^p(zeta)}) with a = 1/p - 1/q.
std::pair<double, double> sparse_fractional_bound_check(std::span<const DyadicCube> family, const GridFunction<double>& f,
                                                        const Weight<double>& zeta, double p, double q);

inline GridFunction<double> sparse_maximal(const GridFunction<double>& f, const SparseFamily& family, double p,
                                           const Weight<double>& mu) {
  return sparse_maximal(f, family.cubes(), p, mu);
}

}  // namespace dyadic

#endif  // DYADIC_SPARSE_HPP_
