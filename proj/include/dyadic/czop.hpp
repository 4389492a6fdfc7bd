#ifndef DYADIC_CZOP_HPP_
#define DYADIC_CZOP_HPP_

#include "dyadic/grid.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dyadic {

using Point = Eigen::Vector2d;  // second coordinate is 0 in one dimension

enum class DiagonalPolicy { ExcludeCoincident, EpsilonRegularize };

/// Bilinear kernel K(x,y1,y2) with its size, smoothness and non-degeneracy constants.
/// The reference kernel is (|x-y1| + |x-y2|)^{-exponent} with exponent 2n.
struct KernelSpec {
  int dim = 1;
  double exponent = 2;  // decay power of the reference form
  double c_k = 1;       // size constant
  double c0 = 4;        // non-degeneracy constant
  double c_omega = 0;   // modulus is omega(t) = c_omega * t unless `modulus` is set
  DiagonalPolicy diagonal = DiagonalPolicy::ExcludeCoincident;
  double epsilon = 0;   // used by EpsilonRegularize

  std::function<double(const Point&, const Point&, const Point&)> custom;  // overrides the reference form
  std::function<double(double)> modulus;

  static KernelSpec reference(int dim);
  /// Reference form with a different decay power; exponent 2n-1 breaks the size bound.
  static KernelSpec with_exponent(int dim, double exponent);

  double omega(double t) const { return modulus ? modulus(t) : c_omega * t; }
};

/// K(x,y1,y2). Throws "diagonal" on x = y1 = y2 under the exclude policy.
double kernel_eval(const KernelSpec& k, const Point& x, const Point& y1, const Point& y2);

struct KernelReport {
  double max_size_ratio = 0;    // |K| (|x-y1|+|x-y2|)^{2n} / c_K
  double max_smooth_ratio = 0;  // |K - K_shifted| (|x-y1|+|x-y2|)^{2n} / (c_K omega(|h|/(|x-y1|+|x-y2|)))
  double dini = 0;              // int_0^1 omega(t) dt/t
  double measured_c0 = 0;       // max over sampled (y,r) of 1/(|K(x,y,y)| r^{2n}) at the witness x
  std::vector<std::string> failures;
  bool size_ok = true, smooth_ok = true, dini_ok = true, nondegenerate_ok = true;

  bool ok() const { return size_ok && smooth_ok && dini_ok && nondegenerate_ok; }
};

/// Samples cell-centre triples of the grid and checks size, smoothness in all three slots,
/// finiteness of the Dini norm and non-degeneracy. Failures name the clause and a witness.
KernelReport validate_kernel(const KernelSpec& k, const GridLayout& layout, int samples, std::uint64_t seed = 1);

/// int_0^1 omega(t) dt/t by Gauss-Legendre on the dyadic intervals [2^{-j-1}, 2^{-j}], j < 1000.
/// Moduli decaying like a power of 1/log(1/t) converge too slowly for this truncation.
double dini_norm(const std::function<double(double)>& omega);

/// Largest resolution apply_T accepts: 8 in one dimension, 4 in two.
int resolution_cap(int dim);

/// T on a fixed grid: cell centres and the pairwise distance table are cached.
class OperatorInstance {
 public:
  OperatorInstance(KernelSpec kernel, const GridLayout& layout);

  const KernelSpec& kernel() const { return kernel_; }
  const GridLayout& layout() const { return layout_; }
  const Point& center(Index c) const { return centers_[static_cast<std::size_t>(c)]; }
  /// K at cell centres, 0 on excluded diagonal triples.
  double at(Index x, Index y1, Index y2) const;

  /// G(x,y1) = sum_{y2 in ys} K(x,y1,y2) f2(y2) h for x in xs, y1 in ys.
  Eigen::MatrixXd partial(const GridFunction<double>& f2, std::span<const Index> xs, std::span<const Index> ys) const;

 private:
  KernelSpec kernel_;
  GridLayout layout_;
  std::vector<Point> centers_;
  Eigen::MatrixXd dist_;  // only for the reference form
};

/// T(f1,f2)(x) = sum_{y1,y2} K(x,y1,y2) f1(y1) f2(y2) h^2.
GridFunction<double> apply_T(const OperatorInstance& op, const GridFunction<double>& f1, const GridFunction<double>& f2);

enum class CommutatorMode { KernelForm, ExpansionForm };

/// C^k_b(T)(f1,f2). KernelForm sums (b(x)-b(y1))^k K f1 f2 over all triples directly;
/// ExpansionForm uses sum_j C(k,j) (-1)^j b^{k-j} T(b^j f1, f2).
GridFunction<double> commutator(const OperatorInstance& op, const GridFunction<double>& b, const GridFunction<double>& f1,
                                const GridFunction<double>& f2, int k, CommutatorMode mode = CommutatorMode::KernelForm);

/// M^#_{T,s}(f1,f2): cellwise sup over cubes Q of the L^s(Q x Q) oscillation of
/// T(f1,f2) - T(f1 chi_{3Q}, f2 chi_{3Q}). sample_cubes = 0 uses every cube.
GridFunction<double> grand_sharp_maximal(const OperatorInstance& op, const GridFunction<double>& f1,
                                         const GridFunction<double>& f2, double s, std::size_t sample_cubes = 0,
                                         std::uint64_t seed = 1);

struct WeakTrial {
  DyadicCube cube;
  GridFunction<double> f1, f2;
};

/// Random cubes (level < L) with nonnegative random f1, f2 supported on the cube.
std::vector<WeakTrial> make_weak_trials(const GridLayout& layout, int count, std::uint64_t seed);

/// Operator evaluated on the cells of Q for inputs already supported on Q.
using LocalOperator = std::function<std::vector<double>(const DyadicCube&, const GridFunction<double>&, const GridFunction<double>&)>;

LocalOperator local_T(const OperatorInstance& op);
LocalOperator local_grand_sharp(const OperatorInstance& op, double s);

struct WeakBoundEstimate {
  double phi = 0;
  int used_trials = 0;
  std::string ensemble;
};

/// Smallest phi with |{x in Q : |op(f1,f2)(x)| > phi <f1>_{r1,Q} <f2>_{r2,Q}}| <= lambda |Q| over all trials.
WeakBoundEstimate estimate_local_weak_bound(const LocalOperator& op, double r1, double r2, double lambda,
                                            std::span<const WeakTrial> trials);

struct PartnerCube {
  DyadicCube cube;
  double constant = 0;  // min over x in partner, y1,y2 in Q of K(x,y1,y2) |Q|^2
  double center_distance = 0;
};

/// Same-size cube at centre distance ceil(A) l(Q) along a coordinate axis. Throws "cube does not fit".
PartnerCube select_partner_cube(const DyadicCube& q, double a, const KernelSpec& k, int levels);

}  // namespace dyadic

#endif  // DYADIC_CZOP_HPP_
