#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fkstable/model.hpp"
#include "fkstable/stable_density.hpp"
#include "fkstable/types.hpp"

namespace fkstable {

// Uniform space grid on [-L, L]; node i sits at -L + i dx and represents the
// cell of width dx around it.  Kernel matrices are cell-averaged in the
// second argument, which keeps sub-grid-width kernels mass-correct.
struct KernelGrid {
  Real L = 8.0;
  int n = 0;
  Real dx = 0.0;

  static KernelGrid make(Real L, Real dx_target);
  Real node(int i) const { return -L + i * dx; }
  int index_below(Real x) const;
  bool same(const KernelGrid& o) const {
    return n == o.n && std::abs(L - o.L) < 1e-12 && std::abs(dx - o.dx) < 1e-12;
  }
};

struct KernelTable {
  KernelGrid grid;
  Real t = 0.0;
  Real tau = 0.0;          // base step of the underlying series build
  Real cap = 0.0;          // potential cap M
  int series_terms = 0;    // number of series terms summed
  Real trunc_error = 0.0;  // sup-norm bound for the dropped series tail
  Real asym_pre = 0.0;     // worst relative asymmetry seen before symmetrization
  Matrix values;

  // bilinear readout of p(t, x, y)
  Real eval(Real x, Real y) const;
  Real row_mass(int i) const;  // trapezoid integral of row i
};

// Free-kernel matrix at time t (cell masses / dx), exact in the stable law.
Matrix free_kernel_matrix(const KernelGrid& grid, Real alpha, Real t, int threads = 1);

// One-step kernel of the capped potential by the alternating perturbation
// series: p = sum_k p_k, p_0 the free kernel and each p_k one time-space
// integration of the previous term against -(kappa ^ M).  Requires
// tau * M <= 0.5; terms are summed until the recorded tail bound is below
// tail_tol.  m_sub is the trapezoid sub-grid of the step.
KernelTable build_series_step(const ModelSpec& model, Real cap, Real tau,
                              const KernelGrid& grid, int m_sub = 6, Real tail_tol = 1e-8,
                              int threads = 1);

// Same build with an explicit radial potential (calibration and surrogate
// potentials).
KernelTable build_series_step_potential(const std::function<Real(Real)>& kappa_radial,
                                        Real sup_potential, Real alpha, Real tau,
                                        const KernelGrid& grid, int m_sub = 6,
                                        Real tail_tol = 1e-8, int threads = 1);

// Matrix-product time composition with trapezoid space weights; the result
// is symmetrized and the pre-symmetrization asymmetry recorded.
KernelTable compose(const KernelTable& a, const KernelTable& b, int threads = 1);

struct OracleSpec {
  Real L = 10.0;
  Real dx = 0.05;        // coarse grid; the refined grid uses dx/2
  Real tau = 0.001953125;  // 2^{-9}; every queried t must be a lattice multiple
  Real cap0 = 32.0;      // caps cap0, 2 cap0, 4 cap0
  int m_sub = 6;
  int threads = 1;
};

struct OracleValue {
  Real value = 0.0;
  Real budget = 0.0;  // cap-extrapolation spread + grid correction + leak + series tail
  Real v_caps[3] = {0, 0, 0};
  Real grid_corr = 0.0;
  Real leak = 0.0;
  bool cap_monotone = true;
};

// Deterministic d = 1 oracle for p^kappa(t, x, y): increasing-cap series
// builds on two grids, composed dyadically in time, extrapolated in the cap
// with the spread reported as the error budget.
class DuhamelOracle {
 public:
  DuhamelOracle(const ModelSpec& model, const OracleSpec& spec);

  OracleValue eval(Real t, Real x, Real y);
  // largest-cap fine-grid table composed to time t (shared with the checks)
  KernelTable table(Real t);

  const OracleSpec& spec() const { return spec_; }
  const ModelSpec& model() const { return model_; }

  // absorbing-boundary return bound at time t for probe radius m
  Real leak_bound(Real t, Real m) const;

 private:
  struct Chain {
    KernelTable step;
    std::vector<KernelTable> powers;  // step^(2^k)
    std::map<long long, KernelTable> at;  // composed tables keyed by t / tau

    KernelTable get(long long mult, int threads);
  };

  long long lattice_multiple(Real t) const;

  ModelSpec model_;
  OracleSpec spec_;
  std::vector<Chain> coarse_;  // one per cap
  Chain fine_;                 // largest cap on the dx/2 grid
};

struct AppendixCheckReport {
  Real lhs = 0.0;        // p^kappa(t, x, y)
  Real rhs = 0.0;        // p^{kappa, eps-exterior surrogate} + F(x) + F(y)
  Real f_x = 0.0, f_y = 0.0;
  Real budget = 0.0;
  bool pass = false;     // lhs <= rhs + budget
  bool budget_dominates = false;  // inequality gap smaller than the budgets
};

// Exterior-domain upper bound: the eps-exterior kernel is realized by
// extending the potential with a huge cap inside B(0, eps), and
// F_{t,eps}(w) is the lattice supremum of oracle values started inside
// B(0, eps) over s in (t/2, t].
AppendixCheckReport appendix_check(DuhamelOracle& oracle, Real t, Real eps, Real x, Real y);

void export_table_csv(const KernelTable& table, const ModelSpec& model, const std::string& path);
KernelTable import_table_csv(const std::string& path);

}  // namespace fkstable
