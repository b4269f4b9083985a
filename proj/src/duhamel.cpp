#include "fkstable/duhamel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fkstable/parallel.hpp"

namespace fkstable {

namespace {

// Fixed 64-row output blocks keep thread-count out of the arithmetic: each
// block is one sequential Eigen product, so results are schedule-invariant.
void matmul_blocked(const Matrix& a, const Matrix& b, Matrix& c, int threads) {
  const int n = static_cast<int>(a.rows());
  c.resize(n, b.cols());
  const int block = 64;
  const std::size_t nblocks = (n + block - 1) / block;
  parallel_for(nblocks, threads, [&](std::size_t bi) {
    const int r0 = static_cast<int>(bi) * block;
    const int len = std::min(block, n - r0);
    c.middleRows(r0, len).noalias() = a.middleRows(r0, len) * b;
  });
}

Vector trapezoid_weights(const KernelGrid& g) {
  Vector w = Vector::Constant(g.n, g.dx);
  w(0) *= 0.5;
  w(g.n - 1) *= 0.5;
  return w;
}

}  // namespace

KernelGrid KernelGrid::make(Real L, Real dx_target) {
  KernelGrid g;
  g.n = 2 * static_cast<int>(std::round(L / dx_target)) + 1;
  g.L = L;
  g.dx = 2.0 * L / (g.n - 1);
  return g;
}

int KernelGrid::index_below(Real x) const {
  const int i = static_cast<int>(std::floor((x + L) / dx));
  return std::max(0, std::min(n - 2, i));
}

Real KernelTable::eval(Real x, Real y) const {
  const int i = grid.index_below(x), j = grid.index_below(y);
  const Real fx = (x - grid.node(i)) / grid.dx;
  const Real fy = (y - grid.node(j)) / grid.dx;
  return (1 - fx) * (1 - fy) * values(i, j) + fx * (1 - fy) * values(i + 1, j) +
         (1 - fx) * fy * values(i, j + 1) + fx * fy * values(i + 1, j + 1);
}

Real KernelTable::row_mass(int i) const {
  Real s = 0.0;
  for (int j = 0; j < grid.n; ++j)
    s += values(i, j) * ((j == 0 || j == grid.n - 1) ? 0.5 * grid.dx : grid.dx);
  return s;
}

Matrix free_kernel_matrix(const KernelGrid& grid, Real alpha, Real t, int threads) {
  const StableDensity1D& law = stable_density(alpha);
  const int n = grid.n;
  // translation invariant: one stencil of cell masses per |i - j|
  Vector stencil(n);
  parallel_for(n, threads, [&](std::size_t k) {
    const Real r = k * grid.dx;
    stencil(k) = law.interval_mass_scaled(t, r - 0.5 * grid.dx, r + 0.5 * grid.dx) / grid.dx;
  });
  Matrix q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q(i, j) = stencil(std::abs(i - j));
  return q;
}

namespace {

KernelTable series_step_impl(const std::function<Real(Real)>& kappa_radial, Real cap, Real alpha,
                             Real tau, const KernelGrid& grid, int m_sub, Real tail_tol,
                             int threads) {
  if (!(tau > 0.0)) throw std::domain_error("build_series_step: tau > 0 required");
  if (tau * cap > 0.5 + 1e-12)
    throw std::domain_error("build_series_step: requires tau * M <= 0.5");
  if (m_sub < 2) throw std::domain_error("build_series_step: m_sub >= 2");

  const int n = grid.n;
  const Real h = tau / m_sub;
  Vector kap(n);
  for (int i = 0; i < n; ++i) {
    const Real r = std::abs(grid.node(i));
    kap(i) = r > 0.0 ? std::min(kappa_radial(r), cap) : cap;
  }
  const Vector w = trapezoid_weights(grid);
  const Vector kw = kap.cwiseProduct(w);

  // free kernel at the sub-grid times
  std::vector<Matrix> Q(m_sub + 1);
  for (int j = 1; j <= m_sub; ++j) Q[j] = free_kernel_matrix(grid, alpha, j * h, threads);

  // p_0 on the sub-grid; index 0 is the delta (flagged, never materialized)
  std::vector<Matrix> prev(m_sub + 1), next(m_sub + 1);
  for (int j = 1; j <= m_sub; ++j) prev[j] = Q[j];

  KernelTable out;
  out.grid = grid;
  out.t = tau;
  out.tau = tau;
  out.cap = cap;
  out.values = Q[m_sub];

  const Real rho = tau * cap;
  const Real supq = stable_density(alpha).density_scaled(tau, 0.0);
  Real tail = rho / std::max(1e-12, 1.0 - rho) * supq;  // bound after k = 0
  int k = 0;
  Matrix acc, term;
  while (tail > tail_tol && k < 40) {
    ++k;
    for (int j = 1; j <= m_sub; ++j) {
      // trapezoid over s = i h, i = 0..j, of Q(s) K prev(t_j - s)
      // i = 0: the delta acts on the left; rows scale by kappa
      acc = prev[j].array().colwise() * (0.5 * h * kap).array();
      // i = j: prev(0) is the delta for k = 1 (columns scale), zero afterwards
      if (k == 1) acc += 0.5 * h * (Q[j].array().rowwise() * kap.transpose().array()).matrix();
      for (int i = 1; i < j; ++i) {
        const Matrix scaled = prev[j - i].array().colwise() * (h * kw).array();
        matmul_blocked(Q[i], scaled, term, threads);
        acc += term;
      }
      next[j] = -acc;
    }
    std::swap(prev, next);
    out.values += prev[m_sub];
    const Real actual = prev[m_sub].cwiseAbs().maxCoeff();
    tail = std::min(std::pow(rho, k + 1) / std::max(1e-12, 1.0 - rho) * supq,
                    actual * rho / std::max(1e-12, 1.0 - rho));
  }
  out.series_terms = k;
  out.trunc_error = tail;
  return out;
}

}  // namespace

KernelTable build_series_step(const ModelSpec& model, Real cap, Real tau, const KernelGrid& grid,
                              int m_sub, Real tail_tol, int threads) {
  if (model.d != 1) throw std::domain_error("build_series_step: d = 1 only");
  auto kr = [&model](Real r) { return model.kappa.radial(r); };
  return series_step_impl(kr, cap, model.alpha, tau, grid, m_sub, tail_tol, threads);
}

KernelTable build_series_step_potential(const std::function<Real(Real)>& kappa_radial,
                                        Real sup_potential, Real alpha, Real tau,
                                        const KernelGrid& grid, int m_sub, Real tail_tol,
                                        int threads) {
  return series_step_impl(kappa_radial, sup_potential, alpha, tau, grid, m_sub, tail_tol,
                          threads);
}

KernelTable compose(const KernelTable& a, const KernelTable& b, int threads) {
  if (!a.grid.same(b.grid)) throw std::invalid_argument("compose: grid mismatch");
  KernelTable out;
  out.grid = a.grid;
  out.t = a.t + b.t;
  out.tau = a.tau;
  out.cap = a.cap;
  out.series_terms = std::max(a.series_terms, b.series_terms);
  const Vector w = trapezoid_weights(a.grid);
  const Matrix scaled = b.values.array().colwise() * w.array();
  matmul_blocked(a.values, scaled, out.values, threads);
  const Real scale = std::max(1e-300, out.values.cwiseAbs().maxCoeff());
  out.asym_pre = (out.values - out.values.transpose()).cwiseAbs().maxCoeff() / scale;
  out.values = 0.5 * (out.values + out.values.transpose()).eval();
  out.trunc_error = a.trunc_error + b.trunc_error;
  return out;
}

KernelTable DuhamelOracle::Chain::get(long long mult, int threads) {
  auto it = at.find(mult);
  if (it != at.end()) return it->second;
  // binary expansion over cached powers of two
  int bit = 0;
  KernelTable acc;
  bool have = false;
  long long rem = mult;
  while (rem > 0) {
    while (static_cast<int>(powers.size()) <= bit)
      powers.push_back(compose(powers.back(), powers.back(), threads));
    if (rem & 1) {
      acc = have ? compose(acc, powers[bit], threads) : powers[bit];
      have = true;
    }
    rem >>= 1;
    ++bit;
  }
  if (at.size() > 12) at.clear();  // bounded cache; rebuilds are a few products
  at.emplace(mult, acc);
  return acc;
}

long long DuhamelOracle::lattice_multiple(Real t) const {
  const Real m = t / spec_.tau;
  const long long mult = static_cast<long long>(std::llround(m));
  if (mult < 1 || std::abs(m - mult) > 1e-6)
    throw std::domain_error("oracle: t must be a positive lattice multiple of tau");
  return mult;
}

DuhamelOracle::DuhamelOracle(const ModelSpec& model, const OracleSpec& spec)
    : model_(model), spec_(spec) {
  if (model.d != 1) throw std::domain_error("DuhamelOracle: d = 1 only");
  const KernelGrid coarse = KernelGrid::make(spec.L, spec.dx);
  const KernelGrid fine = KernelGrid::make(spec.L, 0.5 * spec.dx);
  coarse_.resize(3);
  for (int c = 0; c < 3; ++c) {
    const Real cap = spec.cap0 * std::pow(2.0, c);
    coarse_[c].step = build_series_step(model, cap, spec.tau, coarse, spec.m_sub, 1e-8,
                                        spec.threads);
    coarse_[c].powers.push_back(coarse_[c].step);
  }
  fine_.step =
      build_series_step(model, 4.0 * spec.cap0, spec.tau, fine, spec.m_sub, 1e-8, spec.threads);
  fine_.powers.push_back(fine_.step);
}

Real DuhamelOracle::leak_bound(Real t, Real m) const {
  const StableDensity1D& law = stable_density(model_.alpha);
  const Real margin = spec_.L - m;
  if (margin <= 0.0) return std::numeric_limits<Real>::infinity();
  // Levy inequality for the symmetric free process + best return kernel
  const Real p_exit =
      std::min(1.0, 4.0 * (1.0 - law.cdf(margin * std::pow(t, -1.0 / model_.alpha))));
  Real ret = 0.0;
  for (int i = 1; i <= 16; ++i)
    ret = std::max(ret, law.density_scaled(t * i / 16.0, margin));
  return p_exit * ret;
}

KernelTable DuhamelOracle::table(Real t) {
  return fine_.get(lattice_multiple(t), spec_.threads);
}

OracleValue DuhamelOracle::eval(Real t, Real x, Real y) {
  const long long mult = lattice_multiple(t);
  OracleValue out;
  for (int c = 0; c < 3; ++c) out.v_caps[c] = coarse_[c].get(mult, spec_.threads).eval(x, y);
  const KernelTable fine_table = fine_.get(mult, spec_.threads);
  const Real vf = fine_table.eval(x, y);

  const Real d1 = out.v_caps[0] - out.v_caps[1];
  const Real d2 = out.v_caps[1] - out.v_caps[2];
  const Real tol = 1e-9 + 1e-6 * std::abs(out.v_caps[0]);
  out.cap_monotone = d1 >= -tol && d2 >= -tol;

  Real v_inf = out.v_caps[2];
  Real cap_budget = std::abs(d2);
  if (out.cap_monotone && d1 > 0.0 && d2 > 0.0) {
    const Real rho = d2 / d1;
    if (rho > 0.01 && rho < 0.95) {
      const Real corr = d2 * rho / (1.0 - rho);
      v_inf = out.v_caps[2] - corr;
      cap_budget = std::abs(corr) + 0.1 * std::abs(d2);
    }
  }
  out.grid_corr = vf - out.v_caps[2];
  out.leak = leak_bound(t, std::max(std::abs(x), std::abs(y)));
  out.value = v_inf + out.grid_corr;
  out.budget = cap_budget + std::abs(out.grid_corr) + out.leak + fine_table.trunc_error;
  return out;
}

AppendixCheckReport appendix_check(DuhamelOracle& oracle, Real t, Real eps, Real x, Real y) {
  const OracleSpec& spec = oracle.spec();
  const ModelSpec& model = oracle.model();
  AppendixCheckReport rep;

  const OracleValue v = oracle.eval(t, x, y);
  rep.lhs = v.value;

  // F_{t,eps}: lattice supremum of kernel values launched inside B(0, eps)
  // over s in (t/2, t]
  std::vector<KernelTable> tabs;
  for (int k = 2; k <= 4; ++k) tabs.push_back(oracle.table(t * k / 4.0));
  const KernelGrid g = tabs.front().grid;
  auto sup_from_ball = [&](Real w) {
    Real sup = 0.0;
    for (const KernelTable& tab : tabs) {
      for (int i = 0; i < g.n; ++i) {
        const Real z = g.node(i);
        if (std::abs(z) <= std::max(eps, g.dx) && z != 0.0)
          sup = std::max(sup, tab.eval(z, w));
      }
    }
    return sup;
  };
  rep.f_x = sup_from_ball(x);
  rep.f_y = sup_from_ball(y);

  // exterior surrogate: huge cap inside B(0, eps)
  const Real big = 0.4 / spec.tau;
  auto kext = [&](Real r) {
    if (r <= eps) return big;
    return std::min(model.kappa.radial(r), 4.0 * spec.cap0);
  };
  const KernelGrid fine = KernelGrid::make(spec.L, 0.5 * spec.dx);
  KernelTable step = build_series_step_potential(kext, big, model.alpha, spec.tau, fine,
                                                 spec.m_sub, 1e-8, spec.threads);
  KernelTable cur = step;
  long long mult = static_cast<long long>(std::llround(t / spec.tau));
  // dyadic composition
  KernelTable acc;
  bool have = false;
  while (mult > 0) {
    if (mult & 1) {
      acc = have ? compose(acc, cur, spec.threads) : cur;
      have = true;
    }
    mult >>= 1;
    if (mult > 0) cur = compose(cur, cur, spec.threads);
  }
  const Real p_ext = acc.eval(x, y);

  rep.rhs = p_ext + rep.f_x + rep.f_y;
  rep.budget = v.budget + acc.trunc_error + oracle.leak_bound(t, std::max(std::abs(x), std::abs(y)));
  rep.pass = rep.lhs <= rep.rhs + rep.budget;
  rep.budget_dominates = std::abs(rep.rhs - rep.lhs) < rep.budget;
  return rep;
}

void export_table_csv(const KernelTable& table, const ModelSpec& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_table_csv: cannot open " + path);
  out.precision(17);
  out << "alpha,beta,b,L,dx,tau,M,K,t,trunc_error,n\n";
  out << model.alpha << ',' << model.kappa.beta() << ',' << model.kappa.b() << ','
      << table.grid.L << ',' << table.grid.dx << ',' << table.tau << ',' << table.cap << ','
      << table.series_terms << ',' << table.t << ',' << table.trunc_error << ','
      << table.grid.n << '\n';
  for (int i = 0; i < table.grid.n; ++i) {
    for (int j = 0; j < table.grid.n; ++j) {
      out << table.values(i, j);
      out << (j + 1 == table.grid.n ? '\n' : ',');
    }
  }
}

KernelTable import_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import_table_csv: cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::getline(in, line);
  std::vector<Real> meta;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) meta.push_back(std::stod(cell));
  }
  if (meta.size() != 11) throw std::runtime_error("import_table_csv: bad metadata row");
  KernelTable t;
  t.grid.L = meta[3];
  t.grid.dx = meta[4];
  t.grid.n = static_cast<int>(meta[10]);
  t.tau = meta[5];
  t.cap = meta[6];
  t.series_terms = static_cast<int>(meta[7]);
  t.t = meta[8];
  t.trunc_error = meta[9];
  t.values.resize(t.grid.n, t.grid.n);
  for (int i = 0; i < t.grid.n; ++i) {
    std::getline(in, line);
    std::stringstream ss(line);
    std::string cell;
    for (int j = 0; j < t.grid.n; ++j) {
      std::getline(ss, cell, ',');
      t.values(i, j) = std::stod(cell);
    }
  }
  return t;
}

}  // namespace fkstable
