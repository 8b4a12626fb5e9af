#include "specprec/precode.hpp"

#include <Eigen/Cholesky>

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace specprec {

namespace {

std::atomic<std::uint64_t> g_ssp_dense_fallbacks{0};

double violation_db_one(const Rank1Constraint& c, const CVec& x) {
  double p = std::norm(c.u.dot(x));  // Eigen dot conjugates the first argument
  if (p <= 0.0) return kDbFloor;
  return std::max(kDbFloor, 10.0 * std::log10(p / c.b));
}

double objective(const CVec& d, const CVec& d_bar) { return (d - d_bar).squaredNorm(); }

double evm_pct_of(const CVec& d, const CVec& d_bar) {
  double nd = d.norm();
  return nd > 0.0 ? (d - d_bar).norm() / nd * 100.0 : 0.0;
}

void finalize(PrecoderResult& r, const CVec& d) {
  r.evm_pct = evm_pct_of(d, r.d_bar);
}

}  // namespace

std::vector<Rank1Constraint> constraints_from(const LeakageMatrix& A, const RVec& gamma) {
  if (gamma.size() != A.rows.rows())
    throw std::invalid_argument("gamma length does not match leakage matrix");
  std::vector<Rank1Constraint> cs;
  cs.reserve(static_cast<size_t>(gamma.size()));
  for (int m = 0; m < gamma.size(); ++m) {
    if (!(gamma[m] > 0.0)) throw std::invalid_argument("gamma must be positive");
    Rank1Constraint c;
    c.u = A.rows.row(m).conjugate().transpose();  // u^H x = a(nu_m)^T x
    c.b = gamma[m];
    cs.push_back(std::move(c));
  }
  return cs;
}

double max_violation_db(const std::vector<Rank1Constraint>& constraints, const CVec& x) {
  double worst = kDbFloor;
  for (const auto& c : constraints) worst = std::max(worst, violation_db_one(c, x));
  return worst;
}

CVec project_rank1(const CVec& x, const Rank1Constraint& c) {
  const Complex inner = c.u.dot(x);  // u^H x
  const double p = std::norm(inner);
  if (p <= c.b) return x;  // interior or boundary: projection is the identity
  const double mag = std::sqrt(p);
  const double coeff = (std::sqrt(c.b) - mag) / (c.u.squaredNorm() * mag);
  return x + coeff * inner * c.u;
}

PrecoderResult nsp_precode(const LeakageMatrix& A, const OfdmSymbol& d) {
  PrecoderResult r;
  const int M = A.n_points();
  if (M == 0) {
    r.d_bar = d;
    finalize(r, d);
    r.max_violation_db = kDbFloor;
    return r;
  }
  if (d.size() != A.rows.cols()) throw std::invalid_argument("dimension mismatch");
  CMat gram = A.rows * A.rows.adjoint();  // M x M Hermitian PSD
  Eigen::LDLT<CMat> ldlt(gram);
  double dmax = ldlt.vectorD().real().maxCoeff();
  double dmin = ldlt.vectorD().real().minCoeff();
  if (ldlt.info() != Eigen::Success || !(dmin > dmax * 1e-12))
    throw std::runtime_error(
        "NSP: A*A^H is numerically rank deficient (condition ratio " +
        std::to_string(dmin / dmax) + "); drop duplicate frequency points");
  r.d_bar = d - A.rows.adjoint() * ldlt.solve(A.rows * d);
  finalize(r, d);
  r.max_violation_db = kDbFloor;  // residual leakage is at rounding level
  r.iterations = 1;
  return r;
}

PrecoderResult pocs_precode(const std::vector<Rank1Constraint>& constraints,
                            const OfdmSymbol& d, int max_iter, double tol_db) {
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  PrecoderResult r;
  r.d_bar = d;
  r.converged = false;
  for (int i = 1; i <= max_iter; ++i) {
    for (const auto& c : constraints) r.d_bar = project_rank1(r.d_bar, c);
    double viol = max_violation_db(constraints, r.d_bar);
    r.trace.entries.push_back({i, objective(d, r.d_bar), viol, 0.0});
    r.iterations = i;
    if (viol <= tol_db) {
      r.converged = true;
      break;
    }
  }
  r.max_violation_db = max_violation_db(constraints, r.d_bar);
  finalize(r, d);
  return r;
}

PrecoderResult admm_precode(const std::vector<Rank1Constraint>& constraints,
                            const OfdmSymbol& d, double rho, int max_iter, double tol_db) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  const int M = static_cast<int>(constraints.size());
  const long n = d.size();
  PrecoderResult r;
  r.converged = false;

  std::vector<CVec> y(constraints.size(), CVec::Zero(n));
  std::vector<CVec> z(constraints.size(), CVec::Zero(n));
  CVec d_bar = d;
  const double dnorm = d.norm();

  for (int i = 1; i <= max_iter; ++i) {
    CVec acc = CVec::Zero(n);
    for (size_t m = 0; m < constraints.size(); ++m) acc += y[m] + z[m];
    CVec d_prev = d_bar;
    d_bar = (d + rho * acc) / (1.0 + rho * M);

    double primal = 0.0;
    for (size_t m = 0; m < constraints.size(); ++m) {
      y[m] = project_rank1(d_bar - z[m], constraints[m]);
      z[m] += y[m] - d_bar;
      primal = std::max(primal, (y[m] - d_bar).norm());
    }

    double viol = max_violation_db(constraints, d_bar);
    r.trace.entries.push_back({i, objective(d, d_bar), viol, primal});
    r.iterations = i;
    // the step-size term keeps the early iterations, where the iterate is
    // still shrunk toward zero and trivially feasible, from stopping the run
    double step = (d_bar - d_prev).norm();
    if (viol <= tol_db && primal <= 1e-6 * dnorm && step <= 1e-6 * dnorm) {
      r.converged = true;
      break;
    }
  }
  if (M == 0) r.converged = true;
  r.d_bar = d_bar;
  r.max_violation_db = max_violation_db(constraints, r.d_bar);
  finalize(r, d);
  return r;
}

CMat sherman_morrison_apply(const CMat& G_inv, const CVec& u, double delta_mu) {
  if (delta_mu == 0.0) return G_inv;
  CVec w = G_inv * u;
  Complex denom = 1.0 + delta_mu * u.dot(w);  // u^H G^-1 u
  if (std::abs(denom) < 1e-12)
    throw std::runtime_error("Sherman-Morrison: denominator near zero");
  CMat out = G_inv;
  out.noalias() -= (delta_mu / denom) * w * w.adjoint();
  return out;
}

namespace {

// In-place rank-1 update of the running inverse; returns false when the
// denominator is too small to trust.
bool sm_update(CMat& G_inv, const CVec& u, double delta_mu) {
  if (delta_mu == 0.0) return true;
  CVec w = G_inv * u;
  Complex denom = 1.0 + delta_mu * u.dot(w);
  if (std::abs(denom) < 1e-12) return false;
  G_inv.noalias() -= (delta_mu / denom) * w * w.adjoint();
  return true;
}

// Dense rebuild of (I + sum mu_m u_m u_m^H)^-1, used only as a fallback.
CMat dense_inverse(const std::vector<Rank1Constraint>& constraints,
                   const std::vector<double>& mu, long n) {
  CMat G = CMat::Identity(n, n);
  for (size_t m = 0; m < constraints.size(); ++m)
    if (mu[m] != 0.0) G.noalias() += mu[m] * constraints[m].u * constraints[m].u.adjoint();
  return G.llt().solve(CMat::Identity(n, n));
}

}  // namespace

std::uint64_t ssp_dense_fallback_count() { return g_ssp_dense_fallbacks.load(); }
void ssp_reset_fallback_count() { g_ssp_dense_fallbacks.store(0); }

PrecoderResult ssp_precode(const std::vector<Rank1Constraint>& constraints,
                           const OfdmSymbol& d, int n_iter) {
  if (n_iter < 1) throw std::invalid_argument("n_iter must be >= 1");
  const long n = d.size();
  const size_t M = constraints.size();
  PrecoderResult r;
  if (M == 0) {
    r.d_bar = d;
    finalize(r, d);
    r.max_violation_db = kDbFloor;
    r.iterations = n_iter;
    return r;
  }

  // mu_m^(0) = (1/lambda) (|a^T d| sqrt(lambda/gamma) - 1), clamped to >= 0
  std::vector<double> mu(M, 0.0);
  for (size_t m = 0; m < M; ++m) {
    const auto& c = constraints[m];
    double lambda = c.u.squaredNorm();
    double mag = std::abs(c.u.dot(d));
    mu[m] = std::max(0.0, (mag * std::sqrt(lambda / c.b) - 1.0) / lambda);
  }

  CMat G_inv = CMat::Identity(n, n);
  for (size_t m = 0; m < M; ++m)
    if (!sm_update(G_inv, constraints[m].u, mu[m])) {
      ++g_ssp_dense_fallbacks;
      G_inv = dense_inverse(constraints, mu, n);
    }

  for (int i = 1; i <= n_iter; ++i) {
    for (size_t m = 0; m < M; ++m) {
      const auto& c = constraints[m];
      // Recover the leave-one-out quantities alpha1 = u^H G_{\m}^-1 d and
      // alpha2 = u^H G_{\m}^-1 u from the full inverse instead of physically
      // downdating it: with beta2 = u^H G^-1 u one has
      // alpha = beta / (1 - mu_m beta2). The running inverse then takes a
      // single rank-1 step of size (mu_new - mu_m), which vanishes at a fixed
      // point, so rounding error stops accumulating across sweeps.
      CVec w = G_inv * c.u;
      double beta2 = std::real(c.u.dot(w));
      Complex beta1 = c.u.dot(G_inv * d);
      double denom0 = 1.0 - mu[m] * beta2;
      Complex alpha1;
      double alpha2;
      if (std::abs(denom0) > 1e-12) {
        alpha1 = beta1 / denom0;
        alpha2 = beta2 / denom0;
      } else {
        // degenerate leave-one-out recovery: rebuild G_{\m}^-1 densely
        ++g_ssp_dense_fallbacks;
        double saved = mu[m];
        mu[m] = 0.0;
        CMat G_loo = dense_inverse(constraints, mu, n);
        mu[m] = saved;
        alpha1 = c.u.dot(G_loo * d);
        alpha2 = std::real(c.u.dot(G_loo * c.u));
      }
      double root = std::sqrt(c.b);
      // phase-aligned update (phi = arg alpha1): mu = (|alpha1| - sqrt(b)) / (sqrt(b) alpha2)
      double mu_new = std::max(0.0, (std::abs(alpha1) - root) / (root * alpha2));
      double delta = mu_new - mu[m];
      Complex sm_denom = 1.0 + delta * beta2;
      if (std::abs(sm_denom) > 1e-12) {
        G_inv.noalias() -= (delta / sm_denom) * w * w.adjoint();
      } else {
        ++g_ssp_dense_fallbacks;
        mu[m] = mu_new;
        G_inv = dense_inverse(constraints, mu, n);
      }
      mu[m] = mu_new;
    }
    CVec d_bar = G_inv * d;
    r.trace.entries.push_back({i, objective(d, d_bar), max_violation_db(constraints, d_bar), 0.0});
  }

  r.d_bar = G_inv * d;
  r.iterations = n_iter;
  r.max_violation_db = max_violation_db(constraints, r.d_bar);
  finalize(r, d);
  return r;
}

PrecoderResult dykstra_oracle(const std::vector<Rank1Constraint>& constraints,
                              const OfdmSymbol& d, int max_iter, double tol) {
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  const long n = d.size();
  PrecoderResult r;
  r.converged = false;
  if (constraints.empty()) {
    r.d_bar = d;
    finalize(r, d);
    r.max_violation_db = kDbFloor;
    r.converged = true;
    return r;
  }

  std::vector<CVec> corr(constraints.size(), CVec::Zero(n));
  CVec x = d;
  const double dnorm = d.norm();
  for (int i = 1; i <= max_iter; ++i) {
    CVec prev = x;
    for (size_t m = 0; m < constraints.size(); ++m) {
      CVec y = project_rank1(x + corr[m], constraints[m]);
      corr[m] = x + corr[m] - y;
      x = y;
    }
    r.iterations = i;
    if ((i & 0xf) == 1 || i == max_iter)  // trace sparsely, cycles are cheap
      r.trace.entries.push_back({i, objective(d, x), max_violation_db(constraints, x), 0.0});
    if ((x - prev).norm() < tol * dnorm) {
      r.converged = true;
      break;
    }
  }
  r.d_bar = x;
  r.max_violation_db = max_violation_db(constraints, r.d_bar);
  finalize(r, d);
  return r;
}

}  // namespace specprec
