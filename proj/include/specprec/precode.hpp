#pragma once

#include "specprec/leakage.hpp"

#include <cstdint>
#include <vector>

namespace specprec {

/// One rank-1 quadratic constraint |u^H x|^2 <= b, with u = a(nu_m)^* and
/// b = gamma_m, so that u^H x = a(nu_m)^T x.
struct Rank1Constraint {
  CVec u;
  double b = 1.0;
};

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;          ///< ||d - d_bar||^2
  double max_violation_db = 0.0;   ///< max_m 10log10(|u^H d_bar|^2 / b)
  double primal_residual = 0.0;    ///< ADMM: max_m ||y_m - d_bar||
};

struct ConvergenceTrace {
  std::vector<TraceEntry> entries;
};

struct PrecoderResult {
  CVec d_bar;
  ConvergenceTrace trace;
  double evm_pct = 0.0;
  double max_violation_db = 0.0;
  bool converged = true;           ///< false when an iteration budget ran out
  int iterations = 0;
};

/// Violation sentinel floor (dB) when all constraint powers are zero.
inline constexpr double kDbFloor = -400.0;

std::vector<Rank1Constraint> constraints_from(const LeakageMatrix& A, const RVec& gamma);

double max_violation_db(const std::vector<Rank1Constraint>& constraints, const CVec& x);

/// Euclidean projection onto {z : |u^H z|^2 <= b}. Identity on the set.
CVec project_rank1(const CVec& x, const Rank1Constraint& c);

/// Notch precoder: d_bar = (I - A^H (A A^H)^-1 A) d, nulls A d_bar.
/// Throws std::runtime_error when A A^H is numerically rank deficient.
PrecoderResult nsp_precode(const LeakageMatrix& A, const OfdmSymbol& d);

/// Sequential projections onto the M constraint sets, one trace entry per sweep.
PrecoderResult pocs_precode(const std::vector<Rank1Constraint>& constraints,
                            const OfdmSymbol& d, int max_iter, double tol_db);

/// Scaled-form consensus ADMM, y/z initialized to zero; stops early when the
/// violation is under tol_db and the primal residual under 1e-6*||d||.
PrecoderResult admm_precode(const std::vector<Rank1Constraint>& constraints,
                            const OfdmSymbol& d, double rho, int max_iter, double tol_db);

/// Coordinate descent on the Lagrange multipliers with closed-form updates;
/// the running inverse of (I + sum mu_m u_m u_m^H) is maintained by rank-1
/// Sherman-Morrison steps. One trace entry per full sweep.
PrecoderResult ssp_precode(const std::vector<Rank1Constraint>& constraints,
                           const OfdmSymbol& d, int n_iter);

/// (G + delta_mu u u^H)^-1 from G^-1 in O(N^2).
/// Throws std::runtime_error when the update denominator is near zero.
CMat sherman_morrison_apply(const CMat& G_inv, const CVec& u, double delta_mu);

/// Number of dense-solve fallbacks taken by ssp_precode since the last reset.
std::uint64_t ssp_dense_fallback_count();
void ssp_reset_fallback_count();

/// Dykstra's alternating projections: the exact Euclidean projection of d onto
/// the intersection of the constraint sets. Reference solver for tests;
/// converged=false flags an exhausted budget.
PrecoderResult dykstra_oracle(const std::vector<Rank1Constraint>& constraints,
                              const OfdmSymbol& d, int max_iter, double tol);

}  // namespace specprec
