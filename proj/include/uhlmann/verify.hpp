#pragma once

#include <span>
#include <string>
#include <vector>

#include "uhlmann/curvature.hpp"
#include "uhlmann/estimation.hpp"

namespace uhlmann {

enum class CheckStatus { passed, failed, skipped };

struct VerificationCheck {
  std::string name;
  CheckStatus status = CheckStatus::passed;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerificationReport {
  std::vector<VerificationCheck> checks;

  bool all_passed() const {
    for (const VerificationCheck& check : checks) {
      if (check.status == CheckStatus::failed) return false;
    }
    return true;
  }
};

struct VerifyOptions {
  double rank_tol = 0.0;  // <= 0 selects the model's rank_tol
  double pcc_tol = kPccTol;
  double fd_step = kDefaultFdStep;
  bool richardson = false;
};

/// Cross-checks the theory at one point: metric identities, Lyapunov
/// residual, agreement of the spectral, dual-contraction and connection
/// curvature routes (where their preconditions hold; otherwise the check is
/// reported as skipped with the reason), reparametrization invariance, the
/// PCC-iff-flat equivalence, and the pure-state gamma and curvature
/// reductions. Rank-deficient models additionally get the kernel-convention
/// independence check.
VerificationReport verify_point(const ModelDefinition& model, std::span<const double> coords,
                                const VerifyOptions& options = {});

}  // namespace uhlmann
