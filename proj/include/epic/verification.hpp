#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "epic/auxgeom.hpp"
#include "epic/core.hpp"
#include "epic/oracle.hpp"
#include "epic/prng.hpp"

namespace epic {

/// A dense random pencil with a prescribed spectrum, so the ground
/// truth is known by construction (independently of any solver).
struct RandomPencil {
  SpdPencil pencil;
  Vector eigenvalues;   // ascending, exactly the prescribed values
  Matrix eigenvectors;  // M-orthonormal columns
};

struct RandomPencilSpec {
  Index n = 20;
  double lambda1 = 1.0;
  double lambda2 = 2.0;
  double lambda_n = 10.0;
  bool generalized = false;  // random well-conditioned M instead of I
};

RandomPencil make_random_pencil(const RandomPencilSpec& spec, SplitMix64& rng);

/// An anchor q = u1 + eps * w (M-normalized, w spanned by the higher
/// eigenvectors) with eps tuned until the closed-form convexity
/// parameters certify validity and rho_q - lambda1 is `fraction` of
/// the admissible width. Also returns the explicit chart and the
/// certified parameters.
struct AnchorSetup {
  Vector q;
  oracle::ExplicitChart chart;
  ConvexityParams params;
};

AnchorSetup make_valid_anchor(const RandomPencil& rp, const Preconditioner& t,
                              double fraction, SplitMix64& rng);

/// An initial vector close enough to u1 for the rate certificate:
/// Rq(x0) - lambda1 <= (rho_q - lambda1) / max{8k, 2k(1+tau k)^2}.
Vector make_rate_initial(const RandomPencil& rp, const AnchorSetup& anchor,
                         SplitMix64& rng);

struct VerificationConfig {
  int instances = 50;
  int samples = 200;
  Index min_n = 12;
  Index max_n = 60;
  std::uint64_t seed = 2026;
  bool run_probe = true;        // mu * 1.1 sharpness sentinel
  int lyapunov_instances = 20;
  std::string out_path;         // JSON report (empty: no file)
};

struct VerificationSummary {
  bool section2_pass = false;
  bool probe_detected = false;  // inflated mu failed somewhere, as it should
  bool lyapunov_pass = false;
  bool acceleration_pass = false;
  nlohmann::json report;
  bool all_pass() const {
    return section2_pass && (probe_detected || !probe_requested) && lyapunov_pass &&
           acceleration_pass;
  }
  bool probe_requested = true;
};

/// Drives the inequality certification suite over random valid-anchor
/// instances, the mu-inflation falsification probe, and the Lyapunov
/// decay / acceleration checks of the optimizer.
VerificationSummary run_verification(const VerificationConfig& cfg);

}  // namespace epic
