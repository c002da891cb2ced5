// Offline parameter selection: the admissible ranges for the shift Gamma and
// weight W, the sub-optimality term M(Gamma), the two selection strategies
// (maximum weight, minimum sub-optimality), and the 2x2 PSD certificates for
// the selected point.
#pragma once

#include <array>

#include "omgrid/devices.hpp"

namespace omgrid {

struct AlgorithmParams {
  double gamma = 0.0;  // shift (energy units)
  double w = 0.0;      // weight, 0 < w <= w_max
  double bound = 0.0;  // M(gamma)/w
};

struct WMaxResult {
  double value = 0.0;
  bool degenerate = false;  // d_hi == d_lo: any finite weight admissible, value is a cap
};

// ((s_max - s_min) - (u_max - u_min)) / (d_hi - d_lo).
// Requires the frequent-acting condition; throws errc::parameter otherwise.
// degenerate_cap_factor scales the numerator into the cap used when d_hi == d_lo.
WMaxResult w_max_info(const StorageParams& sp, const SubgradBounds& sg,
                      double degenerate_cap_factor = 1e12);
double w_max(const StorageParams& sp, const SubgradBounds& sg);

struct GammaBounds {
  double ks_min = 0.0, ks_max = 0.0;
};

// ks_min = (1/lambda)(-w*d_lo + u_max - s_max), ks_max = (1/lambda)(-w*d_hi - s_min + u_min).
// Throws errc::parameter when w is outside (0, w_max].
GammaBounds gamma_bounds(const StorageParams& sp, const SubgradBounds& sg, double w);

// M = M^u + lambda(1-lambda) M^s with
//   M^u = max((u_min + (1-lambda)G)^2, (u_max + (1-lambda)G)^2) / 2
//   M^s = max((s_min + G)^2, (s_max + G)^2)
double suboptimality_M(const StorageParams& sp, double gamma);

// w = w_max; the Gamma interval collapses to a single point there.
AlgorithmParams select_max_w(const StorageParams& sp, const SubgradBounds& sg);

// Minimizes M(Gamma)/W over 0 < W <= w_max, ks_min(W) <= Gamma <= ks_max(W),
// to objective accuracy tol. The inner Gamma problem is solved exactly by
// candidate enumeration; the outer W problem by a log-grid scan refined with
// golden-section search.
AlgorithmParams select_min_s(const StorageParams& sp, const SubgradBounds& sg, double tol);

// Throws errc::parameter unless 0 < w <= w_max and gamma is inside its interval.
void validate_params(const AlgorithmParams& p, const StorageParams& sp, const SubgradBounds& sg);

struct PsdCertificate {
  const char* name;        // which of the four blocks
  double m00, m01, m11;    // symmetric 2x2 entries
  double det;
  bool pass;               // nonnegative diagonal and determinant (within 1e-9)
};

struct CertificateReport {
  std::array<PsdCertificate, 4> certs;
  bool all_pass = false;
};

// The four 2x2 blocks certifying the selected point, with the auxiliary
// epigraph values N^u = M^u/W and N^s = M^s/W that make the binding
// determinant exactly zero. Throws errc::parameter when w <= 0.
CertificateReport psd_certificates(const AlgorithmParams& p, const StorageParams& sp,
                                   const SubgradBounds& sg);

}  // namespace omgrid
