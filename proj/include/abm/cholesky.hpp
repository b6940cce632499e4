#pragma once

#include <cmath>
#include <vector>

namespace abm::detail {

/// Solves A x = b for symmetric positive definite A via Cholesky, with
/// nrhs right-hand sides stored column-major in b. Returns false when a
/// pivot collapses. A is overwritten with its factor.
inline bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, int n,
                           int nrhs) {
  for (int c = 0; c < n; ++c) {
    double diag = a[static_cast<std::size_t>(c) * n + c];
    for (int k = 0; k < c; ++k) {
      const double l = a[static_cast<std::size_t>(c) * n + k];
      diag -= l * l;
    }
    if (diag <= 0.0 || !std::isfinite(diag)) return false;
    const double root = std::sqrt(diag);
    a[static_cast<std::size_t>(c) * n + c] = root;
    for (int r = c + 1; r < n; ++r) {
      double v = a[static_cast<std::size_t>(r) * n + c];
      for (int k = 0; k < c; ++k)
        v -= a[static_cast<std::size_t>(r) * n + k] *
             a[static_cast<std::size_t>(c) * n + k];
      a[static_cast<std::size_t>(r) * n + c] = v / root;
    }
  }
  for (int rhs = 0; rhs < nrhs; ++rhs) {
    double* col = &b[static_cast<std::size_t>(rhs) * n];
    for (int r = 0; r < n; ++r) {
      double v = col[r];
      for (int k = 0; k < r; ++k)
        v -= a[static_cast<std::size_t>(r) * n + k] * col[k];
      col[r] = v / a[static_cast<std::size_t>(r) * n + r];
    }
    for (int r = n - 1; r >= 0; --r) {
      double v = col[r];
      for (int k = r + 1; k < n; ++k)
        v -= a[static_cast<std::size_t>(k) * n + r] * col[k];
      col[r] = v / a[static_cast<std::size_t>(r) * n + r];
    }
  }
  return true;
}

}  // namespace abm::detail
