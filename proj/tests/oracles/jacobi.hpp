#pragma once

// Independent reference eigensolver: cyclic Jacobi rotations on the real
// symmetric embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian matrix.
// Every eigenvalue of H appears twice in the embedding.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline std::vector<double> jacobi_eigenvalues(Matrix a, int max_sweeps = 100) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

/// Eigenvalues of a Hermitian matrix given as a callable h(i, j), ascending.
template <class H>
std::vector<double> hermitian_eigenvalues(std::size_t n, const H& h) {
  Matrix a(2 * n, std::vector<double>(2 * n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::complex<double> z = h(i, j);
      a[i][j] = z.real();
      a[i + n][j + n] = z.real();
      a[i][j + n] = -z.imag();
      a[i + n][j] = z.imag();
    }
  }
  const auto doubled = jacobi_eigenvalues(std::move(a));
  std::vector<double> ev;
  for (std::size_t i = 0; i < doubled.size(); i += 2) ev.push_back(0.5 * (doubled[i] + doubled[i + 1]));
  return ev;
}

}  // namespace oracle
