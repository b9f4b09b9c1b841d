#include "esr/spin_spectrum.hpp"

#include "esr/units.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace esr {

namespace {

int twice_spin(double j, const char* name) {
  const double two_j = 2.0 * j;
  const double rounded = std::round(two_j);
  if (!(rounded >= 1.0) || std::abs(two_j - rounded) > 1e-12) {
    throw std::invalid_argument(std::string(name) +
                                " must be a positive half-integer, got " +
                                std::to_string(j));
  }
  return static_cast<int>(rounded);
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Eigen::Index dominant_component(const Eigen::VectorXcd& v) {
  Eigen::Index best = 0;
  double best_mag = -1.0;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    // strict comparison with a small margin keeps the lowest index on ties
    const double mag = std::abs(v(k));
    if (mag > best_mag + 1e-12) {
      best_mag = mag;
      best = k;
    }
  }
  return best;
}

}  // namespace

void SpinSystem::validate() const {
  twice_spin(S, "S");
  twice_spin(I, "I");
}

int SpinSystem::electron_dim() const { return twice_spin(S, "S") + 1; }
int SpinSystem::nuclear_dim() const { return twice_spin(I, "I") + 1; }

SpinSystem SpinSystem::bismuth_in_silicon() {
  SpinSystem sys;
  sys.S = 0.5;
  sys.I = 4.5;
  sys.gamma_e = units::hz_to_rad_per_s(28e9);
  sys.gamma_n = units::hz_to_rad_per_s(7e6);
  sys.A = units::hz_to_rad_per_s(1.4754e9);
  return sys;
}

SpinOperators spin_operators(double j) {
  const int d = twice_spin(j, "spin") + 1;
  ComplexMatrix plus = ComplexMatrix::Zero(d, d);
  ComplexMatrix z = ComplexMatrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const double m = j - k;
    z(k, k) = m;
    if (k > 0) {
      // <m+1|S+|m>, row k-1 holds m+1
      plus(k - 1, k) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    }
  }
  const ComplexMatrix minus = plus.adjoint();
  const std::complex<double> i_unit(0.0, 1.0);
  return {(plus + minus) * 0.5, (plus - minus) / (2.0 * i_unit), z};
}

ComplexMatrix build_hamiltonian(const SpinSystem& sys, double B0) {
  sys.validate();
  if (!(B0 >= 0.0)) {
    throw std::invalid_argument("B0 must be non-negative");
  }
  const auto s = spin_operators(sys.S);
  const auto n = spin_operators(sys.I);
  const ComplexMatrix eye_s = ComplexMatrix::Identity(s.z.rows(), s.z.cols());
  const ComplexMatrix eye_n = ComplexMatrix::Identity(n.z.rows(), n.z.cols());

  ComplexMatrix H = sys.gamma_e * B0 * kron(s.z, eye_n) -
                    sys.gamma_n * B0 * kron(eye_s, n.z);
  H += sys.A * (kron(s.x, n.x) + kron(s.y, n.y) + kron(s.z, n.z));
  return H;
}

ComplexMatrix electron_sx(const SpinSystem& sys) {
  const auto s = spin_operators(sys.S);
  const int dn = sys.nuclear_dim();
  return kron(s.x, ComplexMatrix::Identity(dn, dn));
}

EnergyLevels diagonalize(const ComplexMatrix& H, double field) {
  if (H.rows() != H.cols() || H.rows() == 0) {
    throw std::invalid_argument("diagonalize: matrix must be square and non-empty");
  }
  const double norm = H.norm();
  const double asym = (H - H.adjoint()).norm();
  if (asym > 1e-12 * std::max(norm, 1e-300)) {
    throw std::invalid_argument("diagonalize: matrix is not Hermitian");
  }

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(H);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("diagonalize: eigensolver did not converge");
  }
  const Eigen::VectorXd& evals = solver.eigenvalues();
  ComplexMatrix evecs = solver.eigenvectors();
  const Eigen::Index d = H.rows();

  std::vector<Eigen::Index> dominant(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::VectorXcd v = evecs.col(k);
    dominant[k] = dominant_component(v);
    const auto c = v(dominant[k]);
    if (std::abs(c) > 0.0) {
      evecs.col(k) *= std::conj(c) / std::abs(c);
    }
  }

  // tie-break inside degenerate clusters
  const double scale = std::max(evals.cwiseAbs().maxCoeff(), 1e-300);
  const double degenerate_tol = 1e-9 * scale;
  std::vector<Eigen::Index> order(d);
  std::iota(order.begin(), order.end(), 0);
  Eigen::Index start = 0;
  while (start < d) {
    Eigen::Index stop = start + 1;
    while (stop < d && evals(stop) - evals(stop - 1) <= degenerate_tol) {
      ++stop;
    }
    std::stable_sort(order.begin() + start, order.begin() + stop,
                     [&](Eigen::Index a, Eigen::Index b) {
                       return dominant[a] < dominant[b];
                     });
    start = stop;
  }

  EnergyLevels levels;
  levels.field = field;
  levels.energies.resize(d);
  levels.eigenvectors.resize(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    levels.energies(k) = evals(order[k]);
    levels.eigenvectors.col(k) = evecs.col(order[k]);
  }

  const double hnorm = std::max(norm, 1e-300);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double residual =
        (H * levels.eigenvectors.col(k) - levels.energies(k) * levels.eigenvectors.col(k))
            .norm() /
        hnorm;
    if (residual > 1e-10) {
      throw std::runtime_error("diagonalize: eigenpair residual " +
                               std::to_string(residual) + " exceeds 1e-10");
    }
  }
  return levels;
}

std::vector<Transition> allowed_transitions(const EnergyLevels& levels,
                                            const SpinSystem& sys, double min_sx,
                                            FrequencyBand band) {
  if (!(min_sx > 0.0)) {
    throw std::invalid_argument("allowed_transitions: min_sx must be positive");
  }
  if (!(band.hi > band.lo)) {
    throw std::invalid_argument("allowed_transitions: empty frequency band");
  }
  const ComplexMatrix sx = electron_sx(sys);
  if (sx.rows() != levels.eigenvectors.rows()) {
    throw std::invalid_argument("allowed_transitions: dimension mismatch");
  }
  const ComplexMatrix sx_eig = levels.eigenvectors.adjoint() * sx * levels.eigenvectors;

  std::vector<Transition> out;
  const int d = static_cast<int>(levels.energies.size());
  for (int lower = 0; lower < d; ++lower) {
    for (int upper = lower + 1; upper < d; ++upper) {
      const double freq = levels.energies(upper) - levels.energies(lower);
      if (freq <= 0.0 || freq < band.lo || freq > band.hi) continue;
      const double element = std::abs(sx_eig(upper, lower));
      if (element < min_sx) continue;
      out.push_back({lower, upper, freq, element});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Transition& a, const Transition& b) {
    return a.frequency < b.frequency;
  });
  return out;
}

std::vector<SweepRow> field_sweep_spectrum(const SpinSystem& sys,
                                           const std::vector<double>& fields,
                                           double min_sx, FrequencyBand band) {
  if (fields.empty()) {
    throw std::invalid_argument("field_sweep_spectrum: no fields given");
  }
  std::vector<SweepRow> rows;
  rows.reserve(fields.size());
  for (double B : fields) {
    if (!(B >= 0.0)) {
      throw std::invalid_argument("field_sweep_spectrum: negative field");
    }
    const auto levels = diagonalize(build_hamiltonian(sys, B), B);
    rows.push_back({B, allowed_transitions(levels, sys, min_sx, band)});
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "field_mT,freq_GHz,lower,upper,sx_element\n";
  char buf[160];
  for (const auto& row : rows) {
    for (const auto& t : row.transitions) {
      std::snprintf(buf, sizeof buf, "%.6f,%.9f,%d,%d,%.6f\n", units::T_to_mT(row.field),
                    units::rad_per_s_to_hz(t.frequency) * 1e-9, t.lower_index,
                    t.upper_index, t.sx_element);
      os << buf;
    }
  }
}

double coupling_from_field_fluctuation(const SpinSystem& sys,
                                       const Transition& transition,
                                       double delta_B1) {
  if (!(delta_B1 >= 0.0)) {
    throw std::invalid_argument("delta_B1 must be non-negative");
  }
  return sys.gamma_e * transition.sx_element * delta_B1;
}

std::optional<Transition> lowest_allowed_transition(const SpinSystem& sys, double B0,
                                                    double min_sx, FrequencyBand band) {
  const auto levels = diagonalize(build_hamiltonian(sys, B0), B0);
  const auto transitions = allowed_transitions(levels, sys, min_sx, band);
  if (transitions.empty()) return std::nullopt;
  return transitions.front();
}

double crossing_field(const SpinSystem& sys, double target, double min_sx,
                      FrequencyBand band, double B_lo, double B_hi, double tol) {
  auto offset = [&](double B) {
    const auto t = lowest_allowed_transition(sys, B, min_sx, band);
    if (!t) {
      throw std::domain_error("crossing_field: no allowed transition in band at B0 = " +
                              std::to_string(B));
    }
    return t->frequency - target;
  };
  double f_lo = offset(B_lo);
  const double f_hi = offset(B_hi);
  if (f_lo * f_hi > 0.0) {
    throw std::domain_error("crossing_field: target frequency not bracketed");
  }
  while (B_hi - B_lo > tol) {
    const double mid = 0.5 * (B_lo + B_hi);
    const double f_mid = offset(mid);
    if (f_lo * f_mid <= 0.0) {
      B_hi = mid;
    } else {
      B_lo = mid;
      f_lo = f_mid;
    }
  }
  return 0.5 * (B_lo + B_hi);
}

}  // namespace esr
