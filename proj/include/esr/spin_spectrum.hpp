#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <vector>

namespace esr {

/// Electron spin S coupled to a nuclear spin I by an isotropic hyperfine
/// interaction. Rates are angular (rad/s, or rad/s per tesla).
struct SpinSystem {
  double S = 0.5;
  double I = 4.5;
  double gamma_e = 0.0;
  double gamma_n = 0.0;
  double A = 0.0;

  /// Throws std::invalid_argument unless 2S and 2I are positive integers.
  void validate() const;
  int electron_dim() const;
  int nuclear_dim() const;
  int dim() const { return electron_dim() * nuclear_dim(); }

  /// Bismuth donor in silicon, hyperfine constant chosen so that 5A/2pi is
  /// the 7.377 GHz zero-field splitting.
  static SpinSystem bismuth_in_silicon();
};

using ComplexMatrix = Eigen::MatrixXcd;

struct EnergyLevels {
  double field = 0.0;        // tesla
  Eigen::VectorXd energies;  // rad/s, ascending
  ComplexMatrix eigenvectors;  // columns, product basis |mS> (x) |mI>
};

struct Transition {
  int lower_index = 0;
  int upper_index = 0;
  double frequency = 0.0;  // rad/s
  double sx_element = 0.0;
};

struct FrequencyBand {
  double lo = 0.0;  // rad/s
  double hi = 0.0;
};

/// Spin-j angular momentum matrices in the descending |m> basis.
struct SpinOperators {
  ComplexMatrix x, y, z;
};
SpinOperators spin_operators(double j);

/// gamma_e B0 Sz - gamma_n B0 Iz + A S.I with the field along z.
ComplexMatrix build_hamiltonian(const SpinSystem& sys, double B0);

/// Electron Sx lifted to the full product space.
ComplexMatrix electron_sx(const SpinSystem& sys);

/// Hermitian eigendecomposition. Eigenvalues ascending; inside a degenerate
/// cluster the order is fixed by the index of each vector's dominant
/// component, and every vector is phased so that component is real positive.
EnergyLevels diagonalize(const ComplexMatrix& H, double field = 0.0);

std::vector<Transition> allowed_transitions(const EnergyLevels& levels,
                                            const SpinSystem& sys, double min_sx,
                                            FrequencyBand band);

struct SweepRow {
  double field = 0.0;
  std::vector<Transition> transitions;
};

std::vector<SweepRow> field_sweep_spectrum(const SpinSystem& sys,
                                           const std::vector<double>& fields,
                                           double min_sx, FrequencyBand band);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// g = gamma_e * |<u|Sx|l>| * dB1.
double coupling_from_field_fluctuation(const SpinSystem& sys,
                                       const Transition& transition,
                                       double delta_B1);

/// Lowest-frequency allowed transition at B0, if any falls in the band.
std::optional<Transition> lowest_allowed_transition(const SpinSystem& sys, double B0,
                                     double min_sx, FrequencyBand band);

/// Field in [B_lo, B_hi] at which the lowest allowed branch crosses `target`
/// (rad/s). Bisection; throws std::domain_error if the target is not bracketed.
double crossing_field(const SpinSystem& sys, double target, double min_sx,
                      FrequencyBand band, double B_lo, double B_hi,
                      double tol = 1e-10);

}  // namespace esr
