#pragma once

// Quantum regime: two qubits and a truncated Fock mode. Full and effective
// non-Hermitian Hamiltonians, the large-photon-number 4x4 kernel with its
// quantized exceptional points, the Lindblad Liouvillian with atomic decay,
// steady states (exact null-space and non-Hermitian eigenvector
// approximation), populations, and the equal-time photon correlation G2(0).

#include <vector>

#include "nhdicke/linalg.hpp"

namespace nhd {

struct QuantumParams {
    double omega1 = 1.0;  // transition energy of qubit 1
    double omega2 = 1.0;  // transition energy of qubit 2
    double omega_p = 1.0; // photon frequency
    double kappa1 = 0.1;  // qubit-1 photon coupling
    double kappa2 = 0.1;  // qubit-2 photon coupling
    double t = 0.0;       // direct qubit-qubit exchange
    double gamma1 = 0.0;  // qubit-1 decay rate (>= 0 for the Lindblad form)
    double gamma2 = 0.0;  // qubit-2 decay rate
    double eta = 0.0;     // coherent drive amplitude on the photon mode
    double omega_d = 1.0; // drive frequency (sets the rotating frame)
    int n_max = 6;        // Fock cutoff; states |s1 s2 n<=n_max>
};

// Basis |s1, s2, n> with index (s1*2 + s2)*(n_max+1) + n, s = 1 for up.
// |down down 0> is index 0.
struct BasisLabel {
    bool up1 = false;
    bool up2 = false;
    int n = 0;
};
int hilbert_dim(int n_max);
int basis_index(const BasisLabel& b, int n_max);
BasisLabel basis_label(int idx, int n_max);

// Hermitian part on the truncated space:
//   sum_j omega_j sigma^z_j/2 + omega_p a^dag a
//   + t (sigma^+_1 sigma^-_2 + h.c.)
//   + sum_j kappa_j/sqrt(2) (a^dag sigma^-_j + h.c.)
// rotated = true replaces every frequency by its detuning from the drive
// (omega_j - omega_d, omega_p - omega_d) and adds eta (a + a^dag). The
// constant -N_j offset of the collective-spin convention is dropped.
CMat build_hamiltonian(const QuantumParams& p, bool rotated);

// build_hamiltonian minus i gamma_j sigma^+_j sigma^-_j per qubit: the
// no-jump generator, signed so that excited-state norms decay for positive
// rates. (Negative rates are accepted as formal gain; only the Lindblad form
// requires physical dissipation.)
CMat effective_nh(const QuantumParams& p, bool rotated);

// Large-photon-number kernel on {|up up n>, |up down n+1>, |down up n+1>,
// |down down n+2>}, with every qubit-photon entry kappa sqrt(n)/sqrt(2):
//  [[delta - i Gamma, k, k, 0], [k, i gamma, t, k],
//   [k, t, -i gamma, k], [0, k, k, -delta + i Gamma]].
// Here Gamma = (gamma2 + gamma1)/2 and gamma = (gamma2 - gamma1)/2. With
// shifted = true the quoted uniform -i Gamma/2 offset is added. (The exact
// projection of effective_nh carries a uniform -i Gamma instead, and
// sqrt(n+1)/sqrt(n+2) factors in place of sqrt(n); both coincide to O(1/n).)
// At t = 0, delta = 0, gamma = -Gamma the eigenvalues obey
// E^2 = -(Gamma^2 - n kappa^2) +- sqrt((Gamma^2 - n kappa^2)^2 - Gamma^4),
// coalescing at the photon-number-resolved EP2 Gamma = kappa sqrt(n/2).
CMat kernel_4x4(int n, double delta, double Gamma, double gamma, double t, double kappa,
                bool shifted = false);

// Column-stacked superoperator of
//   d rho/dt = -i[H, rho]
//              + sum_j gamma_j (2 s^-_j rho s^+_j - s^+_j s^-_j rho - rho s^+_j s^-_j)
// with H = build_hamiltonian(p, rotated). Requires gamma_j >= 0.
CMat liouvillian(const QuantumParams& p, bool rotated);

// Unique trace-one Hermitian density matrix annihilated by the Liouvillian.
// Throws std::runtime_error when the null space is not one-dimensional or
// the residual ||L vec(rho)|| exceeds 1e-9 of the Liouvillian's scale.
CMat steady_state(const CMat& liou);

// Pure-state approximation of the driven steady state: |psi><psi| built from
// the eigenvector of effective_nh(p, rotated = true) whose eigenvalue decays
// slowest (smallest |Im|). Throws std::runtime_error when the two slowest
// decay magnitudes are within 1e-10 (the approximation is ill-defined).
CMat nh_steady_approx(const QuantumParams& p);

// Diagonal populations P(s1, s2, n), indexed by basis_index; they sum to 1.
std::vector<double> populations(const CMat& rho);

// Total population of the top Fock level n = n_max: the post-hoc cutoff
// validity check (should stay below 1e-6 in the weak-drive regime).
double top_fock_population(const CMat& rho);

// Equal-time second-order photon correlation
//   G2(0) = <a^dag a^dag a a> / <a^dag a>^2.
// Throws std::invalid_argument when <a^dag a> <= 1e-12 (vacuum: undefined).
double g2_zero(const CMat& rho);

}  // namespace nhd
