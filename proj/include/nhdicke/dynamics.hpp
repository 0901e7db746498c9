#pragma once

// Time evolution of the linear three-mode model in the amplitude picture
// (C1, Cp, C2): closed-form solutions for the Hermitian case, a fixed-step
// numeric propagator for arbitrary (possibly non-Hermitian) model matrices,
// and probability-norm diagnostics.

#include <vector>

#include "nhdicke/linalg.hpp"

namespace nhd {

struct AmplitudeState {
    cx c1 = 0.0;        // amplitude on atom 1
    cx cp = 0.0;        // amplitude on the photon
    cx c2 = 0.0;        // amplitude on atom 2
    double time = 0.0;  // elapsed evolution time
};

// Total probability |c1|^2 + |cp|^2 + |c2|^2 (conserved only when the model
// is Hermitian).
double probability_norm(const AmplitudeState& s);

// Closed-form Hermitian evolution (gamma = 0, t = 0) by time T:
//   C1  = P e^{x1 T} + Q e^{x2 T} - R e^{x3 T}
//   Cp  = -(sqrt(2) i / kappa) (P x2 e^{x1 T} + Q x1 e^{x2 T})
//   C2  = P e^{x1 T} + Q e^{x2 T} + R e^{x3 T}
// with x1 = i(Omega - delta)/2, x2 = -i(Omega + delta)/2, x3 = -i delta,
// Omega = sqrt(delta^2 + 4 kappa^2), and the integration constants
//   P = [(Omega - delta)(C1(0) + C2(0)) - 2 sqrt(2) kappa Cp(0)] / (4 Omega)
//   Q = [(Omega + delta)(C1(0) + C2(0)) + 2 sqrt(2) kappa Cp(0)] / (4 Omega)
//   R = (C2(0) - C1(0)) / 2.
// Throws std::invalid_argument for kappa <= 0 (the Cp form divides by kappa).
AmplitudeState hermitian_analytic(const AmplitudeState& initial, double delta,
                                  double kappa, double T);

struct LinearTrajectory {
    std::vector<AmplitudeState> states;
    bool diverged = false;  // overflow guard tripped; trajectory truncated
};

// Fixed-step fourth-order Runge-Kutta integration of i d/dT psi = H psi for a
// 3x3 model matrix, from `initial` over a signed duration T (negative T
// integrates backwards). The step count is round(|T|/dt); the caller picks dt
// small enough that halving it moves the final amplitudes by less than 1e-6.
// Any amplitude beyond 1e6 trips the overflow guard: the run is flagged
// diverged and truncated.
LinearTrajectory evolve_linear(const CMat& h, const AmplitudeState& initial,
                               double dt, double T);

// Total probability per stored step.
std::vector<double> norm_history(const LinearTrajectory& traj);

}  // namespace nhd
