#pragma once

// Nonlinear saturable-gain variant of the three-mode model: atom 1 carries an
// amplitude-dependent gain G1(|psi1|) = alpha/(1 + |psi1|^2) - beta while atom
// 2 keeps a fixed linear loss. Covers the steady-frequency quintic obtained by
// eliminating the gain from the characteristic equation, construction of the
// fifth-order nonlinear exceptional point (NEP5) and its eps^(1/5) response,
// time evolution to saturation, linear stability of steady orbits, and
// (alpha, beta) maps of the saturated state.

#include <vector>

#include "nhdicke/linalg.hpp"

namespace nhd {

struct NonlinearParams {
    double omega1 = 0.0;  // onsite frequency of atom 1 (the gain side)
    double omega2 = 0.0;  // onsite frequency of atom 2 (the loss side)
    double kappa1 = 1.0;  // atom-1 / photon coupling, the energy unit
    double kappa2 = 1.0;  // atom-2 / photon coupling
    double t = 0.0;       // direct atom-atom coupling
    double gamma = 0.0;   // linear loss on atom 2
    double alpha = 0.0;   // pumping strength of the saturable gain
    double beta = 0.0;    // intrinsic loss on atom 1
};

// Saturable gain alpha/(1 + amp^2) - beta for field amplitude amp = |psi1|.
double saturation_gain(double alpha, double beta, double amp);

// Model matrix with the gain frozen at the value g1:
// [[omega1 + i g1, kappa1, t],
//  [kappa1,        0,      kappa2],
//  [t,             kappa2, omega2 - i gamma]]
CMat build_nonlinear(const NonlinearParams& p, double g1);

// Gain value that makes omega_s a steady frequency. The imaginary part of
// det(H - omega_s) = 0 is linear in the gain and gives
//   G1 = gamma (kappa1^2 - w^2 + w omega1) / (kappa2^2 - w^2 + w omega2).
// Throws std::invalid_argument when the denominator vanishes (the gain is
// then not determined by the frequency).
double gain_from_frequency(const NonlinearParams& p, double omega_s);

// Steady-frequency quintic, lowest order first:
//   rho(w) = -w^5 + x4 w^4 + x3 w^3 + x2 w^2 + x1 w + x0,
// obtained by eliminating the gain between the real and imaginary parts of
// det(H(G1) - w) = 0. Real roots are candidate steady eigenfrequencies;
// alpha and beta do not enter.
Poly quintic_coefficients(const NonlinearParams& p);

struct SteadySolution {
    double omega_s = 0.0;    // steady eigenfrequency (real root of the quintic)
    double amplitude = 0.0;  // |psi1| at which the saturable gain supplies `gain`
    double gain = 0.0;       // required gain value G1(omega_s)
    bool stable = false;     // spectral abscissa of the orbit Jacobian <= 1e-8
    double exponent = 0.0;   // that abscissa (largest Lyapunov exponent)
};

// All steady solutions of the full nonlinear problem: real quintic roots
// whose required gain is reachable by the saturable gain at a real amplitude,
// i.e. alpha/(gain + beta) >= 1. Stability is filled in via stability_of.
// Results are sorted by omega_s.
std::vector<SteadySolution> steady_solutions(const NonlinearParams& p);

// Linear stability of one steady orbit psi(T) = e^{-i omega_s T} phi. In the
// frame rotating at omega_s the orbit is a fixed point; the flow is linearized
// in six real dimensions (Re/Im of each component, including the amplitude
// dependence of the gain, which breaks complex linearity). Returns the input
// with `exponent` set to the spectral abscissa and `stable` to
// exponent <= 1e-8. A U(1) phase mode sits at zero for amplitude > 0, so a
// stable orbit has abscissa 0 within roundoff, never strictly negative.
SteadySolution stability_of(SteadySolution sol, const NonlinearParams& p);

// Parameters at which the steady quintic collapses to -(w - omega_s)^5, so
// all five steady-frequency branches coalesce: a fifth-order nonlinear
// exceptional point. Solves the five coefficient-matching equations
//   {x4, x3, x2, x1, x0} = {5 w_s, -10 w_s^2, 10 w_s^3, -5 w_s^4, w_s^5}
// for (omega1, omega2, kappa2, t, gamma) by damped Newton iteration from a
// deterministic seed grid over [-3,3] x [-3,3] x (0,3] x (0,3] x (0,5],
// accepting residuals below 1e-10 and keeping physical solutions
// (gamma > 0, kappa2 > 0, t > 0). nep5_solutions reports every distinct one;
// nep5_parameters returns the first and throws if none exists. The pump pair
// (alpha, beta) does not enter the quintic; the returned parameters carry
// alpha = 5, beta = 2, which place the saturated amplitude at a real value.
std::vector<NonlinearParams> nep5_solutions(double omega_s, double kappa1);
NonlinearParams nep5_parameters(double omega_s, double kappa1);

// Response of the five steady-frequency branches to a perturbation
// omega1 -> omega1 + eps at a nonlinear exceptional point.
struct PerturbationResponse {
    std::vector<double> epsilons;           // ascending
    std::vector<std::vector<cx>> roots;     // roots[i][j]: branch j at epsilons[i],
                                            // matched across the grid for continuity
    std::vector<std::vector<bool>> is_real; // |Im| <= 1e-6 per branch sample
    std::vector<double> delta_abs;          // |real branch - omega_ref| per epsilon
    double omega_ref = 0.0;                 // centroid of the unperturbed roots, x4/5
    double slope = 0.0;                     // log-log slope of delta_abs vs epsilon
};

// Evaluates the quintic along the grid (all eps within [1e-10, 1e-2], else
// std::invalid_argument), classifies each root as real or one of a conjugate
// pair, and fits the log-log slope of the real-branch displacement. At an
// NEP5 the displacement follows eps^(1/5); if the fitted slope leaves
// 0.2 +/- 0.03 the grid is outside the power-law window (or the parameters
// are not an NEP5) and a std::runtime_error carrying the fitted slope is
// thrown.
PerturbationResponse perturbation_response(const NonlinearParams& nep,
                                           const std::vector<double>& epsilon_grid);

struct NonlinearTrajectory {
    std::vector<double> times;
    std::vector<CVec> states;   // psi(t) with components (psi1, psi_p, psi2)
    std::vector<double> gains;  // G1(|psi1(t)|) at each stored time
    bool diverged = false;      // overflow guard tripped; trajectory truncated
};

// Integrates i d/dT psi = H(|psi1|) psi with the classic fixed-step
// fourth-order Runge-Kutta method from psi(0) = psi0 to time T. The step
// count is round(T/dt) and the step is adjusted to land on T exactly. The
// caller picks dt small enough that halving it moves the final amplitude by
// less than 1e-6. If any component exceeds 1e6 in magnitude the run is
// flagged diverged and the trajectory up to that point is returned.
NonlinearTrajectory evolve_nonlinear(const NonlinearParams& p, const CVec& psi0,
                                     double dt, double T);

// Saturated state as a function of pump strength and intrinsic loss, each
// cell evolved from psi0 = 1e-3 (1,1,1)^T over the horizon T = 200/kappa1
// with dt = 0.01/kappa1. "Steady amplitude" of an oscillating envelope means
// the mean of |psi1| over the final 10% of the horizon (a point sample would
// alias); the gain map averages G1 the same way.
struct SteadyMap {
    std::vector<double> alphas, betas;
    std::vector<std::vector<double>> amplitude;  // [i_alpha][i_beta]
    std::vector<std::vector<double>> gain;       // [i_alpha][i_beta]
    std::vector<std::vector<bool>> diverged;     // per-cell overflow flag
};
SteadyMap steady_map(const NonlinearParams& p, const std::vector<double>& alpha_grid,
                     const std::vector<double>& beta_grid);

}  // namespace nhd
