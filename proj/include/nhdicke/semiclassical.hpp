#pragma once

// The 3x3 semiclassical non-Hermitian Dicke model: two atom ensembles with
// balanced gain and loss coupled through one photon mode. Covers matrix
// construction, the exceptional-point loci (EP2 curve and its EP3 apex), the
// (gamma, t) phase classification, phase rigidity with its scaling exponents,
// and adiabatic encircling of EPs with braid permutation, geometric phase,
// and chirality extraction.

#include <optional>
#include <string>
#include <vector>

#include "nhdicke/linalg.hpp"

namespace nhd {

struct SemiclassicalParams {
    double delta = 0.0;  // atom-photon detuning
    double gamma = 0.0;  // balanced gain/loss magnitude (gain on atom 1)
    double t = 0.0;      // direct atom-atom coupling
    double kappa = 1.0;  // atom-photon coupling, the energy unit
};

// [[delta + i gamma, kappa/sqrt(2), t],
//  [kappa/sqrt(2),   0,             kappa/sqrt(2)],
//  [t,               kappa/sqrt(2), delta - i gamma]]
CMat build_dicke(const SemiclassicalParams& p);

// Same matrix with the detuning continued into the complex plane (used when
// encircling an EP along a loop of complex delta).
CMat build_dicke(const SemiclassicalParams& p, cx delta);

// Characteristic polynomial in the eigenfrequency, monic cubic:
// w^3 - 2*delta*w^2 + (delta^2 + gamma^2 - kappa^2 - t^2) w + kappa^2 (delta - t).
Poly dicke_char_poly(const SemiclassicalParams& p, cx delta);

// Second-order exceptional points form a curve parametrized by the coalesced
// frequency omega; the third (spectator) eigenvalue is omega3.
struct Ep2Locus {
    double delta, gamma, omega3;
};
Ep2Locus ep2_locus(double omega, double t, double kappa);

// Third-order exceptional points: the apex of the EP2 curve where the
// spectator merges as well.
struct Ep3Locus {
    double delta, gamma, t;
};
Ep3Locus ep3_locus(double omega, double kappa);

// Invert t = (3/2) w + w^3/kappa^2 (strictly monotone) for the EP3 frequency
// at a given coupling, and the gain at which that EP3 sits. gamma_ep3_for_t
// is the class II/III boundary of the phase diagram.
double omega_ep3_for_t(double t, double kappa);
double gamma_ep3_for_t(double t, double kappa);

enum class PhaseClass { Hermitian, ClassI, Ep2Line, ClassII, Ep3Line, ClassIII };
std::string to_string(PhaseClass c);

// Phase classes of the (gamma/kappa, t/kappa) plane: class I below the
// gamma = t line, class II between it and the EP3 curve, class III above.
// Points within 1e-9 of a boundary get the boundary label; gamma = 0 is the
// Hermitian line. gamma must be >= 0.
PhaseClass classify_point(double gamma_over_kappa, double t_over_kappa);

struct EpPoint {
    int order = 2;               // 2 or 3
    cx frequency;                // the coalesced eigenvalue
    SemiclassicalParams location;
    std::optional<cx> spectator;  // omega3 for an EP2
    std::optional<int> chirality;
};
EpPoint ep2_point(double omega, double t, double kappa);
EpPoint ep3_point(double omega, double kappa);

// All EP2s on the real-detuning axis for fixed (gamma, t, kappa), found by
// scanning the locus in omega. Both gain/loss assignments are scanned: the
// parity-mirrored system has the same spectrum, so its locus branch
// contributes EP2s of this matrix too. Sorted by detuning.
std::vector<EpPoint> ep2_points_at(double gamma, double t, double kappa);

// |<psi_L | psi_R>| for unit-norm biorthogonal partners; 1 for Hermitian
// matrices, 0 at an exceptional point (there the eigensystem also carries a
// defect record, which is the coalescence flag).
double phase_rigidity(const EigenSystem& es, int j);

enum class Param { delta, gamma, t, kappa };

// Least-squares slope of log(mean rigidity of the ep.order coalescing states)
// against log(epsilon), perturbing one parameter away from the EP. 2/3 at an
// EP3, 1/2 at an EP2, ~0 at a regular point. Throws std::runtime_error when
// the rigidity is not monotone across the grid (wrong center or grid too
// coarse) and std::invalid_argument on a degenerate grid.
double fit_scaling_exponent(const EpPoint& ep, Param which, const std::vector<double>& epsilons);

// Closed circular loop in the complex-detuning plane.
struct LoopPath {
    cx center;
    double radius = 0.1;
    int steps = 256;  // samples per loop, >= 64
    bool counterclockwise = true;
};

struct EncircleResult {
    // Strand j (labeled by the eigenvalue ordering at the start point) ends
    // on the start eigenvalue with index permutation[j].
    std::vector<int> permutation;
    // Accumulated geometric phase per strand, unwrapped (so three loops
    // around an EP3 report +-2*pi, not 0).
    std::vector<double> geometric_phase;
    // strands[j][k] is the eigenvalue of strand j at loop sample k.
    std::vector<std::vector<cx>> strands;
    std::vector<cx> deltas;  // the loop samples
};

// Parallel-transport the eigenframe around the loop (n_loops turns),
// accumulating the discrete biorthogonal Wilson line per strand. The
// dynamical phase drops out of the connection ratios by construction.
// Throws std::invalid_argument if the loop passes within 1e-3 of the EP.
EncircleResult encircle(const EpPoint& ep, const LoopPath& loop, const SemiclassicalParams& base,
                        int n_loops = 1);

// Rotation sense of the coalesced EP2 eigenvector seen along the loop: +1
// when the state carries the +i antisymmetric-atom admixture (in the gauge
// with a real positive photon component) on a counterclockwise loop, -1 for
// the opposite handedness; reversing the loop flips the sign. The eigenvalue
// difference must wind by half a turn (the loop encloses exactly one EP2),
// otherwise std::runtime_error.
int ep_chirality(const EpPoint& ep, const LoopPath& loop);

struct SpectrumSweep {
    std::vector<double> delta;
    std::vector<std::vector<cx>> bands;              // bands[b][i], continuity-aligned
    std::vector<std::vector<double>> photon_weight;  // |middle component|^2 per band
};

// Eigenvalues along a detuning grid, aligned by nearest-neighbor continuity
// (an exact crossing picks one continuation arbitrarily), with the photonic
// content of each state.
SpectrumSweep spectrum_sweep(const SemiclassicalParams& base, const std::vector<double>& delta_grid);

}  // namespace nhd
