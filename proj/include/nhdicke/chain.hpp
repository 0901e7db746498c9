#pragma once

// 1D lattice of three-mode cells: each cell is the balanced gain/loss model
// and neighboring cells are linked atom-2 to atom-1 by a real coupling
// lambda. Covers the Bloch matrix, PT-criticality residual, band structure
// with gap bookkeeping, biorthogonal Zak phases, the open-boundary real-space
// matrix, edge-state identification, and the per-gap topological phase label.

#include <optional>
#include <string>
#include <vector>

#include "nhdicke/linalg.hpp"

namespace nhd {

struct ChainParams {
    double delta = 0.0;   // atom-photon detuning
    double gamma = 0.0;   // balanced gain/loss magnitude
    double t = 0.0;       // intra-cell atom-atom coupling
    double kappa = 1.0;   // atom-photon coupling, the energy unit
    double lambda = 0.0;  // inter-cell atom-atom coupling
    int n_cells = 2;      // cell count for open-boundary runs
};

// Momentum-space matrix on the cell basis (atom 1, photon, atom 2):
// [[delta + i gamma, kappa/sqrt(2),  t + lambda e^{-ik}],
//  [kappa/sqrt(2),   0,              kappa/sqrt(2)],
//  [t + lambda e^{+ik}, kappa/sqrt(2), delta - i gamma]]
CMat bloch_hamiltonian(double k, const ChainParams& p);

// PT-symmetry criticality residual at wavenumber k:
//   [delta P + 9 kappa^2 Q / 2]^2 - [4 delta^2 - 3 P][P^2 + 6 delta kappa^2 Q]
// with P(k) = delta^2 + gamma^2 - kappa^2 - (t^2 + lambda^2 + 2 t lambda cos k)
// and Q(k) = delta - t - lambda cos k. This equals -(3/4) times the
// discriminant of the Bloch characteristic cubic, so it is zero exactly where
// a real eigenvalue pair degenerates (the PT transition). The second bracket
// carries kappa^2 Q on dimensional grounds; at kappa = 1 (every reference
// configuration) it coincides with the coefficient form usually quoted.
double pt_critical_residual(double k, const ChainParams& p);

struct BandStructure {
    std::vector<double> k_grid;          // uniform on [-pi, pi)
    std::vector<std::vector<cx>> bands;  // bands[b][ik], matched along k for
                                         // continuity, ordered by Re at k=-pi
    bool gap1_open = false;  // between bands 0 and 1
    bool gap2_open = false;  // between bands 1 and 2
    bool all_real = false;   // max |Im| over grid <= 1e-8
};

// Bloch bands on k_steps points. A gap counts as open when the spectrum is
// entirely real on the grid (PT-unbroken) AND the real-part separation
// between the adjacent bands exceeds 1e-3 kappa everywhere.
BandStructure band_structure(const ChainParams& p, int k_steps);

// Geometric phase of the occupied subspace transported once around the
// Brillouin zone: -arg of the product over the loop of
// det[M(i, i+1)] / det[M(i, i)], where M(i, j)_{mn} = l_m(k_i) . r_n(k_j) is
// the biorthogonal overlap of the occupied left row-duals and right vectors.
// The determinant form is invariant under per-k rescaling, phase changes, and
// relabeling inside the occupied set. Exposed for gauge-invariance tests.
double biorthogonal_wilson_phase(const std::vector<std::vector<CVec>>& lefts,
                                 const std::vector<std::vector<CVec>>& rights);

// Quantized Zak phase of the bands below gap `gap` (1 -> band 0, 2 -> bands
// 0 and 1): the left-right and right-left Wilson phases are averaged,
// reduced mod 2 pi and snapped to {0, pi}. Throws std::invalid_argument when
// the gap is not open on the grid (the phase is then undefined) and
// std::runtime_error when the snap distance exceeds 1e-2 (grid too coarse).
double zak_phase(const ChainParams& p, int gap, int k_steps);

// Real-space chain of n_cells cells with open boundaries (3N x 3N): cell
// diagonal blocks equal the single-cell matrix, lambda links atom 2 of cell
// n to atom 1 of cell n+1 reciprocally.
CMat open_chain(const ChainParams& p);

struct EdgeState {
    cx value;                  // eigenvalue
    double ipr = 0.0;          // per-cell inverse participation ratio
    double edge_weight = 0.0;  // probability weight in the outer 10% of cells
    double left_weight = 0.0;  // the part of edge_weight on the left end
    int gap = 0;               // which open bulk gap the state sits in
};

// States of the open chain that sit inside an open bulk gap and are
// localized: per-cell IPR > 4/n_cells and outer-10% weight > 0.6. "Inside a
// gap" is measured in the complex plane: the eigenvalue must stay further
// than 1e-2 kappa from every Bloch eigenvalue, and the gap it belongs to is
// the Fermi count of Bloch states below it in real part. (An edge pair can
// break PT locally and move off the real axis while its real part grazes a
// band's projection; the plain real-window test would lose it.)
std::vector<EdgeState> edge_states(const ChainParams& p);

struct TopoPhase {
    std::string label;                // "NHTI", "NHNI", or "NHSM" (queried gap)
    std::optional<double> zak_gap1;   // present iff gap-I is open
    std::optional<double> zak_gap2;   // present iff gap-II is open
};

// Phase of the queried gap (1 or 2): NHSM when the spectrum goes complex
// anywhere on the grid or the gap closes; otherwise NHTI/NHNI by the Zak
// phase pi/0. Requires k_steps >= 128.
TopoPhase classify_chain(const ChainParams& p, int gap, int k_steps);

}  // namespace nhd
