#include "nhdicke/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nhd {

namespace {

constexpr cx kI{0.0, 1.0};

// Determinant of a small (m <= 3) complex matrix given as rows.
cx det_small(const std::vector<CVec>& m) {
    switch (m.size()) {
        case 1:
            return m[0][0];
        case 2:
            return m[0][0] * m[1][1] - m[0][1] * m[1][0];
        case 3:
            return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                   m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                   m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        default:
            throw std::invalid_argument("wilson loop supports at most 3 occupied bands");
    }
}

// Occupied-subspace overlap matrix M_{mn} = l_m . r_n (plain dot: the left
// vectors are stored as row duals).
cx overlap_det(const std::vector<CVec>& lefts, const std::vector<CVec>& rights) {
    const size_t m = lefts.size();
    std::vector<CVec> ov(m, CVec(m));
    for (size_t a = 0; a < m; ++a)
        for (size_t b = 0; b < m; ++b) {
            cx s = 0.0;
            for (size_t j = 0; j < lefts[a].size(); ++j) s += lefts[a][j] * rights[b][j];
            ov[a][b] = s;
        }
    return det_small(ov);
}

// Per-k eigenvalues sorted by real part (imaginary tiebreak); used for gap
// measurements, where vertical separation is what matters, independent of
// band continuity.
std::vector<cx> sorted_by_re(std::vector<cx> v) {
    std::sort(v.begin(), v.end(), [](cx a, cx b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return v;
}

constexpr double kRealTol = 1e-8;  // spectrum counts as real below this

double gap_tol(const ChainParams& p) { return 1e-3 * std::abs(p.kappa); }

}  // namespace

CMat bloch_hamiltonian(double k, const ChainParams& p) {
    const double kp = p.kappa / std::sqrt(2.0);
    const cx hop = p.t + p.lambda * std::exp(-kI * k);  // atom1 <- atom2 of the next cell
    CMat h(3);
    h(0, 0) = p.delta + kI * p.gamma;
    h(0, 1) = kp;
    h(0, 2) = hop;
    h(1, 0) = kp;
    h(1, 1) = 0.0;
    h(1, 2) = kp;
    h(2, 0) = std::conj(hop);
    h(2, 1) = kp;
    h(2, 2) = p.delta - kI * p.gamma;
    return h;
}

double pt_critical_residual(double k, const ChainParams& p) {
    const double k2 = p.kappa * p.kappa;
    const double tau2 = p.t * p.t + p.lambda * p.lambda + 2.0 * p.t * p.lambda * std::cos(k);
    const double pp = p.delta * p.delta + p.gamma * p.gamma - k2 - tau2;
    const double qq = p.delta - p.t - p.lambda * std::cos(k);
    const double lhs = p.delta * pp + 4.5 * k2 * qq;
    return lhs * lhs - (4.0 * p.delta * p.delta - 3.0 * pp) * (pp * pp + 6.0 * p.delta * k2 * qq);
}

BandStructure band_structure(const ChainParams& p, int k_steps) {
    if (k_steps < 8) throw std::invalid_argument("band_structure needs k_steps >= 8");
    BandStructure bs;
    bs.k_grid.resize(k_steps);
    bs.bands.assign(3, std::vector<cx>(k_steps));

    double max_im = 0.0;
    double min_sep1 = std::numeric_limits<double>::infinity();
    double min_sep2 = std::numeric_limits<double>::infinity();
    std::vector<cx> prev;
    for (int i = 0; i < k_steps; ++i) {
        const double k = -std::numbers::pi + 2.0 * std::numbers::pi * i / k_steps;
        bs.k_grid[i] = k;
        std::vector<cx> vals = eig_values(bloch_hamiltonian(k, p));

        const std::vector<cx> by_re = sorted_by_re(vals);
        for (cx v : by_re) max_im = std::max(max_im, std::abs(v.imag()));
        min_sep1 = std::min(min_sep1, by_re[1].real() - by_re[0].real());
        min_sep2 = std::min(min_sep2, by_re[2].real() - by_re[1].real());

        if (i == 0) {
            prev = by_re;  // band labels fixed by the real-part order at k = -pi
        } else {
            const std::vector<int> perm = match_to_previous(prev, vals);
            std::vector<cx> matched(3);
            for (int b = 0; b < 3; ++b) matched[b] = vals[perm[b]];
            prev = matched;
        }
        for (int b = 0; b < 3; ++b) bs.bands[b][i] = prev[b];
    }

    bs.all_real = max_im <= kRealTol;
    bs.gap1_open = bs.all_real && min_sep1 > gap_tol(p);
    bs.gap2_open = bs.all_real && min_sep2 > gap_tol(p);
    return bs;
}

double biorthogonal_wilson_phase(const std::vector<std::vector<CVec>>& lefts,
                                 const std::vector<std::vector<CVec>>& rights) {
    const size_t n = lefts.size();
    if (n < 3 || rights.size() != n)
        throw std::invalid_argument("wilson loop needs matching left/right arrays of >= 3 points");
    const size_t m = lefts[0].size();
    if (m == 0 || m > 3) throw std::invalid_argument("wilson loop needs 1..3 occupied bands");

    cx w = 1.0;
    for (size_t i = 0; i < n; ++i) {
        const size_t j = (i + 1) % n;  // periodic closure of the Brillouin zone
        if (lefts[i].size() != m || rights[i].size() != m)
            throw std::invalid_argument("wilson loop band count varies along the loop");
        const cx num = overlap_det(lefts[i], rights[j]);
        const cx den = overlap_det(lefts[i], rights[i]);
        if (std::abs(den) < 1e-10)
            throw std::runtime_error("biorthogonal overlap degenerates along the loop");
        cx f = num / den;
        const double af = std::abs(f);
        if (af == 0.0) throw std::runtime_error("wilson link vanishes; grid too coarse");
        w *= f / af;  // only the phase matters; keep the product on the unit circle
    }
    return -std::arg(w);
}

double zak_phase(const ChainParams& p, int gap, int k_steps) {
    if (gap != 1 && gap != 2) throw std::invalid_argument("zak_phase: gap must be 1 or 2");
    if (k_steps < 32) throw std::invalid_argument("zak_phase needs k_steps >= 32");

    const BandStructure bs = band_structure(p, k_steps);
    if (!(gap == 1 ? bs.gap1_open : bs.gap2_open))
        throw std::invalid_argument("zak_phase: the requested gap is not open (phase undefined)");

    std::vector<std::vector<CVec>> lefts(k_steps), rights(k_steps);
    for (int i = 0; i < k_steps; ++i) {
        const EigenSystem es = eig_full(bloch_hamiltonian(bs.k_grid[i], p));
        // eig_full sorts by real part; with the gap open the first `gap`
        // entries are exactly the occupied set.
        for (int b = 0; b < gap; ++b) {
            lefts[i].push_back(es.left[b]);
            rights[i].push_back(es.right[b]);
        }
    }

    const double lr = biorthogonal_wilson_phase(lefts, rights);
    std::vector<std::vector<CVec>> lrev(lefts.rbegin(), lefts.rend());
    std::vector<std::vector<CVec>> rrev(rights.rbegin(), rights.rend());
    // Transporting <R|dL> around the loop equals the conjugate of the
    // reversed-direction <L|dR> loop, hence the sign flip.
    const double rl = -biorthogonal_wilson_phase(lrev, rrev);

    // Circular mean of the two transport senses (they agree up to grid error,
    // but may straddle the +-pi branch cut).
    double diff = rl - lr;
    diff -= 2.0 * std::numbers::pi * std::round(diff / (2.0 * std::numbers::pi));
    double phase = lr + 0.5 * diff;

    // Reduce into [0, 2 pi) and snap to the quantized values {0, pi}.
    phase -= 2.0 * std::numbers::pi * std::floor(phase / (2.0 * std::numbers::pi));
    const double d0 = std::min(phase, 2.0 * std::numbers::pi - phase);
    const double dpi = std::abs(phase - std::numbers::pi);
    if (std::min(d0, dpi) > 1e-2)
        throw std::runtime_error("zak_phase: result " + std::to_string(phase) +
                                 " is not close to 0 or pi; refine the k grid");
    return d0 < dpi ? 0.0 : std::numbers::pi;
}

CMat open_chain(const ChainParams& p) {
    if (p.n_cells < 1) throw std::invalid_argument("open_chain needs n_cells >= 1");
    const int n = 3 * p.n_cells;
    const double kp = p.kappa / std::sqrt(2.0);
    CMat h(n);
    for (int c = 0; c < p.n_cells; ++c) {
        const int o = 3 * c;
        h(o + 0, o + 0) = p.delta + kI * p.gamma;
        h(o + 0, o + 1) = kp;
        h(o + 0, o + 2) = p.t;
        h(o + 1, o + 0) = kp;
        h(o + 1, o + 2) = kp;
        h(o + 2, o + 0) = p.t;
        h(o + 2, o + 1) = kp;
        h(o + 2, o + 2) = p.delta - kI * p.gamma;
        if (c + 1 < p.n_cells) {
            h(o + 2, o + 3) = p.lambda;  // atom 2 of cell c <-> atom 1 of cell c+1
            h(o + 3, o + 2) = p.lambda;
        }
    }
    return h;
}

std::vector<EdgeState> edge_states(const ChainParams& p) {
    const BandStructure bs = band_structure(p, 256);

    // Bloch eigenvalue cloud. A state counts as midgap when its complex
    // distance to every Bloch value exceeds 10x the gap tolerance; its gap is
    // the Fermi count (how many thirds of the cloud lie below it in real
    // part). This subsumes the naive "real part inside the real gap window"
    // test and still works when an edge pair PT-breaks off the real axis
    // while its real part grazes a band's projection.
    std::vector<cx> cloud;
    cloud.reserve(3 * bs.k_grid.size());
    for (int b = 0; b < 3; ++b)
        cloud.insert(cloud.end(), bs.bands[b].begin(), bs.bands[b].end());
    const double isolation = 10.0 * gap_tol(p);

    EigOptions opt;
    opt.want_left = false;  // localization only needs the right vectors
    const EigenSystem es = eig_full(open_chain(p), opt);

    const int nc = p.n_cells;
    const int n_edge = std::max(1, (nc + 9) / 10);  // outer 10% of cells, each side
    std::vector<EdgeState> out;
    for (size_t j = 0; j < es.values.size(); ++j) {
        double ipr = 0.0, edge_w = 0.0, left_w = 0.0;
        for (int c = 0; c < nc; ++c) {
            double w = 0.0;
            for (int s = 0; s < 3; ++s) w += std::norm(es.right[j][3 * c + s]);
            ipr += w * w;
            if (c < n_edge) left_w += w;
            if (c < n_edge || c >= nc - n_edge) edge_w += w;
        }
        if (!(ipr > 4.0 / nc && edge_w > 0.6)) continue;

        double dist = std::numeric_limits<double>::infinity();
        size_t below = 0;
        for (cx b : cloud) {
            dist = std::min(dist, std::abs(es.values[j] - b));
            if (b.real() < es.values[j].real()) ++below;
        }
        if (dist <= isolation) continue;  // resonant with a band: not midgap

        const int gap = static_cast<int>(
            std::lround(3.0 * static_cast<double>(below) / static_cast<double>(cloud.size())));
        if (gap < 1 || gap > 2) continue;  // below or above the whole spectrum
        if (!(gap == 1 ? bs.gap1_open : bs.gap2_open)) continue;

        out.push_back({es.values[j], ipr, edge_w, left_w, gap});
    }
    return out;
}

TopoPhase classify_chain(const ChainParams& p, int gap, int k_steps) {
    if (gap != 1 && gap != 2) throw std::invalid_argument("classify_chain: gap must be 1 or 2");
    if (k_steps < 128) throw std::invalid_argument("classify_chain needs k_steps >= 128");

    const BandStructure bs = band_structure(p, k_steps);
    TopoPhase out;
    if (bs.gap1_open) out.zak_gap1 = zak_phase(p, 1, k_steps);
    if (bs.gap2_open) out.zak_gap2 = zak_phase(p, 2, k_steps);

    const bool open = gap == 1 ? bs.gap1_open : bs.gap2_open;
    if (!open) {
        out.label = "NHSM";  // complex spectrum or touching bands: semimetal
    } else {
        const double z = gap == 1 ? *out.zak_gap1 : *out.zak_gap2;
        out.label = z > 1.0 ? "NHTI" : "NHNI";
    }
    return out;
}

}  // namespace nhd
