#include "nhdicke/quantum.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace nhd {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

void check_cutoff(int n_max) {
    if (n_max < 2) {
        throw std::invalid_argument("quantum: n_max must be at least 2");
    }
}

// Photon annihilation operator on the full |s1 s2 n> space.
CMat op_a(int n_max) {
    const int dim = hilbert_dim(n_max);
    CMat a(dim);
    for (int s = 0; s < 4; ++s) {
        for (int n = 1; n <= n_max; ++n) {
            const int col = s * (n_max + 1) + n;
            a(col - 1, col) = std::sqrt(static_cast<double>(n));
        }
    }
    return a;
}

// Lowering operator sigma^- of one qubit (which = 1 or 2).
CMat op_sm(int which, int n_max) {
    const int dim = hilbert_dim(n_max);
    CMat sm(dim);
    for (int idx = 0; idx < dim; ++idx) {
        BasisLabel b = basis_label(idx, n_max);
        bool& spin = (which == 1) ? b.up1 : b.up2;
        if (!spin) {
            continue;
        }
        spin = false;
        sm(basis_index(b, n_max), idx) = 1.0;
    }
    return sm;
}

// Kronecker product; used to vectorize the Lindblad generator.
CMat kron(const CMat& a, const CMat& b) {
    const int na = a.dim();
    const int nb = b.dim();
    CMat out(na * nb);
    for (int i = 0; i < na; ++i) {
        for (int j = 0; j < na; ++j) {
            const std::complex<double> aij = a(i, j);
            if (aij == 0.0) {
                continue;
            }
            for (int k = 0; k < nb; ++k) {
                for (int l = 0; l < nb; ++l) {
                    out(i * nb + k, j * nb + l) = aij * b(k, l);
                }
            }
        }
    }
    return out;
}

CMat transpose(const CMat& a) {
    const int n = a.dim();
    CMat out(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            out(i, j) = a(j, i);
        }
    }
    return out;
}

CMat conjugate(const CMat& a) {
    const int n = a.dim();
    CMat out(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            out(i, j) = std::conj(a(i, j));
        }
    }
    return out;
}

// rho -> (rho + rho^dag)/2, then rho / tr(rho).
CMat hermitize_normalize(CMat rho) {
    const int dim = rho.dim();
    for (int i = 0; i < dim; ++i) {
        for (int j = i; j < dim; ++j) {
            const std::complex<double> avg = 0.5 * (rho(i, j) + std::conj(rho(j, i)));
            rho(i, j) = avg;
            rho(j, i) = std::conj(avg);
        }
    }
    std::complex<double> tr = 0.0;
    for (int i = 0; i < dim; ++i) {
        tr += rho(i, i);
    }
    if (std::abs(tr) < 1e-14) {
        throw std::runtime_error("quantum: steady-state candidate has vanishing trace");
    }
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            rho(i, j) /= tr;
        }
    }
    return rho;
}

}  // namespace

int hilbert_dim(int n_max) {
    check_cutoff(n_max);
    return 4 * (n_max + 1);
}

int basis_index(const BasisLabel& b, int n_max) {
    check_cutoff(n_max);
    if (b.n < 0 || b.n > n_max) {
        throw std::invalid_argument("quantum: Fock label outside the cutoff");
    }
    return ((b.up1 ? 2 : 0) + (b.up2 ? 1 : 0)) * (n_max + 1) + b.n;
}

BasisLabel basis_label(int idx, int n_max) {
    check_cutoff(n_max);
    if (idx < 0 || idx >= hilbert_dim(n_max)) {
        throw std::invalid_argument("quantum: basis index out of range");
    }
    const int s = idx / (n_max + 1);
    return BasisLabel{(s & 2) != 0, (s & 1) != 0, idx % (n_max + 1)};
}

CMat build_hamiltonian(const QuantumParams& p, bool rotated) {
    check_cutoff(p.n_max);
    const int dim = hilbert_dim(p.n_max);
    const double w1 = rotated ? p.omega1 - p.omega_d : p.omega1;
    const double w2 = rotated ? p.omega2 - p.omega_d : p.omega2;
    const double wp = rotated ? p.omega_p - p.omega_d : p.omega_p;

    CMat h(dim);
    // Diagonal: omega_j sigma^z_j / 2 + omega_p n.
    for (int idx = 0; idx < dim; ++idx) {
        const BasisLabel b = basis_label(idx, p.n_max);
        h(idx, idx) = w1 * (b.up1 ? 0.5 : -0.5) + w2 * (b.up2 ? 0.5 : -0.5) + wp * b.n;
    }
    const CMat a = op_a(p.n_max);
    const CMat sm1 = op_sm(1, p.n_max);
    const CMat sm2 = op_sm(2, p.n_max);
    const CMat ad = a.adjoint();
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    // t (s+_1 s-_2 + s-_1 s+_2) + kappa_j/sqrt(2) (a^dag s-_j + s+_j a).
    h = h + (sm1.adjoint() * sm2 + sm2.adjoint() * sm1) * p.t;
    h = h + (ad * sm1 + sm1.adjoint() * a) * (p.kappa1 * inv_sqrt2);
    h = h + (ad * sm2 + sm2.adjoint() * a) * (p.kappa2 * inv_sqrt2);
    if (rotated && p.eta != 0.0) {
        h = h + (a + ad) * p.eta;
    }
    return h;
}

CMat effective_nh(const QuantumParams& p, bool rotated) {
    CMat h = build_hamiltonian(p, rotated);
    const int dim = h.dim();
    // -i gamma_j on every basis state with qubit j excited.
    for (int idx = 0; idx < dim; ++idx) {
        const BasisLabel b = basis_label(idx, p.n_max);
        double rate = 0.0;
        if (b.up1) {
            rate += p.gamma1;
        }
        if (b.up2) {
            rate += p.gamma2;
        }
        h(idx, idx) -= kI * rate;
    }
    return h;
}

CMat kernel_4x4(int n, double delta, double Gamma, double gamma, double t, double kappa,
                bool shifted) {
    if (n < 1) {
        throw std::invalid_argument("quantum: kernel photon number must be positive");
    }
    const double k = kappa * std::sqrt(static_cast<double>(n) / 2.0);
    CMat h(4);
    h(0, 0) = delta - kI * Gamma;
    h(1, 1) = kI * gamma;
    h(2, 2) = -kI * gamma;
    h(3, 3) = -delta + kI * Gamma;
    h(1, 2) = h(2, 1) = t;
    h(0, 1) = h(1, 0) = k;
    h(0, 2) = h(2, 0) = k;
    h(1, 3) = h(3, 1) = k;
    h(2, 3) = h(3, 2) = k;
    if (shifted) {
        for (int i = 0; i < 4; ++i) {
            h(i, i) -= kI * (0.5 * Gamma);
        }
    }
    return h;
}

CMat liouvillian(const QuantumParams& p, bool rotated) {
    if (p.gamma1 < 0.0 || p.gamma2 < 0.0) {
        throw std::invalid_argument("quantum: Lindblad rates must be non-negative");
    }
    const int dim = hilbert_dim(p.n_max);
    const CMat h = build_hamiltonian(p, rotated);
    const CMat id = CMat::identity(dim);
    // Column stacking: vec(A X B) = (B^T kron A) vec(X).
    CMat liou = kron(id, h) * (-kI) + kron(transpose(h), id) * kI;
    const double rates[2] = {p.gamma1, p.gamma2};
    for (int j = 0; j < 2; ++j) {
        if (rates[j] == 0.0) {
            continue;
        }
        const CMat c = op_sm(j + 1, p.n_max);
        const CMat cdc = c.adjoint() * c;
        liou = liou + kron(conjugate(c), c) * (2.0 * rates[j]);
        liou = liou + kron(id, cdc) * (-rates[j]);
        liou = liou + kron(transpose(cdc), id) * (-rates[j]);
    }
    return liou;
}

CMat steady_state(const CMat& liou) {
    const int dim2 = liou.dim();
    const int dim = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim2))));
    if (dim * dim != dim2) {
        throw std::invalid_argument("quantum: Liouvillian dimension is not a perfect square");
    }
    const double scale = std::max(1.0, liou.norm_fro());
    const std::vector<CVec> kernel = null_space(liou, 1e-9 * scale);
    if (kernel.size() != 1) {
        throw std::runtime_error("quantum: Liouvillian null space is not one-dimensional");
    }
    const CVec& v = kernel.front();
    const CVec resid = liou.apply(v);
    double rnorm = 0.0;
    for (const auto& x : resid) {
        rnorm += std::norm(x);
    }
    if (std::sqrt(rnorm) > 1e-9 * scale) {
        throw std::runtime_error("quantum: steady-state residual exceeds tolerance");
    }
    CMat rho(dim);
    for (int j = 0; j < dim; ++j) {
        for (int i = 0; i < dim; ++i) {
            rho(i, j) = v[static_cast<std::size_t>(j) * dim + i];
        }
    }
    return hermitize_normalize(rho);
}

CMat nh_steady_approx(const QuantumParams& p) {
    const CMat h = effective_nh(p, true);
    EigOptions opt;
    opt.want_left = false;
    opt.coalesce_defective = false;
    const EigenSystem es = eig_full(h, opt);
    const int dim = h.dim();
    int best = 0;
    int second = -1;
    for (int i = 1; i < dim; ++i) {
        const double im = std::abs(es.values[i].imag());
        if (im < std::abs(es.values[best].imag())) {
            second = best;
            best = i;
        } else if (second < 0 || im < std::abs(es.values[second].imag())) {
            second = i;
        }
    }
    if (second >= 0 && std::abs(std::abs(es.values[second].imag()) -
                                std::abs(es.values[best].imag())) < 1e-10) {
        throw std::runtime_error(
            "quantum: slowest-decay eigenvector is not unique; pure-state "
            "approximation undefined");
    }
    const CVec& psi = es.right[best];
    CMat rho(dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            rho(i, j) = psi[i] * std::conj(psi[j]);
        }
    }
    return hermitize_normalize(rho);
}

std::vector<double> populations(const CMat& rho) {
    const int dim = rho.dim();
    std::vector<double> pop(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
        pop[static_cast<std::size_t>(i)] = rho(i, i).real();
    }
    return pop;
}

double top_fock_population(const CMat& rho) {
    const int dim = rho.dim();
    if (dim % 4 != 0) {
        throw std::invalid_argument("quantum: density matrix dimension must be 4(n_max+1)");
    }
    const int per = dim / 4;  // n_max + 1
    double total = 0.0;
    for (int s = 0; s < 4; ++s) {
        total += rho(s * per + per - 1, s * per + per - 1).real();
    }
    return total;
}

double g2_zero(const CMat& rho) {
    const int dim = rho.dim();
    if (dim % 4 != 0) {
        throw std::invalid_argument("quantum: density matrix dimension must be 4(n_max+1)");
    }
    const int per = dim / 4;
    double n1 = 0.0;  // <a^dag a>
    double n2 = 0.0;  // <a^dag a^dag a a>
    for (int s = 0; s < 4; ++s) {
        for (int n = 0; n < per; ++n) {
            const double pop = rho(s * per + n, s * per + n).real();
            n1 += pop * n;
            n2 += pop * n * (n - 1.0);
        }
    }
    if (n1 <= 1e-12) {
        throw std::invalid_argument("quantum: G2(0) undefined on (near-)vacuum state");
    }
    return n2 / (n1 * n1);
}

}  // namespace nhd
