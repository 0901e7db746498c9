#include "nhdicke/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace nhd {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double abs1(cx z) { return std::abs(z.real()) + std::abs(z.imag()); }

}  // namespace

CMat CMat::adjoint() const {
    CMat b(n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) b(j, i) = std::conj((*this)(i, j));
    return b;
}

double CMat::norm_fro() const {
    double s = 0.0;
    for (const cx& z : a_) s += std::norm(z);
    return std::sqrt(s);
}

double CMat::norm_inf() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i) {
        double s = 0.0;
        for (int j = 0; j < n_; ++j) s += std::abs((*this)(i, j));
        m = std::max(m, s);
    }
    return m;
}

CVec CMat::apply(const CVec& x) const {
    CVec y(n_, cx(0));
    for (int i = 0; i < n_; ++i) {
        cx s = 0.0;
        const cx* r = row(i);
        for (int j = 0; j < n_; ++j) s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

CMat operator*(const CMat& a, const CMat& b) {
    const int n = a.n_;
    CMat c(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const cx aik = a(i, k);
            if (aik == cx(0)) continue;
            const cx* brow = b.row(k);
            cx* crow = c.row(i);
            for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

CMat operator+(const CMat& a, const CMat& b) {
    CMat c = a;
    c += b;
    return c;
}

CMat operator-(const CMat& a, const CMat& b) {
    CMat c = a;
    for (size_t i = 0; i < c.a_.size(); ++i) c.a_[i] -= b.a_[i];
    return c;
}

CMat& CMat::operator+=(const CMat& b) {
    for (size_t i = 0; i < a_.size(); ++i) a_[i] += b.a_[i];
    return *this;
}

CMat& CMat::operator*=(cx s) {
    for (cx& z : a_) z *= s;
    return *this;
}

namespace {

// ---------------------------------------------------------------------------
// Hessenberg reduction and shifted QR
// ---------------------------------------------------------------------------

// Householder reduction to upper Hessenberg form, accumulating the unitary Q
// with A = Q H Q^H.
void hessenberg(CMat& a, CMat& q) {
    const int n = a.dim();
    q = CMat::identity(n);
    for (int k = 0; k < n - 2; ++k) {
        // Build the reflector for column k below the subdiagonal.
        double scale = 0.0;
        for (int i = k + 1; i < n; ++i) scale += std::norm(a(i, k));
        scale = std::sqrt(scale);
        if (scale <= kEps * a.norm_fro()) continue;
        cx x0 = a(k + 1, k);
        cx phase = (std::abs(x0) > 0.0) ? x0 / std::abs(x0) : cx(1.0);
        cx alpha = -phase * scale;
        CVec v(n, cx(0));
        v[k + 1] = x0 - alpha;
        for (int i = k + 2; i < n; ++i) v[i] = a(i, k);
        double vnorm2 = 0.0;
        for (int i = k + 1; i < n; ++i) vnorm2 += std::norm(v[i]);
        if (vnorm2 == 0.0) continue;
        // A <- P A with P = I - 2 v v^H / (v^H v)
        for (int j = 0; j < n; ++j) {
            cx s = 0.0;
            for (int i = k + 1; i < n; ++i) s += std::conj(v[i]) * a(i, j);
            s *= 2.0 / vnorm2;
            for (int i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
        }
        // A <- A P
        for (int i = 0; i < n; ++i) {
            cx s = 0.0;
            for (int j = k + 1; j < n; ++j) s += a(i, j) * v[j];
            s *= 2.0 / vnorm2;
            for (int j = k + 1; j < n; ++j) a(i, j) -= s * std::conj(v[j]);
        }
        // Q <- Q P
        for (int i = 0; i < n; ++i) {
            cx s = 0.0;
            for (int j = k + 1; j < n; ++j) s += q(i, j) * v[j];
            s *= 2.0 / vnorm2;
            for (int j = k + 1; j < n; ++j) q(i, j) -= s * std::conj(v[j]);
        }
        for (int i = k + 2; i < n; ++i) a(i, k) = 0.0;
    }
}

struct Givens {
    cx c, s;  // [[c, s], [-conj(s), conj(c)]] maps (x, y) to (r, 0)
};

Givens make_givens(cx x, cx y) {
    double r = std::sqrt(std::norm(x) + std::norm(y));
    if (r == 0.0) return {cx(1.0), cx(0.0)};
    return {std::conj(x) / r, std::conj(y) / r};
}

// Single-shift implicit QR on the Hessenberg matrix h, reducing it to upper
// triangular (complex Schur form) while accumulating z. Throws if the
// iteration budget is exhausted.
void schur_qr(CMat& h, CMat& z) {
    const int n = h.dim();
    const double hnorm = std::max(h.norm_fro(), kEps);
    int hi = n - 1;
    int iter_total = 0;
    const int budget = 60 * std::max(n, 4);
    int stall = 0;
    while (hi > 0) {
        // Deflate converged subdiagonals.
        int lo = hi;
        while (lo > 0) {
            double sub = std::abs(h(lo, lo - 1));
            if (sub <= kEps * (abs1(h(lo - 1, lo - 1)) + abs1(h(lo, lo)) + kEps * hnorm)) {
                h(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }
        if (lo == hi) {
            --hi;
            stall = 0;
            continue;
        }
        if (++iter_total > budget)
            throw std::runtime_error("eig_full: QR iteration failed to converge");

        // Wilkinson shift: eigenvalue of the trailing 2x2 closest to h(hi,hi).
        cx mu;
        {
            cx a = h(hi - 1, hi - 1), b = h(hi - 1, hi);
            cx c = h(hi, hi - 1), d = h(hi, hi);
            cx tr2 = (a + d) * 0.5;
            cx det = a * d - b * c;
            cx disc = std::sqrt(tr2 * tr2 - det);
            cx e1 = tr2 + disc, e2 = tr2 - disc;
            mu = (std::abs(e1 - d) < std::abs(e2 - d)) ? e1 : e2;
            if (++stall % 12 == 0) {
                // Exceptional shift to break rare cycling.
                mu = d + cx(std::abs(h(hi, hi - 1)), std::abs(h(hi - 1, hi - 2 >= 0 ? hi - 2 : 0)));
            }
        }

        // Chase the bulge down the active window.
        cx x = h(lo, lo) - mu;
        cx y = h(lo + 1, lo);
        for (int k = lo; k < hi; ++k) {
            Givens g = make_givens(x, y);
            // Rows k, k+1 (columns from k-ish to end of window).
            int c0 = std::max(lo, k - 1);
            for (int j = c0; j < n; ++j) {
                cx t1 = h(k, j), t2 = h(k + 1, j);
                h(k, j) = g.c * t1 + g.s * t2;
                h(k + 1, j) = -std::conj(g.s) * t1 + std::conj(g.c) * t2;
            }
            // Columns k, k+1 (rows up to the bulge).
            int r1 = std::min(hi, k + 2);
            for (int i = 0; i <= r1; ++i) {
                cx t1 = h(i, k), t2 = h(i, k + 1);
                h(i, k) = std::conj(g.c) * t1 + std::conj(g.s) * t2;
                h(i, k + 1) = -g.s * t1 + g.c * t2;
            }
            for (int i = 0; i < n; ++i) {
                cx t1 = z(i, k), t2 = z(i, k + 1);
                z(i, k) = std::conj(g.c) * t1 + std::conj(g.s) * t2;
                z(i, k + 1) = -g.s * t1 + g.c * t2;
            }
            if (k < hi - 1) {
                x = h(k + 1, k);
                y = h(k + 2, k);
            }
        }
    }
}

// Right eigenvector of the upper-triangular t for eigenvalue t(k,k), by back
// substitution with guarded denominators (exact multiples give nearly
// parallel vectors, which is the correct defective behavior).
CVec triangular_eigvec(const CMat& t, int k, double tnorm) {
    const int n = t.dim();
    CVec y(n, cx(0));
    y[k] = 1.0;
    const cx lam = t(k, k);
    for (int j = k - 1; j >= 0; --j) {
        cx s = 0.0;
        for (int m = j + 1; m <= k; ++m) s += t(j, m) * y[m];
        cx den = t(j, j) - lam;
        double dmin = kEps * tnorm;
        if (std::abs(den) < dmin) den = cx(dmin, 0.0);
        y[j] = -s / den;
    }
    return y;
}

void normalize(CVec& v) {
    double s = 0.0;
    for (const cx& z : v) s += std::norm(z);
    s = std::sqrt(s);
    if (s > 0.0)
        for (cx& z : v) z /= s;
}

}  // namespace

std::vector<cx> eig_values(const CMat& a) {
    const int n = a.dim();
    if (n == 0) return {};
    if (n == 1) return {a(0, 0)};
    CMat h = a, q;
    hessenberg(h, q);
    CMat z = CMat::identity(n);
    schur_qr(h, z);
    std::vector<cx> vals(n);
    for (int i = 0; i < n; ++i) vals[i] = h(i, i);
    return vals;
}

EigenSystem eig_full(const CMat& a, const EigOptions& opt) {
    const int n = a.dim();
    EigenSystem es;
    if (n == 0) return es;

    CMat h = a, q;
    hessenberg(h, q);
    CMat z = q;
    schur_qr(h, z);
    const double tnorm = std::max(h.norm_fro(), kEps);

    es.values.resize(n);
    es.right.resize(n);
    for (int k = 0; k < n; ++k) {
        es.values[k] = h(k, k);
        CVec y = triangular_eigvec(h, k, tnorm);
        CVec x(n, cx(0));
        for (int i = 0; i < n; ++i) {
            cx s = 0.0;
            for (int j = 0; j <= k; ++j) s += z(i, j) * y[j];
            x[i] = s;
        }
        normalize(x);
        es.right[k] = std::move(x);
    }

    // Sort ascending by real part, imaginary tiebreak.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        if (es.values[i].real() != es.values[j].real())
            return es.values[i].real() < es.values[j].real();
        return es.values[i].imag() < es.values[j].imag();
    });
    {
        std::vector<cx> v(n);
        std::vector<CVec> r(n);
        for (int i = 0; i < n; ++i) {
            v[i] = es.values[order[i]];
            r[i] = std::move(es.right[order[i]]);
        }
        es.values = std::move(v);
        es.right = std::move(r);
    }

    // Defective-cluster detection (and optional coalescence to the cluster
    // mean, which is accurate to machine precision while the raw values
    // scatter over ~ (eps*norm)^(1/m)).
    if (n <= opt.max_coalesce_dim && n > 1) {
        const double anorm = std::max(a.norm_fro(), 1.0);
        const double radius = opt.cluster_factor * anorm * std::cbrt(kEps);
        std::vector<int> parent(n);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int i) {
            while (parent[i] != i) i = parent[i] = parent[parent[i]];
            return i;
        };
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (std::abs(es.values[i] - es.values[j]) <= radius) parent[find(i)] = find(j);
        std::vector<std::vector<int>> groups(n);
        for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
        for (const auto& g : groups) {
            if (g.size() < 2) continue;
            cx mean = 0.0;
            for (int i : g) mean += es.values[i];
            mean /= static_cast<double>(g.size());
            CMat shifted = a;
            for (int i = 0; i < n; ++i) shifted(i, i) -= mean;
            std::vector<double> sv;
            svd_jacobi(shifted, sv);
            const double thresh = opt.defect_tol * std::max(a.norm_fro(), kEps);
            int null_dim = 0;
            for (double s : sv)
                if (s < thresh) ++null_dim;
            if (null_dim > 0 && null_dim < static_cast<int>(g.size())) {
                DefectRecord rec;
                rec.members = g;
                rec.mean = mean;
                rec.geometric_multiplicity = null_dim;
                rec.sigma_min = sv.back();
                es.defects.push_back(std::move(rec));
                if (opt.coalesce_defective)
                    for (int i : g) es.values[i] = mean;
            }
        }
    }

    if (!opt.want_left) return es;

    // Left duals. Primary path: rows of V^-1 (exactly biorthogonal away from
    // EPs). Near an EP, V is ill conditioned; fall back to the
    // eigendecomposition of A^H paired by conjugate eigenvalues.
    es.left.assign(n, CVec(n, cx(0)));
    bool used_inverse = false;
    {
        CMat v(n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) v(i, j) = es.right[j][i];
        LU lu(v);
        if (!lu.singular()) {
            CMat vinv = lu.inverse();
            double cond = v.norm_inf() * vinv.norm_inf();
            if (cond < opt.left_inverse_cond_limit) {
                for (int i = 0; i < n; ++i) {
                    CVec l(n);
                    for (int j = 0; j < n; ++j) l[j] = vinv(i, j);
                    normalize(l);
                    es.left[i] = std::move(l);
                }
                used_inverse = true;
            }
        }
    }
    if (!used_inverse) {
        EigOptions sub = opt;
        sub.want_left = false;
        sub.coalesce_defective = false;
        EigenSystem adj = eig_full(a.adjoint(), sub);
        std::vector<bool> used(n, false);
        for (int i = 0; i < n; ++i) {
            int best = -1;
            double bd = 0.0;
            for (int j = 0; j < n; ++j) {
                if (used[j]) continue;
                double d = std::abs(std::conj(adj.values[j]) - es.values[i]);
                if (best < 0 || d < bd) {
                    best = j;
                    bd = d;
                }
            }
            used[best] = true;
            CVec l(n);
            for (int k = 0; k < n; ++k) l[k] = std::conj(adj.right[best][k]);
            es.left[i] = std::move(l);
        }
    }
    return es;
}

// ---------------------------------------------------------------------------
// One-sided Jacobi SVD
// ---------------------------------------------------------------------------

void svd_jacobi(const CMat& a, std::vector<double>& s, CMat* u, CMat* v) {
    const int n = a.dim();
    CMat w = a;
    CMat vv = CMat::identity(n);
    const double tol = 1e-14;
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                cx gpq = 0.0;
                double gpp = 0.0, gqq = 0.0;
                for (int i = 0; i < n; ++i) {
                    gpq += std::conj(w(i, p)) * w(i, q);
                    gpp += std::norm(w(i, p));
                    gqq += std::norm(w(i, q));
                }
                double mag = std::abs(gpq);
                if (mag <= tol * std::sqrt(gpp * gqq) || mag == 0.0) continue;
                off = std::max(off, mag / std::max(std::sqrt(gpp * gqq), kEps));
                cx phase = gpq / mag;
                double tau = (gqq - gpp) / (2.0 * mag);
                double t = ((tau >= 0) ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double sn = c * t;
                for (int i = 0; i < n; ++i) {
                    cx wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - sn * std::conj(phase) * wq;
                    w(i, q) = sn * phase * wp + c * wq;
                    cx vp = vv(i, p), vq = vv(i, q);
                    vv(i, p) = c * vp - sn * std::conj(phase) * vq;
                    vv(i, q) = sn * phase * vp + c * vq;
                }
            }
        }
        if (off < tol) break;
    }
    s.assign(n, 0.0);
    std::vector<int> order(n);
    for (int j = 0; j < n; ++j) {
        double col = 0.0;
        for (int i = 0; i < n; ++i) col += std::norm(w(i, j));
        s[j] = std::sqrt(col);
        order[j] = j;
    }
    std::sort(order.begin(), order.end(), [&](int i, int j) { return s[i] > s[j]; });
    std::vector<double> ss(n);
    CMat uu(n), vs(n);
    for (int j = 0; j < n; ++j) {
        int src = order[j];
        ss[j] = s[src];
        for (int i = 0; i < n; ++i) {
            uu(i, j) = (s[src] > 0.0) ? w(i, src) / s[src] : cx(0);
            vs(i, j) = vv(i, src);
        }
    }
    s = std::move(ss);
    if (u) *u = std::move(uu);
    if (v) *v = std::move(vs);
}

// ---------------------------------------------------------------------------
// LU
// ---------------------------------------------------------------------------

LU::LU(const CMat& a, bool replace_tiny_pivots) : lu_(a), piv_(a.dim()) {
    const int n = a.dim();
    std::iota(piv_.begin(), piv_.end(), 0);
    const double tiny = kEps * std::max(a.norm_fro(), kEps);
    for (int k = 0; k < n; ++k) {
        int p = k;
        double best = std::abs(lu_(k, k));
        for (int i = k + 1; i < n; ++i) {
            double m = std::abs(lu_(i, k));
            if (m > best) {
                best = m;
                p = i;
            }
        }
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
            std::swap(piv_[k], piv_[p]);
        }
        cx pivot = lu_(k, k);
        if (std::abs(pivot) < tiny) {
            if (replace_tiny_pivots) {
                pivot = (std::abs(pivot) > 0.0) ? pivot / std::abs(pivot) * tiny : cx(tiny, 0.0);
                lu_(k, k) = pivot;
            } else if (std::abs(pivot) == 0.0) {
                singular_ = true;
                continue;
            }
        }
        for (int i = k + 1; i < n; ++i) {
            cx f = lu_(i, k) / pivot;
            lu_(i, k) = f;
            if (f == cx(0)) continue;
            const cx* rk = lu_.row(k);
            cx* ri = lu_.row(i);
            for (int j = k + 1; j < n; ++j) ri[j] -= f * rk[j];
        }
    }
}

CVec LU::solve(const CVec& b) const {
    const int n = lu_.dim();
    CVec x(n);
    for (int i = 0; i < n; ++i) x[i] = b[piv_[i]];
    for (int i = 1; i < n; ++i) {
        cx s = x[i];
        const cx* ri = lu_.row(i);
        for (int j = 0; j < i; ++j) s -= ri[j] * x[j];
        x[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
        cx s = x[i];
        const cx* ri = lu_.row(i);
        for (int j = i + 1; j < n; ++j) s -= ri[j] * x[j];
        x[i] = s / lu_(i, i);
    }
    return x;
}

CMat LU::inverse() const {
    const int n = lu_.dim();
    CMat inv(n);
    CVec e(n, cx(0));
    for (int j = 0; j < n; ++j) {
        e.assign(n, cx(0));
        e[j] = 1.0;
        CVec col = solve(e);
        for (int i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return inv;
}

// ---------------------------------------------------------------------------
// Null space
// ---------------------------------------------------------------------------

std::vector<CVec> null_space(const CMat& a, double tol) {
    const int n = a.dim();
    std::vector<CVec> basis;
    if (n <= 64) {
        std::vector<double> s;
        CMat v;
        svd_jacobi(a, s, nullptr, &v);
        for (int j = 0; j < n; ++j) {
            if (s[j] > tol) continue;
            CVec x(n);
            for (int i = 0; i < n; ++i) x[i] = v(i, j);
            basis.push_back(std::move(x));
        }
        return basis;
    }

    // Inverse iteration on an LU factorization with tiny pivots replaced;
    // probes up to 4 independent null directions, which covers every use in
    // this project (the Liouvillian steady manifold).
    LU lu(a, /*replace_tiny_pivots=*/true);
    std::mt19937_64 rng(0x6e68646c75ULL);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double anorm = std::max(a.norm_fro(), kEps);
    for (int probe = 0; probe < 4; ++probe) {
        CVec x(n);
        for (cx& z : x) z = cx(unit(rng), unit(rng));
        for (int it = 0; it < 3; ++it) {
            // Project out directions already found, then invert.
            for (const CVec& b : basis) {
                cx ov = 0.0;
                for (int i = 0; i < n; ++i) ov += std::conj(b[i]) * x[i];
                for (int i = 0; i < n; ++i) x[i] -= ov * b[i];
            }
            normalize(x);
            x = lu.solve(x);
            normalize(x);
        }
        for (const CVec& b : basis) {
            cx ov = 0.0;
            for (int i = 0; i < n; ++i) ov += std::conj(b[i]) * x[i];
            for (int i = 0; i < n; ++i) x[i] -= ov * b[i];
        }
        normalize(x);
        CVec r = a.apply(x);
        double res = 0.0;
        for (const cx& z : r) res += std::norm(z);
        res = std::sqrt(res);
        if (res <= std::max(tol, 1e3 * kEps) * anorm)
            basis.push_back(std::move(x));
        else
            break;  // residual grows monotonically across probes
    }
    return basis;
}

// ---------------------------------------------------------------------------
// Polynomials
// ---------------------------------------------------------------------------

cx Poly::eval(cx x) const {
    cx s = 0.0;
    for (size_t i = c.size(); i-- > 0;) s = s * x + c[i];
    return s;
}

Poly Poly::derivative() const {
    Poly d;
    for (size_t i = 1; i < c.size(); ++i) d.c.push_back(c[i] * static_cast<double>(i));
    if (d.c.empty()) d.c.push_back(cx(0));
    return d;
}

Poly Poly::from_roots(const std::vector<cx>& roots, cx leading) {
    Poly p;
    p.c = {leading};
    for (cx r : roots) {
        std::vector<cx> next(p.c.size() + 1, cx(0));
        for (size_t i = 0; i < p.c.size(); ++i) {
            next[i + 1] += p.c[i];
            next[i] -= r * p.c[i];
        }
        p.c = std::move(next);
    }
    return p;
}

std::vector<cx> poly_roots(const Poly& p) {
    // Trim trailing (high-degree) zero coefficients.
    std::vector<cx> c = p.c;
    double cmax = 0.0;
    for (const cx& z : c) cmax = std::max(cmax, std::abs(z));
    if (cmax == 0.0) throw std::invalid_argument("poly_roots: zero polynomial");
    while (c.size() > 1 && std::abs(c.back()) <= 1e-14 * cmax) c.pop_back();
    const int deg = static_cast<int>(c.size()) - 1;
    if (deg < 1) throw std::invalid_argument("poly_roots: constant polynomial");

    // Monic companion matrix; it is already upper Hessenberg, so the QR core
    // consumes it directly.
    std::vector<cx> monic(deg);
    for (int i = 0; i < deg; ++i) monic[i] = c[i] / c[deg];
    CMat comp(deg);
    for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -monic[i];
    CMat z = CMat::identity(deg);
    schur_qr(comp, z);
    std::vector<cx> roots(deg);
    for (int i = 0; i < deg; ++i) roots[i] = comp(i, i);

    // Aberth-Ehrlich refinement.
    Poly mp;
    mp.c = monic;
    mp.c.push_back(cx(1.0));
    Poly dp = mp.derivative();
    for (int it = 0; it < 60; ++it) {
        double worst = 0.0;
        for (int i = 0; i < deg; ++i) {
            cx pv = mp.eval(roots[i]);
            worst = std::max(worst, std::abs(pv));
            cx dv = dp.eval(roots[i]);
            if (dv == cx(0)) continue;
            cx w = pv / dv;
            cx rep = 0.0;
            for (int j = 0; j < deg; ++j) {
                if (j == i) continue;
                cx d = roots[i] - roots[j];
                if (std::abs(d) < 1e-300) d = cx(1e-300, 0);
                rep += 1.0 / d;
            }
            cx den = 1.0 - w * rep;
            if (std::abs(den) < 1e-300) continue;
            roots[i] -= w / den;
        }
        if (worst < 1e-13 * cmax) break;
    }
    std::sort(roots.begin(), roots.end(), [](cx a, cx b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return roots;
}

// ---------------------------------------------------------------------------
// Tracking
// ---------------------------------------------------------------------------

std::vector<int> match_to_previous(const std::vector<cx>& prev, const std::vector<cx>& next) {
    const int n = static_cast<int>(prev.size());
    std::vector<int> best(n);
    std::iota(best.begin(), best.end(), 0);
    if (n <= 6) {
        std::vector<int> perm = best;
        double bc = std::numeric_limits<double>::max();
        std::sort(perm.begin(), perm.end());
        do {
            double cost = 0.0;
            for (int i = 0; i < n; ++i) cost += std::abs(next[perm[i]] - prev[i]);
            if (cost < bc) {
                bc = cost;
                best = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    }
    // Greedy nearest-neighbor for larger systems.
    std::vector<bool> used(n, false);
    for (int i = 0; i < n; ++i) {
        int arg = -1;
        double bd = 0.0;
        for (int j = 0; j < n; ++j) {
            if (used[j]) continue;
            double d = std::abs(next[j] - prev[i]);
            if (arg < 0 || d < bd) {
                arg = j;
                bd = d;
            }
        }
        used[arg] = true;
        best[i] = arg;
    }
    return best;
}

std::vector<EigenSystem> track_bands(const std::vector<EigenSystem>& sweep) {
    std::vector<EigenSystem> out = sweep;
    for (size_t step = 1; step < out.size(); ++step) {
        const auto& prev = out[step - 1].values;
        const int n = static_cast<int>(prev.size());
        std::vector<int> perm = match_to_previous(prev, out[step].values);

        double min_gap = std::numeric_limits<double>::max();
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) min_gap = std::min(min_gap, std::abs(prev[i] - prev[j]));
        double max_motion = 0.0;
        for (int i = 0; i < n; ++i)
            max_motion = std::max(max_motion, std::abs(out[step].values[perm[i]] - prev[i]));
        if (n > 1 && max_motion >= 0.5 * min_gap)
            throw std::runtime_error(
                "track_bands: eigenvalue motion at step " + std::to_string(step) +
                " exceeds half the smallest gap; refine the parameter grid");

        EigenSystem aligned;
        aligned.values.resize(n);
        aligned.right.resize(n);
        if (!out[step].left.empty()) aligned.left.resize(n);
        for (int i = 0; i < n; ++i) {
            aligned.values[i] = out[step].values[perm[i]];
            aligned.right[i] = out[step].right[perm[i]];
            if (!aligned.left.empty()) aligned.left[i] = out[step].left[perm[i]];
        }
        aligned.defects = out[step].defects;
        out[step] = std::move(aligned);
    }
    return out;
}

}  // namespace nhd
