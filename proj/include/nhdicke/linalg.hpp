#pragma once

// Dense complex linear algebra used by every model module: eigendecomposition
// with paired left/right vectors (QR on a Hessenberg form, in-repo so the
// defective-cluster handling near exceptional points is under our control),
// one-sided Jacobi SVD, LU solves, polynomial roots via companion matrix with
// Aberth refinement, and continuity-based eigenvalue tracking.

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace nhd {

using cx = std::complex<double>;
using CVec = std::vector<cx>;

// Square dense complex matrix, row-major.
class CMat {
public:
    CMat() = default;
    explicit CMat(int n) : n_(n), a_(static_cast<size_t>(n) * n) {}

    static CMat identity(int n) {
        CMat m(n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int dim() const { return n_; }
    cx& operator()(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
    const cx& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }
    cx* row(int i) { return a_.data() + static_cast<size_t>(i) * n_; }
    const cx* row(int i) const { return a_.data() + static_cast<size_t>(i) * n_; }

    CMat adjoint() const;
    double norm_fro() const;
    double norm_inf() const;  // max row sum of absolute values

    CVec apply(const CVec& x) const;  // A x

    friend CMat operator*(const CMat& a, const CMat& b);
    friend CMat operator+(const CMat& a, const CMat& b);
    friend CMat operator-(const CMat& a, const CMat& b);
    CMat& operator+=(const CMat& b);
    CMat& operator*=(cx s);

private:
    int n_ = 0;
    std::vector<cx> a_;
};

inline CMat operator*(CMat a, cx s) {
    a *= s;
    return a;
}
inline CMat operator*(cx s, CMat a) {
    a *= s;
    return a;
}

// A cluster of eigenvalues confirmed defective (algebraic multiplicity above
// geometric), recorded by eig_full.
struct DefectRecord {
    std::vector<int> members;        // indices into values after sorting
    cx mean;                         // cluster mean (the coalesced value)
    int geometric_multiplicity = 0;  // from the singular-value count at the mean
    double sigma_min = 0.0;          // smallest singular value of A - mean*I
};

struct EigenSystem {
    std::vector<cx> values;   // ascending by real part, imaginary tiebreak
    std::vector<CVec> right;  // unit-norm columns, A r = lambda r
    std::vector<CVec> left;   // unit-norm row duals, l A = lambda l (plain dot l.r gives the biorthogonal overlap)
    std::vector<DefectRecord> defects;
    bool defective() const { return !defects.empty(); }
};

struct EigOptions {
    // Collapse eigenvalue clusters that the sigma_min test confirms defective
    // to their cluster mean. Raw QR scatters an exact triple root over a
    // radius ~ (eps*norm)^(1/3) which is far above what locus checks need,
    // while the cluster mean is accurate to machine precision. Sweeps that
    // measure genuine tiny splittings (rigidity scaling) must turn this off.
    bool coalesce_defective = true;
    double cluster_factor = 10.0;  // cluster radius = factor * max(1,|A|_F) * eps^(1/3)
    double defect_tol = 1e-6;      // defective when sigma_min < defect_tol * |A|_F
    int max_coalesce_dim = 16;     // cluster pass only for small matrices
    bool want_left = true;
    double left_inverse_cond_limit = 1e8;  // beyond this, fall back to eig of A^H
};

// Full eigensystem. Throws std::runtime_error if the QR iteration fails to
// converge within its budget (never returns silent garbage).
EigenSystem eig_full(const CMat& a, const EigOptions& opt = {});

// Eigenvalues only (same QR core, no vectors, no cluster pass).
std::vector<cx> eig_values(const CMat& a);

// Singular value decomposition by one-sided Jacobi: a = U diag(s) V^H.
// Values descending. u, v optional.
void svd_jacobi(const CMat& a, std::vector<double>& s, CMat* u = nullptr, CMat* v = nullptr);

// Orthonormal basis of the right null space at singular value threshold tol.
// Small matrices use the Jacobi SVD; large ones (the Liouvillian) use LU-based
// inverse iteration probing up to 4 null directions.
std::vector<CVec> null_space(const CMat& a, double tol);

// LU with partial pivoting; solve and inverse. Exactly singular input is
// flagged via singular() unless tiny pivots are being replaced (the
// null-space path replaces them and probes the resulting near-inverse).
class LU {
public:
    explicit LU(const CMat& a, bool replace_tiny_pivots = false);
    CVec solve(const CVec& b) const;
    CMat inverse() const;
    bool singular() const { return singular_; }

private:
    CMat lu_;
    std::vector<int> piv_;
    bool singular_ = false;
};

// Polynomial with ascending-degree coefficients: c[0] + c[1] x + ...
struct Poly {
    std::vector<cx> c;

    int degree() const { return static_cast<int>(c.size()) - 1; }
    cx eval(cx x) const;
    Poly derivative() const;
    static Poly from_roots(const std::vector<cx>& roots, cx leading = 1.0);
};

// All complex roots (with multiplicity) via companion-matrix eigenvalues plus
// an Aberth-Ehrlich refinement pass. Throws std::invalid_argument on a
// degenerate (identically zero or constant) polynomial. No cluster collapse:
// callers measuring root splittings get the raw branches.
std::vector<cx> poly_roots(const Poly& p);

// Minimal-cost matching of next onto prev (returns perm with
// next[perm[i]] continuing prev[i]). Brute force for n <= 6, greedy above.
std::vector<int> match_to_previous(const std::vector<cx>& prev, const std::vector<cx>& next);

// Align a parameter sweep of eigensystems so index i of every step is the
// continuous continuation of index i of step 0. Throws std::runtime_error
// when a step moves eigenvalues further than half the smallest pairwise gap
// (matching would be ambiguous; the step grid needs refinement).
std::vector<EigenSystem> track_bands(const std::vector<EigenSystem>& sweep);

}  // namespace nhd
