#include "nhdicke/semiclassical.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nhd {

namespace {

constexpr double kPi = std::numbers::pi;

double sq(double x) { return x * x; }

cx dot(const CVec& l, const CVec& r) {
    cx s = 0.0;
    for (size_t i = 0; i < l.size(); ++i) s += l[i] * r[i];
    return s;
}

cx hdot(const CVec& a, const CVec& b) {
    cx s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

}  // namespace

CMat build_dicke(const SemiclassicalParams& p) { return build_dicke(p, cx(p.delta, 0.0)); }

CMat build_dicke(const SemiclassicalParams& p, cx delta) {
    const double h = p.kappa / std::sqrt(2.0);
    CMat m(3);
    m(0, 0) = delta + cx(0.0, p.gamma);
    m(0, 1) = h;
    m(0, 2) = p.t;
    m(1, 0) = h;
    m(1, 2) = h;
    m(2, 0) = p.t;
    m(2, 1) = h;
    m(2, 2) = delta - cx(0.0, p.gamma);
    return m;
}

Poly dicke_char_poly(const SemiclassicalParams& p, cx delta) {
    Poly c;
    c.c = {sq(p.kappa) * (delta - p.t),
           delta * delta + sq(p.gamma) - sq(p.kappa) - sq(p.t),
           -2.0 * delta, cx(1.0)};
    return c;
}

Ep2Locus ep2_locus(double omega, double t, double kappa) {
    const double k2 = sq(kappa);
    const double den = k2 + 2.0 * sq(omega);
    Ep2Locus l;
    l.delta = (t * k2 + 2.0 * omega * omega * omega) / den;
    l.gamma = std::sqrt(k2 + sq(omega)) * (k2 + 2.0 * t * omega) / den;
    l.omega3 = 2.0 * (t - omega) * k2 / den;
    return l;
}

Ep3Locus ep3_locus(double omega, double kappa) {
    Ep3Locus l;
    l.delta = 1.5 * omega;
    l.gamma = std::pow(sq(omega) + sq(kappa), 1.5) / sq(kappa);
    l.t = 1.5 * omega + omega * omega * omega / sq(kappa);
    return l;
}

double omega_ep3_for_t(double t, double kappa) {
    auto f = [&](double w) { return 1.5 * w + w * w * w / sq(kappa) - t; };
    double b = 1.0;
    while (f(-b) * f(b) > 0.0) b *= 2.0;
    double lo = -b, hi = b;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (f(lo) * f(mid) <= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

double gamma_ep3_for_t(double t, double kappa) {
    return ep3_locus(omega_ep3_for_t(t, kappa), kappa).gamma;
}

std::string to_string(PhaseClass c) {
    switch (c) {
        case PhaseClass::Hermitian: return "Hermitian";
        case PhaseClass::ClassI: return "I";
        case PhaseClass::Ep2Line: return "EP2-line";
        case PhaseClass::ClassII: return "II";
        case PhaseClass::Ep3Line: return "EP3-line";
        case PhaseClass::ClassIII: return "III";
    }
    return "?";
}

PhaseClass classify_point(double gamma_over_kappa, double t_over_kappa) {
    if (gamma_over_kappa < 0.0)
        throw std::invalid_argument("classify_point: gamma must be non-negative");
    const double tol = 1e-9;
    if (gamma_over_kappa <= tol) return PhaseClass::Hermitian;
    const double g3 = gamma_ep3_for_t(t_over_kappa, 1.0);
    if (std::abs(gamma_over_kappa - g3) <= tol) return PhaseClass::Ep3Line;
    if (std::abs(gamma_over_kappa - t_over_kappa) <= tol) return PhaseClass::Ep2Line;
    if (gamma_over_kappa > g3) return PhaseClass::ClassIII;
    if (gamma_over_kappa > t_over_kappa) return PhaseClass::ClassII;
    return PhaseClass::ClassI;
}

EpPoint ep2_point(double omega, double t, double kappa) {
    Ep2Locus l = ep2_locus(omega, t, kappa);
    EpPoint p;
    p.order = 2;
    p.frequency = omega;
    p.location = {l.delta, l.gamma, t, kappa};
    p.spectator = cx(l.omega3, 0.0);
    return p;
}

EpPoint ep3_point(double omega, double kappa) {
    Ep3Locus l = ep3_locus(omega, kappa);
    EpPoint p;
    p.order = 3;
    p.frequency = omega;
    p.location = {l.delta, l.gamma, l.t, kappa};
    return p;
}

std::vector<EpPoint> ep2_points_at(double gamma, double t, double kappa) {
    if (gamma <= 0.0)
        throw std::invalid_argument("ep2_points_at: gamma must be positive");
    auto locus_gamma = [&](double w) { return ep2_locus(w, t, kappa).gamma; };
    std::vector<EpPoint> found;
    // Scan both locus branches: gamma(w) = +gamma (this gain assignment) and
    // gamma(w) = -gamma (the parity-mirrored assignment, same spectrum).
    for (double sign : {1.0, -1.0}) {
        const double target = sign * gamma;
        const int n = 8000;
        const double wmin = -40.0, wmax = 40.0;
        double prev_w = wmin, prev_f = locus_gamma(wmin) - target;
        for (int i = 1; i <= n; ++i) {
            double w = wmin + (wmax - wmin) * i / n;
            double f = locus_gamma(w) - target;
            if (prev_f == 0.0 || prev_f * f < 0.0) {
                double lo = prev_w, hi = w;
                for (int it = 0; it < 100; ++it) {
                    double mid = 0.5 * (lo + hi);
                    if ((locus_gamma(lo) - target) * (locus_gamma(mid) - target) <= 0.0)
                        hi = mid;
                    else
                        lo = mid;
                }
                double w_ep = 0.5 * (lo + hi);
                EpPoint p = ep2_point(w_ep, t, kappa);
                p.location.gamma = gamma;  // report the physical magnitude
                found.push_back(p);
            }
            prev_w = w;
            prev_f = f;
        }
    }
    std::sort(found.begin(), found.end(),
              [](const EpPoint& a, const EpPoint& b) { return a.location.delta < b.location.delta; });
    return found;
}

double phase_rigidity(const EigenSystem& es, int j) {
    return std::abs(dot(es.left[j], es.right[j]));
}

double fit_scaling_exponent(const EpPoint& ep, Param which, const std::vector<double>& epsilons) {
    if (epsilons.size() < 3)
        throw std::invalid_argument("fit_scaling_exponent: need at least 3 grid points");
    EigOptions opt;
    opt.coalesce_defective = false;  // the splitting itself is the signal
    std::vector<double> lx, ly, rigidity;
    for (double eps : epsilons) {
        if (eps <= 0.0)
            throw std::invalid_argument("fit_scaling_exponent: epsilons must be positive");
        SemiclassicalParams p = ep.location;
        switch (which) {
            case Param::delta: p.delta += eps; break;
            case Param::gamma: p.gamma += eps; break;
            case Param::t: p.t += eps; break;
            case Param::kappa: p.kappa += eps; break;
        }
        auto es = eig_full(build_dicke(p), opt);
        std::vector<double> r(es.values.size());
        for (size_t j = 0; j < r.size(); ++j) r[j] = phase_rigidity(es, static_cast<int>(j));
        std::sort(r.begin(), r.end());
        double mean = 0.0;
        for (int j = 0; j < ep.order; ++j) mean += r[j];
        mean /= ep.order;
        if (mean < 1e-300)
            throw std::runtime_error("fit_scaling_exponent: rigidity vanished over the whole grid");
        rigidity.push_back(mean);
        lx.push_back(std::log(eps));
        ly.push_back(std::log(mean));
    }
    // The rigidity must vary monotonically with the perturbation: bouncing
    // means the grid straddles structure (wrong EP or too coarse).
    double rmax = *std::max_element(rigidity.begin(), rigidity.end());
    const double slack = 1e-12 + 1e-6 * rmax;
    bool up_ok = true, down_ok = true;
    for (size_t i = 1; i < rigidity.size(); ++i) {
        double d = rigidity[i] - rigidity[i - 1];
        if (d < -slack) up_ok = false;
        if (d > slack) down_ok = false;
    }
    if (!up_ok && !down_ok)
        throw std::runtime_error(
            "fit_scaling_exponent: rigidity is not monotone across the grid; "
            "refine the grid or re-center on the exceptional point");
    const size_t n = lx.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

EncircleResult encircle(const EpPoint& ep, const LoopPath& loop, const SemiclassicalParams& base,
                        int n_loops) {
    if (loop.steps < 64) throw std::invalid_argument("encircle: need at least 64 steps per loop");
    if (n_loops < 1) throw std::invalid_argument("encircle: need at least one loop");

    const int total = loop.steps * n_loops;
    const double dir = loop.counterclockwise ? 1.0 : -1.0;
    const cx ep_delta(ep.location.delta, 0.0);
    std::vector<cx> deltas(total + 1);
    for (int k = 0; k <= total; ++k) {
        double theta = dir * 2.0 * kPi * k / loop.steps;
        deltas[k] = loop.center + loop.radius * std::exp(cx(0.0, theta));
        if (std::abs(deltas[k] - ep_delta) < 1e-3)
            throw std::invalid_argument("encircle: loop passes within 1e-3 of the EP");
    }

    EigOptions opt;
    opt.coalesce_defective = false;

    auto eig_at = [&](cx d) { return eig_full(build_dicke(base, d), opt); };

    EigenSystem start = eig_at(deltas[0]);
    const int n = static_cast<int>(start.values.size());

    // Strand labels come from the ordering at the base point. A PT-broken
    // conjugate pair has exactly equal real parts there, so the plain
    // (Re, Im) sort would hang on solver noise; group near-equal real parts
    // and put the gain branch (larger imaginary part) first inside a group.
    {
        double scale = 0.0;
        for (cx v : start.values) scale = std::max(scale, std::abs(v));
        const double tol = 1e-9 * std::max(scale, 1.0);
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int i, int j) {
            double dre = start.values[i].real() - start.values[j].real();
            if (std::abs(dre) > tol) return dre < 0.0;
            return start.values[i].imag() > start.values[j].imag();
        });
        EigenSystem relabeled;
        relabeled.values.resize(n);
        relabeled.right.resize(n);
        relabeled.left.resize(n);
        for (int j = 0; j < n; ++j) {
            relabeled.values[j] = start.values[order[j]];
            relabeled.right[j] = start.right[order[j]];
            relabeled.left[j] = start.left[order[j]];
        }
        start = std::move(relabeled);
    }
    EncircleResult res;
    res.deltas = deltas;
    res.strands.assign(n, std::vector<cx>(total + 1));
    res.geometric_phase.assign(n, 0.0);
    for (int j = 0; j < n; ++j) res.strands[j][0] = start.values[j];

    EigenSystem cur = start;
    for (int k = 1; k <= total; ++k) {
        EigenSystem next = eig_at(deltas[k]);
        std::vector<int> perm = match_to_previous(cur.values, next.values);
        EigenSystem al;
        al.values.resize(n);
        al.right.resize(n);
        al.left.resize(n);
        for (int j = 0; j < n; ++j) {
            al.values[j] = next.values[perm[j]];
            al.right[j] = next.right[perm[j]];
            al.left[j] = next.left[perm[j]];
        }
        for (int j = 0; j < n; ++j) {
            // Smooth gauge: rotate the new right vector onto the previous one,
            // then accumulate the biorthogonal connection angle. The ratio
            // cancels the left vector's own arbitrary phase.
            cx ov = hdot(cur.right[j], al.right[j]);
            if (std::abs(ov) > 0.0) {
                cx u = std::exp(cx(0.0, -std::arg(ov)));
                for (cx& z : al.right[j]) z *= u;
            }
            cx f = dot(cur.left[j], al.right[j]) / dot(cur.left[j], cur.right[j]);
            res.geometric_phase[j] += std::arg(f);
            res.strands[j][k] = al.values[j];
        }
        cur = std::move(al);
    }

    // Identify where each strand landed among the start eigenvalues and close
    // the Wilson line back onto the stored start frame.
    res.permutation = match_to_previous(cur.values, start.values);
    for (int j = 0; j < n; ++j) {
        cx f = dot(cur.left[j], start.right[res.permutation[j]]) / dot(cur.left[j], cur.right[j]);
        res.geometric_phase[j] += std::arg(f);
    }
    return res;
}

int ep_chirality(const EpPoint& ep, const LoopPath& loop) {
    // First confirm the loop actually encloses one EP2: the coalescing pair
    // must swap and its eigenvalue difference must wind by half a turn.
    EncircleResult res = encircle(ep, loop, ep.location, 1);
    int a = -1, b = -1;
    for (size_t j = 0; j < res.permutation.size(); ++j) {
        if (res.permutation[j] != static_cast<int>(j)) {
            if (a < 0)
                a = static_cast<int>(j);
            else
                b = static_cast<int>(j);
        }
    }
    if (a < 0 || b < 0)
        throw std::runtime_error("ep_chirality: no eigenvalue pair swaps; loop encloses no EP2");
    double winding = 0.0;
    for (size_t k = 1; k < res.strands[a].size(); ++k) {
        cx d_prev = res.strands[a][k - 1] - res.strands[b][k - 1];
        cx d_cur = res.strands[a][k] - res.strands[b][k];
        winding += std::arg(d_cur / d_prev);
    }
    winding /= 2.0 * kPi;
    if (std::abs(winding) < 0.25)
        throw std::runtime_error("ep_chirality: zero winding; loop encloses no EP2");

    // The handedness lives in the coalesced eigenvector. PT symmetry lets it
    // be gauged to (v1, v2, conj(v1)) with v2 real: the state is a real
    // even-sector vector plus +-i times the antisymmetric atom mode, and the
    // sign of that admixture is the rotation sense. Traversing the loop the
    // other way sees the opposite rotation.
    EigenSystem es = eig_full(build_dicke(ep.location));
    int idx = 0;
    if (!es.defects.empty()) {
        idx = es.defects[0].members[0];
    } else {
        double best = 2.0;
        for (size_t j = 0; j < es.values.size(); ++j) {
            double r = phase_rigidity(es, static_cast<int>(j));
            if (r < best) {
                best = r;
                idx = static_cast<int>(j);
            }
        }
    }
    CVec v = es.right[idx];
    if (std::abs(v[1]) < 1e-9)
        throw std::runtime_error("ep_chirality: coalesced state has no photonic admixture");
    cx u = std::exp(cx(0.0, -std::arg(v[1])));
    for (cx& z : v) z *= u;
    int handedness = v[0].imag() > 0.0 ? 1 : -1;
    return loop.counterclockwise ? handedness : -handedness;
}

SpectrumSweep spectrum_sweep(const SemiclassicalParams& base, const std::vector<double>& delta_grid) {
    SpectrumSweep sw;
    sw.delta = delta_grid;
    EigOptions opt;
    opt.coalesce_defective = false;
    std::vector<cx> prev;
    for (size_t i = 0; i < delta_grid.size(); ++i) {
        SemiclassicalParams p = base;
        p.delta = delta_grid[i];
        EigenSystem es = eig_full(build_dicke(p), opt);
        const int n = static_cast<int>(es.values.size());
        if (sw.bands.empty()) {
            sw.bands.assign(n, std::vector<cx>(delta_grid.size()));
            sw.photon_weight.assign(n, std::vector<double>(delta_grid.size()));
        }
        std::vector<int> perm(n);
        if (prev.empty())
            for (int j = 0; j < n; ++j) perm[j] = j;
        else
            perm = match_to_previous(prev, es.values);
        prev.resize(n);
        for (int j = 0; j < n; ++j) {
            prev[j] = es.values[perm[j]];
            sw.bands[j][i] = es.values[perm[j]];
            sw.photon_weight[j][i] = std::norm(es.right[perm[j]][1]);
        }
    }
    return sw;
}

}  // namespace nhd
