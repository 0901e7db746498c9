#include "nhdicke/dynamics.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace nhd {
namespace {

constexpr cx kI{0.0, 1.0};

}  // namespace

double probability_norm(const AmplitudeState& s) {
    return std::norm(s.c1) + std::norm(s.cp) + std::norm(s.c2);
}

AmplitudeState hermitian_analytic(const AmplitudeState& initial, double delta,
                                  double kappa, double T) {
    if (!(kappa > 0.0))
        throw std::invalid_argument("hermitian_analytic: kappa must be positive");
    const double omega = std::sqrt(delta * delta + 4.0 * kappa * kappa);
    const cx x1 = kI * 0.5 * (omega - delta);
    const cx x2 = -kI * 0.5 * (omega + delta);
    const cx x3 = -kI * delta;
    const cx sum12 = initial.c1 + initial.c2;
    const cx p = ((omega - delta) * sum12 -
                  2.0 * std::sqrt(2.0) * kappa * initial.cp) /
                 (4.0 * omega);
    const cx q = ((omega + delta) * sum12 +
                  2.0 * std::sqrt(2.0) * kappa * initial.cp) /
                 (4.0 * omega);
    const cx r = 0.5 * (initial.c2 - initial.c1);

    const cx e1 = std::exp(x1 * T), e2 = std::exp(x2 * T), e3 = std::exp(x3 * T);
    AmplitudeState out;
    out.c1 = p * e1 + q * e2 - r * e3;
    out.cp = -std::sqrt(2.0) * kI / kappa * (p * x2 * e1 + q * x1 * e2);
    out.c2 = p * e1 + q * e2 + r * e3;
    out.time = initial.time + T;
    return out;
}

LinearTrajectory evolve_linear(const CMat& h, const AmplitudeState& initial,
                               double dt, double T) {
    if (h.dim() != 3)
        throw std::invalid_argument("evolve_linear: expects the 3x3 model matrix");
    if (!(dt > 0.0) || T == 0.0)
        throw std::invalid_argument("evolve_linear: dt must be positive, T nonzero");

    const long long n = std::max(1LL, std::llround(std::abs(T) / dt));
    const double step = T / static_cast<double>(n);

    auto deriv = [&h](const std::array<cx, 3>& y) {
        std::array<cx, 3> d{};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) d[r] += -kI * h(r, c) * y[c];
        return d;
    };

    std::array<cx, 3> y{initial.c1, initial.cp, initial.c2};
    LinearTrajectory traj;
    traj.states.reserve(n + 1);
    auto record = [&](double elapsed) {
        traj.states.push_back(
            {y[0], y[1], y[2], initial.time + elapsed});
    };
    record(0.0);
    for (long long k = 1; k <= n; ++k) {
        const auto k1 = deriv(y);
        std::array<cx, 3> tmp;
        for (int i = 0; i < 3; ++i) tmp[i] = y[i] + 0.5 * step * k1[i];
        const auto k2 = deriv(tmp);
        for (int i = 0; i < 3; ++i) tmp[i] = y[i] + 0.5 * step * k2[i];
        const auto k3 = deriv(tmp);
        for (int i = 0; i < 3; ++i) tmp[i] = y[i] + step * k3[i];
        const auto k4 = deriv(tmp);
        for (int i = 0; i < 3; ++i)
            y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        record(step * static_cast<double>(k));
        bool overflow = false;
        for (const cx& z : y)
            if (!(std::abs(z) <= 1e6)) overflow = true;
        if (overflow) {
            traj.diverged = true;
            break;
        }
    }
    return traj;
}

std::vector<double> norm_history(const LinearTrajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.states.size());
    for (const AmplitudeState& s : traj.states) out.push_back(probability_norm(s));
    return out;
}

}  // namespace nhd
