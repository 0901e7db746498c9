#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "nhdicke/semiclassical.hpp"

using nhd::cx;
using nhd::CMat;
using nhd::SemiclassicalParams;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> sorted_real(const std::vector<cx>& v) {
    std::vector<double> r;
    for (cx z : v) r.push_back(z.real());
    std::sort(r.begin(), r.end());
    return r;
}

// Discriminant of the monic cubic x^3 + b x^2 + c x + d: positive iff three
// distinct real roots, zero at a degeneracy.
double cubic_discriminant(double b, double c, double d) {
    return 18.0 * b * c * d - 4.0 * b * b * b * d + b * b * c * c - 4.0 * c * c * c -
           27.0 * d * d;
}

}  // namespace

TEST_CASE("decoupled atoms and photon give the bare spectrum {-1, 0, 1}") {
    auto es = nhd::eig_full(nhd::build_dicke({0.0, 0.0, 0.0, 1.0}));
    CHECK(std::abs(es.values[0] - cx(-1.0)) < 1e-10);
    CHECK(std::abs(es.values[1] - cx(0.0)) < 1e-10);
    CHECK(std::abs(es.values[2] - cx(1.0)) < 1e-10);
}

TEST_CASE("Hermitian diabolic point: linear crossing at delta = t - kappa^2/(2t)") {
    // The gamma -> 0 limit of the EP2 locus: omega_DP = -kappa^2/(2t).
    const double t = 0.5, kappa = 1.0;
    const double delta_dp = t - kappa * kappa / (2.0 * t);
    auto es = nhd::eig_full(nhd::build_dicke({delta_dp, 0.0, t, kappa}));
    // Double eigenvalue at omega_DP = -1, simple one at +1; orthogonal
    // eigenvectors throughout (a crossing, not an EP).
    CHECK(std::abs(es.values[0] - cx(-1.0)) < 1e-8);
    CHECK(std::abs(es.values[1] - cx(-1.0)) < 1e-8);
    CHECK(std::abs(es.values[2] - cx(1.0)) < 1e-8);
    CHECK(!es.defective());
    // Linear splitting: the gap grows proportionally to the detuning offset.
    auto gap = [&](double d) {
        auto v = sorted_real(nhd::eig_values(nhd::build_dicke({delta_dp + d, 0.0, t, kappa})));
        return v[1] - v[0];
    };
    double g1 = gap(1e-4), g2 = gap(2e-4);
    CHECK(g2 / g1 == doctest::Approx(2.0).epsilon(1e-2));
}

TEST_CASE("EP2 locus formulas at the closed-form anchor points") {
    auto l = nhd::ep2_locus(0.0, 0.7, 1.0);
    CHECK(l.delta == doctest::Approx(0.7));
    CHECK(l.gamma == doctest::Approx(1.0));
    CHECK(l.omega3 == doctest::Approx(1.4));

    l = nhd::ep2_locus(0.7, 0.7, 1.0);
    CHECK(l.delta == doctest::Approx(0.7));
    CHECK(l.gamma == doctest::Approx(std::sqrt(1.0 + 0.49)));
    CHECK(l.omega3 == doctest::Approx(0.0));
}

TEST_CASE("EP3 locus formulas at closed-form anchor points") {
    auto l = nhd::ep3_locus(0.0, 1.0);
    CHECK(l.delta == doctest::Approx(0.0));
    CHECK(l.gamma == doctest::Approx(1.0));
    CHECK(l.t == doctest::Approx(0.0));

    l = nhd::ep3_locus(1.0, 1.0);
    CHECK(l.delta == doctest::Approx(1.5));
    CHECK(l.gamma == doctest::Approx(2.0 * std::sqrt(2.0)));
    CHECK(l.t == doctest::Approx(2.5));
}

TEST_CASE("matrices built on the EP2 locus are defective with the predicted pair") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uw(-2.0, 2.0), ut(0.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        double w = uw(rng), t = ut(rng);
        auto l = nhd::ep2_locus(w, t, 1.0);
        auto es = nhd::eig_full(nhd::build_dicke({l.delta, l.gamma, t, 1.0}));
        int near_w = 0, near_w3 = 0;
        for (cx v : es.values) {
            if (std::abs(v - cx(w)) < 1e-7) ++near_w;
            if (std::abs(v - cx(l.omega3)) < 1e-7) ++near_w3;
        }
        // Exclude the EP3 tangency where the spectator joins the pair.
        if (std::abs(w - l.omega3) > 1e-2) {
            CHECK(near_w == 2);
            CHECK(near_w3 == 1);
            CHECK(es.defective());
        }
    }
}

TEST_CASE("the EP3 curve is the locus where the EP2 pair meets the spectator") {
    for (double w : {-1.3, -0.4, 0.0, 0.31, 0.9, 1.7}) {
        double t = 1.5 * w + w * w * w;
        auto l2 = nhd::ep2_locus(w, t, 1.0);
        auto l3 = nhd::ep3_locus(w, 1.0);
        CHECK(std::abs(l2.delta - l3.delta) < 1e-10);
        CHECK(std::abs(l2.gamma - l3.gamma) < 1e-10);
        CHECK(std::abs(l2.omega3 - w) < 1e-10);
        CHECK(std::abs(l3.t - t) < 1e-10);
    }
}

TEST_CASE("EP3 parameters produce a numerically triple root") {
    for (double w : {-0.8, 0.313, 1.1}) {
        auto l = nhd::ep3_locus(w, 1.0);
        SemiclassicalParams p{l.delta, l.gamma, l.t, 1.0};
        // Characteristic cubic has a vanishing discriminant...
        auto poly = nhd::dicke_char_poly(p, p.delta);
        double disc = cubic_discriminant(poly.c[2].real(), poly.c[1].real(), poly.c[0].real());
        CHECK(std::abs(disc) < 1e-8);
        // ...and the solver sees all three eigenvalues at w.
        auto es = nhd::eig_full(nhd::build_dicke(p));
        for (cx v : es.values) CHECK(std::abs(v - cx(w)) < 1e-6);
        CHECK(es.defective());
    }
}

TEST_CASE("EP3 frequency inversion matches the known t = 0.5 apex") {
    double w = nhd::omega_ep3_for_t(0.5, 1.0);
    CHECK(w == doctest::Approx(0.3129084094792334).epsilon(1e-10));
    auto l = nhd::ep3_locus(w, 1.0);
    CHECK(l.delta == doctest::Approx(0.46936261421885006).epsilon(1e-9));
    CHECK(l.gamma == doctest::Approx(1.1504059086001417).epsilon(1e-9));
}

TEST_CASE("phase classification of the (gamma, t) plane") {
    using PC = nhd::PhaseClass;
    CHECK(nhd::classify_point(0.0, 0.5) == PC::Hermitian);
    CHECK(nhd::classify_point(0.2, 0.5) == PC::ClassI);
    CHECK(nhd::classify_point(0.5, 0.5) == PC::Ep2Line);
    CHECK(nhd::classify_point(0.8, 0.5) == PC::ClassII);
    CHECK(nhd::classify_point(nhd::gamma_ep3_for_t(0.5, 1.0), 0.5) == PC::Ep3Line);
    CHECK(nhd::classify_point(1.5, 0.5) == PC::ClassIII);
    CHECK_THROWS_AS(nhd::classify_point(-0.1, 0.5), std::invalid_argument);
}

TEST_CASE("PT symmetry: real spectrum exactly where the cubic discriminant is positive") {
    for (double gamma : {0.2, 0.5, 0.9}) {
        const double t = 0.5;
        int unbroken = 0, broken = 0;
        for (int i = 0; i <= 80; ++i) {
            double delta = -2.0 + 4.0 * i / 80.0;
            SemiclassicalParams p{delta, gamma, t, 1.0};
            auto poly = nhd::dicke_char_poly(p, delta);
            double disc =
                cubic_discriminant(poly.c[2].real(), poly.c[1].real(), poly.c[0].real());
            if (std::abs(disc) < 1e-4) continue;  // too close to a boundary to call
            auto vals = nhd::eig_values(nhd::build_dicke(p));
            double max_im = 0.0;
            for (cx v : vals) max_im = std::max(max_im, std::abs(v.imag()));
            if (disc > 0.0) {
                CHECK(max_im < 1e-8);
                ++unbroken;
            } else {
                CHECK(max_im > 1e-4);
                ++broken;
            }
        }
        CHECK(unbroken > 0);
        CHECK(broken > 0);
    }
}

TEST_CASE("rigidity is 1 for Hermitian parameters and in [0,1] always") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int trial = 0; trial < 30; ++trial) {
        SemiclassicalParams p{u(rng), 0.0, u(rng), 1.0};
        auto es = nhd::eig_full(nhd::build_dicke(p));
        for (int j = 0; j < 3; ++j)
            CHECK(nhd::phase_rigidity(es, j) == doctest::Approx(1.0).epsilon(1e-9));
        p.gamma = std::abs(u(rng)) + 0.05;
        es = nhd::eig_full(nhd::build_dicke(p));
        for (int j = 0; j < 3; ++j) {
            double r = nhd::phase_rigidity(es, j);
            CHECK(r >= 0.0);
            CHECK(r <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("rigidity collapses for all states at an EP3, for the pair at an EP2") {
    auto p5 = nhd::ep3_point(nhd::omega_ep3_for_t(0.5, 1.0), 1.0);
    auto es = nhd::eig_full(nhd::build_dicke(p5.location));
    REQUIRE(es.defective());
    for (int j = 0; j < 3; ++j) CHECK(nhd::phase_rigidity(es, j) < 1e-4);

    // EP2 with gamma = t = 0.5 sits at omega ~ -0.392.
    auto ep2s = nhd::ep2_points_at(0.5, 0.5, 1.0);
    REQUIRE(ep2s.size() >= 1);
    auto& ep = ep2s.front();
    CHECK(ep.frequency.real() == doctest::Approx(-0.39162171402437446).epsilon(1e-8));
    CHECK(ep.location.delta == doctest::Approx(0.2907060898036449).epsilon(1e-8));
    es = nhd::eig_full(nhd::build_dicke(ep.location));
    REQUIRE(es.defective());
    std::vector<double> r = {nhd::phase_rigidity(es, 0), nhd::phase_rigidity(es, 1),
                             nhd::phase_rigidity(es, 2)};
    std::sort(r.begin(), r.end());
    CHECK(r[0] < 1e-4);
    CHECK(r[1] < 1e-4);
    CHECK(r[2] > 0.1);
}

TEST_CASE("rigidity scaling exponents: 2/3 at an EP3, 1/2 at an EP2, flat elsewhere") {
    std::vector<double> eps;
    for (int i = 0; i < 11; ++i) eps.push_back(1e-8 * std::pow(10.0, 0.5 * i));

    auto p5 = nhd::ep3_point(nhd::omega_ep3_for_t(0.5, 1.0), 1.0);
    for (auto which : {nhd::Param::delta, nhd::Param::gamma, nhd::Param::t, nhd::Param::kappa}) {
        double slope = nhd::fit_scaling_exponent(p5, which, eps);
        CHECK(slope == doctest::Approx(2.0 / 3.0).epsilon(0.075));
    }

    auto ep2s = nhd::ep2_points_at(0.5, 0.5, 1.0);
    REQUIRE(!ep2s.empty());
    for (auto which : {nhd::Param::delta, nhd::Param::gamma, nhd::Param::t, nhd::Param::kappa}) {
        double slope = nhd::fit_scaling_exponent(ep2s.front(), which, eps);
        CHECK(slope == doctest::Approx(0.5).epsilon(0.1));
    }

    // A regular point reports an essentially flat exponent.
    nhd::EpPoint regular;
    regular.order = 2;
    regular.location = {2.5, 0.2, 0.5, 1.0};
    double slope = nhd::fit_scaling_exponent(regular, nhd::Param::delta, eps);
    CHECK(std::abs(slope) < 0.05);
}

TEST_CASE("encircling an EP3 cycles the labels and closes after three loops with 2*pi") {
    auto p5 = nhd::ep3_point(nhd::omega_ep3_for_t(0.5, 1.0), 1.0);
    nhd::LoopPath loop{cx(p5.location.delta, 0.0), 0.1, 200, true};

    // Counterclockwise, strands labeled 0,1,2 at the base point: the braid
    // sends 0 -> 2, 1 -> 0, 2 -> 1 (the image notation reads "312").
    auto one = nhd::encircle(p5, loop, p5.location, 1);
    CHECK(one.permutation == std::vector<int>{2, 0, 1});
    // Individual open-strand phases are gauge dependent; their sum is one
    // full turn per revolution.
    double total = 0.0;
    for (double ph : one.geometric_phase) total += ph;
    CHECK(std::abs(total - 2.0 * kPi) < 1e-2);

    auto three = nhd::encircle(p5, loop, p5.location, 3);
    CHECK(three.permutation == std::vector<int>{0, 1, 2});
    for (double ph : three.geometric_phase)
        CHECK(std::abs(std::abs(ph) - 2.0 * kPi) < 1e-2);
    // Group law: three applications of the one-loop permutation.
    std::vector<int> composed(3);
    for (int j = 0; j < 3; ++j) composed[j] = one.permutation[one.permutation[one.permutation[j]]];
    CHECK(composed == three.permutation);
}

TEST_CASE("encircling an EP2 swaps the pair and accumulates pi per loop") {
    auto ep2s = nhd::ep2_points_at(0.5, 0.5, 1.0);
    REQUIRE(!ep2s.empty());
    auto ep = ep2s.front();
    nhd::LoopPath loop{cx(ep.location.delta, 0.0), 0.05, 200, true};

    auto one = nhd::encircle(ep, loop, ep.location, 1);
    int swapped = 0;
    for (int j = 0; j < 3; ++j)
        if (one.permutation[j] != j) ++swapped;
    CHECK(swapped == 2);

    // Closing the exchange cycle (two loops) returns each swapped state with
    // the sign flip of the square-root branch: geometric phase pi. Four loops
    // would be needed to return with phase 2*pi = 0.
    auto two = nhd::encircle(ep, loop, ep.location, 2);
    CHECK(two.permutation == std::vector<int>{0, 1, 2});
    std::vector<double> mags;
    for (double ph : two.geometric_phase) mags.push_back(std::abs(ph));
    std::sort(mags.begin(), mags.end());
    CHECK(mags[0] < 1e-2);  // spectator untouched
    CHECK(std::abs(mags[1] - kPi) < 1e-2);
    CHECK(std::abs(mags[2] - kPi) < 1e-2);
}

TEST_CASE("a loop enclosing no EP returns identity and zero phase") {
    nhd::EpPoint ep;
    ep.location = {2.5, 0.2, 0.5, 1.0};
    nhd::LoopPath loop{cx(2.5, 0.0), 0.05, 128, true};
    auto res = nhd::encircle(ep, loop, ep.location, 1);
    CHECK(res.permutation == std::vector<int>{0, 1, 2});
    for (double ph : res.geometric_phase) CHECK(std::abs(ph) < 1e-2);
}

TEST_CASE("loops grazing the EP are rejected") {
    auto p5 = nhd::ep3_point(nhd::omega_ep3_for_t(0.5, 1.0), 1.0);
    nhd::LoopPath loop{cx(p5.location.delta, 0.0), 5e-4, 128, true};
    CHECK_THROWS_AS(nhd::encircle(p5, loop, p5.location, 1), std::invalid_argument);
}

TEST_CASE("chirality: opposite for the class-I EP2 pair, equal in class II, flips with direction") {
    auto class1 = nhd::ep2_points_at(0.2, 0.5, 1.0);
    REQUIRE(class1.size() == 2);
    nhd::LoopPath l0{cx(class1[0].location.delta, 0.0), 0.04, 200, true};
    nhd::LoopPath l1{cx(class1[1].location.delta, 0.0), 0.04, 200, true};
    int c0 = nhd::ep_chirality(class1[0], l0);
    int c1 = nhd::ep_chirality(class1[1], l1);
    CHECK(c0 * c1 == -1);

    auto class2 = nhd::ep2_points_at(0.8, 0.5, 1.0);
    REQUIRE(class2.size() == 2);
    nhd::LoopPath m0{cx(class2[0].location.delta, 0.0), 0.04, 200, true};
    nhd::LoopPath m1{cx(class2[1].location.delta, 0.0), 0.04, 200, true};
    CHECK(nhd::ep_chirality(class2[0], m0) == nhd::ep_chirality(class2[1], m1));

    nhd::LoopPath rev = l0;
    rev.counterclockwise = false;
    CHECK(nhd::ep_chirality(class1[0], rev) == -c0);

    // A loop away from any EP has no swap to measure.
    nhd::EpPoint off;
    off.location = {2.5, 0.2, 0.5, 1.0};
    nhd::LoopPath far_loop{cx(2.5, 0.0), 0.05, 128, true};
    CHECK_THROWS_AS(nhd::ep_chirality(off, far_loop), std::runtime_error);
}

TEST_CASE("spectrum sweep: Hermitian crossing, PT-broken pair, photonic middle band") {
    // gamma = 0: all bands real, with the diabolic crossing at -0.5.
    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(-1.5 + 2.0 * i / 200.0);
    auto sw = nhd::spectrum_sweep({0.0, 0.0, 0.5, 1.0}, grid);
    double min_gap = 1e30;
    double argmin = 0.0;
    for (size_t i = 0; i < grid.size(); ++i) {
        for (int a = 0; a < 3; ++a) {
            CHECK(std::abs(sw.bands[a][i].imag()) < 1e-9);
            for (int b = a + 1; b < 3; ++b) {
                double g = std::abs(sw.bands[a][i] - sw.bands[b][i]);
                if (g < min_gap) {
                    min_gap = g;
                    argmin = grid[i];
                }
            }
        }
    }
    CHECK(min_gap < 1e-8);
    CHECK(argmin == doctest::Approx(-0.5).epsilon(1e-9));

    // Class III: the broken pair keeps equal real parts while imaginary parts split.
    auto es = nhd::eig_full(nhd::build_dicke({0.47, 1.5, 0.5, 1.0}));
    int found_pair = 0;
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            if (std::abs(es.values[a].real() - es.values[b].real()) < 1e-9 &&
                std::abs(es.values[a].imag() - es.values[b].imag()) > 0.2)
                ++found_pair;
    CHECK(found_pair == 1);

    // Weak coupling: the middle band is almost purely photonic.
    std::vector<double> narrow;
    for (int i = 0; i <= 60; ++i) narrow.push_back(-0.3 + 0.6 * i / 60.0);
    sw = nhd::spectrum_sweep({0.0, 0.2, 0.5, 1e-3}, narrow);
    for (size_t i = 0; i < narrow.size(); ++i) {
        std::vector<std::pair<double, int>> by_re;
        for (int b = 0; b < 3; ++b) by_re.push_back({sw.bands[b][i].real(), b});
        std::sort(by_re.begin(), by_re.end());
        CHECK(sw.photon_weight[by_re[1].second][i] > 0.999);
    }
}
