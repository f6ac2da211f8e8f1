#include <cmath>
#include <random>

#include "doctest.h"
#include "micropolar/errors.hpp"
#include "micropolar/nonlinear.hpp"

using namespace micropolar;

namespace {

double max_abs_diff(const PhysicalField& a, const PhysicalField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

SpectralField from_fn(const GridSpec& g, int comps, const std::function<void(const double*, double*)>& fn,
                      bool mean_zero = true) {
    SpectralField f = to_spectral(sample(g, comps, fn));
    f.mean_zero = mean_zero;
    return f;
}

}  // namespace

TEST_CASE("advection of trigonometric fields matches the hand derivative") {
    GridSpec g{2, 16};
    SpectralField u = from_fn(g, 3, [](const double* x, double* o) { o[0] = std::sin(x[1]); o[1] = 0; o[2] = 0; });
    SpectralField w = from_fn(g, 3, [](const double* x, double* o) {
        o[0] = std::cos(x[0]);
        o[1] = std::sin(x[1]);
        o[2] = 0;
    });
    PhysicalField got = to_physical(advect(u, w));
    PhysicalField want = sample(g, 3, [](const double* x, double* o) {
        o[0] = -std::sin(x[1]) * std::sin(x[0]);
        o[1] = 0;
        o[2] = 0;
    });
    CHECK(max_abs_diff(got, want) < 1e-13);
}

TEST_CASE("transport by a solenoidal field is skew") {
    GridSpec g{3, 8};
    std::mt19937_64 rng(4);
    RandomFieldOptions sol;
    sol.solenoidal = true;
    sol.max_shell = 2;  // products stay inside the dealias cube
    RandomFieldOptions lo;
    lo.max_shell = 1;
    for (int i = 0; i < 3; ++i) {
        SpectralField u = random_field(g, 3, rng, sol);
        u.zero_mean();
        SpectralField w = random_field(g, 3, rng, lo);
        const double s = inner(advect(u, w), w);
        CHECK(std::abs(s) < 1e-12 * (1.0 + l2_coefficient_norm(u) * l2_coefficient_norm(w) * l2_coefficient_norm(w)));
    }
}

TEST_CASE("dissipation function matches the closed form for a shear and a spinning mode") {
    GridSpec g{2, 16};
    CouplingParams p;
    p.mu = 0.7;
    p.mu_r = 0.3;
    SpectralField u = from_fn(g, 3, [](const double* x, double* o) { o[0] = std::sin(x[1]); o[1] = 0; o[2] = 0; });
    SpectralField om = from_fn(g, 3, [](const double* x, double* o) { o[0] = 0; o[1] = 0; o[2] = std::cos(x[0]); });
    PhysicalField got = dissipation_phi_physical(u, u, om, om, p);
    PhysicalField want = sample(g, 1, [&](const double* x, double* o) {
        const double cy = std::cos(x[1]), cx = std::cos(x[0]), sx = std::sin(x[0]);
        o[0] = p.mu * cy * cy + 4.0 * p.mu_r * (0.5 * cy + cx) * (0.5 * cy + cx) + (p.ca + p.cd) * sx * sx;
    });
    CHECK(max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("dissipation function is nonnegative for admissible coefficients") {
    GridSpec g{3, 8};
    std::mt19937_64 rng(9);
    RandomFieldOptions sol;
    sol.solenoidal = true;
    for (int i = 0; i < 4; ++i) {
        SpectralField u = random_field(g, 3, rng, sol);
        u.zero_mean();
        SpectralField om = random_field(g, 3, rng);
        om.zero_mean();
        PhysicalField phi = dissipation_phi_physical(u, u, om, om, CouplingParams{});
        double mn = 0.0;
        for (double v : phi.values) mn = std::min(mn, v);
        CHECK(mn > -1e-12);
    }
}

TEST_CASE("forcing evaluation and Lipschitz constants") {
    ForcingSpec lin{ForcingKind::Linear, {0.0, 3.0, 4.0}, 1.0};
    CHECK(lin.lipschitz() == doctest::Approx(5.0));
    CHECK(lin.evaluate(2.0)[2] == doctest::Approx(8.0));
    ForcingSpec sat{ForcingKind::SaturatingTanh, {1.0, 0.0, 0.0}, 2.0};
    CHECK(sat.lipschitz() == doctest::Approx(2.0));
    CHECK(sat.evaluate(100.0)[0] == doctest::Approx(1.0));
    CHECK(ForcingSpec{}.lipschitz() == 0.0);
    ForcingSpec bad{ForcingKind::SaturatingTanh, {1.0, 0.0, 0.0}, 0.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(forcing_kind_from_string("cubic"), ConfigError);
}

TEST_CASE("right-hand side of the linear part") {
    GridSpec g{2, 16};
    CouplingParams p;
    p.mu_r = 0.25;
    SpectralField u = from_fn(g, 3, [](const double* x, double* o) { o[0] = std::sin(x[1]); o[1] = 0; o[2] = 0; });
    SpectralField om = from_fn(g, 3, [](const double* x, double* o) { o[0] = 0; o[1] = 0; o[2] = std::cos(x[0]); });
    SpectralField th(g, 1, false);
    RhsOptions opt;
    opt.nonlinear = false;
    Rhs r = assemble_rhs(u, om, th, p, ForcingSpec{}, ForcingSpec{}, opt);
    // rot ω = (0, sin x, 0) is solenoidal, rot u = (0, 0, -cos y)
    PhysicalField F = to_physical(r.F), G = to_physical(r.G);
    PhysicalField Fw = sample(g, 3, [&](const double* x, double* o) {
        o[0] = 0;
        o[1] = 2.0 * p.mu_r * std::sin(x[0]);
        o[2] = 0;
    });
    PhysicalField Gw = sample(g, 3, [&](const double* x, double* o) {
        o[0] = 0;
        o[1] = 0;
        o[2] = -2.0 * p.mu_r * std::cos(x[1]) - 4.0 * p.mu_r * std::cos(x[0]);
    });
    CHECK(max_abs_diff(F, Fw) < 1e-13);
    CHECK(max_abs_diff(G, Gw) < 1e-13);
    CHECK(l2_coefficient_norm(r.H) == 0.0);
}

TEST_CASE("right-hand side rejects malformed input") {
    GridSpec g{2, 16};
    SpectralField grad = from_fn(g, 3, [](const double* x, double* o) { o[0] = std::cos(x[0]); o[1] = 0; o[2] = 0; });
    SpectralField om(g, 3), th(g, 1, false);
    CHECK_THROWS_AS(assemble_rhs(grad, om, th, CouplingParams{}, ForcingSpec{}, ForcingSpec{}), PreconditionError);
    CHECK_THROWS_AS(assemble_rhs(th, om, th, CouplingParams{}, ForcingSpec{}, ForcingSpec{}), TypeError);
}

TEST_CASE("heat source carries the 1/c_v factor") {
    GridSpec g{2, 16};
    CouplingParams p;
    SpectralField u = from_fn(g, 3, [](const double* x, double* o) { o[0] = std::sin(x[1]); o[1] = 0; o[2] = 0; });
    SpectralField om(g, 3), th(g, 1, false);
    Rhs a = assemble_rhs(u, om, th, p, ForcingSpec{}, ForcingSpec{});
    p.cv = 2.0;
    Rhs b = assemble_rhs(u, om, th, p, ForcingSpec{}, ForcingSpec{});
    CHECK(l2_coefficient_norm(a.H) == doctest::Approx(2.0 * l2_coefficient_norm(b.H)));
}
