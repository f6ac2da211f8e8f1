#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "micropolar/errors.hpp"
#include "micropolar/mild_solver.hpp"

using namespace micropolar;

namespace {

ProblemSpec half_order_problem(double mu_r = 0.25) {
    ProblemSpec prob;
    prob.params = CouplingParams::with_mu_r(mu_r);
    ExponentConfig base;
    base.p = base.q = base.r = 2.0;
    base.alpha0 = base.beta0 = 0.5;
    base.gamma0 = 0.0;
    SelectionResult s = select_intermediate(base);
    REQUIRE(s.feasible);
    prob.exponents = s.config;
    set_default_rates(prob.exponents, 1.0);
    return prob;
}

// Simpson's rule on [a, b] with n (even) panels.
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// ∫_0^1 s^{x-1}(1-s)^{y-1} ds with the endpoint singularities removed by
// the substitutions s = v^{1/x} on [0, 1/2] and 1 - s = v^{1/y} on [1/2, 1].
double beta_quadrature(double x, double y) {
    auto left = [&](double v) { return std::pow(1.0 - std::pow(v, 1.0 / x), y - 1.0) / x; };
    auto right = [&](double v) { return std::pow(1.0 - std::pow(v, 1.0 / y), x - 1.0) / y; };
    return simpson(left, 0.0, std::pow(0.5, x), 20000) + simpson(right, 0.0, std::pow(0.5, y), 20000);
}

double max_abs(const SpectralField& f) {
    double m = 0.0;
    for (const auto& c : f.coeffs) m = std::max(m, std::abs(c));
    return m;
}

double max_abs_diff(const SpectralField& a, const SpectralField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) m = std::max(m, std::abs(a.coeffs[i] - b.coeffs[i]));
    return m;
}

struct LinearCase {
    GridSpec g{2, 16};
    std::array<int, 3> k{1, 1, 0};
    ProblemSpec prob = half_order_problem();
    SpectralField u0, w0, th0;

    LinearCase() {
        prob.f = ForcingSpec{ForcingKind::Linear, {0.3, -0.2, 0.1}, 1.0};
        prob.g = ForcingSpec{ForcingKind::Linear, {0.0, 0.1, 0.2}, 1.0};
        u0 = single_mode(g, 3, k, {-0.05, 0.05, 0.02});
        w0 = single_mode(g, 3, k, {0.02, -0.01, 0.03});
        th0 = single_mode(g, 1, k, {0.05, 0.0, 0.0});
        th0.mean_zero = false;
    }

    // Linear generator acting on (û, ω̂, θ̂) at wavevector k.
    Eigen::Matrix<std::complex<double>, 7, 7> generator() const {
        using C = std::complex<double>;
        const CouplingParams& p = prob.params;
        Eigen::Vector3d kv(k[0], k[1], k[2]);
        const double k2 = kv.squaredNorm();
        Eigen::Matrix3d kk = kv * kv.transpose() / k2;
        Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - kk;
        Eigen::Matrix3cd cross;
        cross << 0, -kv.z(), kv.y(), kv.z(), 0, -kv.x(), -kv.y(), kv.x(), 0;
        cross *= C(0, 1);
        Eigen::Matrix<C, 7, 7> M = Eigen::Matrix<C, 7, 7>::Zero();
        M.block<3, 3>(0, 0) = -k2 * Eigen::Matrix3cd::Identity();
        M.block<3, 3>(0, 3) = 2.0 * p.mu_r * P.cast<C>() * cross;
        Eigen::Vector3d cf(prob.f.c[0], prob.f.c[1], prob.f.c[2]);
        M.block<3, 1>(0, 6) = (P * cf).cast<C>();
        Eigen::Matrix3d gam = p.gamma_transverse() * k2 * P + p.gamma_longitudinal() * k2 * kk;
        M.block<3, 3>(3, 3) = -(gam + 4.0 * p.mu_r * Eigen::Matrix3d::Identity()).cast<C>();
        M.block<3, 3>(3, 0) = 2.0 * p.mu_r * cross;
        M.block<3, 1>(3, 6) = Eigen::Vector3d(prob.g.c[0], prob.g.c[1], prob.g.c[2]).cast<C>();
        M(6, 6) = -k2;
        return M;
    }

    Eigen::Matrix<std::complex<double>, 7, 1> coeffs_at(const SpectralField& u, const SpectralField& w,
                                                        const SpectralField& th) const {
        const std::size_t m = mode_index(g, k);
        Eigen::Matrix<std::complex<double>, 7, 1> x;
        for (int c = 0; c < 3; ++c) {
            x(c) = u.comp(c)[m];
            x(3 + c) = w.comp(c)[m];
        }
        x(6) = th.comp(0)[m];
        return x;
    }

    double error(int npu, double T) const {
        PicardConfig cfg;
        cfg.T = T;
        cfg.nodes_per_unit = npu;
        cfg.linear_only = true;
        cfg.tol = 1e-13;
        cfg.m_max = 60;
        PicardResult r = picard_solve(u0, w0, th0, prob, cfg);
        REQUIRE(r.report.converged);
        const Eigen::Matrix<std::complex<double>, 7, 7> E = (generator() * T).exp();
        const Eigen::Matrix<std::complex<double>, 7, 1> exact = E * coeffs_at(u0, w0, th0);
        const Eigen::Matrix<std::complex<double>, 7, 1> got = coeffs_at(r.state.u.back(), r.state.w.back(), r.state.th.back());
        return (got - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff();
    }
};

}  // namespace

TEST_CASE("beta function special values and quadrature oracle") {
    CHECK(beta_function(1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(beta_function(0.5, 0.5) == doctest::Approx(M_PI).epsilon(1e-13));
    CHECK(beta_function(2.0, 3.0) == doctest::Approx(1.0 / 12.0).epsilon(1e-13));
    const double q = beta_quadrature(0.3, 0.8);
    CHECK(std::abs(beta_function(0.3, 0.8) - q) <= 1e-10 * q);
    CHECK_THROWS_AS(beta_function(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(beta_function(1.0, -0.5), DomainError);
}

TEST_CASE("exponential quadrature weights are continuous across the series switch") {
    CHECK(phi1(0.0) == doctest::Approx(1.0));
    CHECK(psi2(0.0) == doctest::Approx(0.5));
    for (double z : {0.5, 1.0, 3.0, 40.0}) {
        CHECK(phi1(z) == doctest::Approx(-std::expm1(-z) / z).epsilon(1e-14));
        CHECK(psi2(z) == doctest::Approx((1.0 - std::exp(-z) * (1.0 + z)) / (z * z)).epsilon(1e-12));
    }
    // both derivatives are below one in magnitude near the switch
    const double e = 1e-15;
    CHECK(std::abs(phi1(0.1 - e) - phi1(0.1 + e)) < 1e-14);
    CHECK(std::abs(psi2(0.1 - e) - psi2(0.1 + e)) < 1e-14);
}

TEST_CASE("Duhamel weights are exact for constant and linear forcing") {
    GridSpec g{2, 16};
    OperatorSymbol B = laplace_operator(g);
    PicardConfig cfg;
    cfg.T = 0.8;
    cfg.nodes_per_unit = 10;
    const auto times = time_grid(cfg);
    SpectralField n = single_mode(g, 1, {2, 1, 0}, {1.0, 0.0, 0.0});
    const double mu = 5.0;
    std::vector<SpectralField> constant(times.size(), n), linear;
    for (double t : times) linear.push_back(t * n);
    const std::size_t j = times.size() - 1;
    const double t = times[j];
    SpectralField ic = duhamel_integral(B, times, constant, j);
    SpectralField il = duhamel_integral(B, times, linear, j);
    CHECK(max_abs_diff(ic, ((1.0 - std::exp(-t * mu)) / mu) * n) < 1e-14);
    CHECK(max_abs_diff(il, (t / mu - (1.0 - std::exp(-t * mu)) / (mu * mu)) * n) < 1e-14);
    std::vector<SpectralField> zero(times.size(), SpectralField(g, 1));
    CHECK(max_abs(duhamel_integral(B, times, zero, j)) == 0.0);
}

TEST_CASE("free trajectory decays at the eigenvalue and starts at the data") {
    GridSpec g{2, 16};
    ProblemSpec prob = half_order_problem();
    PicardConfig cfg;
    cfg.T = 1.0;
    cfg.nodes_per_unit = 8;
    SpectralField th0 = single_mode(g, 1, {3, 0, 0}, {0.4, 0.0, 0.0});
    SpectralField z3(g, 3);
    TrajectoryState s = initial_trajectory(z3, z3, th0, prob, cfg);
    const double n0 = l2_coefficient_norm(th0);
    CHECK(max_abs_diff(s.th[0], th0) <= 1e-12 * n0);
    for (std::size_t j = 0; j < s.nodes(); ++j)
        CHECK(l2_coefficient_norm(s.th[j]) == doctest::Approx(std::exp(-9.0 * s.times[j]) * n0).epsilon(1e-13));
    for (std::size_t j = 0; j < s.nodes(); ++j) CHECK(max_abs(s.u[j]) == 0.0);
}

TEST_CASE("initial data preconditions") {
    GridSpec g{2, 16};
    ProblemSpec prob = half_order_problem();
    PicardConfig cfg;
    SpectralField z3(g, 3), th(g, 1, false);
    SpectralField grad = gradient(single_mode(g, 1, {1, 0, 0}, {1.0, 0.0, 0.0}));
    CHECK_THROWS_AS(picard_solve(grad, z3, th, prob, cfg), PreconditionError);
    SpectralField with_mean = z3;
    with_mean.comp(0)[0] = 1.0;
    CHECK_THROWS_AS(picard_solve(z3, with_mean, th, prob, cfg), PreconditionError);
    CHECK_THROWS_AS(picard_solve(th, z3, th, prob, cfg), TypeError);
}

TEST_CASE("zero data is a fixed point after one step") {
    GridSpec g{2, 16};
    ProblemSpec prob = half_order_problem();
    PicardConfig cfg;
    cfg.T = 0.5;
    cfg.nodes_per_unit = 16;
    SpectralField z3(g, 3), th(g, 1, false);
    PicardResult r = picard_solve(z3, z3, th, prob, cfg);
    CHECK(r.report.converged);
    CHECK(r.report.iterations == 1);
    CHECK(r.report.diffs.front() == 0.0);
    for (const auto& u : r.state.u) CHECK(max_abs(u) == 0.0);
}

TEST_CASE("linear regime matches the per-mode matrix exponential") {
    LinearCase lc;
    const double e1 = lc.error(32, 0.5), e2 = lc.error(64, 0.5);
    CHECK(e1 < 1e-3);
    CHECK(e2 < e1);
    const double ratio = e1 / e2;
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
}

TEST_CASE("one successive-approximation step agrees with a fine independent quadrature") {
    GridSpec g{2, 16};
    ProblemSpec prob = half_order_problem();
    prob.f = ForcingSpec{ForcingKind::Linear, {0.0, 0.5, 0.0}, 1.0};
    std::mt19937_64 rng(23);
    RandomFieldOptions sol;
    sol.solenoidal = true;
    sol.max_shell = 3;
    RandomFieldOptions lo;
    lo.max_shell = 3;
    SpectralField u0 = random_field(g, 3, rng, sol), w0 = random_field(g, 3, rng, lo), th0 = random_field(g, 1, rng, lo);
    u0.zero_mean();
    w0.zero_mean();
    u0 *= 0.2 / l2_coefficient_norm(u0);
    w0 *= 0.2 / l2_coefficient_norm(w0);
    th0 *= 0.2 / l2_coefficient_norm(th0);
    th0.mean_zero = false;
    PicardConfig cfg;
    cfg.T = 0.25;
    cfg.nodes_per_unit = 32;
    TrajectoryState s0 = initial_trajectory(u0, w0, th0, prob, cfg);
    recompute_rhs(s0, prob, false);
    TrajectoryState s1 = picard_step(s0, prob, cfg);
    const double T = s0.times.back(), h = 1.0 / cfg.nodes_per_unit;

    // ∫_0^T e^{-(T-s)A} F(u⁰(s), ω⁰(s), θ⁰(s)) ds by Simpson on a fine grid,
    // with the integrand evaluated directly rather than interpolated.
    OperatorSymbol A = velocity_operator(g), Gm = microrotation_operator(g, prob.params);
    OperatorSymbol Bop = temperature_operator(g);
    const int n = 512;
    SpectralField Iu(g, 3), Iw(g, 3), Ith(g, 1, false);
    for (int i = 0; i <= n; ++i) {
        const double s = T * i / n;
        const double wgt = (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0)) * T / (3.0 * n);
        SpectralField us = semigroup_apply(A, s, leray_project(u0)), ws = semigroup_apply(Gm, s, w0);
        SpectralField ts = semigroup_apply(Bop, s, th0);
        Rhs r = assemble_rhs(us, ws, ts, prob.params, prob.f, prob.g);
        Iu.axpy(wgt, semigroup_apply(A, T - s, r.F));
        Iw.axpy(wgt, semigroup_apply(Gm, T - s, r.G));
        Ith.axpy(wgt, semigroup_apply(Bop, T - s, r.H));
    }
    const double eu = max_abs_diff(s1.u.back() - s0.free_u.back(), Iu) / max_abs(Iu);
    const double ew = max_abs_diff(s1.w.back() - s0.free_w.back(), Iw) / max_abs(Iw);
    const double et = max_abs_diff(s1.th.back() - s0.free_th.back(), Ith) / max_abs(Ith);
    CHECK(eu <= 10.0 * h * h);
    CHECK(ew <= 10.0 * h * h);
    CHECK(et <= 10.0 * h * h);
}

TEST_CASE("restarting at the midpoint agrees with a single window") {
    LinearCase lc;
    lc.prob.f = ForcingSpec{ForcingKind::Linear, {0.0, 0.3, 0.0}, 1.0};
    PicardConfig cfg;
    cfg.T = 0.5;
    cfg.nodes_per_unit = 32;
    cfg.tol = 1e-13;
    PicardResult one = picard_solve(lc.u0, lc.w0, lc.th0, lc.prob, cfg);
    PicardConfig fine = cfg;
    fine.nodes_per_unit = 64;
    PicardResult ref = picard_solve(lc.u0, lc.w0, lc.th0, lc.prob, fine);
    const double quad = max_abs_diff(one.state.u.back(), ref.state.u.back()) * 4.0 / 3.0;

    PicardConfig half = cfg;
    half.T = 0.25;
    GlobalOptions opt;
    opt.T_total = 0.5;
    GlobalResult two = global_solve(lc.u0, lc.w0, lc.th0, lc.prob, half, opt);
    REQUIRE_FALSE(two.aborted);
    CHECK(two.windows.size() == 2);
    CHECK(two.state.times.back() == doctest::Approx(0.5));
    CHECK(max_abs_diff(two.state.u.back(), one.state.u.back()) <= 10.0 * quad);
}

TEST_CASE("spectral radius agrees with a direct eigensolve") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 2.0);
    for (int t = 0; t < 50; ++t) {
        std::array<std::array<double, 3>, 3> m{};
        Eigen::Matrix3d E;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) E(i, j) = m[i][j] = (t % 5 == 0 && i <= j) ? 0.0 : U(rng);
        // strictly lower triangular matrices are nilpotent; the eigensolver
        // only resolves the defective triple root to about eps^(1/3)
        if (t % 5 == 0) {
            CHECK(spectral_radius3(m) == 0.0);
            continue;
        }
        const double want = E.eigenvalues().cwiseAbs().maxCoeff();
        CHECK(spectral_radius3(m) == doctest::Approx(want).epsilon(1e-10));
    }
    std::array<std::array<double, 3>, 3> zero{};
    CHECK(spectral_radius3(zero) == 0.0);
}

TEST_CASE("cubic roots reproduce a known factorization") {
    // (λ - 1)(λ + 2)(λ - 3) = λ³ - 2λ² - 5λ + 6
    auto r = cubic_roots(-2.0, -5.0, 6.0);
    std::vector<double> re;
    for (auto z : r) {
        CHECK(std::abs(z.imag()) < 1e-12);
        re.push_back(z.real());
    }
    std::sort(re.begin(), re.end());
    CHECK(re[0] == doctest::Approx(-2.0));
    CHECK(re[1] == doctest::Approx(1.0));
    CHECK(re[2] == doctest::Approx(3.0));
}

namespace {

EstimateConstants unit_constants() {
    EstimateConstants c;
    c.C.fill(1.0);
    c.set = true;
    c.lambda = 0.5;
    c.Lambda1 = 1.0;
    return c;
}

}  // namespace

TEST_CASE("zero data gives the full horizon and a vanishing bound recursion") {
    GridSpec g{2, 16};
    ProblemSpec prob = half_order_problem();
    PicardConfig cfg;
    cfg.T = 0.5;
    cfg.nodes_per_unit = 16;
    SpectralField z3(g, 3), th(g, 1, false);
    TrajectoryState s = initial_trajectory(z3, z3, th, prob, cfg);
    auto K0 = k0_samples(s, prob.exponents, prob.params);
    HorizonReport h = local_horizon(K0, s.times, prob.exponents, prob, unit_constants());
    CHECK(h.T_star == doctest::Approx(cfg.T));
    KmTracker tr = km_recursion(K0, s.times, prob.exponents, prob, unit_constants());
    for (const auto& K : tr.history)
        for (const auto& v : K)
            for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("bound recursion is monotone and converges on a short horizon") {
    LinearCase lc;
    PicardConfig cfg;
    // the t^(1-beta_2) entry of the horizon matrix carries a coefficient near
    // nine, so only windows well below 4e-4 are certified
    cfg.T = 2e-4;
    cfg.nodes_per_unit = 50000;
    // small enough data for the horizon criterion to certify the whole window
    TrajectoryState s = initial_trajectory(0.01 * lc.u0, 0.01 * lc.w0, 0.01 * lc.th0, lc.prob, cfg);
    auto K0 = k0_samples(s, lc.prob.exponents, lc.prob.params);
    HorizonReport h = local_horizon(K0, s.times, lc.prob.exponents, lc.prob, unit_constants());
    REQUIRE(h.T_star == doctest::Approx(cfg.T));
    KmTracker tr = km_recursion(K0, s.times, lc.prob.exponents, lc.prob, unit_constants());
    double top = 0.0;
    for (const auto& v : tr.history.back()) top = std::max(top, *std::max_element(v.begin(), v.end()));
    INFO("iterations " << tr.iterations << ", largest bound " << top);
    CHECK(tr.monotone);
    CHECK(tr.converged);
    for (const auto& v : tr.history.front()) CHECK(v.front() == 0.0);
}

TEST_CASE("scaling up the data never lengthens the horizon") {
    LinearCase lc;
    PicardConfig cfg;
    cfg.T = 1.0;
    cfg.nodes_per_unit = 64;
    double prev = std::numeric_limits<double>::infinity();
    for (double scale : {1.0, 2.0, 4.0, 8.0, 16.0}) {
        TrajectoryState s = initial_trajectory(scale * lc.u0, scale * lc.w0, scale * lc.th0, lc.prob, cfg);
        HorizonReport h = local_horizon(k0_samples(s, lc.prob.exponents, lc.prob.params), s.times,
                                        lc.prob.exponents, lc.prob, unit_constants());
        CHECK(h.T_star <= prev);
        prev = h.T_star;
    }
}

TEST_CASE("global march of zero data keeps every E-function at zero") {
    GridSpec g{2, 16};
    ProblemSpec prob = half_order_problem();
    PicardConfig cfg;
    cfg.T = 0.5;
    cfg.nodes_per_unit = 16;
    SpectralField z3(g, 3), th(g, 1, false);
    GlobalOptions opt;
    opt.T_total = 2.0;
    GlobalResult r = global_solve(z3, z3, th, prob, cfg, opt);
    CHECK_FALSE(r.aborted);
    CHECK_FALSE(r.growth_flagged);
    CHECK(r.windows.size() == 4);
    for (double e : r.E) CHECK(e == 0.0);
}

TEST_CASE("semigroup constants") {
    CHECK(semigroup_constant(0.0, 0.5, 1.0) == doctest::Approx(1.0));
    // (a/e)^a (μ/(μ-λ))^a at the smallest eigenvalue
    CHECK(semigroup_constant(0.5, 0.5, 1.0) == doctest::Approx(std::pow(0.5 / M_E, 0.5) * std::sqrt(2.0)));
}
