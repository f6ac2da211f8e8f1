#include "micropolar/mild_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "micropolar/parallel.hpp"

namespace micropolar {

double beta_function(double x, double y) {
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y))
        throw DomainError("beta function needs positive finite arguments");
    return std::exp(std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y));
}

double phi1(double z) {
    if (std::abs(z) < 0.1) {
        // Σ (-z)^n / (n+1)!
        double term = 1.0, sum = 0.0, fact = 1.0;
        for (int n = 0; n <= 10; ++n) {
            fact *= (n + 1);
            sum += term / fact;
            term *= -z;
        }
        return sum;
    }
    return -std::expm1(-z) / z;
}

double psi2(double z) {
    if (std::abs(z) < 0.1) {
        // Σ (-1)^n (n+1) z^n / (n+2)!
        double term = 1.0, sum = 0.0, fact = 1.0;
        for (int n = 0; n <= 10; ++n) {
            fact *= n + 2.0;
            sum += (n + 1) * term / fact;
            term *= -z;
        }
        return sum;
    }
    return (-std::expm1(-z) - z * std::exp(-z)) / (z * z);
}

void PicardConfig::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("picard.T must be positive");
    if (nodes_per_unit < 1) throw ConfigError("picard.nodes_per_unit must be at least 1");
    if (m_max < 1) throw ConfigError("picard.m_max must be at least 1");
    if (!(tol > 0.0)) throw ConfigError("picard.tol must be positive");
}

int PicardConfig::intervals() const {
    return std::max(2, static_cast<int>(std::ceil(T * nodes_per_unit - 1e-9)));
}

std::vector<double> time_grid(const PicardConfig& cfg) {
    cfg.validate();
    const int J = cfg.intervals();
    std::vector<double> t(static_cast<std::size_t>(J) + 1);
    for (int j = 0; j <= J; ++j) {
        double s = static_cast<double>(j) / J;
        t[static_cast<std::size_t>(j)] = cfg.graded ? cfg.T * s * s : cfg.T * s;
    }
    t.back() = cfg.T;
    return t;
}

OperatorSymbol velocity_operator(const GridSpec& g) { return stokes_operator(g, 1.0); }
OperatorSymbol microrotation_operator(const GridSpec& g, const CouplingParams& p) { return gamma_operator(g, p, 1.0); }
OperatorSymbol temperature_operator(const GridSpec& g) { return laplace_operator(g, 1.0); }

std::vector<WeightedNorm> weighted_norms(const ExponentConfig& e, const CouplingParams& params) {
    const double gt = params.gamma_transverse(), gl = params.gamma_longitudinal();
    std::vector<WeightedNorm> out;
    auto tag = [](const char* f, const char* sp, double x) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s:%s^%.6g", f, sp, x);
        return std::string(buf);
    };
    if (e.has_intermediates) {
        for (int i = 0; i < 3; ++i)
            out.push_back({0, NormRequest::xalpha(e.alpha[i], e.p), e.alpha[i] - e.alpha0, tag("u", "X", e.alpha[i])});
        for (int i = 0; i < 3; ++i)
            out.push_back(
                {1, NormRequest::ybeta(e.beta[i], e.q, gt, gl), e.beta[i] - e.beta0, tag("w", "Y", e.beta[i])});
        for (int i = 0; i < 3; ++i)
            out.push_back({2, NormRequest::zgamma(e.gamma[i], e.r), e.gamma[i] - e.gamma0, tag("th", "Z", e.gamma[i])});
    } else {
        out.push_back({0, NormRequest::xalpha(e.alpha0, e.p), 0.0, tag("u", "X", e.alpha0)});
        out.push_back({1, NormRequest::ybeta(e.beta0, e.q, gt, gl), 0.0, tag("w", "Y", e.beta0)});
        out.push_back({2, NormRequest::zgamma(e.gamma0, e.r), 0.0, tag("th", "Z", e.gamma0)});
    }
    return out;
}

namespace {

double time_weight(double t, double offset) {
    if (offset == 0.0) return 1.0;
    if (t <= 0.0) return offset > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::pow(t, offset);
}

std::vector<std::vector<double>> profiles_of(const std::vector<double>& times, const std::vector<SpectralField>& u,
                                             const std::vector<SpectralField>& w,
                                             const std::vector<SpectralField>& th,
                                             const std::vector<WeightedNorm>& set) {
    const std::vector<SpectralField>* fields[3] = {&u, &w, &th};
    std::vector<std::vector<double>> out(set.size(), std::vector<double>(times.size(), 0.0));
    parallel_for(times.size(), [&](std::size_t j) {
        for (std::size_t k = 0; k < set.size(); ++k) {
            double wgt = time_weight(times[j], set[k].offset);
            out[k][j] = wgt == 0.0 ? 0.0 : wgt * norm((*fields[set[k].field])[j], set[k].req);
        }
    });
    return out;
}

void require_same_grid(const SpectralField& a, const SpectralField& b, const char* what) {
    if (!(a.grid == b.grid)) throw ConfigError(std::string("grid mismatch: ") + what);
}

double mean_scale(const SpectralField& f) {
    double scale = 0.0, mean = 0.0;
    for (const auto& c : f.coeffs) scale = std::max(scale, std::abs(c));
    for (int c = 0; c < f.components; ++c) mean = std::max(mean, std::abs(f.comp(c)[0]));
    return scale > 0.0 ? mean / scale : 0.0;
}

void check_initial_data(const SpectralField& u0, const SpectralField& w0, const SpectralField& th0) {
    if (!u0.is_vector() || !w0.is_vector()) throw TypeError("velocity and microrotation data must be vector fields");
    if (th0.components != 1) throw TypeError("temperature data must be scalar");
    require_same_grid(u0, w0, "initial data");
    require_same_grid(u0, th0, "initial data");
    if (mean_scale(u0) > 1e-14) throw PreconditionError("velocity data must be mean-zero");
    if (mean_scale(w0) > 1e-14) throw PreconditionError("microrotation data must be mean-zero");
    double un = l2_coefficient_norm(u0);
    if (un > 0.0 && l2_coefficient_norm(divergence(u0)) > 1e-10 * un * std::sqrt(lambda1(u0.grid)) * u0.grid.n)
        throw PreconditionError("velocity data is not solenoidal");
    for (const SpectralField* f : {&u0, &w0, &th0}) {
        double scale = 0.0;
        for (const auto& c : f->coeffs) scale = std::max(scale, std::abs(c));
        if (!is_dealiased(*f, 1e-14 * scale)) throw PreconditionError("initial data must be dealiased");
    }
}

}  // namespace

std::vector<std::vector<double>> weighted_profiles(const TrajectoryState& s, const std::vector<WeightedNorm>& set) {
    return profiles_of(s.times, s.u, s.w, s.th, set);
}

std::vector<double> weighted_sup_differences(const TrajectoryState& a, const TrajectoryState& b,
                                             const std::vector<WeightedNorm>& set) {
    if (a.nodes() != b.nodes()) throw ConfigError("trajectories have different node counts");
    for (std::size_t j = 0; j < a.nodes(); ++j)
        if (std::abs(a.times[j] - b.times[j]) > 1e-12 * std::max(1.0, std::abs(a.times[j])))
            throw ConfigError("trajectories have different time grids");
    std::vector<std::vector<double>> per(a.nodes(), std::vector<double>(set.size(), 0.0));
    parallel_for(a.nodes(), [&](std::size_t j) {
        const SpectralField d[3] = {a.u[j] - b.u[j], a.w[j] - b.w[j], a.th[j] - b.th[j]};
        for (std::size_t k = 0; k < set.size(); ++k) {
            double wgt = time_weight(a.times[j], set[k].offset);
            if (wgt == 0.0) continue;
            per[j][k] = wgt * norm(d[set[k].field], set[k].req);
        }
    });
    std::vector<double> out(set.size(), 0.0);
    for (const auto& row : per)
        for (std::size_t k = 0; k < set.size(); ++k) {
            if (!std::isfinite(row[k])) out[k] = std::numeric_limits<double>::infinity();
            else out[k] = std::max(out[k], row[k]);
        }
    return out;
}

double weighted_sup_difference(const TrajectoryState& a, const TrajectoryState& b,
                               const std::vector<WeightedNorm>& set) {
    double out = 0.0;
    for (double v : weighted_sup_differences(a, b, set)) out = std::max(out, v);
    return out;
}

void recompute_rhs(TrajectoryState& s, const ProblemSpec& prob, bool linear_only) {
    const std::size_t J = s.nodes();
    s.F.assign(J, SpectralField());
    s.G.assign(J, SpectralField());
    s.H.assign(J, SpectralField());
    RhsOptions opt;
    opt.nonlinear = !linear_only;
    parallel_for(J, [&](std::size_t j) {
        Rhs r = assemble_rhs(s.u[j], s.w[j], s.th[j], prob.params, prob.f, prob.g, opt);
        s.F[j] = std::move(r.F);
        s.G[j] = std::move(r.G);
        s.H[j] = std::move(r.H);
    });
}

TrajectoryState initial_trajectory(const SpectralField& u0, const SpectralField& w0, const SpectralField& th0,
                                   const ProblemSpec& prob, const PicardConfig& cfg) {
    prob.params.validate();
    prob.f.validate();
    prob.g.validate();
    check_initial_data(u0, w0, th0);
    TrajectoryState s;
    s.times = time_grid(cfg);
    const std::size_t J = s.nodes();
    const GridSpec& g = u0.grid;
    OperatorSymbol A = velocity_operator(g), Gm = microrotation_operator(g, prob.params), B = temperature_operator(g);
    s.free_u.assign(J, SpectralField());
    s.free_w.assign(J, SpectralField());
    s.free_th.assign(J, SpectralField());
    SpectralField pu = leray_project(u0);
    parallel_for(J, [&](std::size_t j) {
        s.free_u[j] = semigroup_apply(A, s.times[j], pu);
        s.free_w[j] = semigroup_apply(Gm, s.times[j], w0);
        s.free_th[j] = semigroup_apply(B, s.times[j], th0);
    });
    // The data themselves sit at t = 0.
    s.free_u[0] = u0;
    s.free_w[0] = w0;
    s.free_th[0] = th0;
    s.u = s.free_u;
    s.w = s.free_w;
    s.th = s.free_th;
    s.m = 0;
    recompute_rhs(s, prob, cfg.linear_only);
    return s;
}

std::vector<SpectralField> duhamel_trajectory(const OperatorSymbol& op, const std::vector<double>& times,
                                              const std::vector<SpectralField>& N) {
    if (times.size() != N.size() || N.empty()) throw ConfigError("forcing samples must match the time grid");
    bool mz = true;
    for (const auto& f : N) mz = mz && f.mean_zero;
    std::vector<SpectralField> I(N.size());
    I[0] = SpectralField(N[0].grid, N[0].components, mz);
    for (std::size_t n = 0; n + 1 < N.size(); ++n) {
        const double h = times[n + 1] - times[n];
        if (!(h > 0.0)) throw ConfigError("time grid must be strictly increasing");
        SpectralField next = apply_spectral_function(op, I[n], [h](double mu) { return std::exp(-h * mu); });
        next += apply_spectral_function(op, N[n], [h](double mu) { return h * psi2(h * mu); });
        next += apply_spectral_function(op, N[n + 1],
                                        [h](double mu) { return h * (phi1(h * mu) - psi2(h * mu)); });
        next.mean_zero = mz;
        I[n + 1] = std::move(next);
    }
    return I;
}

SpectralField duhamel_integral(const OperatorSymbol& op, const std::vector<double>& times,
                               const std::vector<SpectralField>& N, std::size_t node) {
    if (node >= times.size()) throw DomainError("Duhamel integral requested off the time grid");
    std::vector<double> t(times.begin(), times.begin() + static_cast<long>(node) + 1);
    std::vector<SpectralField> n(N.begin(), N.begin() + static_cast<long>(node) + 1);
    return duhamel_trajectory(op, t, n).back();
}

TrajectoryState picard_step(const TrajectoryState& s, const ProblemSpec& prob, const PicardConfig& cfg) {
    if (s.F.size() != s.nodes() || s.G.size() != s.nodes() || s.H.size() != s.nodes())
        throw PreconditionError("right-hand side cache is stale");
    const GridSpec& g = s.u[0].grid;
    OperatorSymbol ops[3] = {velocity_operator(g), microrotation_operator(g, prob.params), temperature_operator(g)};
    const std::vector<SpectralField>* rhs[3] = {&s.F, &s.G, &s.H};
    std::vector<SpectralField> I[3];
    parallel_for(3, [&](std::size_t k) { I[k] = duhamel_trajectory(ops[k], s.times, *rhs[k]); });
    TrajectoryState out;
    out.times = s.times;
    out.free_u = s.free_u;
    out.free_w = s.free_w;
    out.free_th = s.free_th;
    out.u = s.free_u;
    out.w = s.free_w;
    out.th = s.free_th;
    for (std::size_t j = 1; j < s.nodes(); ++j) {
        out.u[j] += I[0][j];
        out.w[j] += I[1][j];
        out.th[j] += I[2][j];
        out.th[j].mean_zero = out.th[j].comp(0)[0] == cplx(0.0, 0.0);
    }
    out.m = s.m + 1;
    recompute_rhs(out, prob, cfg.linear_only);
    return out;
}

PicardResult picard_solve(const SpectralField& u0, const SpectralField& w0, const SpectralField& th0,
                          const ProblemSpec& prob, const PicardConfig& cfg, const HorizonReport* horizon,
                          bool keep_profiles) {
    PicardResult res;
    PicardReport& rep = res.report;
    if (horizon && cfg.T > horizon->T_star * (1.0 + 1e-12)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "horizon T = %.6g exceeds the estimated contraction horizon %.6g", cfg.T,
                      horizon->T_star);
        if (cfg.enforce_horizon) throw PreconditionError(buf);
        rep.warnings.emplace_back(buf);
    }
    const auto set = weighted_norms(prob.exponents, prob.params);
    for (const auto& wn : set) rep.norm_tags.push_back(wn.tag);
    TrajectoryState state = initial_trajectory(u0, w0, th0, prob, cfg);
    if (keep_profiles) rep.profiles.push_back(weighted_profiles(state, set));
    int above_one = 0;
    for (int m = 0; m < cfg.m_max; ++m) {
        TrajectoryState next = picard_step(state, prob, cfg);
        std::vector<double> parts = weighted_sup_differences(next, state, set);
        double d = 0.0;
        for (double v : parts) d = std::max(d, v);
        rep.norm_diffs.push_back(std::move(parts));
        if (!rep.diffs.empty()) {
            double prev = rep.diffs.back();
            double ratio = prev > 0.0 ? d / prev : 0.0;
            rep.ratios.push_back(ratio);
            above_one = ratio >= 1.0 ? above_one + 1 : 0;
        }
        rep.diffs.push_back(d);
        state = std::move(next);
        rep.iterations = m + 1;
        if (keep_profiles) rep.profiles.push_back(weighted_profiles(state, set));
        if (!std::isfinite(d)) {
            rep.diverged = true;
            rep.message = "iterate difference is not finite";
            break;
        }
        if (d < cfg.tol) {
            rep.converged = true;
            rep.message = "converged";
            break;
        }
        if (above_one >= 3) {
            rep.diverged = true;
            rep.message = "no contraction: three consecutive ratios >= 1";
            break;
        }
    }
    if (!rep.converged && !rep.diverged) rep.message = "iteration limit reached";
    res.state = std::move(state);
    return res;
}

double semigroup_constant(double a, double lambda, double mu_min) {
    if (a < 0.0) throw DomainError("semigroup constant needs a nonnegative power");
    if (!(lambda < mu_min)) throw DomainError("decay rate must lie below the smallest eigenvalue");
    if (a == 0.0) return 1.0;
    return std::pow(a / std::exp(1.0), a) * std::pow(mu_min / (mu_min - lambda), a);
}

std::array<std::vector<double>, 9> k0_samples(const TrajectoryState& s, const ExponentConfig& e,
                                              const CouplingParams& params) {
    if (!e.has_intermediates) throw ConfigError("the bound recursion needs the intermediate exponents");
    const auto set = weighted_norms(e, params);
    auto prof = profiles_of(s.times, s.free_u, s.free_w, s.free_th, set);
    std::array<std::vector<double>, 9> K0;
    for (int k = 0; k < 9; ++k) {
        K0[k].resize(s.nodes());
        double run = 0.0;
        for (std::size_t j = 0; j < s.nodes(); ++j) {
            if (s.times[j] > 0.0) run = std::max(run, prof[k][j]);
            K0[k][j] = run;
        }
    }
    return K0;
}

namespace {

// Coefficients and t-exponents of every term of the bound recursion.
struct RecursionTerm {
    double coef;
    double texp;
    int i1;  // first K factor (index into the nine), -1 for none
    int i2;  // second K factor, -1 for none
};

std::array<std::vector<RecursionTerm>, 9> recursion_terms(const ExponentConfig& e, const ProblemSpec& prob,
                                                          const EstimateConstants& c) {
    if (!c.set) throw ConfigError("estimate constants are missing");
    const double L1 = c.Lambda1;
    const double lam = c.lambda;
    const double gmin = std::min(prob.params.gamma_transverse(), prob.params.gamma_longitudinal());
    auto CA = [&](double a) { return c.semigroup_scale * semigroup_constant(a, lam, L1); };
    auto CG = [&](double a) { return c.semigroup_scale * semigroup_constant(a, lam, gmin * L1); };
    auto CB = [&](double a) { return c.semigroup_scale * semigroup_constant(a, lam, L1); };
    const auto& C = c.C;
    const double mr = prob.params.mu_r, Lf = prob.f.lipschitz(), Lg = prob.g.lipschitz();
    const double a0 = e.alpha0, b0 = e.beta0, g0 = e.gamma0;
    const double d1 = e.delta[0], d2 = e.delta[1], d3 = e.delta[2];
    const double a1 = e.alpha[0], a2 = e.alpha[1], a3 = e.alpha[2];
    const double b1 = e.beta[0], b2 = e.beta[1], b3 = e.beta[2];
    const double g1 = e.gamma[0], g2 = e.gamma[1], g3 = e.gamma[2];
    // indices: 0..2 alpha_i, 3..5 beta_i, 6..8 gamma_i
    std::array<std::vector<RecursionTerm>, 9> T;
    for (int i = 0; i < 3; ++i) {
        const double al = e.alpha[i];
        T[i].push_back({CA(al + d1) * C[0] * beta_function(1 - (al + d1), 1 + 2 * (a0 - a1)), 1 + a0 - 2 * a1 - d1,
                        0, 0});
        T[i].push_back({2 * CA(al + d1) * C[4] * mr * beta_function(1 - (al + d1), 1 + b0 - b1),
                        1 + b0 - a0 - b1 - d1, 3, -1});
        T[i].push_back({CA(al) * C[7] * Lf * beta_function(1 - al, 1 + g0 - g1), 1 + g0 - a0 - g1, 6, -1});
    }
    for (int i = 0; i < 3; ++i) {
        const double be = e.beta[i];
        T[3 + i].push_back({CG(be + d2) * C[1] * beta_function(1 - (be + d2), 1 + a0 + b0 - a2 - b2),
                            1 + a0 - a2 - b2 - d2, 1, 4});
        T[3 + i].push_back({4 * CG(be) * C[5] * mr * beta_function(1 - be, 1 + b0 - b2), 1 - b2, 4, -1});
        T[3 + i].push_back({2 * CG(be + d2) * C[6] * mr * beta_function(1 - (be + d2), 1 + a0 - a2),
                            1 + a0 - b0 - a2 - d2, 1, -1});
        T[3 + i].push_back({CG(be) * C[8] * Lg * beta_function(1 - be, 1 + g0 - g2), 1 + g0 - b0 - g2, 7, -1});
    }
    for (int i = 0; i < 3; ++i) {
        const double ga = e.gamma[i];
        const double k4 = CB(ga) * C[3] * (1 + mr);
        T[6 + i].push_back({CB(ga + d3) * C[2] * beta_function(1 - (ga + d3), 1 + a0 + g0 - a3 - g3),
                            1 + a0 - a3 - g3 - d3, 2, 8});
        T[6 + i].push_back({k4 * beta_function(1 - ga, 1 + 2 * (a0 - a3)), 1 + 2 * a0 - g0 - 2 * a3, 2, 2});
        T[6 + i].push_back(
            {2 * k4 * beta_function(1 - ga, 1 + a0 + b0 - a3 - b3), 1 + a0 + b0 - g0 - a3 - b3, 2, 5});
        T[6 + i].push_back({k4 * beta_function(1 - ga, 1 + 2 * (b0 - b3)), 1 + 2 * b0 - g0 - 2 * b3, 5, 5});
    }
    return T;
}

double tpow(double t, double e) {
    if (e == 0.0) return 1.0;
    if (t <= 0.0) return 0.0;
    return std::pow(t, e);
}

}  // namespace

KmTracker km_recursion(const std::array<std::vector<double>, 9>& K0, const std::vector<double>& times,
                       const ExponentConfig& e, const ProblemSpec& prob, const EstimateConstants& c, int m_max,
                       double tol) {
    if (!e.has_intermediates) throw ConfigError("the bound recursion needs the intermediate exponents");
    for (const auto& k : K0)
        if (k.size() != times.size()) throw ConfigError("K0 samples must match the time grid");
    const auto terms = recursion_terms(e, prob, c);
    KmTracker tr;
    tr.times = times;
    tr.K0 = K0;
    tr.history.push_back(K0);
    const std::size_t J = times.size();
    for (int m = 0; m < m_max; ++m) {
        const auto& K = tr.history.back();
        std::array<std::vector<double>, 9> next;
        double change = 0.0;
        bool finite = true;
        for (int k = 0; k < 9; ++k) {
            next[k].resize(J);
            for (std::size_t j = 0; j < J; ++j) {
                double v = K0[k][j];
                for (const auto& t : terms[k]) {
                    double f = t.coef * tpow(times[j], t.texp);
                    if (t.i1 >= 0) f *= K[t.i1][j];
                    if (t.i2 >= 0) f *= K[t.i2][j];
                    v += f;
                }
                next[k][j] = v;
                if (!std::isfinite(v) || v > 1e300) finite = false;
                if (v < K[k][j] * (1.0 - 1e-14) - 1e-300) tr.monotone = false;
                change = std::max(change, std::abs(v - K[k][j]));
            }
        }
        tr.history.push_back(std::move(next));
        tr.iterations = m + 1;
        if (!finite) break;
        if (change < tol) {
            tr.converged = true;
            break;
        }
    }
    return tr;
}

DominationResult km_dominates(const KmTracker& tr, const PicardReport& rep) {
    DominationResult d;
    const std::size_t M = std::min(tr.history.size(), rep.profiles.size());
    for (std::size_t m = 0; m < M; ++m) {
        const auto& K = tr.history[m];
        const auto& P = rep.profiles[m];
        if (P.size() != 9) throw ConfigError("profiles must hold the nine weighted norms");
        for (int k = 0; k < 9; ++k)
            for (std::size_t j = 0; j < K[k].size() && j < P[k].size(); ++j) {
                double p = P[k][j], bound = K[k][j];
                if (p <= 0.0) continue;
                double ratio = bound > 0.0 ? p / bound : std::numeric_limits<double>::infinity();
                if (ratio > d.worst_ratio) {
                    d.worst_ratio = ratio;
                    d.worst_m = static_cast<int>(m);
                }
                if (p > bound * (1.0 + 1e-12)) d.holds = false;
            }
    }
    return d;
}

std::array<std::complex<double>, 3> cubic_roots(double c2, double c1, double c0) {
    using C = std::complex<double>;
    auto poly = [&](C z) { return ((z + c2) * z + c1) * z + c0; };
    auto dpoly = [&](C z) { return (3.0 * z + 2.0 * c2) * z + c1; };
    const double R = 1.0 + std::max({std::abs(c2), std::abs(c1), std::abs(c0)});
    std::array<C, 3> z;
    const C seed(0.4, 0.9);
    C p = 1.0;
    for (auto& zi : z) {
        p *= seed;
        zi = R * p;
    }
    // Durand-Kerner simultaneous iteration.
    for (int it = 0; it < 500; ++it) {
        double change = 0.0;
        for (int i = 0; i < 3; ++i) {
            C den = 1.0;
            for (int k = 0; k < 3; ++k)
                if (k != i) den *= z[i] - z[k];
            if (den == C(0.0)) den = C(1e-300);
            C dz = poly(z[i]) / den;
            z[i] -= dz;
            change = std::max(change, std::abs(dz));
        }
        if (change < 1e-15 * R) break;
    }
    for (auto& zi : z) {
        for (int it = 0; it < 3; ++it) {
            C d = dpoly(zi);
            if (std::abs(d) < 1e-300) break;
            C step = poly(zi) / d;
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
            zi -= step;
        }
    }
    return z;
}

double spectral_radius3(const std::array<std::array<double, 3>, 3>& m) {
    const double tr = m[0][0] + m[1][1] + m[2][2];
    const double minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] +
                          m[1][1] * m[2][2] - m[1][2] * m[2][1];
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    // nilpotent: all invariants vanish and the radius is exactly zero
    if (tr == 0.0 && minors == 0.0 && det == 0.0) return 0.0;
    auto roots = cubic_roots(-tr, minors, -det);
    double r = 0.0;
    for (const auto& z : roots) r = std::max(r, std::abs(z));
    return r;
}

HorizonReport local_horizon(const std::array<std::vector<double>, 9>& K0, const std::vector<double>& times,
                            const ExponentConfig& e, const ProblemSpec& prob, const EstimateConstants& c) {
    if (times.empty()) throw ConfigError("empty time grid");
    const auto terms = recursion_terms(e, prob, c);
    HorizonReport h;
    h.times = times;
    h.T_requested = times.back();
    h.factor.assign(times.size(), 0.0);
    for (const auto& row : terms)
        for (const auto& t : row) h.cbar = std::max(h.cbar, t.coef);
    h.a = std::min(1 + e.beta0 - e.alpha0 - e.beta[0] - e.delta[0], 1 + e.gamma0 - e.alpha0 - e.gamma[0]);
    h.b = std::min({1 + e.alpha0 - e.beta0 - e.alpha[1] - e.delta[1], 1 - e.beta[1],
                    1 + e.gamma0 - e.beta0 - e.gamma[1]});
    h.equality_case = branches(e).any_equality();
    std::vector<double> K0max(times.size(), 0.0);
    bool zero = true;
    for (const auto& k : K0)
        for (std::size_t j = 0; j < times.size(); ++j) {
            K0max[j] = std::max(K0max[j], k[j]);
            if (k[j] != 0.0) zero = false;
        }
    h.zero_data = zero;
    if (zero) {
        h.T_star = h.T_requested;
        return h;
    }
    const double cb = h.cbar;
    const double e1 = 1 + e.alpha0 - e.beta0 - e.alpha[1] - e.delta[1];
    const double e2 = 1 - e.beta[1];
    bool ok = true;
    for (std::size_t j = 0; j < times.size(); ++j) {
        const double t = times[j], k0 = K0max[j];
        double f;
        if (!h.equality_case) {
            f = std::max({cb * (k0 + tpow(t, h.a)), cb * (k0 + tpow(t, h.b)), cb * k0});
        } else {
            std::array<std::array<double, 3>, 3> M{{{cb * k0, 1.0, 1.0},
                                                    {cb * k0 + cb * tpow(t, e1), cb * k0 + cb * tpow(t, e2), 1.0},
                                                    {cb * k0, cb * k0, cb * k0}}};
            f = spectral_radius3(M);
        }
        h.factor[j] = f;
        if (t <= 0.0) continue;
        if (ok && f < 1.0) h.T_star = t;
        else ok = false;
    }
    h.degenerate = h.T_star == 0.0;
    return h;
}

double data_norm(const SpectralField& u0, const SpectralField& w0, const SpectralField& th0, const ExponentConfig& e,
                 const CouplingParams& params) {
    return norm(u0, NormRequest::xalpha(e.alpha0, e.p)) +
           norm(w0, NormRequest::ybeta(e.beta0, e.q, params.gamma_transverse(), params.gamma_longitudinal())) +
           norm(th0, NormRequest::zgamma(e.gamma0, e.r));
}

GlobalResult global_solve(const SpectralField& u0, const SpectralField& w0, const SpectralField& th0,
                          const ProblemSpec& prob, const PicardConfig& cfg, const GlobalOptions& opt) {
    cfg.validate();
    if (!(opt.T_total > opt.t_start)) throw ConfigError("total time must exceed the start time");
    GlobalResult res;
    ExponentConfig e = prob.exponents;
    if (!e.has_rates()) set_default_rates(e, lambda1(u0.grid));
    res.data_norm = data_norm(u0, w0, th0, e, prob.params);

    SpectralField cu = u0, cw = w0, cth = th0;
    double t = opt.t_start;
    int window = 0;
    double first_window_end = 0.0;
    while (t < opt.T_total - 1e-12) {
        PicardConfig wc = cfg;
        wc.T = std::min(cfg.T, opt.T_total - t);
        PicardResult pr = picard_solve(cu, cw, cth, prob, wc);
        TrajectoryState& ws = pr.state;
        for (auto& tj : ws.times) tj += t;
        const std::size_t start = res.state.nodes() == 0 ? 0 : 1;
        for (std::size_t j = start; j < ws.nodes(); ++j) {
            res.state.times.push_back(ws.times[j]);
            res.state.u.push_back(ws.u[j]);
            res.state.w.push_back(ws.w[j]);
            res.state.th.push_back(ws.th[j]);
            res.state.F.push_back(ws.F[j]);
            res.state.G.push_back(ws.G[j]);
            res.state.H.push_back(ws.H[j]);
            res.state.free_u.push_back(ws.free_u[j]);
            res.state.free_w.push_back(ws.free_w[j]);
            res.state.free_th.push_back(ws.free_th[j]);
        }
        res.state.m = std::max(res.state.m, ws.m);
        bool ok = pr.report.converged;
        res.windows.push_back(pr.report);
        if (opt.on_window) opt.on_window(ws, window);
        if (!ok) {
            res.aborted = true;
            res.message = "window " + std::to_string(window) + " did not converge: " + pr.report.message;
            break;
        }
        cu = ws.u.back();
        cw = ws.w.back();
        cth = ws.th.back();
        t += wc.T;
        if (window == 0) first_window_end = t;
        ++window;
    }

    // E-functions: sup_s m(s)^{offset} e^{rate s} ‖field(s)‖ with m(s) = min(s, 1).
    const auto set = weighted_norms(e, prob.params);
    auto prof = profiles_of(res.state.times, res.state.u, res.state.w, res.state.th, set);
    const std::size_t J = res.state.nodes();
    res.E_parts.assign(set.size(), std::vector<double>(J, 0.0));
    res.E.assign(J, 0.0);
    for (std::size_t k = 0; k < set.size(); ++k) {
        const double rate = set[k].field == 2 ? e.lambda2 : e.lambda;
        double run = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            const double s = res.state.times[j];
            if (s > 0.0) {
                // prof carries s^{offset}; replace it by m(s)^{offset}.
                double raw = set[k].offset == 0.0 ? prof[k][j] : prof[k][j] / std::pow(s, set[k].offset);
                run = std::max(run, time_weight(std::min(s, 1.0), set[k].offset) * std::exp(rate * s) * raw);
            }
            res.E_parts[k][j] = run;
            res.E[j] = std::max(res.E[j], run);
        }
    }
    if (res.data_norm > 0.0 && J > 0) {
        double c0 = 1.0;
        for (std::size_t j = 0; j < J; ++j)
            if (res.state.times[j] <= first_window_end + 1e-12) c0 = std::max(c0, res.E[j] / res.data_norm);
        res.fitted_linear_constant = c0;
        // Bounded branch of E ≤ C (D + E²).
        double disc = 1.0 - 4.0 * c0 * c0 * res.data_norm;
        if (disc < 0.0) {
            res.growth_flagged = true;
        } else {
            double bound = (1.0 - std::sqrt(disc)) / (2.0 * c0);
            if (res.E.back() > 2.0 * bound) res.growth_flagged = true;
        }
    }
    if (res.message.empty()) res.message = res.growth_flagged ? "E-function growth flagged" : "ok";
    return res;
}

}  // namespace micropolar
