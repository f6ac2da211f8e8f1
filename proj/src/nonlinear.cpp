#include "micropolar/nonlinear.hpp"

#include <cmath>

namespace micropolar {

void CouplingParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("params.") + name + " must be positive");
    };
    positive(mu, "mu");
    positive(c0, "c0");
    positive(ca, "ca");
    positive(cd, "cd");
    positive(kappa, "kappa");
    positive(cv, "cv");
    positive(rho, "rho");
    if (!(mu_r >= 0.0)) throw ConfigError("params.mu_r must be nonnegative");
    if (!(c0 + cd > ca)) throw ConfigError("params: c0 + cd > ca is required");
    if (std::abs(rho - 1.0) > 1e-12) throw ConfigError("params.rho must equal 1 (normalized generators)");
    if (std::abs(mu + mu_r - 1.0) > 1e-12) throw ConfigError("params: mu + mu_r must equal 1 (normalized generators)");
    if (std::abs(kappa - 1.0) > 1e-12) throw ConfigError("params.kappa must equal 1 (normalized generators)");
}

CouplingParams CouplingParams::with_mu_r(double mu_r) {
    CouplingParams p;
    p.mu_r = mu_r;
    p.mu = 1.0 - mu_r;
    return p;
}

double ForcingSpec::lipschitz() const {
    double n = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    switch (kind) {
        case ForcingKind::Zero: return 0.0;
        case ForcingKind::Linear: return n;
        case ForcingKind::SaturatingTanh: return n * scale;
    }
    return 0.0;
}

std::array<double, 3> ForcingSpec::evaluate(double theta) const {
    double s = 0.0;
    switch (kind) {
        case ForcingKind::Zero: s = 0.0; break;
        case ForcingKind::Linear: s = theta; break;
        case ForcingKind::SaturatingTanh: s = std::tanh(scale * theta); break;
    }
    return {c[0] * s, c[1] * s, c[2] * s};
}

void ForcingSpec::validate() const {
    for (double v : c)
        if (!std::isfinite(v)) throw ConfigError("forcing.c must be finite");
    if (kind == ForcingKind::SaturatingTanh && !(scale > 0.0)) throw ConfigError("forcing.scale must be positive");
}

std::string to_string(ForcingKind k) {
    switch (k) {
        case ForcingKind::Zero: return "zero";
        case ForcingKind::Linear: return "linear";
        case ForcingKind::SaturatingTanh: return "saturating_tanh";
    }
    return "zero";
}

ForcingKind forcing_kind_from_string(const std::string& s) {
    if (s == "zero" || s == "Zero") return ForcingKind::Zero;
    if (s == "linear" || s == "Linear") return ForcingKind::Linear;
    if (s == "saturating_tanh" || s == "SaturatingTanh") return ForcingKind::SaturatingTanh;
    throw ConfigError("unknown forcing kind '" + s + "'");
}

OperatorSymbol stokes_operator(const GridSpec& g, double power) {
    return OperatorSymbol{OperatorKind::StokesA, g, power, 1.0, 2.0};
}

OperatorSymbol gamma_operator(const GridSpec& g, const CouplingParams& p, double power) {
    return OperatorSymbol{OperatorKind::Gamma, g, power, p.gamma_transverse(), p.gamma_longitudinal()};
}

OperatorSymbol laplace_operator(const GridSpec& g, double power) {
    return OperatorSymbol{OperatorKind::LaplaceB, g, power, 1.0, 2.0};
}

namespace {

// grad[j] holds ∂_j of every component, in physical space.
std::array<PhysicalField, 3> physical_gradient(const SpectralField& f) {
    std::array<PhysicalField, 3> out;
    for (int j = 0; j < 3; ++j) out[j] = to_physical(derivative(f, j));
    return out;
}

void check_grids(const SpectralField& a, const SpectralField& b) {
    if (!(a.grid == b.grid)) throw ConfigError("grid mismatch between operands");
}

}  // namespace

SpectralField advect(const SpectralField& u, const SpectralField& w) {
    check_grids(u, w);
    if (!u.is_vector()) throw TypeError("advecting velocity must be a vector field");
    const std::size_t tot = u.grid.total();
    PhysicalField up = to_physical(u);
    auto gw = physical_gradient(w);
    std::vector<double> out(tot * static_cast<std::size_t>(w.components), 0.0);
    for (int c = 0; c < w.components; ++c) {
        double* o = out.data() + static_cast<std::size_t>(c) * tot;
        for (int j = 0; j < u.grid.dim; ++j) {
            const double* uj = up.values.data() + static_cast<std::size_t>(j) * tot;
            const double* dw = gw[j].values.data() + static_cast<std::size_t>(c) * tot;
            for (std::size_t i = 0; i < tot; ++i) o[i] += uj[i] * dw[i];
        }
    }
    SpectralField r = dealias(to_spectral(u.grid, w.components, out));
    return r;
}

PhysicalField dissipation_phi_physical(const SpectralField& u, const SpectralField& v,
                                       const SpectralField& omega, const SpectralField& psi,
                                       const CouplingParams& params) {
    check_grids(u, v);
    check_grids(u, omega);
    check_grids(u, psi);
    if (!u.is_vector() || !v.is_vector() || !omega.is_vector() || !psi.is_vector())
        throw TypeError("dissipation function takes vector fields");
    const std::size_t tot = u.grid.total();
    auto gu = physical_gradient(u);
    auto gv = physical_gradient(v);
    auto go = physical_gradient(omega);
    auto gp = physical_gradient(psi);
    PhysicalField ru = to_physical(curl(u)), rv = to_physical(curl(v));
    PhysicalField op = to_physical(omega), pp = to_physical(psi);
    const double two_mu = 2.0 * params.mu, four_mur = 4.0 * params.mu_r;
    const double c4 = params.ca + params.cd, c5 = params.cd - params.ca;
    PhysicalField out{u.grid, 1, std::vector<double>(tot, 0.0)};
    auto at = [tot](const PhysicalField& f, int c, std::size_t i) {
        return f.values[static_cast<std::size_t>(c) * tot + i];
    };
    for (std::size_t i = 0; i < tot; ++i) {
        double phi1 = 0.0, phi2 = 0.0, phi4 = 0.0, phi5 = 0.0;
        double divo = 0.0, divp = 0.0;
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                // gradient tensor entry ∂_b f_a is gf[b] component a
                double du = 0.5 * (at(gu[b], a, i) + at(gu[a], b, i));
                double dv = 0.5 * (at(gv[b], a, i) + at(gv[a], b, i));
                phi1 += du * dv;
                phi4 += at(go[b], a, i) * at(gp[b], a, i);
                phi5 += at(go[b], a, i) * at(gp[a], b, i);
            }
            phi2 += (0.5 * at(ru, a, i) - at(op, a, i)) * (0.5 * at(rv, a, i) - at(pp, a, i));
            divo += at(go[a], a, i);
            divp += at(gp[a], a, i);
        }
        out.values[i] = two_mu * phi1 + four_mur * phi2 + params.c0 * divo * divp + c4 * phi4 + c5 * phi5;
    }
    return out;
}

SpectralField dissipation_phi(const SpectralField& u, const SpectralField& v, const SpectralField& omega,
                              const SpectralField& psi, const CouplingParams& params) {
    return dealias(to_spectral(dissipation_phi_physical(u, v, omega, psi, params)));
}

SpectralField forcing_field(const ForcingSpec& f, const SpectralField& theta) {
    if (theta.components != 1) throw TypeError("forcing argument must be scalar");
    SpectralField out(theta.grid, 3, true);
    if (f.kind == ForcingKind::Zero) return out;
    if (f.kind == ForcingKind::Linear) {
        const std::size_t tot = theta.grid.total();
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < tot; ++i) out.comp(c)[i] = f.c[c] * theta.comp(0)[i];
        out.mean_zero = theta.mean_zero;
        return dealias(out);
    }
    PhysicalField tp = to_physical(theta);
    const std::size_t tot = theta.grid.total();
    std::vector<double> vals(3 * tot);
    for (std::size_t i = 0; i < tot; ++i) {
        auto v = f.evaluate(tp.values[i]);
        for (int c = 0; c < 3; ++c) vals[static_cast<std::size_t>(c) * tot + i] = v[c];
    }
    return dealias(to_spectral(theta.grid, 3, vals));
}

Rhs assemble_rhs(const SpectralField& u, const SpectralField& omega, const SpectralField& theta,
                 const CouplingParams& params, const ForcingSpec& f, const ForcingSpec& g,
                 const RhsOptions& opt) {
    check_grids(u, omega);
    check_grids(u, theta);
    if (!u.is_vector() || !omega.is_vector()) throw TypeError("velocity and microrotation must be vector fields");
    if (theta.components != 1) throw TypeError("temperature must be scalar");
    double un = l2_coefficient_norm(u);
    if (un > 0.0 && l2_coefficient_norm(divergence(u)) > opt.solenoidal_tol * un * std::sqrt(lambda1(u.grid)) *
                                                              u.grid.n)
        throw PreconditionError("velocity is not solenoidal");

    const double mr = params.mu_r;
    SpectralField Fpre(u.grid, 3, true);
    SpectralField G(u.grid, 3, true);
    SpectralField H(u.grid, 1, false);

    if (mr != 0.0) {
        Fpre.axpy(2.0 * mr, curl(omega));
        G.axpy(2.0 * mr, curl(u));
    }
    G.axpy(-4.0 * mr, omega);
    if (f.kind != ForcingKind::Zero) Fpre += forcing_field(f, theta);
    if (g.kind != ForcingKind::Zero) G += forcing_field(g, theta);
    if (opt.nonlinear) {
        Fpre.axpy(-1.0, advect(u, u));
        G.axpy(-1.0, advect(u, omega));
        H.axpy(-1.0, advect(u, theta));
        H += dissipation_phi(u, omega, params);
        H *= 1.0 / params.cv;
    }
    Rhs r{leray_project(Fpre), std::move(G), std::move(H)};
    r.F = dealias(r.F);
    r.G = dealias(r.G);
    r.G.zero_mean();
    r.H = dealias(r.H);
    r.H.mean_zero = r.H.comp(0)[0] == cplx(0.0, 0.0);
    return r;
}

}  // namespace micropolar
