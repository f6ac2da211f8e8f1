#pragma once

#include <array>
#include <string>

#include "micropolar/spectral.hpp"

namespace micropolar {

// Physical coefficients. The generators A and B are -PΔ and -Δ, which fixes
// the normalization rho = 1, mu + mu_r = 1, kappa = 1; validate() enforces it.
struct CouplingParams {
    double mu = 0.9;
    double mu_r = 0.1;
    double c0 = 0.5;
    double ca = 0.25;
    double cd = 0.75;
    double kappa = 1.0;
    double cv = 1.0;
    double rho = 1.0;

    void validate() const;
    double gamma_transverse() const { return ca + cd; }
    double gamma_longitudinal() const { return c0 + 2.0 * cd; }
    static CouplingParams with_mu_r(double mu_r);
};

enum class ForcingKind { Zero, Linear, SaturatingTanh };

// f(θ) = c θ  or  f(θ) = c tanh(scale θ); both vanish at 0.
struct ForcingSpec {
    ForcingKind kind = ForcingKind::Zero;
    std::array<double, 3> c{0.0, 0.0, 0.0};
    double scale = 1.0;

    double lipschitz() const;
    std::array<double, 3> evaluate(double theta) const;
    void validate() const;
};

std::string to_string(ForcingKind k);
ForcingKind forcing_kind_from_string(const std::string& s);

OperatorSymbol stokes_operator(const GridSpec& g, double power = 1.0);
OperatorSymbol gamma_operator(const GridSpec& g, const CouplingParams& p, double power = 1.0);
OperatorSymbol laplace_operator(const GridSpec& g, double power = 1.0);

// (u·∇)w, dealiased.
SpectralField advect(const SpectralField& u, const SpectralField& w);

// Pointwise grid values of Φ(u,v;ω,ψ) before dealiasing.
PhysicalField dissipation_phi_physical(const SpectralField& u, const SpectralField& v,
                                       const SpectralField& omega, const SpectralField& psi,
                                       const CouplingParams& params);
SpectralField dissipation_phi(const SpectralField& u, const SpectralField& v, const SpectralField& omega,
                              const SpectralField& psi, const CouplingParams& params);
inline SpectralField dissipation_phi(const SpectralField& u, const SpectralField& omega,
                                     const CouplingParams& params) {
    return dissipation_phi(u, u, omega, omega, params);
}

// Forcing f(θ) as a vector field, dealiased.
SpectralField forcing_field(const ForcingSpec& f, const SpectralField& theta);

struct Rhs {
    SpectralField F, G, H;
};

struct RhsOptions {
    bool nonlinear = true;       // transport and dissipation terms
    double solenoidal_tol = 1e-8;
};

Rhs assemble_rhs(const SpectralField& u, const SpectralField& omega, const SpectralField& theta,
                 const CouplingParams& params, const ForcingSpec& f, const ForcingSpec& g,
                 const RhsOptions& opt = {});

}  // namespace micropolar
