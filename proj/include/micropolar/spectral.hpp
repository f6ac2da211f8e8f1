#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "micropolar/errors.hpp"

namespace micropolar {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Torus geometry. Vector fields always carry three components; in two
// dimensions they are independent of z, so rot and the microrotation keep
// their full three-dimensional meaning.
struct GridSpec {
    int dim = 2;
    int n = 16;
    double length = 2.0 * kPi;
    double dealias = 2.0 / 3.0;

    void validate() const;
    std::size_t total() const;  // n^dim
    double cell_volume() const;
    double volume() const;
    bool operator==(const GridSpec& o) const = default;
};

// Per-mode lookup tables for a grid (cached, shared, read-only).
struct ModeTable {
    std::vector<std::array<int, 3>> k;        // integer wavevector, z entry 0 in 2D
    std::vector<std::array<double, 3>> kd;    // derivative wavevector, zero on Nyquist axes
    std::vector<double> k2;                   // |2πk/L|^2 (full, used for eigenvalues)
    std::vector<double> kd2;                  // |kd|^2
    std::vector<std::size_t> neg;             // index of -k
    std::vector<unsigned char> kept;          // inside the dealias cube
};

const ModeTable& modes(const GridSpec& g);

// Storage index of wavevector k (components wrapped into [0, n)).
std::size_t mode_index(const GridSpec& g, std::array<int, 3> k);

struct SpectralField {
    GridSpec grid;
    int components = 1;
    std::vector<cplx> coeffs;  // component-major, FFT ordering inside each component
    bool mean_zero = true;

    SpectralField() = default;
    SpectralField(const GridSpec& g, int comps, bool mz = true);

    cplx* comp(int c) { return coeffs.data() + static_cast<std::size_t>(c) * grid.total(); }
    const cplx* comp(int c) const { return coeffs.data() + static_cast<std::size_t>(c) * grid.total(); }
    bool is_vector() const { return components == 3; }

    SpectralField& operator+=(const SpectralField& o);
    SpectralField& operator-=(const SpectralField& o);
    SpectralField& operator*=(double s);
    void axpy(double a, const SpectralField& x);  // this += a x
    void zero_mean();                              // drop the k=0 mode
    cplx mean(int c = 0) const;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

struct PhysicalField {
    GridSpec grid;
    int components = 1;
    std::vector<double> values;  // component-major, row-major grid points
};

PhysicalField to_physical(const SpectralField& f);
SpectralField to_spectral(const PhysicalField& g);
SpectralField to_spectral(const GridSpec& grid, int components, const std::vector<double>& values);

// Grid coordinate of point index idx along axis a.
double grid_coordinate(const GridSpec& g, std::size_t idx, int axis);
// Sample a function of x (3 entries, z=0 in 2D) on the grid.
PhysicalField sample(const GridSpec& g, int components,
                     const std::function<void(const double* x, double* out)>& fn);

SpectralField leray_project(const SpectralField& v);
SpectralField derivative(const SpectralField& f, int axis);
SpectralField gradient(const SpectralField& scalar);     // 3 components
SpectralField divergence(const SpectralField& v);        // scalar
SpectralField curl(const SpectralField& v);              // 3 components
SpectralField dealias(const SpectralField& f);
bool is_dealiased(const SpectralField& f, double tol = 0.0);

enum class OperatorKind { StokesA, Gamma, LaplaceB };

struct OperatorSymbol {
    OperatorKind kind = OperatorKind::LaplaceB;
    GridSpec grid;
    double power = 1.0;
    // Γ symbol: transverse (c_a+c_d)|κ|², longitudinal (c0+2c_d)|κ|².
    double gamma_transverse = 1.0;
    double gamma_longitudinal = 2.0;

    double smallest_eigenvalue() const;  // over k != 0
};

// Applies fn(eigenvalue) on every spectral subspace of the operator.
// The Stokes operator projects first; Γ splits each mode into its span-of-k
// and transverse parts; B acts componentwise.
SpectralField apply_spectral_function(const OperatorSymbol& op, const SpectralField& f,
                                      const std::function<double(double)>& fn);

// L2 mass of f on each eigenvalue of op, merged over equal eigenvalues, so that
// ‖fn(op) f‖₂² = Σ fn(μ)² mass + fixed and ‖fn(op) f − f‖₂² = Σ (fn(μ) − 1)² mass + outside.
// `fixed` is mass the operator passes through untouched (Stokes modes with no
// dealiased wavevector); `outside` is mass the Stokes projection removes.
struct ModalEnergy {
    std::vector<double> eigenvalue;
    std::vector<double> mass;
    double fixed = 0.0;
    double outside = 0.0;
};
ModalEnergy modal_energy(const OperatorSymbol& op, const SpectralField& f);

SpectralField apply_operator(const OperatorSymbol& op, const SpectralField& f);
SpectralField semigroup_apply(const OperatorSymbol& op, double t, const SpectralField& f);

enum class Space { Lp, Wks, Xalpha, Ybeta, Zgamma };

struct NormRequest {
    Space space = Space::Lp;
    double s = 2.0;      // Lebesgue exponent (p, q or r for the fractional spaces)
    int k = 0;           // Sobolev order
    double power = 0.0;  // α, β or γ
    // Γ coefficients used by Ybeta.
    double gamma_transverse = 1.0;
    double gamma_longitudinal = 2.0;

    static NormRequest lp(double s) { return {Space::Lp, s, 0, 0.0}; }
    static NormRequest wks(int k, double s) { return {Space::Wks, s, k, 0.0}; }
    static NormRequest xalpha(double a, double p) { return {Space::Xalpha, p, 0, a}; }
    static NormRequest ybeta(double b, double q, double gt = 1.0, double gl = 2.0) {
        return {Space::Ybeta, q, 0, b, gt, gl};
    }
    static NormRequest zgamma(double c, double r) { return {Space::Zgamma, r, 0, c}; }
};

double norm(const SpectralField& f, const NormRequest& req);
double lp_norm(const PhysicalField& g, double s);
double l2_coefficient_norm(const SpectralField& f);  // Parseval side
double integral(const SpectralField& scalar);        // ∫ f dx
double inner(const SpectralField& a, const SpectralField& b);  // ∫ a·b dx

double lambda1(const GridSpec& g);

struct RandomFieldOptions {
    double sigma = 2.0;        // |coeff| ~ |k|^-sigma
    bool solenoidal = false;
    bool dealiased = true;     // only modes inside the dealias cube
    int max_shell = 0;         // if > 0, only |k|_inf <= max_shell
};

SpectralField random_field(const GridSpec& g, int components, std::mt19937_64& rng,
                           const RandomFieldOptions& opt = {});

// Single real Fourier mode a·cos(κ·x) in component c (or scalar).
SpectralField single_mode(const GridSpec& g, int components, std::array<int, 3> k,
                          std::array<double, 3> amplitude);

}  // namespace micropolar
