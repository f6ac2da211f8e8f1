#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "micropolar/exponents.hpp"
#include "micropolar/nonlinear.hpp"
#include "micropolar/spectral.hpp"

namespace micropolar {

// Euler beta function through log-gamma.
double beta_function(double x, double y);

// Exponential quadrature weights: phi1(z) = (1 - e^{-z})/z and
// psi2(z) = (1 - e^{-z}(1 + z))/z², both continuous at z = 0.
double phi1(double z);
double psi2(double z);

// Everything that defines the evolution besides the initial data.
struct ProblemSpec {
    CouplingParams params;
    ForcingSpec f;
    ForcingSpec g;
    ExponentConfig exponents;
};

struct PicardConfig {
    double T = 1.0;
    int nodes_per_unit = 64;
    int m_max = 30;
    double tol = 1e-9;
    bool graded = false;       // t_j = T (j/J)² instead of uniform nodes
    bool linear_only = false;  // drop transport and dissipation terms
    bool enforce_horizon = false;

    void validate() const;
    int intervals() const;
};

std::vector<double> time_grid(const PicardConfig& cfg);

struct TrajectoryState {
    std::vector<double> times;
    std::vector<SpectralField> u, w, th;              // current iterate
    std::vector<SpectralField> F, G, H;               // right-hand sides of the current iterate
    std::vector<SpectralField> free_u, free_w, free_th;  // semigroup applied to the data
    int m = 0;

    std::size_t nodes() const { return times.size(); }
};

// One weighted norm of the convergence set: t^{offset} ‖field(t)‖_{space}.
struct WeightedNorm {
    int field = 0;  // 0 velocity, 1 microrotation, 2 temperature
    NormRequest req;
    double offset = 0.0;
    std::string tag;
};

// The nine (α_i, β_i, γ_i) norms with offsets α_i − α0 etc., or the three
// base norms when no intermediates are set.
std::vector<WeightedNorm> weighted_norms(const ExponentConfig& e, const CouplingParams& params);

// values[k][j] = t_j^{offset_k} ‖field_k(t_j)‖ (0 at t = 0 when offset > 0).
std::vector<std::vector<double>> weighted_profiles(const TrajectoryState& s, const std::vector<WeightedNorm>& set);

// sup_j t_j^{offset_k} ‖a_k(t_j) − b_k(t_j)‖ for every k of the set.
std::vector<double> weighted_sup_differences(const TrajectoryState& a, const TrajectoryState& b,
                                             const std::vector<WeightedNorm>& set);
// The maximum of the above over k.
double weighted_sup_difference(const TrajectoryState& a, const TrajectoryState& b,
                               const std::vector<WeightedNorm>& set);

OperatorSymbol velocity_operator(const GridSpec& g);
OperatorSymbol microrotation_operator(const GridSpec& g, const CouplingParams& p);
OperatorSymbol temperature_operator(const GridSpec& g);

void recompute_rhs(TrajectoryState& s, const ProblemSpec& prob, bool linear_only);

TrajectoryState initial_trajectory(const SpectralField& u0, const SpectralField& w0, const SpectralField& th0,
                                   const ProblemSpec& prob, const PicardConfig& cfg);

// All I_j = ∫_0^{t_j} e^{-(t_j - s)Λ} N(s) ds for a node-sampled N, with N
// linear between nodes and exact exponential weights per mode.
std::vector<SpectralField> duhamel_trajectory(const OperatorSymbol& op, const std::vector<double>& times,
                                              const std::vector<SpectralField>& N);
SpectralField duhamel_integral(const OperatorSymbol& op, const std::vector<double>& times,
                               const std::vector<SpectralField>& N, std::size_t node);

TrajectoryState picard_step(const TrajectoryState& s, const ProblemSpec& prob, const PicardConfig& cfg);

struct PicardReport {
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
    std::vector<double> diffs;   // weighted difference between iterates m and m+1
    std::vector<double> ratios;  // diffs[m] / diffs[m-1]
    std::vector<std::vector<double>> norm_diffs;  // norm_diffs[m][k]: per-norm parts of diffs[m]
    std::vector<std::string> norm_tags;
    // profiles[m][k][j]: weighted norms of iterate m (m = 0 is the free trajectory).
    std::vector<std::vector<std::vector<double>>> profiles;
    std::vector<std::string> warnings;
    std::string message;
};

struct HorizonReport;

struct PicardResult {
    TrajectoryState state;
    PicardReport report;
};

PicardResult picard_solve(const SpectralField& u0, const SpectralField& w0, const SpectralField& th0,
                          const ProblemSpec& prob, const PicardConfig& cfg, const HorizonReport* horizon = nullptr,
                          bool keep_profiles = false);

// Semigroup constant C_{op,a,λ} = sup_{μ ≥ μ_min} (a/e)^a (μ/(μ − λ))^a, exact for p = 2.
double semigroup_constant(double a, double lambda, double mu_min);

// Constants of the nine estimates, in the order velocity transport,
// microrotation transport, heat transport, dissipation, rotation coupling
// into velocity, microrotation damping, rotation coupling into
// microrotation, buoyancy, heat torque.
struct EstimateConstants {
    std::array<double, 9> C{};
    bool set = false;
    double semigroup_scale = 1.0;  // multiplies every semigroup constant
    double lambda = 0.0;           // rate used in the semigroup constants
    double Lambda1 = 1.0;          // smallest nonzero eigenvalue of A and B
};

struct KmTracker {
    std::vector<double> times;
    std::array<std::vector<double>, 9> K0;
    std::vector<std::array<std::vector<double>, 9>> history;  // history[m] = K^m
    bool converged = false;
    int iterations = 0;
    bool monotone = true;  // K^m ≤ K^{m+1} at every sample

    const std::array<std::vector<double>, 9>& last() const { return history.back(); }
};

// Running-sup K^0 samples from the free trajectory.
std::array<std::vector<double>, 9> k0_samples(const TrajectoryState& s, const ExponentConfig& e,
                                              const CouplingParams& params);

KmTracker km_recursion(const std::array<std::vector<double>, 9>& K0, const std::vector<double>& times,
                       const ExponentConfig& e, const ProblemSpec& prob, const EstimateConstants& c,
                       int m_max = 200, double tol = 1e-10);

// Checks ‖iterate m‖ weighted ≤ K^m at every node, for all m recorded in both.
struct DominationResult {
    bool holds = true;
    double worst_ratio = 0.0;
    int worst_m = -1;
};
DominationResult km_dominates(const KmTracker& tr, const PicardReport& rep);

struct HorizonReport {
    double T_star = 0.0;
    double T_requested = 0.0;
    bool degenerate = false;
    bool equality_case = false;
    bool zero_data = false;
    double cbar = 0.0;
    double a = 0.0, b = 0.0;
    std::vector<double> times;
    std::vector<double> factor;  // largest contraction factor or spectral radius per node
};

// Roots of λ³ + c2 λ² + c1 λ + c0.
std::array<std::complex<double>, 3> cubic_roots(double c2, double c1, double c0);
double spectral_radius3(const std::array<std::array<double, 3>, 3>& m);

HorizonReport local_horizon(const std::array<std::vector<double>, 9>& K0, const std::vector<double>& times,
                            const ExponentConfig& e, const ProblemSpec& prob, const EstimateConstants& c);

struct GlobalOptions {
    double T_total = 5.0;
    double t_start = 0.0;
    // Called after each window with the window trajectory (absolute times).
    std::function<void(const TrajectoryState&, int)> on_window;
};

struct GlobalResult {
    TrajectoryState state;  // concatenated nodes, absolute times
    std::vector<PicardReport> windows;
    std::vector<double> E;                       // max over the nine E-functions per node
    std::vector<std::vector<double>> E_parts;    // E_parts[k][j]
    double data_norm = 0.0;
    double fitted_linear_constant = 0.0;
    bool growth_flagged = false;
    bool aborted = false;
    std::string message;
};

// Marches windows of length cfg.T, restarting Picard from each window end.
GlobalResult global_solve(const SpectralField& u0, const SpectralField& w0, const SpectralField& th0,
                          const ProblemSpec& prob, const PicardConfig& cfg, const GlobalOptions& opt);

// ‖u0‖_{X^{α0}} + ‖ω0‖_{Y^{β0}} + ‖θ0‖_{Z^{γ0}}.
double data_norm(const SpectralField& u0, const SpectralField& w0, const SpectralField& th0,
                 const ExponentConfig& e, const CouplingParams& params);

}  // namespace micropolar
