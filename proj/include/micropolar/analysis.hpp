#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "micropolar/mild_solver.hpp"

namespace micropolar {

struct EnsembleConfig {
    GridSpec grid{};
    int size = 100;
    std::uint64_t seed = 7;
    double sigma = 2.0;
    int max_shell = 0;
};

// Ratio statistics of one estimate over two independent ensembles (seed and
// seed + 1). The verdict passes when every ratio is finite and the medians of
// the top decile of the two ensembles agree within 5%.
struct EstimateReport {
    std::string role;
    int ensemble_size = 0;
    double ratio_max = 0.0;
    double ratio_median = 0.0;
    double rerun_ratio_max = 0.0;
    double top_decile_median = 0.0;
    double rerun_top_decile_median = 0.0;
    double fitted_constant = 0.0;  // max over both ensembles ("torus-fitted")
    double reference = 0.0;        // analytic bound when one exists, else 0
    bool pass = false;
    std::vector<double> ratios;  // first ensemble, in draw order
    std::string notes;
};

EstimateReport summarize_ratios(const std::string& role, const std::vector<double>& first,
                                const std::vector<double>& second, const std::string& notes);

// Smoothing of the semigroup generated by one of A, Γ, B at rate λ:
// smoothing:  sup_t t^α e^{λt} ‖Op^α e^{-t Op} u‖ / ‖u‖,
// difference: sup_t ‖(e^{-t Op} - I) u‖ / (t^α ‖u‖_{Op^α}),
// vanishing:  fraction of fields whose t^α ‖Op^α e^{-t Op} u‖ decreases along a
//             dyadic sequence t → 0 (a finite proxy; it cannot certify a limit).
struct SmoothingResult {
    EstimateReport smoothing;
    EstimateReport difference;
    double vanishing_fraction = 0.0;
    double analytic_bound = 0.0;  // (α/e)^α (μ_min/(μ_min - λ))^α
};

SmoothingResult verify_smoothing(OperatorKind kind, double alpha, double lambda, double p,
                                 const EnsembleConfig& ens, const CouplingParams& params = {});

// Sup over t ≥ 0 of t^α μ^α e^{-(μ-λ)t} for one eigenvalue μ.
double single_mode_smoothing_sup(double alpha, double mu, double lambda);

// ‖u‖_{W^{k,s}} / ‖u‖_{X^α_p} over solenoidal fields; requires
// 1/p - (2α - k)/d ≤ 1/s ≤ 1/p with d the torus dimension.
EstimateReport verify_embeddings(double alpha, double p, int k, double s, const EnsembleConfig& ens);

enum class EstimateRole {
    VelocityTransport,
    MicrorotationTransport,
    HeatTransport,
    Dissipation,
    RotationCouplingVelocity,
    MicrorotationDamping,
    RotationCouplingMicrorotation,
    Buoyancy,
    HeatTorque,
};

std::string to_string(EstimateRole r);
EstimateRole estimate_role_from_string(const std::string& s);
std::vector<EstimateRole> all_estimate_roles();

// Fields entering one evaluation: two solenoidal velocities, a microrotation
// and a mean-zero temperature.
struct EstimateSample {
    SpectralField u, v, w, th;
};

EstimateSample draw_estimate_sample(const GridSpec& g, std::mt19937_64& rng, double sigma = 2.0, int max_shell = 0);

// LHS/RHS of one estimate (0 when the LHS vanishes).
double estimate_ratio(EstimateRole role, const EstimateSample& s, const ProblemSpec& prob);

// Fits the estimate constant over random ensembles. The exponents must pass
// the base check and carry intermediates.
EstimateReport verify_bilinear(EstimateRole role, const ProblemSpec& prob, const EnsembleConfig& ens);

// Fits every constant and packages them for the bound recursion, each
// multiplied by `inflate`.
EstimateConstants fit_estimate_constants(const ProblemSpec& prob, const EnsembleConfig& ens, double inflate = 1.1);

struct DecayFit {
    std::string tag;
    bool near_zero = true;  // log-log slope near 0, else semilog rate at large t
    double t_lo = 0.0, t_hi = 0.0;
    double fitted = 0.0;    // slope or rate
    double expected = 0.0;  // lower bound the fit is compared with
    double residual = 0.0;  // RMS residual of the linear fit in log space
    bool pass = false;
    bool skipped = false;
    std::string note;
    std::vector<double> t, value;  // samples used in the fit
};

struct DecayConfig {
    ExponentConfig exponents;
    CouplingParams params;
    double small_t_hi = 0.05;  // near-zero window (0, small_t_hi]
    double large_t_lo = 1.0, large_t_hi = 5.0;
    double slope_tol = 0.1;
    double residual_tol = 0.05;
    bool near_zero = true;
    bool large_t = false;
    bool include_x1 = true;  // also fit the X¹ endpoint of the velocity
};

std::vector<DecayFit> fit_decay(const TrajectoryState& traj, const DecayConfig& cfg);

// Least squares line through (x, y); returns slope, intercept and RMS residual.
struct LineFit {
    double slope = 0.0, intercept = 0.0, rms = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct ResidualReport {
    std::vector<double> times;  // interior nodes
    std::vector<double> res_u, res_w, res_th;
    double max_residual = 0.0;
    // sup_t t^{1+α-α0} ‖d_t u‖_{X^α} over the nine exponents (finite means bounded).
    double weighted_derivative_sup = 0.0;
    double residual_at(double t) const;  // max of the three residuals at node t
};

struct ResidualOptions {
    // If set, returns the exact time derivative of field (0,1,2) at node j.
    std::function<SpectralField(int, std::size_t)> exact_derivative;
};

// ‖d_t u + A u - F‖₂ etc. at interior nodes with second-order central
// differences (non-uniform weights on graded grids).
ResidualReport verify_residual(const PicardResult& run, const ProblemSpec& prob, const ResidualOptions& opt = {});

// Empirical order log2(coarse/fine).
double empirical_order(double coarse, double fine);

// Largest L2 distance between two trajectories over the nodes they share.
double trajectory_distance(const TrajectoryState& a, const TrajectoryState& b);

struct DependenceReport {
    double data_difference = 0.0;  // D0 of the data difference
    double max_difference = 0.0;   // weighted sup difference of the trajectories
    double ratio = 0.0;            // max_difference / D0
    std::vector<double> per_node;  // weighted difference per node
};

DependenceReport verify_dependence(const PicardResult& a, const PicardResult& b, const ProblemSpec& prob);

struct DependenceComparison {
    double relative_change = 0.0;
    bool linear = false;  // ratios agree within tol
};
DependenceComparison compare_dependence(const DependenceReport& a, const DependenceReport& b, double tol = 0.2);

struct HoelderReport {
    double quotient = 0.0;
    double t_at = 0.0, h_at = 0.0;
    double small_h_quotient = 0.0;  // sup over the pairs at the smallest spacing
    bool blowup_suspected = false;  // the small-spacing quotient dominates
};

// sup over node pairs in [tau, T] of ‖u(t+h) - u(t)‖_{X¹}/h^{α̂}.
HoelderReport verify_time_hoelder(const TrajectoryState& traj, double alpha_hat, double tau, double p = 2.0);

struct EnergyReport {
    std::vector<double> times;
    std::vector<double> energy;       // ½‖u‖² + ½‖ω‖² + c_v ∫θ
    std::vector<double> kinetic;      // ½‖u‖² + ½‖ω‖²
    std::vector<double> dissipation;  // ∫Φ(u; ω)
    std::vector<double> forcing_work; // ∫f(θ)·u + ∫g(θ)·ω
    std::vector<double> identity_residual;  // d/dt kinetic + ∫Φ - work at interior nodes
    double relative_drift = 0.0;      // max |E - E(0)| / max(E(0), 1e-12)
    bool kinetic_monotone = true;
    bool conservation_checked = false;  // only with zero forcing
};

EnergyReport energy_report(const TrajectoryState& traj, const ProblemSpec& prob);

}  // namespace micropolar
