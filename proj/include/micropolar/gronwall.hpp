#pragma once

#include <vector>

namespace micropolar {

// y(t) ≤ Σ a_i t^{-α_i} + Σ b_j ∫_0^t (t-s)^{-β_j} y(s) ds on (0, T].
struct GronwallProblem {
    std::vector<double> a, alpha;
    std::vector<double> b, beta;
    double T = 1.0;

    void validate() const;
};

// n_β = floor(β/(1-β)) + 1 with β the largest kernel exponent.
int gronwall_nbeta(const GronwallProblem& p);

// Explicit constant for the closed-form bound, obtained by iterating the
// inequality n_β times and closing with the classical Gronwall argument:
// C = M max(1, G^{n+1} / (Γ_min (1 - α_max))), M = max(1, G^n Γ(1-α_max)/Γ_min),
// G = max_j Γ(1-β_j), Γ_min the minimum of Γ on (0, ∞). C = 1 without kernels.
double gronwall_constant(const GronwallProblem& p);

// C Σ a_i t^{-α_i} (1 + B_{n+1} e^{C B_{n+1}}) Σ_{k≤n} B_k with B_k = (Σ b_j t^{1-β_j})^k.
double gronwall_bound(const GronwallProblem& p, double t);

struct GronwallCurve {
    std::vector<double> t, y;
};

// Solves the inequality as an equality on the graded grid t_k = T (k/K)^grading.
// The singular part Σ a_i t^{-α_i} is integrated exactly; the continuous
// remainder uses product integration with exact weights for (t-s)^{-β} against
// piecewise-linear interpolants. Nodes with t = 0 are omitted when some α_i > 0.
GronwallCurve gronwall_oracle(const GronwallProblem& p, int intervals = 2000, double grading = 3.0);

// Exact solution of the equality as a series of monomials in t (independent check
// of the grid oracle).
double gronwall_series(const GronwallProblem& p, double t);

struct GronwallComparison {
    int points = 0;
    int violations = 0;  // nodes where the bound falls below the oracle
    double min_ratio = 0.0;  // min bound / oracle
    bool pass = false;       // violations ≤ 1% of the nodes
};

GronwallComparison compare_gronwall(const GronwallProblem& p, int intervals = 2000);

}  // namespace micropolar
