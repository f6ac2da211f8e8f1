#pragma once

#include <array>
#include <string>
#include <vector>

namespace micropolar {

// Integrability exponents (p, q, r), base smoothness (alpha0, beta0, gamma0),
// the negative-power shifts delta, the nine intermediate exponents used by the
// weighted norms, and the decay rates of the global estimate.
struct ExponentConfig {
    double p = 2.0, q = 2.0, r = 2.0;
    double alpha0 = 0.5, beta0 = 0.5, gamma0 = 0.0;
    std::array<double, 3> delta{0.0, 0.0, 0.0};
    std::array<double, 3> alpha{0.0, 0.0, 0.0};
    std::array<double, 3> beta{0.0, 0.0, 0.0};
    std::array<double, 3> gamma{0.0, 0.0, 0.0};
    double lambda = 0.0, lambda1 = 0.0, lambda2 = 0.0;  // 0 means unset
    bool has_intermediates = false;
    bool has_rates() const { return lambda > 0.0; }
};

enum class CheckLevel { Base, Regularity, Classical };

enum class Relation { Less, LessEq, Equal, Greater, GreaterEq };

struct Inequality {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    Relation rel = Relation::GreaterEq;
    double slack = 0.0;  // signed distance, positive when satisfied with room
    bool ok = true;
};

struct Verdict {
    bool pass = true;
    std::vector<Inequality> evaluated;
    std::vector<Inequality> violations;
    const Inequality* find(const std::string& name) const;
};

inline constexpr double kBranchTol = 1e-12;

// Which side of each two-way branch applies: false = strict, true = equality.
struct BranchChoice {
    bool beta1_equality = false;
    bool gamma1_equality = false;
    bool gamma2_equality = false;
    bool any_equality() const { return beta1_equality || gamma1_equality || gamma2_equality; }
};

BranchChoice branches(const ExponentConfig& c);

// Evaluates every inequality of the requested level. Base also checks the
// intermediate exponents (boxes, estimate hypotheses, coupling constraints,
// branch conditions) when cfg.has_intermediates, and the rate chain when
// cfg.has_rates().
Verdict check_config(const ExponentConfig& cfg, CheckLevel level);

struct SelectionResult {
    bool feasible = false;
    ExponentConfig config;
    double resolution = 0.0;               // lattice step that succeeded
    std::vector<std::string> binding;      // constraints blocking each failed group
    std::vector<std::string> notes;
};

// Picks delta by the midpoint rule, then searches lattices of step 1/32 down
// to 1/256 for the remaining exponents. Equality branches are set exactly.
SelectionResult select_intermediate(const ExponentConfig& base);

// Largest delta interval allowed for base exponent b with Lebesgue exponent s.
double delta_upper(double base, double s);

// Fills lambda = Λ1/2, lambda1 = 3Λ1/4 and lambda2 midway in its interval.
void set_default_rates(ExponentConfig& cfg, double Lambda1);

std::string to_string(CheckLevel l);
CheckLevel check_level_from_string(const std::string& s);

}  // namespace micropolar
