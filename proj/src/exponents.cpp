#include "micropolar/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>

#include "micropolar/errors.hpp"

namespace micropolar {

namespace {

constexpr double kTol = 1e-12;

bool holds(double lhs, double rhs, Relation rel, double& slack) {
    switch (rel) {
        case Relation::Less: slack = rhs - lhs; return slack > kTol;
        case Relation::LessEq: slack = rhs - lhs; return slack >= -kTol;
        case Relation::Greater: slack = lhs - rhs; return slack > kTol;
        case Relation::GreaterEq: slack = lhs - rhs; return slack >= -kTol;
        case Relation::Equal: slack = -std::abs(lhs - rhs); return slack >= -kTol;
    }
    return false;
}

// Records every inequality with its name.
struct Recorder {
    Verdict* v;
    void operator()(const char* name, double lhs, Relation rel, double rhs) {
        Inequality q;
        q.name = name;
        q.lhs = lhs;
        q.rhs = rhs;
        q.rel = rel;
        q.ok = holds(lhs, rhs, rel, q.slack);
        v->evaluated.push_back(q);
        if (!q.ok) {
            v->violations.push_back(q);
            v->pass = false;
        }
    }
};

// Fast predicate for the lattice search.
struct Predicate {
    bool ok = true;
    const char* first_failure = nullptr;
    void operator()(const char* name, double lhs, Relation rel, double rhs) {
        if (!ok) return;
        double s;
        if (!holds(lhs, rhs, rel, s)) {
            ok = false;
            first_failure = name;
        }
    }
};

using R = Relation;

template <class S>
void base_first(const ExponentConfig& c, S& add) {
    const double ip = 1.0 / c.p, iq = 1.0 / c.q, ir = 1.0 / c.r;
    add("p > 1", c.p, R::Greater, 1.0);
    add("q > 1", c.q, R::Greater, 1.0);
    add("r > 1", c.r, R::Greater, 1.0);
    add("|1/p - 1/q| < 1/3", std::abs(ip - iq), R::Less, 1.0 / 3.0);
    add("1/p - 1/(2r) < 1/3", ip - 0.5 * ir, R::Less, 1.0 / 3.0);
    add("1/r - 1/p < 2/3", ir - ip, R::Less, 2.0 / 3.0);
    add("1/q - 1/(2r) < 1/3", iq - 0.5 * ir, R::Less, 1.0 / 3.0);
    add("1/r - 1/q < 2/3", ir - iq, R::Less, 2.0 / 3.0);
}

template <class S>
void base_second(const ExponentConfig& c, S& add) {
    const double ip = 1.0 / c.p, iq = 1.0 / c.q, ir = 1.0 / c.r;
    add("alpha0 >= max{0, 3/(2p) - 1/2}", c.alpha0, R::GreaterEq, std::max(0.0, 1.5 * ip - 0.5));
    add("alpha0 < 1", c.alpha0, R::Less, 1.0);
    add("beta0 >= 0", c.beta0, R::GreaterEq, 0.0);
    add("beta0 < 1", c.beta0, R::Less, 1.0);
    add("gamma0 >= 0", c.gamma0, R::GreaterEq, 0.0);
    add("gamma0 < 1", c.gamma0, R::Less, 1.0);
    add("alpha0 - beta0 - 3/2(1/p - 1/q) <= 1/2", c.alpha0 - c.beta0 - 1.5 * (ip - iq), R::LessEq, 0.5);
    add("alpha0 - gamma0/2 - 3/2(1/p - 1/(2r)) >= 0", c.alpha0 - 0.5 * c.gamma0 - 1.5 * (ip - 0.5 * ir),
        R::GreaterEq, 0.0);
    double e1 = c.alpha0 - c.gamma0 - 1.5 * (ip - ir);
    add("alpha0 - gamma0 - 3/2(1/p - 1/r) > -1", e1, R::Greater, -1.0);
    add("alpha0 - gamma0 - 3/2(1/p - 1/r) <= 1", e1, R::LessEq, 1.0);
    add("beta0 - gamma0/2 - 3/2(1/q - 1/(2r)) >= 0", c.beta0 - 0.5 * c.gamma0 - 1.5 * (iq - 0.5 * ir),
        R::GreaterEq, 0.0);
    double e2 = c.beta0 - c.gamma0 - 1.5 * (iq - ir);
    add("beta0 - gamma0 - 3/2(1/q - 1/r) > -1", e2, R::Greater, -1.0);
    add("beta0 - gamma0 - 3/2(1/q - 1/r) <= 1", e2, R::LessEq, 1.0);
}

template <class S>
void regularity(const ExponentConfig& c, S& add) {
    const double ip = 1.0 / c.p, iq = 1.0 / c.q, ir = 1.0 / c.r;
    const double a = c.alpha0, b = c.beta0, g = c.gamma0;
    const double s = 1.5 * ip - 0.5;
    add("alpha0 >= 3(1/p - 1/(2r))", a, R::GreaterEq, 3.0 * (ip - 0.5 * ir));
    add("beta0 >= max{3/(2p) - 1/2, 3(1/q - 1/(2r))}", b, R::GreaterEq, std::max(s, 3.0 * (iq - 0.5 * ir)));
    add("gamma0 >= 3/(2p) - 1/2", g, R::GreaterEq, s);
    add("alpha0 >= 3/2(1/p + 1/q - 1/r)", a, R::GreaterEq, 1.5 * (ip + iq - ir));
    add("beta0 >= 3/2(1/p + 1/q - 1/r)", b, R::GreaterEq, 1.5 * (ip + iq - ir));
    add("alpha0 - gamma0 >= 3/2(1/p - 1/q) - 1/2", a - g, R::GreaterEq, 1.5 * (ip - iq) - 0.5);
    add("beta0 - gamma0 >= 3/2(1/q - 1/p) - 1/2", b - g, R::GreaterEq, 1.5 * (iq - ip) - 0.5);
    add("beta0 - alpha0 > -1/2", b - a, R::Greater, -0.5);
    add("beta0 - gamma0 > -1/2", b - g, R::Greater, -0.5);
    add("2 alpha0 - beta0 >= max{3/(2p) - 1/2, 3(1/p - 1/(2r))}", 2 * a - b, R::GreaterEq,
        std::max(s, 3.0 * (ip - 0.5 * ir)));
    add("2 alpha0 - gamma0 >= 3/(2p) - 1/2", 2 * a - g, R::GreaterEq, s);
    add("2 beta0 - alpha0 >= 3(1/q - 1/(2r))", 2 * b - a, R::GreaterEq, 3.0 * (iq - 0.5 * ir));
    add("alpha0 + beta0 - gamma0 >= 3/(2p) - 1/2", a + b - g, R::GreaterEq, s);
    add("alpha0 - beta0 + gamma0 >= 3/(2p) - 1/2", a - b + g, R::GreaterEq, s);
    double e1 = a - g - 1.5 * (iq - ir);
    add("alpha0 - gamma0 - 3/2(1/q - 1/r) > -1", e1, R::Greater, -1.0);
    add("alpha0 - gamma0 - 3/2(1/q - 1/r) <= 1", e1, R::LessEq, 1.0);
    double e2 = b - g - 1.5 * (ip - ir);
    add("beta0 - gamma0 - 3/2(1/p - 1/r) > -1", e2, R::Greater, -1.0);
    add("beta0 - gamma0 - 3/2(1/p - 1/r) <= 1", e2, R::LessEq, 1.0);
}

template <class S>
void classical(const ExponentConfig& c, S& add) {
    const double ip = 1.0 / c.p, ir = 1.0 / c.r;
    add("q = p", c.q, R::Equal, c.p);
    add("p > 3", c.p, R::Greater, 3.0);
    add("r > 3", c.r, R::Greater, 3.0);
    add("1/p - 1/(2r) <= 0", ip - 0.5 * ir, R::LessEq, 0.0);
    add("1/r - 1/p < 2/3", ir - ip, R::Less, 2.0 / 3.0);
}

template <class S>
void delta_rule(const ExponentConfig& c, S& add) {
    const double base[3] = {c.alpha0, c.beta0, c.gamma0};
    const double sx[3] = {c.p, c.q, c.r};
    const char* zero_names[3] = {"delta1 = 0 when alpha0 > 0", "delta2 = 0 when beta0 > 0",
                                 "delta3 = 0 when gamma0 > 0"};
    const char* pos_names[3] = {"delta1 > 0 when alpha0 = 0", "delta2 > 0 when beta0 = 0",
                                "delta3 > 0 when gamma0 = 0"};
    const char* up_names[3] = {"delta1 < 1/2 + 3/2(1 - 1/p)", "delta2 < 1/2 + 3/2(1 - 1/q)",
                               "delta3 < 1/2 + 3/2(1 - 1/r)"};
    for (int i = 0; i < 3; ++i) {
        if (base[i] > 0.0) add(zero_names[i], c.delta[i], R::Equal, 0.0);
        else add(pos_names[i], c.delta[i], R::Greater, 0.0);
        add(up_names[i], c.delta[i], R::Less, 0.5 + 1.5 * (1.0 - 1.0 / sx[i]));
    }
}

// Velocity self-transport exponent alpha1.
template <class S>
void group_alpha1(const ExponentConfig& c, S& add) {
    const double a1 = c.alpha[0], d1 = c.delta[0];
    add("alpha1 > alpha0", a1, R::Greater, c.alpha0);
    add("alpha1 < 1 - delta1", a1, R::Less, 1.0 - d1);
    add("velocity transport: alpha1 > 0", a1, R::Greater, 0.0);
    add("velocity transport: alpha1 + delta1 > 1/2", a1 + d1, R::Greater, 0.5);
    add("velocity transport: 2 alpha1 + delta1 >= 3/(2p) + 1/2", 2 * a1 + d1, R::GreaterEq, 1.5 / c.p + 0.5);
    add("2 alpha1 + delta1 <= 1 + alpha0", 2 * a1 + d1, R::LessEq, 1.0 + c.alpha0);
    add("beta argument 1 + 2(alpha0 - alpha1) > 0", 1.0 + 2.0 * (c.alpha0 - a1), R::Greater, 0.0);
}

// Rotation coupling into the velocity equation, exponent beta1.
template <class S>
void group_beta1(const ExponentConfig& c, S& add) {
    const double b1 = c.beta[0], d1 = c.delta[0];
    const double pq = 1.5 * (1.0 / c.q - 1.0 / c.p);
    add("beta1 > beta0", b1, R::Greater, c.beta0);
    add("beta1 < 1 - delta2", b1, R::Less, 1.0 - c.delta[1]);
    add("rotation into velocity: beta1 >= 0", b1, R::GreaterEq, 0.0);
    add("rotation into velocity: beta1 > 3/2(1/q - 1/p)", b1, R::Greater, pq);
    add("rotation into velocity: beta1 + delta1 >= 3/2(1/q - 1/p) + 1/2", b1 + d1, R::GreaterEq, pq + 0.5);
    double e = c.alpha0 - c.beta0 - 1.5 * (1.0 / c.p - 1.0 / c.q);
    if (std::abs(e - 0.5) <= kBranchTol)
        add("beta1 + delta1 = 1 - alpha0 + beta0 (boundary branch)", b1 + d1, R::Equal, 1.0 - c.alpha0 + c.beta0);
    else if (e < 0.5)
        add("beta1 + delta1 < 1 - alpha0 + beta0", b1 + d1, R::Less, 1.0 - c.alpha0 + c.beta0);
    else
        add("beta1 branch undefined: alpha0 - beta0 - 3/2(1/p - 1/q) <= 1/2", e, R::LessEq, 0.5);
    add("beta argument 1 + beta0 - beta1 > 0", 1.0 + c.beta0 - b1, R::Greater, 0.0);
}

// Microrotation transport and rotation coupling, exponents alpha2, beta2.
template <class S>
void group_pair2(const ExponentConfig& c, S& add) {
    const double a2 = c.alpha[1], b2 = c.beta[1], d2 = c.delta[1];
    const double pq = 1.5 * (1.0 / c.p - 1.0 / c.q);
    add("alpha2 > alpha0", a2, R::Greater, c.alpha0);
    add("alpha2 < 1 - delta1", a2, R::Less, 1.0 - c.delta[0]);
    add("beta2 > beta0", b2, R::Greater, c.beta0);
    add("beta2 < 1 - delta2", b2, R::Less, 1.0 - d2);
    add("microrotation transport: alpha2 >= 0", a2, R::GreaterEq, 0.0);
    add("microrotation transport: beta2 >= 0", b2, R::GreaterEq, 0.0);
    add("microrotation transport: alpha2 > 3/2(1/p - 1/q)", a2, R::Greater, pq);
    add("microrotation transport: beta2 + delta2 > 1/2", b2 + d2, R::Greater, 0.5);
    add("microrotation transport: alpha2 + beta2 + delta2 >= 3/(2p) + 1/2", a2 + b2 + d2, R::GreaterEq,
        1.5 / c.p + 0.5);
    add("microrotation damping: beta2 <= 1", b2, R::LessEq, 1.0);
    add("rotation into microrotation: alpha2 + delta2 >= 3/2(1/p - 1/q) + 1/2", a2 + d2, R::GreaterEq, pq + 0.5);
    add("alpha2 + beta2 + delta2 <= 1 + alpha0", a2 + b2 + d2, R::LessEq, 1.0 + c.alpha0);
    add("alpha2 + delta2 < 1 + alpha0 - beta0", a2 + d2, R::Less, 1.0 + c.alpha0 - c.beta0);
    add("beta argument 1 + alpha0 + beta0 - alpha2 - beta2 > 0", 1.0 + c.alpha0 + c.beta0 - a2 - b2, R::Greater,
        0.0);
    add("beta argument 1 + alpha0 - alpha2 > 0", 1.0 + c.alpha0 - a2, R::Greater, 0.0);
}

// Heat transport and dissipation, exponents alpha3, beta3, gamma3.
template <class S>
void group_triple3(const ExponentConfig& c, S& add) {
    const double a3 = c.alpha[2], b3 = c.beta[2], g3 = c.gamma[2], d3 = c.delta[2];
    const double ip = 1.0 / c.p, iq = 1.0 / c.q, ir = 1.0 / c.r;
    add("alpha3 > alpha0", a3, R::Greater, c.alpha0);
    add("alpha3 < 1 - delta1", a3, R::Less, 1.0 - c.delta[0]);
    add("beta3 > beta0", b3, R::Greater, c.beta0);
    add("beta3 < 1 - delta2", b3, R::Less, 1.0 - c.delta[1]);
    add("gamma3 > gamma0", g3, R::Greater, c.gamma0);
    add("gamma3 < 1 - delta3", g3, R::Less, 1.0 - d3);
    add("heat transport: alpha3 >= 0", a3, R::GreaterEq, 0.0);
    add("heat transport: gamma3 >= 0", g3, R::GreaterEq, 0.0);
    add("heat transport: alpha3 > 3/2(1/p - 1/r)", a3, R::Greater, 1.5 * (ip - ir));
    add("heat transport: gamma3 + delta3 > 1/2", g3 + d3, R::Greater, 0.5);
    add("heat transport: alpha3 + gamma3 + delta3 >= 3/(2p) + 1/2", a3 + g3 + d3, R::GreaterEq, 1.5 * ip + 0.5);
    add("dissipation: alpha3 >= max{0, 1/2 + 3/2(1/p - 1/(2r))}", a3, R::GreaterEq,
        std::max(0.0, 0.5 + 1.5 * (ip - 0.5 * ir)));
    add("dissipation: alpha3 <= 1", a3, R::LessEq, 1.0);
    add("dissipation: beta3 >= max{0, 1/2 + 3/2(1/q - 1/(2r))}", b3, R::GreaterEq,
        std::max(0.0, 0.5 + 1.5 * (iq - 0.5 * ir)));
    add("dissipation: beta3 <= 1", b3, R::LessEq, 1.0);
    add("alpha3 + gamma3 + delta3 <= 1 + alpha0", a3 + g3 + d3, R::LessEq, 1.0 + c.alpha0);
    add("alpha3 <= alpha0 + (1 - gamma0)/2", a3, R::LessEq, c.alpha0 + 0.5 * (1.0 - c.gamma0));
    add("beta3 <= beta0 + (1 - gamma0)/2", b3, R::LessEq, c.beta0 + 0.5 * (1.0 - c.gamma0));
    add("beta argument 1 + alpha0 + gamma0 - alpha3 - gamma3 > 0", 1.0 + c.alpha0 + c.gamma0 - a3 - g3,
        R::Greater, 0.0);
    add("beta argument 1 + 2(alpha0 - alpha3) > 0", 1.0 + 2.0 * (c.alpha0 - a3), R::Greater, 0.0);
    add("beta argument 1 + alpha0 + beta0 - alpha3 - beta3 > 0", 1.0 + c.alpha0 + c.beta0 - a3 - b3, R::Greater,
        0.0);
    add("beta argument 1 + 2(beta0 - beta3) > 0", 1.0 + 2.0 * (c.beta0 - b3), R::Greater, 0.0);
}

// Buoyancy forcing exponent gamma1.
template <class S>
void group_gamma1(const ExponentConfig& c, S& add) {
    const double g1 = c.gamma[0];
    add("gamma1 > gamma0", g1, R::Greater, c.gamma0);
    add("gamma1 < 1 - delta3", g1, R::Less, 1.0 - c.delta[2]);
    add("buoyancy: gamma1 >= max{0, 3/2(1/r - 1/p)}", g1, R::GreaterEq, std::max(0.0, 1.5 * (1.0 / c.r - 1.0 / c.p)));
    add("buoyancy: gamma1 <= 1", g1, R::LessEq, 1.0);
    double e = c.alpha0 - c.gamma0 - 1.5 * (1.0 / c.p - 1.0 / c.r);
    if (std::abs(e - 1.0) <= kBranchTol)
        add("gamma1 = 1 - alpha0 + gamma0 (boundary branch)", g1, R::Equal, 1.0 - c.alpha0 + c.gamma0);
    else if (std::abs(e) < 1.0)
        add("gamma1 < 1 - alpha0 + gamma0", g1, R::Less, 1.0 - c.alpha0 + c.gamma0);
    else
        add("gamma1 branch undefined: |alpha0 - gamma0 - 3/2(1/p - 1/r)| < 1", std::abs(e), R::Less, 1.0);
    add("beta argument 1 + gamma0 - gamma1 > 0", 1.0 + c.gamma0 - g1, R::Greater, 0.0);
}

// Heat torque exponent gamma2.
template <class S>
void group_gamma2(const ExponentConfig& c, S& add) {
    const double g2 = c.gamma[1];
    add("gamma2 > gamma0", g2, R::Greater, c.gamma0);
    add("gamma2 < 1 - delta3", g2, R::Less, 1.0 - c.delta[2]);
    add("heat torque: gamma2 >= max{0, 3/2(1/r - 1/q)}", g2, R::GreaterEq, std::max(0.0, 1.5 * (1.0 / c.r - 1.0 / c.q)));
    add("heat torque: gamma2 <= 1", g2, R::LessEq, 1.0);
    double e = c.beta0 - c.gamma0 - 1.5 * (1.0 / c.q - 1.0 / c.r);
    if (std::abs(e - 1.0) <= kBranchTol)
        add("gamma2 = 1 - beta0 + gamma0 (boundary branch)", g2, R::Equal, 1.0 - c.beta0 + c.gamma0);
    else if (std::abs(e) < 1.0)
        add("gamma2 < 1 - beta0 + gamma0", g2, R::Less, 1.0 - c.beta0 + c.gamma0);
    else
        add("gamma2 branch undefined: |beta0 - gamma0 - 3/2(1/q - 1/r)| < 1", std::abs(e), R::Less, 1.0);
    add("beta argument 1 + gamma0 - gamma2 > 0", 1.0 + c.gamma0 - g2, R::Greater, 0.0);
}

template <class S>
void rates(const ExponentConfig& c, double, S& add) {
    add("lambda > 0", c.lambda, R::Greater, 0.0);
    add("lambda < lambda1", c.lambda, R::Less, c.lambda1);
    add("lambda < lambda2", c.lambda, R::Less, c.lambda2);
    add("lambda2 < min{2 lambda, lambda1}", c.lambda2, R::Less, std::min(2.0 * c.lambda, c.lambda1));
}

void check_finite(const ExponentConfig& c) {
    auto fin = [](double v, const char* n) {
        if (!std::isfinite(v)) throw ConfigError(std::string("exponent ") + n + " is not finite");
    };
    fin(c.p, "p");
    fin(c.q, "q");
    fin(c.r, "r");
    fin(c.alpha0, "alpha0");
    fin(c.beta0, "beta0");
    fin(c.gamma0, "gamma0");
    for (int i = 0; i < 3; ++i) {
        fin(c.delta[i], "delta");
        fin(c.alpha[i], "alpha_i");
        fin(c.beta[i], "beta_i");
        fin(c.gamma[i], "gamma_i");
    }
    fin(c.lambda, "lambda");
    fin(c.lambda1, "lambda1");
    fin(c.lambda2, "lambda2");
}

template <class S>
void intermediates(const ExponentConfig& c, S& add) {
    delta_rule(c, add);
    group_alpha1(c, add);
    group_beta1(c, add);
    group_pair2(c, add);
    group_triple3(c, add);
    group_gamma1(c, add);
    group_gamma2(c, add);
}

}  // namespace

const Inequality* Verdict::find(const std::string& name) const {
    for (const auto& q : evaluated)
        if (q.name == name) return &q;
    return nullptr;
}

BranchChoice branches(const ExponentConfig& c) {
    BranchChoice b;
    b.beta1_equality = std::abs(c.alpha0 - c.beta0 - 1.5 * (1.0 / c.p - 1.0 / c.q) - 0.5) <= kBranchTol;
    b.gamma1_equality = std::abs(c.alpha0 - c.gamma0 - 1.5 * (1.0 / c.p - 1.0 / c.r) - 1.0) <= kBranchTol;
    b.gamma2_equality = std::abs(c.beta0 - c.gamma0 - 1.5 * (1.0 / c.q - 1.0 / c.r) - 1.0) <= kBranchTol;
    return b;
}

Verdict check_config(const ExponentConfig& cfg, CheckLevel level) {
    check_finite(cfg);
    Verdict v;
    Recorder rec{&v};
    switch (level) {
        case CheckLevel::Classical:
            classical(cfg, rec);
            break;
        case CheckLevel::Regularity:
            base_first(cfg, rec);
            base_second(cfg, rec);
            regularity(cfg, rec);
            break;
        case CheckLevel::Base:
            base_first(cfg, rec);
            base_second(cfg, rec);
            if (cfg.has_intermediates) intermediates(cfg, rec);
            if (cfg.has_rates()) rates(cfg, 0.0, rec);
            break;
    }
    return v;
}

double delta_upper(double base, double s) { return std::min(0.5 + 1.5 * (1.0 - 1.0 / s), 1.0 - base); }

void set_default_rates(ExponentConfig& cfg, double Lambda1) {
    cfg.lambda = 0.5 * Lambda1;
    cfg.lambda1 = 0.75 * Lambda1;
    cfg.lambda2 = 0.5 * (cfg.lambda + std::min(2.0 * cfg.lambda, cfg.lambda1));
}

namespace {

std::vector<double> lattice(double lo, double hi, double h) {
    std::vector<double> out;
    long j0 = static_cast<long>(std::floor(lo / h)) - 1;
    long j1 = static_cast<long>(std::ceil(hi / h)) + 1;
    for (long j = j0; j <= j1; ++j) {
        double x = j * h;
        if (x > lo + kTol && x < hi - kTol) out.push_back(x);
    }
    return out;
}

// Counts failed inequalities at one point.
struct Counter {
    int fails = 0;
    int index = 0;
    std::uint64_t mask = 0;  // bit i set when the i-th inequality fails
    void operator()(const char*, double lhs, Relation rel, double rhs) {
        double s;
        if (!holds(lhs, rhs, rel, s)) {
            ++fails;
            mask |= std::uint64_t{1} << (index & 63);
        }
        ++index;
    }
};

// Names of the inequalities selected by a mask.
struct MaskNames {
    std::uint64_t mask;
    std::vector<std::string>* out;
    const char* prefix;
    int index = 0;
    void operator()(const char* name, double, Relation, double) {
        if (mask & (std::uint64_t{1} << (index & 63))) out->push_back(std::string(prefix) + name);
        ++index;
    }
};

// Tracks the first feasible candidate and, failing that, the candidates with
// the fewest violations; their violations together form the binding report.
template <class Group>
struct GroupSearch {
    Group group;
    bool found = false;
    int best = 1 << 30;
    ExponentConfig best_cfg{};
    std::uint64_t best_mask = 0;

    explicit GroupSearch(Group g) : group(g) {}

    bool visit(const ExponentConfig& c) {
        Predicate pr;
        group(c, pr);
        if (pr.ok) {
            found = true;
            best_cfg = c;
            return true;
        }
        Counter k;
        group(c, k);
        if (k.fails > best) return false;
        if (k.fails < best) {
            best = k.fails;
            best_cfg = c;
            best_mask = 0;
        }
        best_mask |= k.mask;
        return false;
    }

    void finish(ExponentConfig& c, const char* prefix, std::vector<std::string>& binding) {
        if (!found && best == (1 << 30)) {
            binding.push_back(std::string(prefix) + "admissible box is empty");
            return;
        }
        c = best_cfg;
        if (found) return;
        MaskNames names{best_mask, &binding, prefix};
        group(c, names);
    }
};

template <class Group>
GroupSearch<Group> make_search(Group g) {
    return GroupSearch<Group>(g);
}

#define MP_GROUP(fn) [](const ExponentConfig& x, auto& s) { fn(x, s); }

// Searches every exponent group on a lattice of step h; writes the chosen
// point into c and returns true when all groups are feasible.
bool search_groups(ExponentConfig& c, double h, std::vector<std::string>& binding) {
    bool all = true;
    const double a_hi = 1.0 - c.delta[0], b_hi = 1.0 - c.delta[1], g_hi = 1.0 - c.delta[2];
    auto alphas = lattice(c.alpha0, a_hi, h);
    auto betas = lattice(c.beta0, b_hi, h);
    auto gammas = lattice(c.gamma0, g_hi, h);
    BranchChoice br = branches(c);

    {
        auto s = make_search(MP_GROUP(group_alpha1));
        for (double a : alphas) {
            ExponentConfig t = c;
            t.alpha[0] = a;
            if (s.visit(t)) break;
        }
        s.finish(c, "alpha1: ", binding);
        all = all && s.found;
    }
    {
        auto s = make_search(MP_GROUP(group_beta1));
        if (br.beta1_equality) {
            ExponentConfig t = c;
            t.beta[0] = 1.0 - c.alpha0 + c.beta0 - c.delta[0];
            s.visit(t);
        } else {
            for (double b : betas) {
                ExponentConfig t = c;
                t.beta[0] = b;
                if (s.visit(t)) break;
            }
        }
        s.finish(c, "beta1: ", binding);
        all = all && s.found;
    }
    {
        auto s = make_search(MP_GROUP(group_pair2));
        bool done = false;
        for (double a : alphas) {
            for (double b : betas) {
                ExponentConfig t = c;
                t.alpha[1] = a;
                t.beta[1] = b;
                if ((done = s.visit(t))) break;
            }
            if (done) break;
        }
        s.finish(c, "alpha2/beta2: ", binding);
        all = all && s.found;
    }
    {
        // The closed dissipation bounds can pinch an exponent to a single
        // value off the lattice; include those values explicitly.
        std::vector<double> a3 = alphas, b3 = betas;
        double apinch = c.alpha0 + 0.5 * (1.0 - c.gamma0);
        double bpinch = c.beta0 + 0.5 * (1.0 - c.gamma0);
        if (apinch > c.alpha0 && apinch < a_hi) a3.push_back(apinch);
        if (bpinch > c.beta0 && bpinch < b_hi) b3.push_back(bpinch);
        std::sort(a3.begin(), a3.end());
        std::sort(b3.begin(), b3.end());
        a3.erase(std::unique(a3.begin(), a3.end()), a3.end());
        b3.erase(std::unique(b3.begin(), b3.end()), b3.end());
        auto s = make_search(MP_GROUP(group_triple3));
        bool done = false;
        for (double a : a3) {
            for (double g : gammas) {
                for (double b : b3) {
                    ExponentConfig t = c;
                    t.alpha[2] = a;
                    t.gamma[2] = g;
                    t.beta[2] = b;
                    if ((done = s.visit(t))) break;
                }
                if (done) break;
            }
            if (done) break;
        }
        s.finish(c, "alpha3/beta3/gamma3: ", binding);
        all = all && s.found;
    }
    {
        auto s = make_search(MP_GROUP(group_gamma1));
        if (br.gamma1_equality) {
            ExponentConfig t = c;
            t.gamma[0] = 1.0 - c.alpha0 + c.gamma0;
            s.visit(t);
        } else {
            for (double g : gammas) {
                ExponentConfig t = c;
                t.gamma[0] = g;
                if (s.visit(t)) break;
            }
        }
        s.finish(c, "gamma1: ", binding);
        all = all && s.found;
    }
    {
        auto s = make_search(MP_GROUP(group_gamma2));
        if (br.gamma2_equality) {
            ExponentConfig t = c;
            t.gamma[1] = 1.0 - c.beta0 + c.gamma0;
            s.visit(t);
        } else {
            for (double g : gammas) {
                ExponentConfig t = c;
                t.gamma[1] = g;
                if (s.visit(t)) break;
            }
        }
        s.finish(c, "gamma2: ", binding);
        all = all && s.found;
    }
    return all;
}

#undef MP_GROUP

}  // namespace

SelectionResult select_intermediate(const ExponentConfig& base) {
    SelectionResult res;
    ExponentConfig c = base;
    c.has_intermediates = false;
    Verdict bv = check_config(c, CheckLevel::Base);
    if (!bv.pass) {
        for (const auto& q : bv.violations) res.binding.push_back("base: " + q.name);
        res.config = c;
        return res;
    }
    const double bases[3] = {c.alpha0, c.beta0, c.gamma0};
    const double sx[3] = {c.p, c.q, c.r};
    for (int i = 0; i < 3; ++i) {
        c.delta[i] = bases[i] > 0.0 ? 0.0 : 0.5 * delta_upper(bases[i], sx[i]);
    }
    res.notes.push_back("delta chosen as midpoint of its admissible interval where the base exponent is zero");
    res.notes.push_back("ties among feasible intermediate exponents broken by the first lattice point in ascending order");

    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256}) {
        std::vector<std::string> binding;
        ExponentConfig trial = c;
        if (search_groups(trial, h, binding)) {
            trial.has_intermediates = true;
            Verdict v = check_config(trial, CheckLevel::Base);
            if (v.pass) {
                res.feasible = true;
                res.config = trial;
                res.resolution = h;
                return res;
            }
            for (const auto& q : v.violations) binding.push_back(q.name);
        }
        res.binding = binding;
        res.config = trial;
    }
    // Midpoint delta failed: scan other delta values on the finest lattice.
    for (int i = 0; i < 3; ++i) {
        if (bases[i] > 0.0) continue;
        double up = delta_upper(bases[i], sx[i]);
        for (double d : lattice(0.0, up, 1.0 / 64)) {
            ExponentConfig trial = c;
            trial.delta[i] = d;
            std::vector<std::string> binding;
            if (search_groups(trial, 1.0 / 256, binding)) {
                trial.has_intermediates = true;
                if (check_config(trial, CheckLevel::Base).pass) {
                    res.feasible = true;
                    res.config = trial;
                    res.resolution = 1.0 / 256;
                    res.binding.clear();
                    res.notes.push_back("midpoint delta infeasible; delta moved along its interval");
                    return res;
                }
            }
        }
    }
    res.config.has_intermediates = false;
    return res;
}

std::string to_string(CheckLevel l) {
    switch (l) {
        case CheckLevel::Base: return "base";
        case CheckLevel::Regularity: return "regularity";
        case CheckLevel::Classical: return "classical";
    }
    return "base";
}

CheckLevel check_level_from_string(const std::string& s) {
    if (s == "base" || s == "Base") return CheckLevel::Base;
    if (s == "regularity" || s == "Regularity") return CheckLevel::Regularity;
    if (s == "classical" || s == "Classical") return CheckLevel::Classical;
    throw ConfigError("unknown check level '" + s + "'");
}

}  // namespace micropolar
