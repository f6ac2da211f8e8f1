#include "micropolar/gronwall.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "micropolar/errors.hpp"

namespace micropolar {

namespace {

constexpr double kGammaMin = 0.8856031944108887;  // min of Γ on (0, ∞)

double max_or_zero(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, x);
    return m;
}

bool has_kernel(const GronwallProblem& p) {
    for (double b : p.b)
        if (b > 0.0) return true;
    return false;
}

}  // namespace

void GronwallProblem::validate() const {
    if (a.size() != alpha.size() || b.size() != beta.size())
        throw ConfigError("gronwall coefficient and exponent lists differ in length");
    if (a.empty()) throw ConfigError("gronwall needs at least one source term");
    if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("gronwall horizon must be positive");
    for (double x : alpha)
        if (!(x >= 0.0 && x < 1.0)) throw DomainError("gronwall source exponents must lie in [0,1)");
    for (double x : beta)
        if (!(x >= 0.0 && x < 1.0)) throw DomainError("gronwall kernel exponents must lie in [0,1)");
    for (double x : a)
        if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("gronwall source coefficients must be positive");
    for (double x : b)
        if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("gronwall kernel coefficients must be nonnegative");
}

int gronwall_nbeta(const GronwallProblem& p) {
    const double beta = max_or_zero(p.beta);
    return static_cast<int>(std::floor(beta / (1.0 - beta))) + 1;
}

double gronwall_constant(const GronwallProblem& p) {
    p.validate();
    if (!has_kernel(p)) return 1.0;
    const int n = gronwall_nbeta(p);
    double G = 1.0;
    for (double bj : p.beta) G = std::max(G, std::tgamma(1.0 - bj));
    const double amax = max_or_zero(p.alpha);
    const double M = std::max(1.0, std::pow(G, n) * std::tgamma(1.0 - amax) / kGammaMin);
    return M * std::max(1.0, std::pow(G, n + 1) / (kGammaMin * (1.0 - amax)));
}

double gronwall_bound(const GronwallProblem& p, double t) {
    if (!(t > 0.0)) throw DomainError("gronwall bound is evaluated for t > 0");
    const double C = gronwall_constant(p);
    const int n = gronwall_nbeta(p);
    double b1 = 0.0;
    for (std::size_t j = 0; j < p.b.size(); ++j) b1 += p.b[j] * std::pow(t, 1.0 - p.beta[j]);
    double src = 0.0;
    for (std::size_t i = 0; i < p.a.size(); ++i) src += p.a[i] * std::pow(t, -p.alpha[i]);
    double sumB = 0.0, Bk = 1.0;
    for (int k = 0; k <= n; ++k, Bk *= b1) sumB += Bk;
    const double Bn1 = std::pow(b1, n + 1);
    const double growth = 1.0 + Bn1 * std::exp(C * Bn1);
    return C * src * growth * sumB;
}

namespace {

// Returns false when an implicit step is not contractive on this grid.
bool oracle_on_grid(const GronwallProblem& p, const std::vector<double>& t, std::vector<double>& z) {
    const std::size_t K = t.size() - 1;
    // Source integrals b_j ∫_0^t (t-s)^{-β_j} a_i s^{-α_i} ds in closed form.
    auto source_integral = [&](double tk) {
        double acc = 0.0;
        for (std::size_t j = 0; j < p.b.size(); ++j)
            for (std::size_t i = 0; i < p.a.size(); ++i) {
                const double x = 1.0 - p.beta[j], y = 1.0 - p.alpha[i];
                const double B = std::exp(std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y));
                acc += p.b[j] * p.a[i] * B * std::pow(tk, x + y - 1.0);
            }
        return acc;
    };
    z.assign(K + 1, 0.0);
    std::vector<double> pe(K + 1), pe1(K + 1);
    for (std::size_t k = 1; k <= K; ++k) {
        const double tk = t[k];
        double known = source_integral(tk);
        double diag = 0.0;
        for (std::size_t j = 0; j < p.b.size(); ++j) {
            if (p.b[j] == 0.0) continue;
            const double e = 1.0 - p.beta[j];
            for (std::size_t l = 0; l <= k; ++l) {
                pe[l] = std::pow(tk - t[l], e);
                pe1[l] = pe[l] * (tk - t[l]);
            }
            for (std::size_t l = 0; l < k; ++l) {
                const double h = t[l + 1] - t[l];
                const double r0 = tk - t[l];
                const double I0 = (pe[l] - pe[l + 1]) / e;
                const double I1 = r0 * I0 - (pe1[l] - pe1[l + 1]) / (e + 1.0);
                const double w1 = I1 / h, w0 = I0 - w1;
                known += p.b[j] * w0 * z[l];
                if (l + 1 == k) diag += p.b[j] * w1;
                else known += p.b[j] * w1 * z[l + 1];
            }
        }
        if (diag >= 0.5) return false;
        z[k] = known / (1.0 - diag);
    }
    return true;
}

}  // namespace

GronwallCurve gronwall_oracle(const GronwallProblem& p, int intervals, double grading) {
    p.validate();
    if (intervals < 2) throw ConfigError("gronwall oracle needs at least two intervals");
    std::vector<double> t, z;
    for (int K = intervals;; K *= 2) {
        if (K > 16000) throw DomainError("gronwall oracle cannot resolve the kernel; coefficients too large");
        t.resize(static_cast<std::size_t>(K) + 1);
        for (int k = 0; k <= K; ++k)
            t[static_cast<std::size_t>(k)] = p.T * std::pow(static_cast<double>(k) / K, grading);
        t.back() = p.T;
        if (oracle_on_grid(p, t, z)) break;
    }
    GronwallCurve out;
    const bool singular = max_or_zero(p.alpha) > 0.0;
    for (std::size_t k = singular ? 1 : 0; k < t.size(); ++k) {
        double src = 0.0;
        for (std::size_t i = 0; i < p.a.size(); ++i)
            src += p.a[i] * (p.alpha[i] == 0.0 ? 1.0 : std::pow(t[k], -p.alpha[i]));
        out.t.push_back(t[k]);
        out.y.push_back(src + z[k]);
    }
    return out;
}

double gronwall_series(const GronwallProblem& p, double t) {
    p.validate();
    if (!(t > 0.0)) throw DomainError("gronwall series is evaluated for t > 0");
    // Applying the kernel of index j to t^{-g} multiplies by b_j Γ(1-β_j) Γ(1-g)/Γ(2-β_j-g)
    // and raises the power by 1-β_j, so a word with counts (n_j) contributes
    // multinomial(n) Π (b_j Γ(1-β_j) t^{1-β_j})^{n_j} Γ(1-α)/Γ(1-α+Σ n_j(1-β_j)) t^{-α}.
    const std::size_t m = p.b.size();
    if (m > 2) throw ConfigError("gronwall series supports at most two kernels");
    std::vector<double> c(m);
    for (std::size_t j = 0; j < m; ++j) c[j] = p.b[j] * std::tgamma(1.0 - p.beta[j]) * std::pow(t, 1.0 - p.beta[j]);
    double total = 0.0;
    for (std::size_t i = 0; i < p.a.size(); ++i) {
        const double g = 1.0 - p.alpha[i];
        const double lead = p.a[i] * std::pow(t, -p.alpha[i]);
        double sum = 0.0;
        if (m == 0) {
            sum = 1.0;
        } else if (m == 1) {
            for (int n = 0; n < 4000; ++n) {
                double term = std::exp(n * std::log(std::max(c[0], 1e-300)) + std::lgamma(g) -
                                       std::lgamma(g + n * (1.0 - p.beta[0])));
                if (c[0] == 0.0) term = n == 0 ? 1.0 : 0.0;
                sum += term;
                if (n > 4 && term < 1e-17 * sum) break;
            }
        } else {
            for (int total_n = 0; total_n < 4000; ++total_n) {
                double level = 0.0;
                for (int n1 = 0; n1 <= total_n; ++n1) {
                    const int n2 = total_n - n1;
                    if ((c[0] == 0.0 && n1 > 0) || (c[1] == 0.0 && n2 > 0)) continue;
                    double lg = std::lgamma(total_n + 1.0) - std::lgamma(n1 + 1.0) - std::lgamma(n2 + 1.0);
                    if (n1 > 0) lg += n1 * std::log(c[0]);
                    if (n2 > 0) lg += n2 * std::log(c[1]);
                    lg += std::lgamma(g) - std::lgamma(g + n1 * (1.0 - p.beta[0]) + n2 * (1.0 - p.beta[1]));
                    level += std::exp(lg);
                }
                sum += level;
                if (total_n > 4 && level < 1e-17 * sum) break;
            }
        }
        total += lead * sum;
    }
    return total;
}

GronwallComparison compare_gronwall(const GronwallProblem& p, int intervals) {
    GronwallCurve o = gronwall_oracle(p, intervals);
    GronwallComparison c;
    c.min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < o.t.size(); ++k) {
        if (!(o.t[k] > 0.0)) continue;
        const double bound = gronwall_bound(p, o.t[k]);
        ++c.points;
        c.min_ratio = std::min(c.min_ratio, bound / o.y[k]);
        if (bound < o.y[k]) ++c.violations;
    }
    c.pass = c.points > 0 && c.violations <= 0.01 * c.points;
    return c;
}

}  // namespace micropolar
