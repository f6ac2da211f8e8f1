#include "micropolar/cli_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace micropolar {

using nlohmann::json;

namespace {

// Typed access to one JSON object with pointer-style error messages and
// rejection of unknown keys.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    std::string where(const std::string& key = "") const {
        std::string p = path_.empty() ? "" : path_;
        if (!key.empty()) p += "/" + key;
        return p.empty() ? "/" : p;
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    double num(const std::string& key, double def) {
        used_.insert(key);
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
        double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(where(key) + ": must be finite");
        return x;
    }

    int integer(const std::string& key, int def) {
        used_.insert(key);
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
        return v.get<int>();
    }

    std::uint64_t u64(const std::string& key, std::uint64_t def) {
        used_.insert(key);
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            throw ConfigError(where(key) + ": expected a nonnegative integer");
        return v.get<std::uint64_t>();
    }

    bool flag(const std::string& key, bool def) {
        used_.insert(key);
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
        return v.get<bool>();
    }

    std::string str(const std::string& key, const std::string& def) {
        used_.insert(key);
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
        return v.get<std::string>();
    }

    template <typename T>
    std::array<T, 3> arr3(const std::string& key, std::array<T, 3> def) {
        used_.insert(key);
        if (!has(key)) return def;
        const json& v = j_.at(key);
        if (!v.is_array() || v.size() != 3) throw ConfigError(where(key) + ": expected an array of three numbers");
        std::array<T, 3> out{};
        for (std::size_t i = 0; i < 3; ++i) {
            if (!v[i].is_number()) throw ConfigError(where(key) + "/" + std::to_string(i) + ": expected a number");
            out[i] = v[i].get<T>();
        }
        return out;
    }

    Obj child(const std::string& key) {
        used_.insert(key);
        static const json empty = json::object();
        return Obj(has(key) ? j_.at(key) : empty, where(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

template <typename F>
auto with_pointer(const std::string& where, F&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        if (!msg.empty() && msg[0] == '/') throw;
        throw ConfigError(where + ": " + msg);
    }
}

ForcingSpec forcing_from(Obj o) {
    ForcingSpec f;
    std::string kind = o.str("kind", "zero");
    f.kind = with_pointer(o.where("kind"), [&] { return forcing_kind_from_string(kind); });
    f.c = o.arr3<double>("c", f.c);
    f.scale = o.num("scale", f.scale);
    o.finish();
    with_pointer(o.where(), [&] { f.validate(); });
    return f;
}

json forcing_json(const ForcingSpec& f) {
    return {{"kind", to_string(f.kind)}, {"c", f.c}, {"scale", f.scale}};
}

}  // namespace

ExponentConfig exponents_from_json(const json& j, const std::string& where) {
    Obj o(j, where);
    ExponentConfig e;
    e.p = o.num("p", e.p);
    e.q = o.num("q", e.q);
    e.r = o.num("r", e.r);
    e.alpha0 = o.num("alpha0", e.alpha0);
    e.beta0 = o.num("beta0", e.beta0);
    e.gamma0 = o.num("gamma0", e.gamma0);
    const bool any = o.has("alpha") || o.has("beta") || o.has("gamma") || o.has("delta");
    e.delta = o.arr3<double>("delta", e.delta);
    e.alpha = o.arr3<double>("alpha", e.alpha);
    e.beta = o.arr3<double>("beta", e.beta);
    e.gamma = o.arr3<double>("gamma", e.gamma);
    e.has_intermediates = any;
    e.lambda = o.num("lambda", e.lambda);
    e.lambda1 = o.num("lambda1", e.lambda1);
    e.lambda2 = o.num("lambda2", e.lambda2);
    o.flag("select", true);  // consumed by the run config
    o.finish();
    return e;
}

json to_json(const ExponentConfig& e) {
    json j = {{"p", e.p}, {"q", e.q}, {"r", e.r}, {"alpha0", e.alpha0}, {"beta0", e.beta0}, {"gamma0", e.gamma0}};
    if (e.has_intermediates) {
        j["delta"] = e.delta;
        j["alpha"] = e.alpha;
        j["beta"] = e.beta;
        j["gamma"] = e.gamma;
    }
    if (e.has_rates()) {
        j["lambda"] = e.lambda;
        j["lambda1"] = e.lambda1;
        j["lambda2"] = e.lambda2;
    }
    return j;
}

RunConfig parse_run_config(const json& j) {
    Obj root(j, "");
    RunConfig c;
    {
        Obj g = root.child("grid");
        c.grid.dim = g.integer("dim", c.grid.dim);
        c.grid.n = g.integer("n", c.grid.n);
        c.grid.length = g.num("length", c.grid.length);
        c.grid.dealias = g.num("dealias", c.grid.dealias);
        g.finish();
        with_pointer(g.where(), [&] { c.grid.validate(); });
    }
    {
        const json& ej = j.contains("exponents") ? j.at("exponents") : json::object();
        root.child("exponents");
        c.exponents = exponents_from_json(ej, "/exponents");
        if (ej.contains("select")) {
            if (!ej.at("select").is_boolean()) throw ConfigError("/exponents/select: expected true or false");
            c.select_exponents = ej.at("select").get<bool>();
        }
    }
    {
        Obj p = root.child("params");
        c.params.mu = p.num("mu", c.params.mu);
        c.params.mu_r = p.num("mu_r", c.params.mu_r);
        c.params.c0 = p.num("c0", c.params.c0);
        c.params.ca = p.num("ca", c.params.ca);
        c.params.cd = p.num("cd", c.params.cd);
        c.params.kappa = p.num("kappa", c.params.kappa);
        c.params.cv = p.num("cv", c.params.cv);
        c.params.rho = p.num("rho", c.params.rho);
        p.finish();
        with_pointer(p.where(), [&] { c.params.validate(); });
    }
    {
        Obj fo = root.child("forcing");
        c.f = forcing_from(fo.child("f"));
        c.g = forcing_from(fo.child("g"));
        fo.finish();
    }
    {
        Obj p = root.child("picard");
        c.picard.T = p.num("T", c.picard.T);
        c.picard.nodes_per_unit = p.integer("nodes_per_unit", c.picard.nodes_per_unit);
        c.picard.m_max = p.integer("m_max", c.picard.m_max);
        c.picard.tol = p.num("tol", c.picard.tol);
        c.picard.graded = p.flag("graded", c.picard.graded);
        c.picard.linear_only = p.flag("linear_only", c.picard.linear_only);
        c.picard.enforce_horizon = p.flag("enforce_horizon", c.picard.enforce_horizon);
        p.finish();
        with_pointer(p.where(), [&] { c.picard.validate(); });
    }
    {
        Obj g = root.child("global");
        c.T_total = g.num("T_total", c.T_total);
        g.finish();
        if (!(c.T_total > 0.0)) throw ConfigError("/global/T_total: must be positive");
    }
    {
        Obj i = root.child("initial");
        c.initial.kind = i.str("kind", c.initial.kind);
        if (c.initial.kind != "random" && c.initial.kind != "single_mode" && c.initial.kind != "zero")
            throw ConfigError("/initial/kind: expected random, single_mode or zero");
        c.initial.amplitude = i.num("amplitude", c.initial.amplitude);
        c.initial.sigma = i.num("sigma", c.initial.sigma);
        c.initial.max_shell = i.integer("max_shell", c.initial.max_shell);
        c.initial.k = i.arr3<int>("k", c.initial.k);
        i.finish();
        if (c.initial.amplitude < 0.0) throw ConfigError("/initial/amplitude: must be nonnegative");
    }
    c.seed = root.u64("seed", c.seed);
    c.output_dir = root.str("output_dir", c.output_dir);
    root.finish();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(j);
}

json to_json(const RunConfig& c) {
    json e = to_json(c.exponents);
    e["select"] = c.select_exponents;
    return {
        {"grid", {{"dim", c.grid.dim}, {"n", c.grid.n}, {"length", c.grid.length}, {"dealias", c.grid.dealias}}},
        {"exponents", e},
        {"params",
         {{"mu", c.params.mu},
          {"mu_r", c.params.mu_r},
          {"c0", c.params.c0},
          {"ca", c.params.ca},
          {"cd", c.params.cd},
          {"kappa", c.params.kappa},
          {"cv", c.params.cv},
          {"rho", c.params.rho}}},
        {"forcing", {{"f", forcing_json(c.f)}, {"g", forcing_json(c.g)}}},
        {"picard",
         {{"T", c.picard.T},
          {"nodes_per_unit", c.picard.nodes_per_unit},
          {"m_max", c.picard.m_max},
          {"tol", c.picard.tol},
          {"graded", c.picard.graded},
          {"linear_only", c.picard.linear_only},
          {"enforce_horizon", c.picard.enforce_horizon}}},
        {"global", {{"T_total", c.T_total}}},
        {"initial",
         {{"kind", c.initial.kind},
          {"amplitude", c.initial.amplitude},
          {"sigma", c.initial.sigma},
          {"max_shell", c.initial.max_shell},
          {"k", c.initial.k}}},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
    };
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t config_hash(const RunConfig& c) {
    json j = to_json(c);
    j.erase("output_dir");  // where results go does not change them
    return fnv1a64(j.dump());
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ProblemSpec make_problem(const RunConfig& c) {
    ProblemSpec p;
    p.params = c.params;
    p.f = c.f;
    p.g = c.g;
    ExponentConfig e = c.exponents;
    if (!e.has_intermediates) {
        if (!c.select_exponents)
            throw ConfigError("/exponents: intermediate exponents missing and selection disabled");
        SelectionResult sel = select_intermediate(e);
        if (!sel.feasible) {
            std::string why;
            for (const auto& b : sel.binding) why += (why.empty() ? "" : ", ") + b;
            throw ConfigError("/exponents: no admissible intermediate exponents (binding: " + why + ")");
        }
        e = sel.config;
    }
    Verdict v = check_config(e, CheckLevel::Base);
    if (!v.pass) throw ConfigError("/exponents: constraint violated: " + v.violations.front().name);
    if (!e.has_rates()) set_default_rates(e, lambda1(c.grid));
    p.exponents = e;
    return p;
}

InitialData make_initial_data(const RunConfig& c) {
    const GridSpec& g = c.grid;
    InitialData d;
    if (c.initial.kind == "zero") {
        d.u = SpectralField(g, 3, true);
        d.w = SpectralField(g, 3, true);
        d.th = SpectralField(g, 1, true);
        return d;
    }
    const double a = c.initial.amplitude;
    if (c.initial.kind == "single_mode") {
        const auto& k = c.initial.k;
        if (k[0] == 0 && k[1] == 0 && k[2] == 0) throw ConfigError("/initial/k: must be a nonzero wavevector");
        // Velocity amplitude orthogonal to k so the mode is solenoidal.
        std::array<double, 3> va = k[0] != 0 || k[2] != 0 ? std::array<double, 3>{0.0, a, 0.0}
                                                           : std::array<double, 3>{a, 0.0, 0.0};
        d.u = leray_project(single_mode(g, 3, k, va));
        d.w = single_mode(g, 3, k, {0.0, 0.0, a});
        d.th = single_mode(g, 1, k, {a, 0.0, 0.0});
        return d;
    }
    std::mt19937_64 rng(c.seed);
    RandomFieldOptions o;
    o.sigma = c.initial.sigma;
    o.max_shell = c.initial.max_shell;
    o.solenoidal = true;
    auto scaled = [&](SpectralField f) {
        f.zero_mean();
        double n = l2_coefficient_norm(f);
        if (n > 0.0) f *= a / n;
        return f;
    };
    d.u = scaled(random_field(g, 3, rng, o));
    o.solenoidal = false;
    d.w = scaled(random_field(g, 3, rng, o));
    d.th = scaled(random_field(g, 1, rng, o));
    return d;
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string CsvTable::render() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os << ',';
            const std::string& c = cells[i];
            if (c.find_first_of(",\"\n") != std::string::npos) {
                os << '"';
                for (char ch : c) os << (ch == '"' ? std::string("\"\"") : std::string(1, ch));
                os << '"';
            } else {
                os << c;
            }
        }
        os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return os.str();
}

std::vector<std::string> write_report(const ReportBundle& bundle, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
    std::vector<std::string> paths;
    auto put = [&](const std::string& name, const std::string& content) {
        const std::string path = (fs::path(dir) / name).string();
        std::ofstream out(path, std::ios::binary);
        out << content;
        if (!out) throw std::runtime_error("cannot write '" + path + "'");
        paths.push_back(path);
    };
    put("metadata.json", bundle.metadata.dump(2) + "\n");
    put("verdicts.json", bundle.verdicts.dump(2) + "\n");
    for (const auto& t : bundle.tables) put(t.name + ".csv", t.render());
    return paths;
}

CsvTable decay_table(const std::vector<DecayFit>& fits) {
    CsvTable t{"decay", {"t", "norm_tag", "value", "fitted_slope", "residual", "provenance"}, {}};
    for (const auto& f : fits) {
        const std::string tag = f.tag + (f.near_zero ? "@0" : "@inf");
        for (std::size_t i = 0; i < f.t.size(); ++i)
            t.add({format_number(f.t[i]), tag, format_number(f.value[i]), format_number(f.fitted),
                   format_number(f.residual), "measured"});
        // Summary row: the fitted quantity and the lower bound it is compared with.
        t.add({"", tag, format_number(f.expected), format_number(f.fitted), format_number(f.residual), "bound"});
    }
    return t;
}

CsvTable iteration_table(const PicardReport& rep) {
    CsvTable t{"iterations", {"m", "norm_tag", "difference", "ratio", "provenance"}, {}};
    for (std::size_t m = 0; m < rep.diffs.size(); ++m) {
        const double ratio = m > 0 && rep.diffs[m - 1] > 0.0 ? rep.diffs[m] / rep.diffs[m - 1] : 0.0;
        t.add({std::to_string(m + 1), "max", format_number(rep.diffs[m]), m > 0 ? format_number(ratio) : "",
               "measured"});
        if (m < rep.norm_diffs.size())
            for (std::size_t k = 0; k < rep.norm_diffs[m].size(); ++k) {
                const double prev = m > 0 ? rep.norm_diffs[m - 1][k] : 0.0;
                t.add({std::to_string(m + 1), k < rep.norm_tags.size() ? rep.norm_tags[k] : std::to_string(k),
                       format_number(rep.norm_diffs[m][k]),
                       m > 0 && prev > 0.0 ? format_number(rep.norm_diffs[m][k] / prev) : "", "measured"});
            }
    }
    return t;
}

CsvTable node_table(const TrajectoryState& s, const std::vector<WeightedNorm>& set) {
    CsvTable t{"nodes", {"t", "norm_tag", "value", "provenance"}, {}};
    std::vector<std::vector<double>> v(s.nodes(), std::vector<double>(set.size()));
    for (std::size_t j = 0; j < s.nodes(); ++j) {
        const SpectralField* f[3] = {&s.u[j], &s.w[j], &s.th[j]};
        for (std::size_t k = 0; k < set.size(); ++k) v[j][k] = norm(*f[set[k].field], set[k].req);
    }
    for (std::size_t j = 0; j < s.nodes(); ++j)
        for (std::size_t k = 0; k < set.size(); ++k)
            t.add({format_number(s.times[j]), set[k].tag, format_number(v[j][k]), "measured"});
    return t;
}

CsvTable ratio_table(const EstimateReport& r) {
    CsvTable t{"ratios", {"index", "role", "ratio", "provenance"}, {}};
    for (std::size_t i = 0; i < r.ratios.size(); ++i)
        t.add({std::to_string(i), r.role, format_number(r.ratios[i]), "measured"});
    t.add({"", r.role, format_number(r.fitted_constant), "fitted"});
    if (r.reference > 0.0) t.add({"", r.role, format_number(r.reference), "bound"});
    return t;
}

CsvTable energy_table(const EnergyReport& e) {
    CsvTable t{"energy", {"t", "energy", "kinetic", "dissipation", "forcing_work", "provenance"}, {}};
    for (std::size_t j = 0; j < e.times.size(); ++j)
        t.add({format_number(e.times[j]), format_number(e.energy[j]), format_number(e.kinetic[j]),
               format_number(e.dissipation[j]), format_number(e.forcing_work[j]), "measured"});
    return t;
}

json to_json(const EstimateReport& r) {
    return {{"role", r.role},
            {"ensemble_size", r.ensemble_size},
            {"ratio_max", format_number(r.ratio_max)},
            {"ratio_median", format_number(r.ratio_median)},
            {"rerun_ratio_max", format_number(r.rerun_ratio_max)},
            {"top_decile_median", format_number(r.top_decile_median)},
            {"rerun_top_decile_median", format_number(r.rerun_top_decile_median)},
            {"fitted_constant", format_number(r.fitted_constant)},
            {"reference", format_number(r.reference)},
            {"verdict", r.pass ? "pass" : "fail"},
            {"notes", r.notes}};
}

json to_json(const Verdict& v) {
    auto rel = [](Relation r) {
        switch (r) {
            case Relation::Less: return "<";
            case Relation::LessEq: return "<=";
            case Relation::Equal: return "=";
            case Relation::Greater: return ">";
            case Relation::GreaterEq: return ">=";
        }
        return "?";
    };
    json viol = json::array();
    for (const auto& i : v.violations)
        viol.push_back({{"name", i.name},
                        {"lhs", format_number(i.lhs)},
                        {"relation", rel(i.rel)},
                        {"rhs", format_number(i.rhs)},
                        {"slack", format_number(i.slack)}});
    return {{"pass", v.pass}, {"evaluated", v.evaluated.size()}, {"violations", viol}};
}

}  // namespace micropolar
