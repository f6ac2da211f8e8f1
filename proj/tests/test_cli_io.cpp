#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "micropolar/cli_io.hpp"
#include "micropolar/errors.hpp"

using namespace micropolar;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("micropolar_tests_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MICROPOLAR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

json tiny_config() {
    return {{"grid", {{"dim", 2}, {"n", 16}}},
            {"exponents", {{"p", 2}, {"q", 2}, {"r", 2}, {"alpha0", 0.5}, {"beta0", 0.5}, {"gamma0", 0.0}}},
            {"params", {{"mu", 0.75}, {"mu_r", 0.25}}},
            {"picard", {{"T", 0.25}, {"nodes_per_unit", 16}}},
            {"global", {{"T_total", 0.5}}},
            {"initial", {{"kind", "random"}, {"amplitude", 0.05}}},
            {"seed", 3}};
}

TrajectoryState small_state() {
    GridSpec g{2, 8};
    TrajectoryState s;
    s.times = {0.0, 0.5};
    std::mt19937_64 rng(2);
    for (int j = 0; j < 2; ++j) {
        s.u.push_back(random_field(g, 3, rng));
        s.w.push_back(random_field(g, 3, rng));
        SpectralField th = random_field(g, 1, rng);
        th.mean_zero = false;
        s.th.push_back(th);
        s.F.push_back(random_field(g, 3, rng));
        s.G.push_back(random_field(g, 3, rng));
        s.H.push_back(th);
        s.free_u.push_back(s.u.back());
        s.free_w.push_back(s.w.back());
        s.free_th.push_back(th);
    }
    s.m = 4;
    return s;
}

}  // namespace

TEST_CASE("config parsing reports the offending field") {
    json j = tiny_config();
    j["picard"]["T"] = "long";
    try {
        parse_run_config(j);
        FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("/picard/T") != std::string::npos);
    }
    j = tiny_config();
    j["grid"]["size"] = 4;
    CHECK_THROWS_AS(parse_run_config(j), ConfigError);
    j = tiny_config();
    j["forcing"] = {{"f", {{"kind", "cubic"}}}};
    CHECK_THROWS_AS(parse_run_config(j), ConfigError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("config serialization round-trips") {
    RunConfig c = parse_run_config(tiny_config());
    RunConfig d = parse_run_config(to_json(c));
    CHECK(to_json(c).dump() == to_json(d).dump());
    CHECK(config_hash(c) == config_hash(d));
    d.output_dir = "elsewhere";
    CHECK(config_hash(c) == config_hash(d));
    d.seed = 4;
    CHECK(config_hash(c) != config_hash(d));
}

TEST_CASE("FNV-1a reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hash_hex(0xabcULL) == "0000000000000abc");
}

TEST_CASE("problem assembly selects intermediates and rates") {
    RunConfig c = parse_run_config(tiny_config());
    ProblemSpec p = make_problem(c);
    CHECK(p.exponents.has_intermediates);
    CHECK(p.exponents.has_rates());
    c.exponents.alpha0 = 7.0 / 8.0;
    c.exponents.beta0 = 3.0 / 8.0;
    CHECK_THROWS_AS(make_problem(c), ConfigError);
}

TEST_CASE("initial data are admissible") {
    RunConfig c = parse_run_config(tiny_config());
    InitialData d = make_initial_data(c);
    CHECK(l2_coefficient_norm(d.u) == doctest::Approx(0.05));
    CHECK(l2_coefficient_norm(divergence(d.u)) < 1e-14);
    CHECK(std::abs(d.w.mean(0)) == 0.0);
    c.initial.kind = "single_mode";
    c.initial.k = {1, 2, 0};
    d = make_initial_data(c);
    CHECK(l2_coefficient_norm(divergence(d.u)) < 1e-14);
    CHECK(l2_coefficient_norm(d.u) > 0.0);
}

TEST_CASE("number formatting is round-trip exact") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.125}) CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("checkpoint round trip preserves every field bit for bit") {
    fs::path dir = scratch("ckpt");
    TrajectoryState s = small_state();
    const std::string path = (dir / "c.bin").string();
    checkpoint_write(s, path, "00000000deadbeef");
    CheckpointHeader h;
    TrajectoryState r = checkpoint_read(path, &h);
    CHECK(h.config_hash == "00000000deadbeef");
    CHECK(r.times == s.times);
    CHECK(r.m == s.m);
    for (std::size_t j = 0; j < s.nodes(); ++j) {
        CHECK(r.u[j].coeffs == s.u[j].coeffs);
        CHECK(r.th[j].coeffs == s.th[j].coeffs);
        CHECK(r.th[j].mean_zero == s.th[j].mean_zero);
        CHECK(r.G[j].coeffs == s.G[j].coeffs);
        CHECK(r.free_w[j].coeffs == s.free_w[j].coeffs);
    }
}

TEST_CASE("damaged checkpoints are rejected") {
    fs::path dir = scratch("ckpt_bad");
    TrajectoryState s = small_state();
    const std::string path = (dir / "c.bin").string();
    checkpoint_write(s, path, "0");
    const std::string good = slurp(path);

    std::ofstream(path, std::ios::binary) << good.substr(0, good.size() - 5);
    CHECK_THROWS_AS(checkpoint_read(path), IntegrityError);

    std::string flipped = good;
    flipped[flipped.size() - 3] ^= 0x10;
    std::ofstream(path, std::ios::binary) << flipped;
    CHECK_THROWS_AS(checkpoint_read(path), IntegrityError);

    std::string versioned = good;
    const auto pos = versioned.find("\"format_version\":1");
    REQUIRE(pos != std::string::npos);
    versioned.replace(pos, 18, "\"format_version\":9");
    std::ofstream(path, std::ios::binary) << versioned;
    CHECK_THROWS_AS(checkpoint_read(path), IntegrityError);

    std::ofstream(path, std::ios::binary) << good << "x";
    CHECK_THROWS_AS(checkpoint_read(path), IntegrityError);
}

TEST_CASE("command line exit codes") {
    fs::path dir = scratch("cli_codes");
    CHECK(run_cli("") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("picard --config /nonexistent.json") == 2);
    json bad = tiny_config();
    bad["picard"]["tol"] = -1.0;
    write_json(dir / "bad.json", bad);
    CHECK(run_cli("picard --config " + (dir / "bad.json").string() + " --out " + (dir / "o").string()) == 2);

    write_json(dir / "ok.json", tiny_config());
    CHECK(run_cli("exponents check --config " + (dir / "ok.json").string() + " --out " + (dir / "e").string()) == 0);
    json infeasible = tiny_config();
    infeasible["exponents"]["alpha0"] = 0.875;
    infeasible["exponents"]["beta0"] = 0.375;
    write_json(dir / "inf.json", infeasible);
    CHECK(run_cli("exponents select --config " + (dir / "inf.json").string() + " --out " + (dir / "s").string()) == 1);
    CHECK(run_cli("gronwall --a 1 --alpha 0.25 --b 1 --beta 0.5 --T 1 --intervals 400 --out " +
                  (dir / "g").string()) == 0);
    CHECK(run_cli("gronwall --a 1 --alpha 1.5 --out " + (dir / "g2").string()) == 2);
}

TEST_CASE("verification output is byte-identical across runs") {
    fs::path dir = scratch("cli_det");
    const std::string args = "verify smoothing --ensemble 20 --seed 5 --out ";
    REQUIRE(run_cli(args + (dir / "a").string()) == 0);
    REQUIRE(run_cli(args + (dir / "b").string()) == 0);
    for (const char* f : {"ratios.csv", "verdicts.json", "metadata.json"})
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
}

TEST_CASE("simulate writes checkpoints and resumes only with a matching config") {
    fs::path dir = scratch("cli_sim");
    write_json(dir / "run.json", tiny_config());
    const std::string cfg = " --config " + (dir / "run.json").string();
    REQUIRE(run_cli("simulate" + cfg + " --out " + (dir / "full").string()) == 0);
    const fs::path ck0 = dir / "full" / "checkpoint_000.bin";
    CHECK(fs::exists(ck0));
    CHECK(fs::exists(dir / "full" / "checkpoint_001.bin"));
    CHECK(fs::exists(dir / "full" / "efunctions.csv"));
    CHECK(run_cli("checkpoint verify " + ck0.string()) == 0);
    CHECK(run_cli("checkpoint inspect " + ck0.string()) == 0);

    // resuming after the first window reproduces the second window
    REQUIRE(run_cli("simulate" + cfg + " --resume " + ck0.string() + " --out " + (dir / "resumed").string()) == 0);
    TrajectoryState a = checkpoint_read((dir / "full" / "checkpoint_001.bin").string());
    TrajectoryState b = checkpoint_read((dir / "resumed" / "checkpoint_001.bin").string());
    REQUIRE(a.nodes() == b.nodes());
    CHECK(a.times.back() == doctest::Approx(b.times.back()));
    CHECK(a.u.back().coeffs == b.u.back().coeffs);

    CHECK(run_cli("simulate" + cfg + " --seed 99 --resume " + ck0.string() + " --out " + (dir / "x").string()) == 2);

    const std::string body = slurp(ck0);
    std::ofstream((dir / "trunc.bin"), std::ios::binary) << body.substr(0, body.size() / 2);
    CHECK(run_cli("checkpoint verify " + (dir / "trunc.bin").string()) == 1);
}
