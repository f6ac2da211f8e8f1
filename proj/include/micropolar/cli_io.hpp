#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "micropolar/analysis.hpp"
#include "micropolar/mild_solver.hpp"

namespace micropolar {

// How the initial data are generated: a seeded random draw with spectral
// decay, or one real Fourier mode in every field.
struct InitialDataSpec {
    std::string kind = "random";  // random | single_mode | zero
    double amplitude = 0.1;       // L2 norm of each field for random data
    double sigma = 2.0;
    int max_shell = 3;
    std::array<int, 3> k{1, 0, 0};
};

struct RunConfig {
    GridSpec grid{};
    ExponentConfig exponents{};
    bool select_exponents = true;  // fill intermediates with select_intermediate
    CouplingParams params{};
    ForcingSpec f{}, g{};
    PicardConfig picard{};
    double T_total = 5.0;
    InitialDataSpec initial{};
    std::uint64_t seed = 7;
    std::string output_dir = "out";
};

// Parses a run configuration. Errors carry a JSON pointer to the field.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);
nlohmann::json to_json(const ExponentConfig& e);
ExponentConfig exponents_from_json(const nlohmann::json& j, const std::string& where = "/exponents");

// FNV-1a 64 over the canonical (sorted-key, compact) JSON dump.
std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t config_hash(const RunConfig& c);
std::string hash_hex(std::uint64_t h);

// Validates the exponents (selecting intermediates if requested) and
// packages the problem.
ProblemSpec make_problem(const RunConfig& c);

struct InitialData {
    SpectralField u, w, th;
};
InitialData make_initial_data(const RunConfig& c);

// Deterministic decimal rendering used in every CSV and JSON report.
std::string format_number(double x);

struct CsvTable {
    std::string name;  // file name without extension
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
    std::string render() const;
};

struct ReportBundle {
    nlohmann::json metadata = nlohmann::json::object();
    std::vector<CsvTable> tables;
    nlohmann::json verdicts = nlohmann::json::object();
};

// Writes metadata.json, verdicts.json and one CSV per table; returns the paths.
std::vector<std::string> write_report(const ReportBundle& bundle, const std::string& dir);

// Schema helpers. Every table ends with a provenance column
// (measured | fitted | bound).
CsvTable decay_table(const std::vector<DecayFit>& fits);
CsvTable iteration_table(const PicardReport& rep);
CsvTable node_table(const TrajectoryState& s, const std::vector<WeightedNorm>& set);
CsvTable ratio_table(const EstimateReport& r);
CsvTable energy_table(const EnergyReport& e);
nlohmann::json to_json(const EstimateReport& r);
nlohmann::json to_json(const Verdict& v);

// Checkpoints: one JSON header line, '\n', then the little-endian float64
// payload (real and imaginary parts of every coefficient of every stored field).
inline constexpr int kCheckpointVersion = 1;

struct CheckpointHeader {
    int format_version = kCheckpointVersion;
    GridSpec grid{};
    int m = 0;
    std::vector<double> times;
    std::string config_hash;
    std::uint64_t payload_bytes = 0;
    std::string checksum;  // FNV-1a 64 of the payload, hex
    nlohmann::json fields;  // per stored list: name, components, mean_zero flags
};

void checkpoint_write(const TrajectoryState& s, const std::string& path, const std::string& config_hash);
// Throws IntegrityError on truncation, checksum or version mismatch; never
// returns partial state.
TrajectoryState checkpoint_read(const std::string& path, CheckpointHeader* header = nullptr);
CheckpointHeader checkpoint_header(const std::string& path);

// Command-line entry point. Exit status: 0 pass, 1 assertion failure or
// I/O failure, 2 usage or configuration error.
int dispatch(int argc, char** argv);

}  // namespace micropolar
