#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "micropolar/cli_io.hpp"

namespace micropolar {

using nlohmann::json;

namespace {

struct FieldList {
    const char* name;
    std::vector<SpectralField> TrajectoryState::*member;
};

const FieldList kLists[] = {
    {"u", &TrajectoryState::u},           {"w", &TrajectoryState::w},
    {"th", &TrajectoryState::th},         {"F", &TrajectoryState::F},
    {"G", &TrajectoryState::G},           {"H", &TrajectoryState::H},
    {"free_u", &TrajectoryState::free_u}, {"free_w", &TrajectoryState::free_w},
    {"free_th", &TrajectoryState::free_th},
};

void put_double(std::string& out, double x) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

double get_double(const std::string& in, std::size_t pos) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(b)])) << (8 * b);
    return std::bit_cast<double>(bits);
}

CheckpointHeader parse_header(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error&) {
        throw IntegrityError("checkpoint header is not valid JSON");
    }
    CheckpointHeader h;
    try {
        h.format_version = j.at("format_version").get<int>();
        if (h.format_version != kCheckpointVersion)
            throw IntegrityError("checkpoint format version " + std::to_string(h.format_version) +
                                 " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
        const json& g = j.at("grid");
        h.grid.dim = g.at("dim").get<int>();
        h.grid.n = g.at("n").get<int>();
        h.grid.length = g.at("length").get<double>();
        h.grid.dealias = g.at("dealias").get<double>();
        h.m = j.at("m").get<int>();
        h.times = j.at("times").get<std::vector<double>>();
        h.config_hash = j.at("config_hash").get<std::string>();
        h.payload_bytes = j.at("payload_bytes").get<std::uint64_t>();
        h.checksum = j.at("checksum").get<std::string>();
        h.fields = j.at("fields");
    } catch (const json::exception& e) {
        throw IntegrityError(std::string("checkpoint header is incomplete: ") + e.what());
    }
    return h;
}

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("cannot open checkpoint '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

void checkpoint_write(const TrajectoryState& s, const std::string& path, const std::string& config_hash) {
    if (s.nodes() == 0) throw PreconditionError("cannot checkpoint an empty trajectory");
    const GridSpec& g = s.u[0].grid;
    std::string payload;
    json fields = json::array();
    for (const auto& fl : kLists) {
        const auto& list = s.*(fl.member);
        json meta = {{"name", fl.name}, {"count", list.size()}};
        json comps = json::array(), mz = json::array();
        for (const auto& f : list) {
            if (!(f.grid == g)) throw ConfigError("checkpoint fields must share one grid");
            comps.push_back(f.components);
            mz.push_back(f.mean_zero);
            for (const auto& c : f.coeffs) {
                put_double(payload, c.real());
                put_double(payload, c.imag());
            }
        }
        meta["components"] = comps;
        meta["mean_zero"] = mz;
        fields.push_back(meta);
    }
    json header = {{"format_version", kCheckpointVersion},
                   {"grid", {{"dim", g.dim}, {"n", g.n}, {"length", g.length}, {"dealias", g.dealias}}},
                   {"m", s.m},
                   {"times", s.times},
                   {"config_hash", config_hash},
                   {"payload_bytes", payload.size()},
                   {"checksum", hash_hex(fnv1a64(payload))},
                   {"fields", fields}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    out << header.dump() << '\n';
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
}

CheckpointHeader checkpoint_header(const std::string& path) {
    const std::string all = read_all(path);
    const auto nl = all.find('\n');
    if (nl == std::string::npos) throw IntegrityError("checkpoint header line is truncated");
    return parse_header(all.substr(0, nl));
}

TrajectoryState checkpoint_read(const std::string& path, CheckpointHeader* header_out) {
    const std::string all = read_all(path);
    const auto nl = all.find('\n');
    if (nl == std::string::npos) throw IntegrityError("checkpoint header line is truncated");
    CheckpointHeader h = parse_header(all.substr(0, nl));
    const std::string payload = all.substr(nl + 1);
    if (payload.size() != h.payload_bytes)
        throw IntegrityError("checkpoint payload has " + std::to_string(payload.size()) + " bytes, header says " +
                             std::to_string(h.payload_bytes));
    if (hash_hex(fnv1a64(payload)) != h.checksum) throw IntegrityError("checkpoint checksum mismatch");
    try {
        h.grid.validate();
    } catch (const std::exception&) {
        throw IntegrityError("checkpoint grid is invalid");
    }

    TrajectoryState s;
    s.times = h.times;
    s.m = h.m;
    std::size_t pos = 0;
    if (!h.fields.is_array() || h.fields.size() != std::size(kLists))
        throw IntegrityError("checkpoint field table is malformed");
    for (std::size_t li = 0; li < std::size(kLists); ++li) {
        const json& meta = h.fields[li];
        if (meta.value("name", "") != kLists[li].name) throw IntegrityError("checkpoint field table is out of order");
        const auto comps = meta.at("components").get<std::vector<int>>();
        const auto mz = meta.at("mean_zero").get<std::vector<bool>>();
        if (comps.size() != mz.size()) throw IntegrityError("checkpoint field table is malformed");
        auto& list = s.*(kLists[li].member);
        for (std::size_t i = 0; i < comps.size(); ++i) {
            if (comps[i] != 1 && comps[i] != 3) throw IntegrityError("checkpoint field has a bad component count");
            SpectralField f(h.grid, comps[i], mz[i]);
            const std::size_t need = f.coeffs.size() * 16;
            if (pos + need > payload.size()) throw IntegrityError("checkpoint payload is truncated");
            for (std::size_t c = 0; c < f.coeffs.size(); ++c) {
                f.coeffs[c] = cplx(get_double(payload, pos), get_double(payload, pos + 8));
                pos += 16;
            }
            list.push_back(std::move(f));
        }
    }
    if (pos != payload.size()) throw IntegrityError("checkpoint payload has trailing bytes");
    if (s.u.size() != s.times.size()) throw IntegrityError("checkpoint node count does not match its times");
    if (header_out) *header_out = h;
    return s;
}

}  // namespace micropolar
