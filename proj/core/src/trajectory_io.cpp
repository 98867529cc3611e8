#include "eetflux/trajectory_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "header_io.hpp"

namespace eetflux {

static_assert(std::endian::native == std::endian::little, "binary trajectory layout assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'E', 'E', 'T', 'F', 'T', 'R', 'J', '1'};
constexpr const char* kTextTag = "eetflux trajectory v1";

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw FormatError("truncated binary trajectory");
    return value;
}

void check_consistent(const TrajectoryFile& file) {
    if (file.times.size() != file.states.size()) throw FormatError("trajectory times/states length mismatch");
    const auto n = static_cast<Eigen::Index>(file.n_sites());
    for (const auto& s : file.states)
        if (s.rows() != n || s.cols() != n) throw FormatError("trajectory state dimension does not match labels");
}

void write_binary(std::ostream& out, const TrajectoryFile& file) {
    const auto n = file.n_sites();
    const std::string header = detail::metadata_to_json(file.meta).dump();
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(n));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(file.times.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(header.size()));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (std::size_t k = 0; k < file.times.size(); ++k) {
        put<double>(out, file.times[k]);
        const auto& rho = file.states[k];
        for (Eigen::Index r = 0; r < rho.rows(); ++r)
            for (Eigen::Index c = 0; c < rho.cols(); ++c) {
                put<double>(out, rho(r, c).real());
                put<double>(out, rho(r, c).imag());
            }
    }
}

void write_text(std::ostream& out, const TrajectoryFile& file) {
    detail::write_header(out, kTextTag, file.meta);
    out << "# columns: \"t, then rho[r][c] as (re, im) pairs in row-major order\"\n";
    std::string line;
    for (std::size_t k = 0; k < file.times.size(); ++k) {
        line = fmt::format("{:.17g}", file.times[k]);
        const auto& rho = file.states[k];
        for (Eigen::Index r = 0; r < rho.rows(); ++r)
            for (Eigen::Index c = 0; c < rho.cols(); ++c)
                line += fmt::format(" {:.17g} {:.17g}", rho(r, c).real(), rho(r, c).imag());
        line += '\n';
        out << line;
    }
}

TrajectoryFile read_binary(std::istream& in) {
    TrajectoryFile file;
    const auto n = get<std::uint32_t>(in);
    const auto records = get<std::uint64_t>(in);
    const auto header_bytes = get<std::uint64_t>(in);
    if (header_bytes > (1u << 24)) throw FormatError("binary trajectory header too large");
    std::string header(header_bytes, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_bytes));
    if (!in) throw FormatError("truncated binary trajectory header");
    try {
        file.meta = detail::metadata_from_json(nlohmann::json::parse(header));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed binary trajectory header: ") + e.what());
    }
    if (file.meta.labels.size() != n) throw FormatError("binary trajectory: label count does not match n_sites");
    const auto dim = static_cast<Eigen::Index>(n);
    for (std::uint64_t k = 0; k < records; ++k) {
        file.times.push_back(get<double>(in));
        ComplexMatrix rho(dim, dim);
        for (Eigen::Index r = 0; r < dim; ++r)
            for (Eigen::Index c = 0; c < dim; ++c) {
                const double re = get<double>(in);
                const double im = get<double>(in);
                rho(r, c) = Complex(re, im);
            }
        file.states.push_back(std::move(rho));
    }
    return file;
}

TrajectoryFile read_text(std::istream& in) {
    TrajectoryFile file;
    std::string line;
    std::size_t line_no = 0;
    bool have_line = detail::read_header(in, kTextTag, file.meta, line, line_no);
    const auto n = static_cast<Eigen::Index>(file.meta.labels.size());
    if (n == 0) throw FormatError("trajectory header lacks site labels");
    const auto expected = static_cast<std::size_t>(1 + 2 * n * n);
    while (have_line) {
        if (!line.empty() && line[0] != '#') {
            const auto values = detail::parse_numbers(line, line_no);
            if (values.size() != expected)
                throw FormatError(fmt::format("line {}: expected {} values for {} sites, got {}", line_no, expected,
                                              n, values.size()));
            file.times.push_back(values[0]);
            ComplexMatrix rho(n, n);
            std::size_t v = 1;
            for (Eigen::Index r = 0; r < n; ++r)
                for (Eigen::Index c = 0; c < n; ++c, v += 2) rho(r, c) = Complex(values[v], values[v + 1]);
            file.states.push_back(std::move(rho));
        }
        have_line = static_cast<bool>(std::getline(in, line));
        ++line_no;
    }
    return file;
}

}  // namespace

TrajectoryFormat parse_trajectory_format(const std::string& name) {
    if (name == "text") return TrajectoryFormat::Text;
    if (name == "binary") return TrajectoryFormat::Binary;
    throw std::invalid_argument("unknown format '" + name + "' (expected text or binary)");
}

void write_trajectory(std::ostream& out, const TrajectoryFile& file, TrajectoryFormat format) {
    check_consistent(file);
    if (format == TrajectoryFormat::Binary) write_binary(out, file);
    else write_text(out, file);
    if (!out) throw FormatError("failed writing trajectory");
}

void write_trajectory(const std::filesystem::path& path, const TrajectoryFile& file, TrajectoryFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
    write_trajectory(out, file, format);
}

TrajectoryFile read_trajectory(std::istream& in) {
    char magic[8] = {};
    in.read(magic, sizeof magic);
    if (in.gcount() == sizeof magic && std::memcmp(magic, kMagic, sizeof magic) == 0) {
        auto file = read_binary(in);
        check_consistent(file);
        return file;
    }
    in.clear();
    in.seekg(0);
    auto file = read_text(in);
    check_consistent(file);
    return file;
}

TrajectoryFile read_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open trajectory file '" + path.string() + "'");
    return read_trajectory(in);
}

}  // namespace eetflux
