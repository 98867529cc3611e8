#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "eetflux/trajectory_io.hpp"
#include "header_io.hpp"

namespace eetflux {

namespace {

constexpr const char* kCurrentsTag = "eetflux currents v1";

}  // namespace

void write_currents(std::ostream& out, const CurrentsFile& file) {
    detail::write_header(out, kCurrentsTag, file.meta);
    out << "# columns: \"t l n j_total j_unitary j_relax j_pop j_coher j_dephas\"\n";
    const auto n = static_cast<Eigen::Index>(file.meta.labels.size());
    std::string line;
    for (const auto& r : file.records) {
        if (r.total.rows() != n) throw FormatError("currents record dimension does not match labels");
        for (Eigen::Index l = 0; l < n; ++l)
            for (Eigen::Index m = l + 1; m < n; ++m) {
                line = fmt::format("{:.17g} {} {} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g}\n", r.time, l, m,
                                   r.total(l, m), r.unitary(l, m), r.relaxation(l, m), r.population(l, m),
                                   r.coherence(l, m), r.dephasing(l, m));
                out << line;
            }
    }
    if (!out) throw FormatError("failed writing currents");
}

void write_currents(const std::filesystem::path& path, const CurrentsFile& file) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
    write_currents(out, file);
}

CurrentsFile read_currents(std::istream& in) {
    CurrentsFile file;
    std::string line;
    std::size_t line_no = 0;
    bool have_line = detail::read_header(in, kCurrentsTag, file.meta, line, line_no);
    const auto n = static_cast<Eigen::Index>(file.meta.labels.size());
    if (n == 0) throw FormatError("currents header lacks site labels");
    const std::size_t pairs = static_cast<std::size_t>(n * (n - 1) / 2);

    auto fresh = [&](double t) {
        CurrentRecord r;
        r.time = t;
        for (RealMatrix* m : {&r.total, &r.unitary, &r.relaxation, &r.population, &r.coherence, &r.dephasing})
            *m = RealMatrix::Zero(n, n);
        return r;
    };
    auto set = [](RealMatrix& m, Eigen::Index a, Eigen::Index b, double v) {
        m(a, b) = v;
        m(b, a) = -v;
    };

    std::size_t seen = pairs;  // pairs read for the current record
    while (have_line) {
        if (!line.empty() && line[0] != '#') {
            const auto v = detail::parse_numbers(line, line_no);
            if (v.size() != 9) throw FormatError(fmt::format("line {}: expected 9 columns, got {}", line_no, v.size()));
            const auto a = static_cast<Eigen::Index>(v[1]);
            const auto b = static_cast<Eigen::Index>(v[2]);
            if (v[1] != std::floor(v[1]) || v[2] != std::floor(v[2]) || a < 0 || b <= a || b >= n)
                throw FormatError(fmt::format("line {}: invalid site pair ({}, {})", line_no, v[1], v[2]));
            if (seen == pairs) {
                if (!file.records.empty() && !(v[0] > file.records.back().time))
                    throw FormatError(fmt::format("line {}: times must be strictly increasing", line_no));
                file.records.push_back(fresh(v[0]));
                seen = 0;
            } else if (v[0] != file.records.back().time) {
                throw FormatError(fmt::format("line {}: record at t = {} is missing site pairs", line_no,
                                              file.records.back().time));
            }
            auto& r = file.records.back();
            set(r.total, a, b, v[3]);
            set(r.unitary, a, b, v[4]);
            set(r.relaxation, a, b, v[5]);
            set(r.population, a, b, v[6]);
            set(r.coherence, a, b, v[7]);
            set(r.dephasing, a, b, v[8]);
            ++seen;
        }
        have_line = static_cast<bool>(std::getline(in, line));
        ++line_no;
    }
    if (seen != pairs) throw FormatError("currents file ends inside a record");
    return file;
}

CurrentsFile read_currents(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open currents file '" + path.string() + "'");
    return read_currents(in);
}

}  // namespace eetflux
