#include "header_io.hpp"

#include <charconv>

#include <fmt/format.h>

namespace eetflux::detail {

using nlohmann::json;

json metadata_to_json(const FileMetadata& meta) {
    return {{"model_hash", meta.model_hash}, {"integrator", meta.integrator}, {"dt", meta.dt},
            {"n_sites", meta.labels.size()}, {"labels", meta.labels},         {"manifest", meta.manifest},
            {"run_id", meta.run_id}};
}

FileMetadata metadata_from_json(const json& doc) {
    FileMetadata meta;
    meta.model_hash = doc.value("model_hash", std::string{});
    meta.integrator = doc.value("integrator", std::string{});
    meta.dt = doc.value("dt", 0.0);
    meta.labels = doc.value("labels", std::vector<std::string>{});
    meta.manifest = doc.value("manifest", std::string{});
    meta.run_id = doc.value("run_id", std::string{});
    if (doc.contains("n_sites") && doc["n_sites"].get<std::size_t>() != meta.labels.size())
        throw FormatError("header n_sites does not match the label list");
    return meta;
}

void write_header(std::ostream& out, const char* tag, const FileMetadata& meta) {
    out << "# " << tag << '\n';
    const json doc = metadata_to_json(meta);
    for (const char* key : {"model_hash", "integrator", "dt", "n_sites", "labels", "manifest", "run_id"})
        out << "# " << key << ": " << doc[key].dump() << '\n';
}

bool read_header(std::istream& in, const char* tag, FileMetadata& meta, std::string& line, std::size_t& line_no) {
    line_no = 0;
    if (!std::getline(in, line)) throw FormatError("empty file");
    ++line_no;
    if (line != std::string("# ") + tag) throw FormatError(fmt::format("line 1: expected '# {}'", tag));
    json doc = json::object();
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] != '#') {
            meta = metadata_from_json(doc);
            return true;
        }
        const auto colon = line.find(": ");
        if (colon == std::string::npos || colon < 2) continue;
        const auto key = line.substr(2, colon - 2);
        try {
            doc[key] = json::parse(line.substr(colon + 2));
        } catch (const json::exception&) {
            throw FormatError(fmt::format("line {}: malformed header value for '{}'", line_no, key));
        }
    }
    meta = metadata_from_json(doc);
    return false;
}

std::vector<double> parse_numbers(const std::string& line, std::size_t line_no) {
    std::vector<double> values;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
        while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
        if (p >= end) break;
        double v = 0.0;
        auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc()) throw FormatError(fmt::format("line {}: malformed number", line_no));
        values.push_back(v);
        p = next;
    }
    return values;
}

}  // namespace eetflux::detail
