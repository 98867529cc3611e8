#pragma once

// Shared "# key: value" header handling for the text file formats.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eetflux/trajectory_io.hpp"

namespace eetflux::detail {

nlohmann::json metadata_to_json(const FileMetadata& meta);
FileMetadata metadata_from_json(const nlohmann::json& doc);

void write_header(std::ostream& out, const char* tag, const FileMetadata& meta);

/// Consumes the header. On return `line` holds the first data line and the
/// function returns true, or returns false at end of input.
bool read_header(std::istream& in, const char* tag, FileMetadata& meta, std::string& line, std::size_t& line_no);

std::vector<double> parse_numbers(const std::string& line, std::size_t line_no);

}  // namespace eetflux::detail
