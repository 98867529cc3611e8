#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "eetflux/currents.hpp"
#include "eetflux/model.hpp"

namespace eetflux {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Provenance carried in every trajectory and currents file header.
struct FileMetadata {
    std::string model_hash;
    std::string integrator = "rk4";
    double dt = 0.0;
    std::vector<std::string> labels;
    std::string manifest;  // manifest file name of the producing run
    std::string run_id;
};

struct TrajectoryFile {
    FileMetadata meta;
    std::vector<double> times;
    std::vector<ComplexMatrix> states;

    std::size_t n_sites() const noexcept { return meta.labels.size(); }
};

enum class TrajectoryFormat { Text, Binary };

TrajectoryFormat parse_trajectory_format(const std::string& name);

// Text layout:
//   # eetflux trajectory v1
//   # <key>: <json value>          (model_hash, integrator, dt, n_sites, labels, manifest, run_id)
//   t re(rho00) im(rho00) re(rho01) im(rho01) ...   (row-major, one line per output time)
//
// Binary layout (little-endian):
//   char[8] "EETFTRJ1" | u32 n_sites | u64 n_records | u64 header_bytes |
//   header_bytes of UTF-8 JSON metadata | n_records x (f64 t, 2*n_sites^2 f64 re/im row-major)
void write_trajectory(std::ostream& out, const TrajectoryFile& file, TrajectoryFormat format);
void write_trajectory(const std::filesystem::path& path, const TrajectoryFile& file, TrajectoryFormat format);

/// Reads either layout (detected from the first bytes). Throws FormatError.
TrajectoryFile read_trajectory(std::istream& in);
TrajectoryFile read_trajectory(const std::filesystem::path& path);

struct CurrentsFile {
    FileMetadata meta;
    std::vector<CurrentRecord> records;
};

// Text layout, one line per (time, pair l < n):
//   t l n j_total j_unitary j_relax j_pop j_coher j_dephas
// under the same "# key: value" header as trajectories.
void write_currents(std::ostream& out, const CurrentsFile& file);
void write_currents(const std::filesystem::path& path, const CurrentsFile& file);
CurrentsFile read_currents(std::istream& in);
CurrentsFile read_currents(const std::filesystem::path& path);

}  // namespace eetflux
