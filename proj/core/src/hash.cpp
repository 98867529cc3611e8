#include "eetflux/hash.hpp"

#include <fmt/format.h>

#include "eetflux/config.hpp"

namespace eetflux {

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t value) { return fmt::format("{:016x}", value); }

std::string model_hash(const Model& model) { return to_hex(fnv1a64(serialize_config(model).dump())); }

}  // namespace eetflux
