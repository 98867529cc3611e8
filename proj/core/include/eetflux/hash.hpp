#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "eetflux/model.hpp"

namespace eetflux {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

std::string to_hex(std::uint64_t value);

/// Hash of the canonical serialized model, as 16 hex digits.
std::string model_hash(const Model& model);

}  // namespace eetflux
