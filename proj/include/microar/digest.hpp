#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "microar/core_model.hpp"

namespace microar {

Digest sha256(std::span<const std::uint8_t> bytes);
Digest sha256(std::string_view bytes);

std::string to_hex(const Digest& digest);

}  // namespace microar
