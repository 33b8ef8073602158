#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

namespace signforge {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Hash of a JSON document's canonical (sorted-key, compact) dump,
/// rendered as 16 hex digits. Used as the config hash in artifacts.
std::string config_hash(const nlohmann::json& j);

}  // namespace signforge
