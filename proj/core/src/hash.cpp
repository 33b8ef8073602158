#include "signforge/hash.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

namespace signforge {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const nlohmann::json& j) {
  // nlohmann::json keeps object keys sorted, so dump() is canonical.
  const std::string dump = j.dump();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(dump)));
  return std::string(buf);
}

}  // namespace signforge
