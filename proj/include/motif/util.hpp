#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace motif {

// FNV-1a over a byte range; used for dataset fingerprints in manifests.
inline std::uint64_t fnv1a(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a_file(const std::filesystem::path& path);

// Static partition over [0, n); results keyed by index stay deterministic
// regardless of worker count.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

std::string to_hex(std::uint64_t v);

// strict parse helpers (full-string match or failure)
bool parse_double(std::string_view s, double& out);
bool parse_long(std::string_view s, long& out);

std::vector<std::string> split(std::string_view s, char delim);
std::string trim(std::string_view s);

}  // namespace motif
