#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cotgauge {

using json = nlohmann::json;

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Writes via a temp file in the same directory, then renames into place.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

std::string trim(std::string_view s);
std::string casefold(std::string_view s);  // ASCII lowercasing

/// Parses one JSON object per non-empty line. Errors carry the 1-based line number.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
std::vector<nlohmann::json> parse_jsonl(std::string_view text, const std::string& origin);

/// Runs fn(i) for i in [0, count) on up to max_workers threads.
/// Exceptions from tasks are rethrown (first one wins) after all workers stop.
void parallel_for(std::size_t count, int max_workers, const std::function<void(std::size_t)>& fn);

/// Deterministic xorshift-based generator; identical streams on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform draw from [0, bound); bound must be nonzero.
  std::uint64_t bounded(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

}  // namespace cotgauge
