#pragma once

// Provenance header lines (`# ringlaw <kind> key=value ...`) and the
// canonical configuration hash embedded in every artifact.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ringlaw/seed.hpp"

namespace ringlaw::cli {

/// Accumulates `key=value;` pairs in call order and hashes them with FNV-1a.
/// Paths and thread counts never enter the hash, only values that change
/// the numbers in an artifact.
class ConfigHasher {
 public:
  explicit ConfigHasher(std::string_view stage, std::uint64_t upstream = 0);

  ConfigHasher& add(std::string_view key, std::string_view value);
  ConfigHasher& add(std::string_view key, double value);
  ConfigHasher& add(std::string_view key, std::int64_t value);
  ConfigHasher& add(std::string_view key, int value) {
    return add(key, static_cast<std::int64_t>(value));
  }
  ConfigHasher& add(std::string_view key, std::uint64_t value);
  ConfigHasher& add(std::string_view key, bool value) {
    return add(key, std::string_view(value ? "true" : "false"));
  }

  std::uint64_t value() const { return fnv1a64(canonical_); }
  const std::string& canonical() const noexcept { return canonical_; }

 private:
  std::string canonical_;
};

std::string hex16(std::uint64_t value);

/// Parsed `ringlaw <kind> key=value ...` header.
struct Header {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> fields;  // in file order

  Header& set(std::string key, std::string value);

  std::optional<std::string> get(const std::string& key) const;
  std::uint64_t config_hash() const;  // 0 when absent
  std::optional<Seed> seed() const;
  std::string format() const;  // without the leading "# "
};

/// First comment of the form `ringlaw <kind> ...`; nullopt when none.
std::optional<Header> find_header(const std::vector<std::string>& comments);

}  // namespace ringlaw::cli
