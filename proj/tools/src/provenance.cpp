#include "provenance.hpp"

#include <cstdio>

#include "ringlaw/detail/text.hpp"
#include "ringlaw/error.hpp"

namespace ringlaw::cli {

ConfigHasher::ConfigHasher(std::string_view stage, std::uint64_t upstream) {
  canonical_ = "upstream=" + hex16(upstream) + ";stage=" + std::string(stage) + ";";
}

ConfigHasher& ConfigHasher::add(std::string_view key, std::string_view value) {
  canonical_ += key;
  canonical_ += '=';
  canonical_ += value;
  canonical_ += ';';
  return *this;
}

ConfigHasher& ConfigHasher::add(std::string_view key, double value) {
  return add(key, std::string_view(detail::format_double(value)));
}

ConfigHasher& ConfigHasher::add(std::string_view key, std::int64_t value) {
  return add(key, std::string_view(std::to_string(value)));
}

ConfigHasher& ConfigHasher::add(std::string_view key, std::uint64_t value) {
  return add(key, std::string_view(std::to_string(value)));
}

std::string hex16(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

Header& Header::set(std::string key, std::string value) {
  for (auto& [k, v] : fields) {
    if (k == key) {
      v = std::move(value);
      return *this;
    }
  }
  fields.emplace_back(std::move(key), std::move(value));
  return *this;
}

std::optional<std::string> Header::get(const std::string& key) const {
  for (const auto& [k, v] : fields) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::uint64_t Header::config_hash() const {
  const auto text = get("config_hash");
  if (!text) return 0;
  std::uint64_t value = 0;
  const auto* end = text->data() + text->size();
  const auto [ptr, ec] = std::from_chars(text->data(), end, value, 16);
  if (ec != std::errc{} || ptr != end) {
    throw FormatError("bad config_hash '" + *text + "'");
  }
  return value;
}

std::optional<Seed> Header::seed() const {
  const auto text = get("seed");
  if (!text) return std::nullopt;
  const auto value = detail::parse_number<Seed>(*text);
  if (!value) throw FormatError("bad seed '" + *text + "'");
  return value;
}

std::string Header::format() const {
  std::string out = "ringlaw " + kind;
  for (const auto& [k, v] : fields) out += " " + k + "=" + v;
  return out;
}

std::optional<Header> find_header(const std::vector<std::string>& comments) {
  for (const auto& comment : comments) {
    std::string_view text = comment;
    if (!text.starts_with("ringlaw ")) continue;
    text.remove_prefix(8);
    Header header;
    std::size_t start = 0;
    bool first = true;
    while (start < text.size()) {
      auto end = text.find(' ', start);
      if (end == std::string_view::npos) end = text.size();
      const auto token = text.substr(start, end - start);
      start = end + 1;
      if (token.empty()) continue;
      if (first) {
        header.kind = std::string(token);
        first = false;
        continue;
      }
      const auto eq = token.find('=');
      if (eq == std::string_view::npos) {
        throw FormatError("header token '" + std::string(token) +
                          "' is not key=value");
      }
      header.set(std::string(token.substr(0, eq)),
                 std::string(token.substr(eq + 1)));
    }
    return header;
  }
  return std::nullopt;
}

}  // namespace ringlaw::cli
