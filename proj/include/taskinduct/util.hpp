#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace taskinduct::util {

/// Hex-encoded SHA-256 of the given bytes.
std::string sha256_hex(std::string_view data);

std::string trim(std::string_view s);
std::string lower(std::string_view s);

/// Collapses runs of whitespace to single spaces (after trimming).
std::string collapse_ws(std::string_view s);

bool contains(std::string_view haystack, std::string_view needle);

std::vector<std::string> split_lines(std::string_view s);

/// Filesystem-safe slug: lowercase, [a-z0-9._-], everything else becomes '-'.
std::string slug(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);

/// Write to a sibling temp file, then rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

std::optional<std::string> env_var(const std::string& name);

}  // namespace taskinduct::util
