#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace vizex {

std::string read_file(const std::filesystem::path& path);
// Creates parent directories as needed.
void write_file(const std::filesystem::path& path, std::string_view contents);

// FNV-1a, used for content addressing (stable across platforms).
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value, int digits = 16);

}  // namespace vizex
