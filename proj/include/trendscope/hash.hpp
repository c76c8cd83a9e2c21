#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace trendscope {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);
std::uint64_t fnv1a64(std::string_view data);

}  // namespace trendscope
