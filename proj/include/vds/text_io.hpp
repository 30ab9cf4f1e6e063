#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vds {

/// Whole-file helpers; both throw IoError.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Splits on '\n', dropping a trailing '\r' on each line.
std::vector<std::string_view> split_lines(std::string_view text);
std::vector<std::string_view> split_whitespace(std::string_view text);
std::string_view trim(std::string_view text);

}  // namespace vds
