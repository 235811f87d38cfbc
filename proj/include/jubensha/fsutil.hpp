#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace jubensha {

// Throws IoError when the file cannot be opened or read.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace jubensha
