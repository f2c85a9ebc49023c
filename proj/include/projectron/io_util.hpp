#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace projectron {

/// Nine significant digits, the precision used for every numeric artifact.
std::string format_number(double value);

/// Opens (creating parent directories) or throws naming the path.
std::ofstream open_for_write(const std::filesystem::path& path,
                             std::ios::openmode mode = std::ios::out);

/// Flushes and throws if the stream went bad while writing.
void finish_write(std::ofstream& out, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace projectron
