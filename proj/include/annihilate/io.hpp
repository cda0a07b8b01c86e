#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

namespace annihilate {

/// Shortest text that round-trips a double ("%.17g"), with "inf"/"-inf"/"nan".
std::string format_double(double v);

/// Writes text to path, creating parent directories. Throws std::runtime_error.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace annihilate
