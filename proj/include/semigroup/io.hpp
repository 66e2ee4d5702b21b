#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace semigroup {

/// A numerical failure: non-finite drift, diverging gradient, failed eigensolve.
class NumericError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A file that is not in the expected format or version.
class FormatError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written file.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

} // namespace semigroup
