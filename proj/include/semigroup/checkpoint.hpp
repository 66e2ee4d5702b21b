#pragma once

#include "semigroup/mlp.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace semigroup {

/// Model checkpoint layout (all integers and reals little-endian):
///
///   offset  size  field
///   0       4     magic "SGNN"
///   4       4     format version (u32, currently 1)
///   8       4     input dimension d (u32)
///   12      4     hidden width H (u32)
///   16      4     trigonometric level m (u32)
///   20      8     parameter count (u64)
///   28      8*n   parameters (f64) in MlpModel's flat order
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const MlpModel& model);
/// Throws FormatError on a wrong magic, version, or size.
MlpModel decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const MlpModel& model);
MlpModel load_checkpoint(const std::filesystem::path& path);

namespace detail {
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f64(std::string& out, double v);
std::uint32_t get_u32(std::string_view in, std::size_t pos);
std::uint64_t get_u64(std::string_view in, std::size_t pos);
double get_f64(std::string_view in, std::size_t pos);
} // namespace detail

} // namespace semigroup
