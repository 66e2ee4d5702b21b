#include "semigroup/checkpoint.hpp"

#include "semigroup/io.hpp"

#include <bit>

namespace semigroup {

namespace detail {

void put_u32(std::string& out, std::uint32_t v)
{
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v)
{
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& out, double v)
{
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t get_u32(std::string_view in, std::size_t pos)
{
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::string_view in, std::size_t pos)
{
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

double get_f64(std::string_view in, std::size_t pos)
{
  return std::bit_cast<double>(get_u64(in, pos));
}

} // namespace detail

namespace {
constexpr std::string_view kMagic = "SGNN";
constexpr std::size_t kHeaderSize = 28;
} // namespace

std::string encode_checkpoint(const MlpModel& model)
{
  std::string out;
  out.reserve(kHeaderSize + 8 * model.size());
  out.append(kMagic);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(model.dim()));
  detail::put_u32(out, static_cast<std::uint32_t>(model.width()));
  detail::put_u32(out, static_cast<std::uint32_t>(model.trig_level()));
  detail::put_u64(out, model.size());
  for (double v : model.parameters())
    detail::put_f64(out, v);
  return out;
}

MlpModel decode_checkpoint(std::string_view bytes)
{
  if (bytes.size() < kHeaderSize || bytes.substr(0, 4) != kMagic)
    throw FormatError("not a model checkpoint (bad magic)");
  const std::uint32_t version = detail::get_u32(bytes, 4);
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const int dim = static_cast<int>(detail::get_u32(bytes, 8));
  const int width = static_cast<int>(detail::get_u32(bytes, 12));
  const int level = static_cast<int>(detail::get_u32(bytes, 16));
  const std::uint64_t count = detail::get_u64(bytes, 20);
  if (dim < 1 || width < 1 || count != MlpModel::parameter_count(dim, width, level))
    throw FormatError("checkpoint header is inconsistent with its parameter count");
  if (bytes.size() != kHeaderSize + 8 * count)
    throw FormatError("checkpoint size does not match its header");
  MlpModel model(dim, width, level);
  for (std::uint64_t i = 0; i < count; ++i)
    model.parameters()[static_cast<Eigen::Index>(i)] = detail::get_f64(bytes, kHeaderSize + 8 * i);
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const MlpModel& model)
{
  atomic_write(path, encode_checkpoint(model));
}

MlpModel load_checkpoint(const std::filesystem::path& path)
{
  return decode_checkpoint(read_file(path));
}

} // namespace semigroup
