#pragma once

#include "semigroup/config.hpp"
#include "semigroup/reference.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

namespace semigroup {

/// Environment variable that replaces the configured output directory.
inline constexpr const char* kOutDirEnv = "SEMIGROUP_OUT_DIR";

struct RunRequest
{
  /// solve-pde | solve-eigen | reference | evaluate | emit-plot-data
  std::string command;
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> out_dir;
  int workers = 0;
};

/// Output directory: --out, then $SEMIGROUP_OUT_DIR, then the config.
std::filesystem::path resolve_output_dir(const RunConfig& config,
                                         const std::optional<std::filesystem::path>& flag);

/// Runs one command and writes its artifacts. Progress goes to `log`.
/// Returns the process exit status:
///   0 success, 1 unexpected failure, 2 bad config or usage,
///   3 unreadable or mismatched checkpoint, 4 numerical divergence.
int run(const RunRequest& request, std::ostream& log);

/// The artifact writers behind run(), exposed for tests.
std::string pde_metrics_csv(const std::vector<PdeMetricsRecord>& records);
std::string eigen_metrics_csv(const std::vector<EigenMetricsRecord>& records);

/// Reference eigenfunction export. It deliberately uses a different magic
/// ("SGSP") from model checkpoints.
std::string encode_spectral_reference(const TensorGroundState& ref,
                                      std::span<const double> coefficients);

} // namespace semigroup
