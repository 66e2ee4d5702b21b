#pragma once

#include "semigroup/eigen_solver.hpp"
#include "semigroup/pde_solver.hpp"
#include "semigroup/problems.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace semigroup {

/// Parse or validation failure; the message starts with "source:line:"
/// when a line is known.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class SolverKind
{
  pde,
  eigen_scheme1,
  eigen_scheme2,
};

std::string to_string(SolverKind kind);

/// One experiment. Keys are `key = value` lines; `#` starts a comment.
///
/// Always required: problem (ball | torus | eigen), dimension, solver
/// (pde | eigen-scheme1 | eigen-scheme2), batch_size, time_step,
/// learning_rate, width, seed, and one of iterations / epochs.
/// The eigen solvers also require c and g_default; the ball problem
/// requires c (the boundary penalty). epochs needs training_samples > 0.
///
/// Defaults: aux_batch_size 10000, training_samples 0, trig_level 0 (pde)
/// or 5 (eigen), learning_rate_late = learning_rate, learning_rate_switch
/// 0.5, dual_learning_rate 0.1, coefficient_seed 0, eval_every 50 (pde) or
/// 10 (eigen), test_samples 10000, checkpoint_every 0, penalty_enabled
/// true, antithetic_paths false, epsilon_clip min, lambda_norm unit, lambda_antithetic true,
/// lambda_samples 10000, final_lambda_repeats 10, final_lambda_samples
/// 100000, spectral_modes 32, table_size 4096, init_gain 1, output_dir "out".
struct RunConfig
{
  std::string problem;
  int dimension = 0;
  SolverKind solver = SolverKind::pde;
  std::uint64_t coefficient_seed = 0;
  /// Explicit potential coefficients; drawn from coefficient_seed when empty.
  std::vector<double> coefficients;

  std::int64_t batch_size = 0;
  std::int64_t aux_batch_size = 10000;
  std::int64_t iterations = 0;
  std::int64_t epochs = 0;
  std::int64_t training_samples = 0;
  double time_step = 0.0;
  double learning_rate = 0.0;
  double learning_rate_late = 0.0;
  double learning_rate_switch = 0.5;
  double dual_learning_rate = 0.1;
  /// Boundary penalty (pde) or dual scaling factor (eigen).
  double c = 0.0;
  double g_default = 0.0;
  int trig_level = 0;
  double init_gain = 1.0;
  int width = 0;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::int64_t checkpoint_every = 0;
  std::int64_t eval_every = 0;
  std::int64_t test_samples = 10000;
  bool penalty_enabled = true;
  bool antithetic_paths = false;
  bool literal_max_clip = false;
  LambdaNorm lambda_norm = LambdaNorm::unit;
  bool lambda_antithetic = true;
  std::int64_t lambda_samples = 10000;
  int final_lambda_repeats = 10;
  std::int64_t final_lambda_samples = 100000;
  int spectral_modes = 32;
  int table_size = 4096;

  /// Key/value pairs in file order, for the run manifest.
  std::vector<std::pair<std::string, std::string>> entries;

  bool is_eigen() const { return solver != SolverKind::pde; }
  /// Total optimizer iterations, resolving epochs for pde runs.
  std::int64_t total_iterations() const;
};

RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

PdeProblem make_pde_problem(const RunConfig& config);
EigenProblem make_eigen_problem(const RunConfig& config);
PdeTrainOptions pde_options(const RunConfig& config);
EigenTrainOptions eigen_options(const RunConfig& config);

} // namespace semigroup
