#include "semigroup/config.hpp"

#include "semigroup/io.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>

namespace semigroup {

namespace {

std::string trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <class T>
bool parse_number(const std::string& s, T& out)
{
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

struct Parser
{
  std::string source;
  int line = 0;

  [[noreturn]] void fail(const std::string& msg) const
  {
    throw ConfigError(source + ":" + std::to_string(line) + ": " + msg);
  }

  std::int64_t integer(const std::string& key, const std::string& v) const
  {
    std::int64_t out;
    if (!parse_number(v, out))
      fail(key + ": expected an integer, got '" + v + "'");
    return out;
  }
  std::int64_t positive(const std::string& key, const std::string& v) const
  {
    const std::int64_t out = integer(key, v);
    if (out < 1)
      fail(key + " must be positive");
    return out;
  }
  std::int64_t nonnegative(const std::string& key, const std::string& v) const
  {
    const std::int64_t out = integer(key, v);
    if (out < 0)
      fail(key + " must be nonnegative");
    return out;
  }
  std::uint64_t unsigned_int(const std::string& key, const std::string& v) const
  {
    std::uint64_t out;
    if (!parse_number(v, out))
      fail(key + ": expected a nonnegative integer, got '" + v + "'");
    return out;
  }
  double real(const std::string& key, const std::string& v) const
  {
    double out;
    if (!parse_number(v, out) || !std::isfinite(out))
      fail(key + ": expected a finite number, got '" + v + "'");
    return out;
  }
  double positive_real(const std::string& key, const std::string& v) const
  {
    const double out = real(key, v);
    if (!(out > 0.0))
      fail(key + " must be positive");
    return out;
  }
  bool boolean(const std::string& key, const std::string& v) const
  {
    if (v == "true" || v == "1")
      return true;
    if (v == "false" || v == "0")
      return false;
    fail(key + ": expected true or false, got '" + v + "'");
  }
};

using Setter = std::function<void(RunConfig&, const Parser&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters()
{
  static const std::map<std::string, Setter> table = {
    {"problem",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       if (v != "ball" && v != "torus" && v != "eigen")
         p.fail(k + ": expected ball, torus or eigen, got '" + v + "'");
       c.problem = v;
     }},
    {"dimension",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       const auto d = p.positive(k, v);
       if (d > 1000)
         p.fail(k + " is unreasonably large");
       c.dimension = static_cast<int>(d);
     }},
    {"solver",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       if (v == "pde")
         c.solver = SolverKind::pde;
       else if (v == "eigen-scheme1")
         c.solver = SolverKind::eigen_scheme1;
       else if (v == "eigen-scheme2")
         c.solver = SolverKind::eigen_scheme2;
       else
         p.fail(k + ": expected pde, eigen-scheme1 or eigen-scheme2, got '" + v + "'");
     }},
    {"coefficient_seed",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.coefficient_seed = p.unsigned_int(k, v);
     }},
    {"coefficients",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.coefficients.clear();
       std::size_t pos = 0;
       while (pos <= v.size()) {
         const auto comma = v.find(',', pos);
         const std::string item =
           trim(std::string_view(v).substr(pos, comma == std::string::npos ? v.size() - pos
                                                                           : comma - pos));
         c.coefficients.push_back(p.real(k, item));
         if (comma == std::string::npos)
           break;
         pos = comma + 1;
       }
     }},
    {"batch_size",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.batch_size = p.positive(k, v);
     }},
    {"aux_batch_size",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.aux_batch_size = p.positive(k, v);
     }},
    {"iterations",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.iterations = p.nonnegative(k, v);
     }},
    {"epochs",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.epochs = p.nonnegative(k, v);
     }},
    {"training_samples",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.training_samples = p.nonnegative(k, v);
     }},
    {"time_step",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.time_step = p.positive_real(k, v);
     }},
    {"learning_rate",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.learning_rate = p.positive_real(k, v);
     }},
    {"learning_rate_late",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.learning_rate_late = p.positive_real(k, v);
     }},
    {"learning_rate_switch",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       const double s = p.real(k, v);
       if (s < 0.0 || s > 1.0)
         p.fail(k + " must lie in [0, 1]");
       c.learning_rate_switch = s;
     }},
    {"dual_learning_rate",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.dual_learning_rate = p.positive_real(k, v);
     }},
    {"c",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       const double x = p.real(k, v);
       if (x < 0.0)
         p.fail(k + " must be nonnegative");
       c.c = x;
     }},
    {"g_default",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.g_default = p.positive_real(k, v);
     }},
    {"trig_level",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       const auto m = p.nonnegative(k, v);
       if (m > 64)
         p.fail(k + " is unreasonably large");
       c.trig_level = static_cast<int>(m);
     }},
    {"init_gain",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.init_gain = p.positive_real(k, v);
     }},
    {"width",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       const auto h = p.positive(k, v);
       if (h > 100000)
         p.fail(k + " is unreasonably large");
       c.width = static_cast<int>(h);
     }},
    {"seed",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.seed = p.unsigned_int(k, v);
     }},
    {"output_dir",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       if (v.empty())
         p.fail(k + " must not be empty");
       c.output_dir = v;
     }},
    {"checkpoint_every",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.checkpoint_every = p.nonnegative(k, v);
     }},
    {"eval_every",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.eval_every = p.nonnegative(k, v);
     }},
    {"test_samples",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.test_samples = p.positive(k, v);
     }},
    {"penalty_enabled",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.penalty_enabled = p.boolean(k, v);
     }},
    {"antithetic_paths",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.antithetic_paths = p.boolean(k, v);
     }},
    {"epsilon_clip",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       if (v == "min")
         c.literal_max_clip = false;
       else if (v == "max")
         c.literal_max_clip = true;
       else
         p.fail(k + ": expected min or max, got '" + v + "'");
     }},
    {"lambda_norm",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       if (v == "unit")
         c.lambda_norm = LambdaNorm::unit;
       else if (v == "rayleigh")
         c.lambda_norm = LambdaNorm::rayleigh;
       else
         p.fail(k + ": expected unit or rayleigh, got '" + v + "'");
     }},
    {"lambda_antithetic",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.lambda_antithetic = p.boolean(k, v);
     }},
    {"lambda_samples",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.lambda_samples = p.positive(k, v);
       if (c.lambda_samples < 2)
         p.fail(k + " must be at least 2");
     }},
    {"final_lambda_repeats",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.final_lambda_repeats = static_cast<int>(p.positive(k, v));
     }},
    {"final_lambda_samples",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       c.final_lambda_samples = p.positive(k, v);
       if (c.final_lambda_samples < 2)
         p.fail(k + " must be at least 2");
     }},
    {"spectral_modes",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       const auto m = p.positive(k, v);
       if (m < 8 || m > 4096)
         p.fail(k + " must lie in [8, 4096]");
       c.spectral_modes = static_cast<int>(m);
     }},
    {"table_size",
     [](RunConfig& c, const Parser& p, const std::string& k, const std::string& v) {
       const auto m = p.positive(k, v);
       if (m < 16 || m > (1 << 24))
         p.fail(k + " must lie in [16, 2^24]");
       c.table_size = static_cast<int>(m);
     }},
  };
  return table;
}

} // namespace

std::string to_string(SolverKind kind)
{
  switch (kind) {
  case SolverKind::pde:
    return "pde";
  case SolverKind::eigen_scheme1:
    return "eigen-scheme1";
  case SolverKind::eigen_scheme2:
    return "eigen-scheme2";
  }
  return "unknown";
}

std::int64_t RunConfig::total_iterations() const
{
  if (epochs > 0 && solver == SolverKind::pde)
    return epochs * iterations_per_epoch(training_samples, batch_size);
  return iterations;
}

RunConfig parse_config_text(const std::string& text, const std::string& source)
{
  RunConfig cfg;
  Parser p{source, 0};
  std::map<std::string, int> seen;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    std::string raw = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    ++p.line;
    if (const auto hash = raw.find('#'); hash != std::string::npos)
      raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      p.fail("expected 'key = value', got '" + line + "'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end())
      p.fail("unknown key '" + key + "'");
    if (seen.count(key))
      p.fail("duplicate key '" + key + "' (first set on line " + std::to_string(seen[key]) + ")");
    if (value.empty())
      p.fail(key + ": missing value");
    seen[key] = p.line;
    it->second(cfg, p, key, value);
    cfg.entries.emplace_back(key, value);
  }

  auto missing = [&](const std::string& key) {
    throw ConfigError(source + ": missing required key '" + key + "'");
  };
  auto at_line = [&](const std::string& key, const std::string& msg) {
    const auto it = seen.find(key);
    if (it != seen.end())
      throw ConfigError(source + ":" + std::to_string(it->second) + ": " + msg);
    throw ConfigError(source + ": " + msg);
  };
  for (const char* key : {"problem", "dimension", "solver", "batch_size", "time_step",
                          "learning_rate", "width", "seed"})
    if (!seen.count(key))
      missing(key);
  if (!seen.count("iterations") && !seen.count("epochs"))
    missing("iterations");
  if (seen.count("iterations") && seen.count("epochs"))
    at_line("epochs", "set either iterations or epochs, not both");

  if (cfg.is_eigen()) {
    if (cfg.problem != "eigen")
      at_line("solver", "eigen solvers need problem = eigen");
    for (const char* key : {"c", "g_default"})
      if (!seen.count(key))
        missing(key);
    if (!(cfg.c > 0.0))
      at_line("c", "c must be positive for the eigen solvers");
    if (seen.count("epochs"))
      at_line("epochs", "epochs applies only to the pde solver");
    for (const char* key : {"training_samples", "antithetic_paths", "penalty_enabled",
                            "table_size"})
      if (seen.count(key))
        at_line(key, std::string(key) + " applies only to the pde solver");
    if (!cfg.coefficients.empty() && static_cast<int>(cfg.coefficients.size()) != cfg.dimension)
      at_line("coefficients", "coefficients needs exactly `dimension` entries");
    if (!seen.count("trig_level"))
      cfg.trig_level = 5;
  } else {
    if (cfg.problem == "eigen")
      at_line("solver", "problem = eigen needs an eigen solver");
    if (cfg.problem == "ball" && !seen.count("c"))
      missing("c");
    for (const char* key : {"g_default", "dual_learning_rate", "coefficients", "epsilon_clip",
                            "lambda_norm", "lambda_antithetic", "lambda_samples",
                            "final_lambda_repeats", "final_lambda_samples", "spectral_modes"})
      if (seen.count(key))
        at_line(key, std::string(key) + " applies only to the eigen solvers");
    if (seen.count("epochs") && cfg.training_samples == 0)
      at_line("epochs", "epochs needs training_samples > 0");
  }
  if (cfg.learning_rate_late == 0.0)
    cfg.learning_rate_late = cfg.learning_rate;
  if (!seen.count("eval_every"))
    cfg.eval_every = cfg.is_eigen() ? 10 : 50;
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path)
{
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(path.string() + ": cannot read config: " + e.what());
  }
  return parse_config_text(text, path.string());
}

PdeProblem make_pde_problem(const RunConfig& c)
{
  if (c.problem == "ball")
    return ball_problem(c.dimension);
  if (c.problem == "torus")
    return torus_problem(c.dimension);
  throw ConfigError("problem '" + c.problem + "' is not a pde preset");
}

EigenProblem make_eigen_problem(const RunConfig& c)
{
  if (c.problem != "eigen")
    throw ConfigError("problem '" + c.problem + "' is not an eigen preset");
  EigenProblem p;
  p.coefficients = c.coefficients.empty()
                     ? draw_potential_coefficients(c.dimension, c.coefficient_seed)
                     : c.coefficients;
  return p;
}

PdeTrainOptions pde_options(const RunConfig& c)
{
  PdeTrainOptions o;
  o.width = c.width;
  o.trig_level = c.trig_level;
  o.init_gain = c.init_gain;
  o.dt = c.time_step;
  o.batch_size = c.batch_size;
  o.aux_batch_size = c.aux_batch_size;
  o.training_samples = c.training_samples;
  o.iterations = c.total_iterations();
  o.learning_rate = {c.learning_rate, c.learning_rate_late, c.learning_rate_switch};
  o.penalty = c.c;
  o.use_penalty = c.penalty_enabled;
  o.antithetic = c.antithetic_paths;
  o.eval_every = c.eval_every;
  o.test_samples = c.test_samples;
  o.checkpoint_every = c.checkpoint_every;
  o.table_size = c.table_size;
  o.seed = c.seed;
  return o;
}

EigenTrainOptions eigen_options(const RunConfig& c)
{
  EigenTrainOptions o;
  o.scheme = c.solver == SolverKind::eigen_scheme1 ? EigenScheme::scheme1 : EigenScheme::scheme2;
  o.width = c.width;
  o.trig_level = c.trig_level;
  o.init_gain = c.init_gain;
  o.dt = c.time_step;
  o.c_scale = c.c;
  o.g_default = c.g_default;
  o.batch_size = c.batch_size;
  o.aux_batch_size = c.aux_batch_size;
  o.iterations = c.iterations;
  o.learning_rate = {c.learning_rate, c.learning_rate_late, c.learning_rate_switch};
  o.dual_lr = c.dual_learning_rate;
  o.literal_max_clip = c.literal_max_clip;
  o.lambda.antithetic = c.lambda_antithetic;
  o.lambda.norm = c.lambda_norm;
  o.eval_every = c.eval_every;
  o.test_samples = c.test_samples;
  o.lambda_samples = c.lambda_samples;
  o.final_lambda_repeats = c.final_lambda_repeats;
  o.final_lambda_samples = c.final_lambda_samples;
  o.spectral_modes = c.spectral_modes;
  o.checkpoint_every = c.checkpoint_every;
  o.seed = c.seed;
  return o;
}

} // namespace semigroup
