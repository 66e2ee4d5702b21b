#include "semigroup/runner.hpp"

#include "semigroup/checkpoint.hpp"
#include "semigroup/io.hpp"
#include "semigroup/parallel.hpp"

#include <chrono>
#include <cstdlib>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#ifndef SEMIGROUP_VERSION
#define SEMIGROUP_VERSION "0.0.0"
#endif
#ifndef SEMIGROUP_GIT_REV
#define SEMIGROUP_GIT_REV "unknown"
#endif

namespace semigroup {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class Manifest
{
public:
  void add(const std::string& key, const std::string& value)
  {
    text_ += key + "=" + value + "\n";
  }
  void add(const std::string& key, double value) { add(key, format_double(value)); }
  const std::string& text() const { return text_; }

private:
  std::string text_;
};

Manifest start_manifest(const RunRequest& req, const RunConfig& cfg)
{
  Manifest m;
  m.add("command", req.command);
  m.add("version", SEMIGROUP_VERSION);
  m.add("git_revision", SEMIGROUP_GIT_REV);
  m.add("config_path", req.config_path.string());
  m.add("seed", std::to_string(cfg.seed));
  m.add("workers", std::to_string(worker_count()));
  for (const auto& [k, v] : cfg.entries)
    m.add("config." + k, v);
  return m;
}

std::string join(std::span<const double> values)
{
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i)
      out += ",";
    out += format_double(values[i]);
  }
  return out;
}

std::string timing_csv(const std::vector<std::pair<std::int64_t, double>>& rows)
{
  std::string out = "iteration,seconds\n";
  for (const auto& [it, s] : rows)
    out += std::to_string(it) + "," + format_double(s) + "\n";
  return out;
}

// Columns of a metrics file by header name.
std::map<std::string, std::vector<std::string>> read_csv_columns(const fs::path& path)
{
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::string> header;
  std::map<std::string, std::vector<std::string>> cols;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
      out.push_back(item);
    return out;
  };
  if (!std::getline(in, line))
    throw FormatError(path.string() + ": empty metrics file");
  header = split(line);
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw FormatError(path.string() + ": ragged metrics row");
    for (std::size_t i = 0; i < cells.size(); ++i)
      cols[header[i]].push_back(cells[i]);
  }
  return cols;
}

std::string select_columns(const std::map<std::string, std::vector<std::string>>& cols,
                           const std::vector<std::string>& names)
{
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i)
    out += (i ? "," : "") + names[i];
  out += "\n";
  for (const auto& n : names)
    if (!cols.count(n))
      throw FormatError("metrics file has no column '" + n + "'");
  const std::size_t rows = cols.at(names[0]).size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < names.size(); ++i)
      out += (i ? "," : "") + cols.at(names[i])[r];
    out += "\n";
  }
  return out;
}

MlpModel load_model_for(const RunConfig& cfg, const fs::path& path)
{
  MlpModel model = load_checkpoint(path);
  if (model.dim() != cfg.dimension)
    throw FormatError(path.string() + ": checkpoint dimension " + std::to_string(model.dim()) +
                      " does not match config dimension " + std::to_string(cfg.dimension));
  return model;
}

int solve_pde(const RunRequest& req, const RunConfig& cfg, const fs::path& out,
              std::ostream& log)
{
  if (cfg.is_eigen())
    throw UsageError("solve-pde needs solver = pde");
  const auto t0 = std::chrono::steady_clock::now();
  const PdeProblem problem = make_pde_problem(cfg);
  const PdeTrainOptions opt = pde_options(cfg);
  fs::create_directories(out);

  std::vector<PdeMetricsRecord> records;
  std::vector<std::pair<std::int64_t, double>> timing;
  PdeCallbacks cb;
  cb.on_record = [&](const PdeMetricsRecord& r) {
    records.push_back(r);
    timing.emplace_back(r.iteration, r.seconds);
    atomic_write(out / "metrics.csv", pde_metrics_csv(records));
    atomic_write(out / "timing.csv", timing_csv(timing));
    log << "iter " << r.iteration << " epoch " << format_double(r.epoch) << " E0 "
        << format_double(r.e0) << " t " << format_double(r.seconds) << "s\n"
        << std::flush;
  };
  cb.on_checkpoint = [&](std::int64_t t, const MlpModel& m) {
    save_checkpoint(out / ("checkpoint_" + std::to_string(t) + ".sgnn"), m);
  };
  const PdeTrainResult res = train_pde(problem, opt, cb);
  save_checkpoint(out / "model.sgnn", res.model);

  Manifest m = start_manifest(req, cfg);
  m.add("iterations", std::to_string(opt.iterations));
  m.add("final_e0", res.metrics.back().e0);
  m.add("removed_mean", res.removed_mean);
  m.add("elapsed_seconds",
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  atomic_write(out / "manifest.txt", m.text());
  log << "final E0 " << format_double(res.metrics.back().e0) << "\n";
  return 0;
}

int solve_eigen(const RunRequest& req, const RunConfig& cfg, const fs::path& out,
                std::ostream& log)
{
  if (!cfg.is_eigen())
    throw UsageError("solve-eigen needs solver = eigen-scheme1 or eigen-scheme2");
  const auto t0 = std::chrono::steady_clock::now();
  const EigenProblem problem = make_eigen_problem(cfg);
  const EigenTrainOptions opt = eigen_options(cfg);
  fs::create_directories(out);

  std::vector<EigenMetricsRecord> records;
  std::vector<std::pair<std::int64_t, double>> timing;
  EigenCallbacks cb;
  cb.on_record = [&](const EigenMetricsRecord& r) {
    records.push_back(r);
    timing.emplace_back(r.iteration, r.seconds);
    atomic_write(out / "metrics.csv", eigen_metrics_csv(records));
    atomic_write(out / "timing.csv", timing_csv(timing));
    log << "iter " << r.iteration << " E0 " << format_double(r.e0) << " E1 "
        << format_double(r.e1) << " norm " << format_double(r.norm_residual) << " g "
        << format_double(r.g) << " t " << format_double(r.seconds) << "s\n"
        << std::flush;
  };
  cb.on_checkpoint = [&](std::int64_t t, const MlpModel& model, const DualState& dual) {
    const std::string stem = "checkpoint_" + std::to_string(t);
    save_checkpoint(out / (stem + ".sgnn"), model);
    atomic_write(out / (stem + ".dual"), encode_dual_state(dual));
  };
  const EigenTrainResult res = train_eigen(problem, opt, cb);
  save_checkpoint(out / "model.sgnn", res.model);
  atomic_write(out / "model.dual", encode_dual_state(res.dual));

  Manifest m = start_manifest(req, cfg);
  m.add("coefficients", join(problem.coefficients));
  m.add("lambda_reference", res.lambda_reference);
  m.add("lambda", res.lambda);
  m.add("lambda_standard_error", res.lambda_standard_error);
  m.add("final_e0", res.e0);
  m.add("final_e1", res.e1);
  m.add("final_norm_residual", res.norm_residual);
  m.add("elapsed_seconds",
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  atomic_write(out / "manifest.txt", m.text());
  log << "final E0 " << format_double(res.e0) << " E1 " << format_double(res.e1) << "\n";
  return 0;
}

int reference(const RunRequest& req, const RunConfig& cfg, const fs::path& out,
              std::ostream& log)
{
  fs::create_directories(out);
  Manifest m = start_manifest(req, cfg);
  std::string text;
  if (cfg.is_eigen()) {
    const EigenProblem problem = make_eigen_problem(cfg);
    const TensorGroundState ref(problem.coefficients, cfg.spectral_modes);
    atomic_write(out / "reference.sgsp", encode_spectral_reference(ref, problem.coefficients));
    text += "coefficients=" + join(problem.coefficients) + "\n";
    text += "modes=" + std::to_string(cfg.spectral_modes) + "\n";
    for (std::size_t i = 0; i < ref.factors().size(); ++i)
      text += "lambda_" + std::to_string(i) + "=" + format_double(ref.factors()[i].eigenvalue) +
              "\n";
    text += "lambda=" + format_double(ref.eigenvalue()) + "\n";
    log << "lambda* " << format_double(ref.eigenvalue()) << "\n";
  } else {
    text += "problem=" + cfg.problem + "\n";
    text += "dimension=" + std::to_string(cfg.dimension) + "\n";
    text += cfg.problem == "ball" ? "solution=exp(2|x|^2)\n" : "solution=sum_i sin(2 pi x_i)\n";
  }
  atomic_write(out / "reference.txt", text);
  atomic_write(out / "manifest.txt", m.text());
  return 0;
}

int evaluate(const RunRequest& req, const RunConfig& cfg, const fs::path& out,
             std::ostream& log)
{
  const fs::path ckpt = req.checkpoint ? *req.checkpoint : out / "model.sgnn";
  const MlpModel model = load_model_for(cfg, ckpt);
  std::string text = "checkpoint=" + ckpt.string() + "\n";
  if (cfg.is_eigen()) {
    const EigenProblem problem = make_eigen_problem(cfg);
    const EigenTrainOptions opt = eigen_options(cfg);
    const TensorGroundState ref(problem.coefficients, cfg.spectral_modes);
    const double e0 =
      eigen_test_error(problem, model, cfg.test_samples, cfg.seed, cfg.spectral_modes);
    const LambdaEstimate lam =
      final_lambda(opt.scheme, problem, model, opt.dt, opt.final_lambda_repeats,
                   opt.final_lambda_samples, cfg.seed, opt.lambda);
    text += "e0=" + format_double(e0) + "\n";
    text += "lambda=" + format_double(lam.value) + "\n";
    text += "lambda_standard_error=" + format_double(lam.standard_error) + "\n";
    text += "lambda_reference=" + format_double(ref.eigenvalue()) + "\n";
    text += "e1=" + format_double(error_E1(lam.value, ref.eigenvalue()).value) + "\n";
  } else {
    const PdeProblem problem = make_pde_problem(cfg);
    text += "e0=" + format_double(pde_test_error(problem, model, cfg.test_samples, cfg.seed,
                                                 cfg.table_size)) +
            "\n";
  }
  fs::create_directories(out);
  atomic_write(out / "evaluation.txt", text);
  log << text;
  return 0;
}

int emit_plot_data(const RunRequest& req, const RunConfig& cfg, const fs::path& out,
                   std::ostream& log)
{
  const fs::path ckpt = req.checkpoint ? *req.checkpoint : out / "model.sgnn";
  const MlpModel model = load_model_for(cfg, ckpt);
  const int d = cfg.dimension;
  fs::create_directories(out);

  if (fs::exists(out / "metrics.csv")) {
    const auto cols = read_csv_columns(out / "metrics.csv");
    if (cfg.is_eigen()) {
      atomic_write(out / "error_curve.csv", select_columns(cols, {"iteration", "e0", "e1"}));
      atomic_write(out / "norm_curve.csv", select_columns(cols, {"iteration", "norm_residual"}));
    } else {
      atomic_write(out / "error_curve.csv", select_columns(cols, {"iteration", "epoch", "e0"}));
    }
  } else {
    log << "no metrics.csv in " << out.string() << "; skipping training curves\n";
  }

  // Model and reference values at common sample points.
  const std::int64_t n = 4000;
  Eigen::MatrixXd pts;
  std::function<double(std::span<const double>)> exact;
  TensorGroundState ref;
  PdeProblem pde;
  if (cfg.is_eigen()) {
    const EigenProblem problem = make_eigen_problem(cfg);
    ref = TensorGroundState(problem.coefficients, cfg.spectral_modes);
    const DensitySampler uniform(Domain{DomainKind::torus, d}, DensitySpec{});
    pts = sample_points(uniform, n, cfg.seed, Purpose::plot);
    exact = [&](std::span<const double> x) { return ref(x); };
  } else {
    pde = make_pde_problem(cfg);
    const DensitySampler rho(pde.domain, pde.rho_spec(cfg.table_size));
    pts = sample_points(rho, n, cfg.seed, Purpose::plot);
    exact = pde.exact;
  }
  const Eigen::VectorXd u = evaluate_batch(model, pts);
  std::vector<double> model_vals(u.data(), u.data() + u.size()), ref_vals(n);
  double inner = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    ref_vals[k] = exact(std::span<const double>(pts.col(k).data(), d));
    inner += model_vals[k] * ref_vals[k];
  }
  // eigenfunctions are compared up to sign
  if (cfg.is_eigen() && inner < 0.0)
    for (double& v : ref_vals)
      v = -v;

  std::vector<double> all(model_vals);
  all.insert(all.end(), ref_vals.begin(), ref_vals.end());
  const std::vector<double> grid = kde_grid(all, 200);
  const KdeCurve km = kde_density(model_vals, grid), kr = kde_density(ref_vals, grid);
  std::string kde = "value,model_density,reference_density\n";
  for (std::size_t j = 0; j < grid.size(); ++j)
    kde += format_double(grid[j]) + "," + format_double(km.density[j]) + "," +
           format_double(kr.density[j]) + "\n";
  atomic_write(out / "kde.csv", kde);

  // Slice along the first axis through the origin of the domain's chart.
  const bool ball = !cfg.is_eigen() && cfg.problem == "ball";
  const double sign = (cfg.is_eigen() && inner < 0.0) ? -1.0 : 1.0;
  const int steps = 201;
  Eigen::MatrixXd line = Eigen::MatrixXd::Zero(d, steps);
  for (int j = 0; j < steps; ++j)
    line(0, j) = ball ? -1.0 + 2.0 * j / (steps - 1) : static_cast<double>(j) / (steps - 1);
  const Eigen::VectorXd lu = evaluate_batch(model, line);
  std::string profile = "t,model,reference\n";
  for (int j = 0; j < steps; ++j)
    profile += format_double(line(0, j)) + "," + format_double(lu[j]) + "," +
               format_double(sign * exact(std::span<const double>(line.col(j).data(), d))) + "\n";
  atomic_write(out / "profile.csv", profile);
  log << "plot data written to " << out.string() << "\n";
  return 0;
}

} // namespace

fs::path resolve_output_dir(const RunConfig& config, const std::optional<fs::path>& flag)
{
  if (flag)
    return *flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env)
    return fs::path(env);
  return fs::path(config.output_dir);
}

std::string pde_metrics_csv(const std::vector<PdeMetricsRecord>& records)
{
  std::string out = "iteration,epoch,e0,bracket_mean,grad_norm\n";
  for (const auto& r : records)
    out += std::to_string(r.iteration) + "," + format_double(r.epoch) + "," +
           format_double(r.e0) + "," + format_double(r.bracket_mean) + "," +
           format_double(r.grad_norm) + "\n";
  return out;
}

std::string eigen_metrics_csv(const std::vector<EigenMetricsRecord>& records)
{
  std::string out = "iteration,e0,e1,lambda,norm_residual,g\n";
  for (const auto& r : records)
    out += std::to_string(r.iteration) + "," + format_double(r.e0) + "," + format_double(r.e1) +
           "," + format_double(r.lambda) + "," + format_double(r.norm_residual) + "," +
           format_double(r.g) + "\n";
  return out;
}

std::string encode_spectral_reference(const TensorGroundState& ref,
                                      std::span<const double> coefficients)
{
  std::string out = "SGSP";
  detail::put_u32(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(ref.dim()));
  const int modes = ref.dim() > 0 ? ref.factors()[0].modes : 0;
  detail::put_u32(out, static_cast<std::uint32_t>(modes));
  detail::put_f64(out, ref.eigenvalue());
  for (std::size_t i = 0; i < ref.factors().size(); ++i) {
    const auto& f = ref.factors()[i];
    detail::put_f64(out, coefficients[i]);
    detail::put_f64(out, f.eigenvalue);
    for (Eigen::Index k = 0; k < f.basis_coefficients.size(); ++k)
      detail::put_f64(out, f.basis_coefficients[k]);
  }
  return out;
}

int run(const RunRequest& req, std::ostream& log)
{
  try {
    set_worker_count(req.workers);
    const RunConfig cfg = parse_config(req.config_path);
    const fs::path out = resolve_output_dir(cfg, req.out_dir);
    if (req.command == "solve-pde")
      return solve_pde(req, cfg, out, log);
    if (req.command == "solve-eigen")
      return solve_eigen(req, cfg, out, log);
    if (req.command == "reference")
      return reference(req, cfg, out, log);
    if (req.command == "evaluate")
      return evaluate(req, cfg, out, log);
    if (req.command == "emit-plot-data")
      return emit_plot_data(req, cfg, out, log);
    throw UsageError("unknown command '" + req.command + "'");
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    log << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    log << "error: training diverged: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace semigroup
