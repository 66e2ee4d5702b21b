// Command-line driver: semigroup-solve <command> --config <path> ...

#include "semigroup/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
  CLI::App app{"Semigroup neural solvers for elliptic PDEs and ground states"};
  semigroup::RunRequest req;
  std::string checkpoint, out;

  app.add_option("command", req.command,
                 "solve-pde | solve-eigen | reference | evaluate | emit-plot-data")
    ->required()
    ->check(CLI::IsMember({"solve-pde", "solve-eigen", "reference", "evaluate", "emit-plot-data"}));
  app.add_option("--config", req.config_path, "run configuration (key = value lines)")
    ->required();
  app.add_option("--checkpoint", checkpoint, "model checkpoint for evaluate / emit-plot-data");
  app.add_option("--workers", req.workers, "worker threads (0: all cores)")
    ->check(CLI::NonNegativeNumber);
  app.add_option("--out", out, "output directory (overrides $SEMIGROUP_OUT_DIR and config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (!checkpoint.empty())
    req.checkpoint = checkpoint;
  if (!out.empty())
    req.out_dir = out;
  return semigroup::run(req, std::cerr);
}
