#include "semigroup/config.hpp"

#include <doctest.h>

#include <filesystem>
#include <string>

using namespace semigroup;

namespace {

const std::string kBall = R"(# ball run
problem = ball
dimension = 3
solver = pde
batch_size = 100
time_step = 1e-4
learning_rate = 1e-3
width = 8
seed = 4
c = 0.8
iterations = 10
)";

const std::string kEigen = R"(problem = eigen
dimension = 2
solver = eigen-scheme2
batch_size = 100
time_step = 1e-3
learning_rate = 8e-4
learning_rate_late = 3e-4
width = 8
seed = 4
c = 10
g_default = 4
iterations = 10
coefficients = 0.1, 0.05
)";

std::string error_of(const std::string& text)
{
  try {
    parse_config_text(text, "t.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST_CASE("a complete pde config parses with defaults")
{
  const RunConfig c = parse_config_text(kBall);
  CHECK(c.problem == "ball");
  CHECK(c.dimension == 3);
  CHECK(c.solver == SolverKind::pde);
  CHECK(c.c == 0.8);
  CHECK(c.total_iterations() == 10);
  CHECK(c.learning_rate_late == 1e-3);
  CHECK(c.eval_every == 50);
  CHECK(c.trig_level == 0);
  CHECK(c.penalty_enabled);
  CHECK_FALSE(c.antithetic_paths);
  CHECK(c.entries.front().first == "problem");
  const PdeTrainOptions o = pde_options(c);
  CHECK(o.penalty == 0.8);
  CHECK(o.batch_size == 100);
  CHECK(make_pde_problem(c).name == "ball");
}

TEST_CASE("epochs resolve through the training set size")
{
  std::string text = kBall;
  text.replace(text.find("iterations = 10"), 15, "epochs = 3\ntraining_samples = 250");
  const RunConfig c = parse_config_text(text);
  CHECK(c.total_iterations() == 9);
}

TEST_CASE("an eigen config parses with explicit coefficients")
{
  const RunConfig c = parse_config_text(kEigen);
  CHECK(c.is_eigen());
  CHECK(c.trig_level == 5);
  CHECK(c.eval_every == 10);
  CHECK(c.coefficients == std::vector<double>{0.1, 0.05});
  CHECK(make_eigen_problem(c).coefficients == c.coefficients);
  const EigenTrainOptions o = eigen_options(c);
  CHECK(o.scheme == EigenScheme::scheme2);
  CHECK(o.learning_rate.late == 3e-4);
  CHECK_FALSE(o.literal_max_clip);
  CHECK(o.init_gain == 1.0);
  CHECK(eigen_options(parse_config_text(kEigen + "init_gain = 0.5\n")).init_gain == 0.5);
  CHECK_FALSE(error_of(kEigen + "init_gain = 0\n").empty());

  std::string drawn = kEigen;
  drawn.replace(drawn.find("coefficients = 0.1, 0.05"), 24, "coefficient_seed = 7");
  const RunConfig d = parse_config_text(drawn);
  CHECK(make_eigen_problem(d).coefficients == draw_potential_coefficients(2, 7));
}

TEST_CASE("config errors carry the line number")
{
  CHECK(error_of(kBall + "bogus = 1\n") == "t.cfg:12: unknown key 'bogus'");
  CHECK(error_of(kBall + "seed = 5\n").rfind("t.cfg:12:", 0) == 0);
  CHECK(error_of(kBall + "width = -3\n").rfind("t.cfg:12:", 0) == 0);
  CHECK(error_of(kBall + "no equals sign\n").rfind("t.cfg:12:", 0) == 0);
  CHECK(error_of("problem = ball\n").find("missing required key") != std::string::npos);
}

TEST_CASE("inconsistent configs are rejected")
{
  CHECK_FALSE(error_of(kBall + "g_default = 4\n").empty());
  CHECK_FALSE(error_of(kBall + "epochs = 3\n").empty());
  CHECK_FALSE(error_of(kEigen + "training_samples = 10\n").empty());
  CHECK_FALSE(error_of(kEigen + "antithetic_paths = true\n").empty());
  std::string no_c = kBall;
  no_c.erase(no_c.find("c = 0.8\n"), 8);
  CHECK_FALSE(error_of(no_c).empty());
  std::string wrong_count = kEigen;
  wrong_count.replace(wrong_count.find("0.1, 0.05"), 9, "0.1");
  CHECK_FALSE(error_of(wrong_count).empty());
  std::string bad_solver = kEigen;
  bad_solver.replace(bad_solver.find("eigen-scheme2"), 13, "pde");
  CHECK_FALSE(error_of(bad_solver).empty());
  std::string no_samples = kBall;
  no_samples.replace(no_samples.find("iterations = 10"), 15, "epochs = 3");
  CHECK_FALSE(error_of(no_samples).empty());
  CHECK_FALSE(error_of(kEigen + "epsilon_clip = middle\n").empty());
  CHECK(parse_config_text(kEigen + "epsilon_clip = max\n").literal_max_clip);
}

TEST_CASE("shipped configs parse")
{
  for (const char* name :
       {"ball_d5.cfg", "torus_d10.cfg", "eigen_scheme1_d5.cfg", "eigen_scheme2_d5.cfg"}) {
    CAPTURE(name);
    const RunConfig c = parse_config(std::filesystem::path(SEMIGROUP_CONFIG_DIR) / name);
    CHECK(c.total_iterations() > 0);
  }
  CHECK(parse_config(std::filesystem::path(SEMIGROUP_CONFIG_DIR) / "ball_d5.cfg")
          .total_iterations() == 300000);
}
