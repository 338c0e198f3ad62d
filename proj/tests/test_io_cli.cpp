#include "test_support.hpp"

#include "docp/problems/affine_quadratic_io.hpp"

#include <cstdlib>
#include <fstream>

using namespace docp;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "docp_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path write_problem_file(const AffineQuadratic& prob,
                                         const std::string& name) {
  auto path = temp_dir() / name;
  std::ofstream out(path);
  out << affine_quadratic_to_json(prob).dump(2) << "\n";
  return path;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(DOCP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("problem JSON round trip preserves every field") {
  std::mt19937_64 rng(81);
  auto prob = bench::random_linear_instance(3, 2, 5, rng);
  nlohmann::json j = affine_quadratic_to_json(prob);
  AffineQuadratic back = affine_quadratic_from_json(j);
  CHECK(back.n_x == prob.n_x);
  CHECK(back.n_u == prob.n_u);
  CHECK(back.horizon == prob.horizon);
  CHECK((back.A - prob.A).norm() == 0.0);
  CHECK((back.B - prob.B).norm() == 0.0);
  CHECK((back.b_affine - prob.b_affine).norm() == 0.0);
  CHECK((back.x_s - prob.x_s).norm() == 0.0);
  CHECK((back.w_x - prob.w_x).norm() == 0.0);
  CHECK((back.w_u - prob.w_u).norm() == 0.0);
  // Emission is deterministic, so the file bytes are too.
  CHECK(affine_quadratic_to_json(back).dump() == j.dump());
}

TEST_CASE("problem JSON rejects missing or foreign format keys") {
  std::mt19937_64 rng(82);
  auto prob = bench::random_linear_instance(2, 1, 3, rng);
  nlohmann::json j = affine_quadratic_to_json(prob);
  j.erase("format");
  CHECK_THROWS_AS(affine_quadratic_from_json(j), Error);
  j["format"] = "something-else/9";
  CHECK_THROWS_AS(affine_quadratic_from_json(j), Error);
  nlohmann::json bad = affine_quadratic_to_json(prob);
  bad["Q"] = std::vector<double>{1.0};  // wrong length
  CHECK_THROWS_AS(affine_quadratic_from_json(bad), Error);
}

TEST_CASE("cli: solve emits a solution file and exits zero") {
  std::mt19937_64 rng(83);
  auto prob = bench::random_linear_instance(3, 2, 6, rng);
  auto path = write_problem_file(prob, "solve_ok.json");
  auto out = temp_dir() / "solve_out";
  REQUIRE(run_cli("--out " + out.string() + " solve " + path.string()) == 0);
  std::ifstream in(out / "solution.json");
  REQUIRE(in.good());
  nlohmann::json sol;
  in >> sol;
  CHECK(sol.at("converged").get<bool>());
  CHECK(sol.at("kkt_inf_norm").get<double>() <= 1e-6);

  auto dense = test::dense_reference(prob);
  auto lam = sol.at("lambda").get<std::vector<double>>();
  Vector lambda = Eigen::Map<const Vector>(lam.data(), lam.size());
  CHECK(test::rel_error(lambda, dense.lambda) < 1e-8);
}

TEST_CASE("cli: grad-check passes on a convex instance") {
  std::mt19937_64 rng(84);
  auto prob = bench::random_linear_instance(2, 1, 4, rng);
  prob.x_s /= 5.0;  // moderate scale keeps finite differences clean
  auto path = write_problem_file(prob, "gradcheck.json");
  auto out = temp_dir() / "gradcheck_out";
  REQUIRE(run_cli("--out " + out.string() + " grad-check " + path.string()) ==
          0);
  std::ifstream in(out / "gradcheck.json");
  REQUIRE(in.good());
  nlohmann::json rep;
  in >> rep;
  CHECK(rep.at("pass").get<bool>());
  CHECK(rep.at("overall_max_rel_error").get<double>() <= 1e-5);
}

TEST_CASE("cli: invalid inputs exit with code 3") {
  CHECK(run_cli("solve /nonexistent/problem.json") == 3);

  auto bad_json = temp_dir() / "bad.json";
  std::ofstream(bad_json) << "{ not json";
  CHECK(run_cli("solve " + bad_json.string()) == 3);

  auto bad_format = temp_dir() / "bad_format.json";
  std::ofstream(bad_format) << R"({"format": "wrong/1"})";
  CHECK(run_cli("solve " + bad_format.string()) == 3);

  CHECK(run_cli("bench-linear --preset problem9") == 3);
}

TEST_CASE("cli: solver failures exit with code 2") {
  std::mt19937_64 rng(85);
  auto prob = bench::random_linear_instance(2, 1, 4, rng);
  prob.x_s[0] = 1e300;  // overflows the first Schur solve
  auto path = write_problem_file(prob, "overflow_start.json");
  CHECK(run_cli("solve " + path.string()) == 2);
}

TEST_CASE("cli: pcg-study emits rows and summaries") {
  auto out = temp_dir() / "study_out";
  REQUIRE(run_cli("--out " + out.string() +
                  " pcg-study --tol 1e-4 --steps 6") == 0);
  std::ifstream rows(out / "pcg_study.csv");
  REQUIRE(rows.good());
  std::string line;
  int count = 0;
  while (std::getline(rows, line)) ++count;
  CHECK(count == 1 + 2 * 6);  // header + forward/backward per step
  std::ifstream summary(out / "pcg_study_summary.csv");
  REQUIRE(summary.good());
  std::ifstream meta(out / "meta.json");
  REQUIRE(meta.good());
}
