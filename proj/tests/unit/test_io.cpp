#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "json.hpp"
#include "noct/io.hpp"
#include "noct/models.hpp"

using namespace noct;

namespace {

const std::string kSource = NOCT_SOURCE_DIR;
const std::string kCli = NOCT_CLI;

std::string model_path() { return kSource + "/models/vio.json"; }

struct CliRun {
  int code;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  const auto tmp = std::filesystem::temp_directory_path() / ("noct_cli_" + std::to_string(::getpid()) + ".out");
  const std::string cmd = kCli + " " + args + " > " + tmp.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  CliRun r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, io::read_file(tmp.string())};
  std::filesystem::remove(tmp);
  return r;
}

io::ModelFile vio_model_file() {
  io::ModelFile mf;
  mf.system = models::vio_system();
  for (auto k : {models::VioConstraint::kConstLocalAccel, models::VioConstraint::kSingleAxisZ,
                 models::VioConstraint::kPureTranslation}) {
    mf.constraint_sets.emplace_back(models::to_string(k), models::vio_constraints(k));
  }
  return mf;
}

}  // namespace

TEST(ModelFile, GoldenVioModel) {
  const auto mf = vio_model_file();
  EXPECT_EQ(io::dump_model(mf.system, &mf), io::read_file(model_path()));
}

TEST(ModelFile, GoldenNullVectors) {
  for (const auto& r : models::vio_expected_results()) {
    if (r.null_vectors.empty()) continue;
    EXPECT_EQ(io::dump_vectors(r.null_vectors), io::read_file(kSource + "/models/null_vectors/" + r.name + ".json"))
        << r.name;
  }
}

TEST(ModelFile, RoundTrip) {
  const auto mf = io::read_model(model_path());
  EXPECT_EQ(mf.constraint_sets.size(), 3u);
  const std::string text = io::dump_model(mf.system, &mf);
  EXPECT_EQ(io::dump_model(io::parse_model(text).system, &mf), text);
  const auto sys = mf.with_constraints("single_axis_z");
  EXPECT_EQ(sys.constraints.size(), 2u);
  EXPECT_THROW(mf.with_constraints("nope"), ModelError);
}

TEST(ModelFile, Errors) {
  EXPECT_THROW(io::parse_model("{"), ModelError);
  EXPECT_THROW(io::parse_model("[]"), ModelError);
  EXPECT_THROW(io::parse_model(R"({"state": ["x"], "inputs": [], "constants": []})"), ModelError);
  EXPECT_THROW(io::parse_model(R"({"state": ["x"], "inputs": [], "constants": [], "drift": ["x^y"]})"), ModelError);
  EXPECT_THROW(io::parse_model(R"({"state": ["x"], "inputs": ["u"], "constants": [], "drift": ["u"],
                                  "fields": [["1"]]})"),
               ModelError);
  EXPECT_THROW(io::parse_vectors(R"({"vectors": 3})"), ModelError);
}

TEST(Cli, AnalyzeMatchesLibrary) {
  for (const std::string set : {"", "pure_translation", "single_axis_z", "const_local_accel"}) {
    SCOPED_TRACE(set);
    const auto mf = io::read_model(model_path());
    AnalysisOptions opts;
    opts.seed = 9;
    const auto rep = analyze(mf.with_constraints(set), opts);
    const std::string lib = io::dump_report(rep, {opts.points, opts.max_order, opts.seed, model_path(), set});
    const CliRun cli = run_cli("analyze " + model_path() + " --seed 9" + (set.empty() ? "" : " --constraints " + set));
    EXPECT_EQ(cli.code, 0);
    EXPECT_EQ(cli.out, lib);
  }
}

TEST(Cli, AnalyzeReports) {
  auto j = nlohmann::json::parse(run_cli("analyze " + model_path()).out);
  EXPECT_EQ(j["final_rank"], 21);
  EXPECT_EQ(j["fully_observable"], true);
  j = nlohmann::json::parse(run_cli("analyze " + model_path() + " --constraints pure_translation").out);
  EXPECT_EQ(j["kernel_dim"], 5);
}

TEST(Cli, ConvertMatchesLibrary) {
  const auto mf = io::read_model(model_path());
  const std::string lib = io::dump_model(apply_constraints(mf.with_constraints("single_axis_z")));
  const CliRun cli = run_cli("convert " + model_path() + " --constraints single_axis_z");
  EXPECT_EQ(cli.code, 0);
  EXPECT_EQ(cli.out, lib);
  const auto conv = io::parse_model(cli.out).system;
  EXPECT_EQ(conv.inputs.size(), 4u);
  EXPECT_EQ(conv.outputs.size(), 5u);
  // Without constraints the model comes back unchanged apart from the sets.
  auto plain = nlohmann::json::parse(run_cli("convert " + model_path()).out);
  auto original = nlohmann::json::parse(io::read_file(model_path()));
  original.erase("constraint_sets");
  EXPECT_EQ(plain, original);
}

TEST(Cli, ExitCodes) {
  const auto dir = std::filesystem::temp_directory_path() / ("noct_exit_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::string bad = (dir / "bad.json").string();
  io::write_file(bad, "{\"state\": [");
  EXPECT_EQ(run_cli("analyze " + bad).code, 2);
  EXPECT_EQ(run_cli("analyze " + model_path() + " --max-order 1").code, 3);
  EXPECT_EQ(run_cli("analyze " + model_path() + " --constraints nope").code, 2);
  EXPECT_EQ(run_cli("simulate case_b --runs 0").code, 2);
  EXPECT_EQ(run_cli("simulate not_a_scenario").code, 2);
  EXPECT_EQ(run_cli("frobnicate").code, 2);

  for (const std::string name : {"pure_translation", "single_axis_z", "const_local_accel"}) {
    EXPECT_EQ(run_cli("check-null " + model_path() + " " + kSource + "/models/null_vectors/" + name +
                      ".json --constraints " + name)
                  .code,
              0)
        << name;
  }
  const std::string zero = (dir / "zero.json").string();
  nlohmann::json z;
  z["vectors"] = nlohmann::json::array({nlohmann::json(std::vector<std::string>(21, "0"))});
  io::write_file(zero, z.dump());
  EXPECT_EQ(run_cli("check-null " + model_path() + " " + zero).code, 0);
  std::vector<std::string> e(21, "0");
  e[6] = "1";  // b_g x, observable
  z["vectors"] = nlohmann::json::array({nlohmann::json(e)});
  const std::string basis = (dir / "basis.json").string();
  io::write_file(basis, z.dump());
  EXPECT_EQ(run_cli("check-null " + model_path() + " " + basis).code, 1);
  z["vectors"] = nlohmann::json::array({nlohmann::json(std::vector<std::string>(20, "0"))});
  const std::string short_vec = (dir / "short.json").string();
  io::write_file(short_vec, z.dump());
  EXPECT_EQ(run_cli("check-null " + model_path() + " " + short_vec).code, 2);

  // Solving for an input with a zero coefficient names the input.
  auto m = nlohmann::ordered_json::parse(io::read_file(model_path()));
  m["constraints"] = nlohmann::ordered_json::array(
      {{{"kind", "zero_affine"}, {"c0", "bg_x"}, {"input_terms", {{{"input", "w_x"}, {"coeff", "0"}}}},
        {"solve_for", "w_x"}}});
  const std::string zc = (dir / "zero_coeff.json").string();
  io::write_file(zc, m.dump());
  const std::string err = (dir / "err.txt").string();
  const int status = std::system((kCli + " --json-errors convert " + zc + " > /dev/null 2> " + err).c_str());
  EXPECT_EQ(WEXITSTATUS(status), 2);
  const auto ej = nlohmann::json::parse(io::read_file(err));
  EXPECT_NE(ej["error"]["message"].get<std::string>().find("w_x"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Cli, SeedFromEnvironment) {
  const std::string with_flag = run_cli("analyze " + model_path() + " --seed 5").out;
  ASSERT_EQ(::setenv("NOCT_SEED", "5", 1), 0);
  const std::string with_env = run_cli("analyze " + model_path() + " --seed 99").out;
  ::unsetenv("NOCT_SEED");
  EXPECT_EQ(with_flag, with_env);
}
