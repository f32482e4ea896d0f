#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "coorbit/cli.hpp"
#include "coorbit/io.hpp"

using namespace coorbit;
namespace fs = std::filesystem;

namespace {

std::string data_path(const std::string& name) { return std::string(COORBIT_TEST_DATA_DIR) + "/" + name; }

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "coorbit_io_cli_tests";
  fs::create_directories(dir);
  return dir;
}

Eigen::MatrixXd parse_csv_rows(const std::string& text) {
  std::istringstream in(text);
  return io::read_dataset_csv(in, false).matrix();
}

}  // namespace

TEST_CASE("group spec parsing") {
  const auto cyc = io::build_group(io::parse_group_spec(io::Json::parse(R"({"type": "cyclic", "dim": 4})")));
  CHECK(cyc.order() == 4);
  CHECK(io::build_group(io::parse_group_spec(io::Json::parse(R"({"type": "dihedral", "dim": 5})"))).order() == 10);

  const auto nested = io::parse_group_spec(io::Json::parse(R"({"type": "generated", "dim": 2,
      "matrices": [[[0, -1], [1, 0]]]})"));
  const auto flat = io::parse_group_spec(io::Json::parse(R"({"type": "generated", "dim": 2,
      "matrices": [[0, -1, 1, 0]]})"));
  REQUIRE(nested.matrices.size() == 1);
  CHECK(nested.matrices[0] == flat.matrices[0]);
  CHECK(nested.matrices[0](0, 1) == -1.0);
  CHECK(io::build_group(nested).order() == 4);

  const auto round_trip = io::parse_group_spec(io::to_json(nested));
  CHECK(round_trip.matrices[0] == nested.matrices[0]);

  const auto parse_code = [](const char* text) {
    try {
      io::parse_group_spec(io::Json::parse(text));
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io_error;
  };
  CHECK(parse_code(R"({"dim": 3})") == Errc::parse_error);
  CHECK(parse_code(R"({"type": "spiral", "dim": 3})") == Errc::parse_error);
  CHECK(parse_code(R"({"type": "custom", "dim": 2, "matrices": [[1, 0, 0]]})") == Errc::parse_error);
}

TEST_CASE("dataset CSV") {
  std::istringstream plain("# comment\n1,2\n\n3.5,-4e-1\n");
  const auto data = io::read_dataset_csv(plain, false);
  REQUIRE(data.size() == 2);
  CHECK(data.point(1) == Eigen::Vector2d(3.5, -0.4));
  CHECK(data.id(0) == "p0");

  std::istringstream with_ids("a,1,0\nb,0,2\n");
  const auto named = io::read_dataset_csv(with_ids, true);
  CHECK(named.ids() == std::vector<std::string>{"a", "b"});

  std::istringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(io::read_dataset_csv(ragged, false), Error);
  std::istringstream junk("1,x\n");
  CHECK_THROWS_AS(io::read_dataset_csv(junk, false), Error);
  CHECK_THROWS_AS(io::load_dataset_csv(data_path("no_such_file.csv"), false), Error);

  std::ostringstream out;
  io::write_csv(out, Eigen::MatrixXd::Constant(1, 2, 0.1), {"z"});
  CHECK(out.str() == "z,0.10000000000000001,0.10000000000000001\n");
  CHECK(io::digest("") == "cbf29ce484222325");
}

TEST_CASE("cli exit codes") {
  CHECK(run_cli({"verify", data_path("cyclic5.json")}).code == 0);
  const auto missing = run_cli({"verify", data_path("missing_product.json")});
  CHECK(missing.code == 2);
  CHECK(missing.out.find("closure") != std::string::npos);
  CHECK(run_cli({"verify", data_path("malformed.json")}).code == 3);
  CHECK(run_cli({"verify", data_path("absent.json")}).code == 4);
  CHECK(run_cli({"gamma", data_path("trivial2.json")}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 1);
  CHECK(run_cli({}).code == 1);
  CHECK(run_cli({"plan", data_path("cyclic4.json"), "--p", "4", "--n", "2"}).code == 2);
  CHECK(run_cli({"embed", data_path("cyclic4.json"), data_path("points4.csv"), "--p", "4", "--n", "2"}).code == 2);
  CHECK(run_cli({"bounds", data_path("sign_flip2.json"), data_path("single_orbit2.csv")}).code == 2);
  CHECK(run_cli({"embed", data_path("sign_flip3.json"), data_path("points4.csv")}).code == 2);
}

TEST_CASE("cli gamma and plan output") {
  const auto gamma = run_cli({"gamma", data_path("cyclic4.json")});
  REQUIRE(gamma.code == 0);
  const auto j = io::Json::parse(gamma.out);
  CHECK(j.at("gamma") == io::Json::array({3, 3, 2}));
  CHECK(j.at("p_table").at("2") == 6);
  CHECK(j.at("p_table").at("3") == 5);

  const auto plan = run_cli({"plan", data_path("cyclic4.json"), "--n", "2"});
  REQUIRE(plan.code == 0);
  const auto p = io::Json::parse(plan.out);
  CHECK(p.at("p") == 6);
  CHECK(io::selection_from_json(p.at("selection")).sizes() == std::vector<int>{2, 2, 1, 1, 1, 1});
}

TEST_CASE("cli embed is deterministic and matches the library") {
  const fs::path dir = scratch_dir();
  const std::string first = (dir / "embed_a.csv").string(), second = (dir / "embed_b.csv").string();
  const std::vector<std::string> base{"embed", data_path("cyclic4.json"), data_path("points4.csv"), "--n", "2",
                                      "--seed", "5"};
  auto args = base;
  args.insert(args.end(), {"--out", first});
  REQUIRE(run_cli(args).code == 0);
  args = base;
  args.insert(args.end(), {"--out", second, "--threads", "3"});
  REQUIRE(run_cli(args).code == 0);
  CHECK(io::read_file(first) == io::read_file(second));

  const auto action = build_cyclic_shift(4);
  const auto config = make_config<double>(4, 6, plan_selection(action, 2, 6), 5);
  const auto data = io::load_dataset_csv(data_path("points4.csv"), false);
  const Eigen::MatrixXd expected = embed_dataset(config, action, data);
  const Eigen::MatrixXd got = parse_csv_rows(io::read_file(first));
  REQUIRE(got.rows() == expected.rows());
  REQUIRE(got.cols() == expected.cols());
  CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-12);

  // Replay from the manifest written next to the output.
  const std::string replay = (dir / "embed_replay.csv").string();
  REQUIRE(run_cli({"run", "--manifest", first + ".manifest.json", "--out", replay}).code == 0);
  CHECK(io::read_file(replay) == io::read_file(first));
  const auto manifest = io::Json::parse(io::read_file(first + ".manifest.json"));
  CHECK(manifest.at("command") == "embed");
  CHECK(manifest.at("tool_version") == cli::kToolVersion);
  CHECK(manifest.at("config").at("group").at("type") == "cyclic");
}

TEST_CASE("cli collide is deterministic and replayable") {
  const fs::path dir = scratch_dir();
  const std::string first = (dir / "collide_a.json").string(), second = (dir / "collide_b.json").string();
  const std::vector<std::string> base{"collide", data_path("sign_flip2.json"), "--budget", "500", "--seed", "3"};
  auto args = base;
  args.insert(args.end(), {"--out", first});
  REQUIRE(run_cli(args).code == 0);
  args = base;
  args.insert(args.end(), {"--out", second, "--threads", "2"});
  REQUIRE(run_cli(args).code == 0);
  CHECK(io::read_file(first) == io::read_file(second));
  const auto report = io::Json::parse(io::read_file(first));
  CHECK(report.at("ratio").get<double>() > 0.0);
  CHECK(report.at("orbit_distance").get<double>() >= 1e-2 * (1 - 1e-12));

  const std::string replay = (dir / "collide_replay.json").string();
  REQUIRE(run_cli({"run", "--manifest", first + ".manifest.json", "--out", replay}).code == 0);
  CHECK(io::read_file(replay) == io::read_file(first));
}

TEST_CASE("replay refuses changed inputs") {
  const fs::path dir = scratch_dir();
  const std::string data = (dir / "mutable.csv").string();
  io::write_file(data, "1,2,3,4\n");
  const std::string out = (dir / "mutable_out.csv").string();
  REQUIRE(run_cli({"embed", data_path("cyclic4.json"), data, "--out", out}).code == 0);
  io::write_file(data, "1,2,3,5\n");
  CHECK(run_cli({"run", "--manifest", out + ".manifest.json"}).code == 2);
}

TEST_CASE("COORBIT_SEED overrides --seed") {
  const auto sample = [](const char* seed) {
    return run_cli({"sample", "--dim", "3", "--p", "2", "--seed", seed}).out;
  };
  const std::string seven = sample("7");
  CHECK(sample("8") != seven);
  ::setenv("COORBIT_SEED", "7", 1);
  const std::string overridden = sample("8");
  ::unsetenv("COORBIT_SEED");
  CHECK(overridden == seven);
}

TEST_CASE("cli bounds and separate") {
  const auto bounds = run_cli({"bounds", data_path("sign_flip2.json"), data_path("pair_sign_flip.csv"), "--ids"});
  REQUIRE(bounds.code == 0);
  const auto b = io::Json::parse(bounds.out);
  CHECK(b.at("a_w").get<double>() > 0.0);
  CHECK(b.at("a_w").get<double>() <= b.at("b_w").get<double>());
  CHECK(b.at("b_w").get<double>() <= 1.0 + 1e-9);

  const auto separate = run_cli({"separate", data_path("cyclic4.json"), data_path("points4.csv")});
  REQUIRE(separate.code == 0);
  CHECK(io::Json::parse(separate.out).at("separated") == true);
}
