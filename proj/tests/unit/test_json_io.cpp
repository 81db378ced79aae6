#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dagma_dce/error.hpp"
#include "dagma_dce/json_io.hpp"

using namespace dce;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dagma_dce_unit";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("graph JSON round-trip") {
  const BinaryDag g(4, {{0, 3}, {2, 1}});
  const nlohmann::json j = to_json(g);
  CHECK(j.at("d") == 4);
  CHECK(j.at("edges") == nlohmann::json::parse("[[0,3],[2,1]]"));
  CHECK(graph_from_json(j) == g);
  CHECK_THROWS_AS(graph_from_json(nlohmann::json::parse(R"({"d": 2, "edges": [[0]]})")), IoError);
  CHECK_THROWS_AS(graph_from_json(nlohmann::json::parse(R"({"edges": []})")), IoError);
  CHECK_THROWS_AS(graph_from_json(nlohmann::json::parse(R"({"d": 2, "edges": [[0, 5]]})")), ParameterError);
}

TEST_CASE("weighted adjacency JSON round-trip is exact") {
  Eigen::MatrixXd a(2, 2);
  a << 0.1, 1.0 / 3.0,
       std::sqrt(2.0), 0.0;
  const WeightedAdjacency back = weighted_from_json(nlohmann::json::parse(weighted_to_json(a).dump()));
  CHECK(back == a);
  CHECK_THROWS_AS(weighted_from_json(nlohmann::json::parse(R"({"d": 2})")), IoError);
  CHECK_THROWS_AS(weighted_from_json(nlohmann::json::parse(R"({"weights": [[1, 2], [3]]})")), IoError);
  CHECK_THROWS_AS(weighted_from_json(nlohmann::json::parse(R"({"weights": [[1, 2]]})")), IoError);
  CHECK_THROWS_AS(weighted_from_json(nlohmann::json::parse(R"({"d": 3, "weights": [[1]]})")), IoError);
  CHECK_THROWS_AS(weighted_from_json(nlohmann::json::parse(R"({"weights": [["x"]]})")), IoError);
}

TEST_CASE("CSV round-trip keeps full precision") {
  Eigen::MatrixXd m(3, 2);
  m << 1.0 / 3.0, -2.5e-17,
       1e300, 0.0,
       -7.0, 0.1;
  const fs::path p = scratch("m.csv");
  write_csv_matrix(p.string(), m, {"x0", "x1"});
  CHECK(read_csv_matrix(p.string()) == m);
  CHECK(read_text_file(p.string()).rfind("x0,x1\n", 0) == 0);
}

TEST_CASE("CSV errors carry line numbers") {
  const fs::path p = scratch("bad.csv");
  write_text_file(p.string(), "a,b\n1,2\n3\n");
  try {
    read_csv_matrix(p.string());
    FAIL("expected an IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  write_text_file(p.string(), "1,2\n3,oops\n");
  CHECK_THROWS_AS(read_csv_matrix(p.string()), IoError);
  write_text_file(p.string(), "a,b\n");
  CHECK_THROWS_AS(read_csv_matrix(p.string()), IoError);
  CHECK_THROWS_AS(read_csv_matrix(scratch("missing.csv").string()), IoError);
}

TEST_CASE("JSON parse errors report line and column") {
  const fs::path p = scratch("bad.json");
  write_text_file(p.string(), "{\n  \"a\": 1,\n  \"b\": ]\n}\n");
  try {
    read_json_file(p.string());
    FAIL("expected an IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  write_json_file(p.string(), {{"k", 1}});
  CHECK(read_json_file(p.string()).at("k") == 1);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -123456.789, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}
