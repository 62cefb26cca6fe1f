#include <doctest.h>

#include <filesystem>
#include <limits>
#include <sstream>

#include "fixtures.hpp"
#include "gw/errors.hpp"
#include "gw/io.hpp"

using gw::State;

TEST_CASE("fixture files load as the reference models") {
  const std::filesystem::path dir = fx::data_dir();
  CHECK(gw::load_model(dir / "modelA.json") == fx::model_a());
  CHECK(gw::load_model(dir / "modelB.json") == fx::model_b());
  CHECK(gw::load_model(dir / "modelC.json") == fx::model_c());
  CHECK(gw::load_model(dir / "modelD.json") == fx::model_d());
  CHECK(gw::load_model(dir / "modelE.json") == fx::model_e());
}

TEST_CASE("save and load round trip") {
  const auto path = std::filesystem::temp_directory_path() / "gw_roundtrip_test.json";
  std::mt19937_64 rng(3);
  for (const auto& m : {fx::model_c(), fx::model_c8(), fx::random_model(rng, 3)}) {
    gw::save_model(m, path);
    const auto back = gw::load_model(path);
    CHECK(back == m);
    CHECK(gw::model_hash(back) == gw::model_hash(m));
  }
  std::filesystem::remove(path);
  CHECK(gw::model_hash(fx::model_a()) != gw::model_hash(fx::model_b()));
  CHECK(gw::model_hash(fx::model_a()).size() == 16);
}

TEST_CASE("malformed models are rejected") {
  using nlohmann::json;
  CHECK_THROWS_AS(gw::model_from_json(json::parse(R"({"d":1,"types":[{"atoms":[{"k":[0],"p":0.5}]}]})")),
                  gw::ValidationError);
  CHECK_THROWS_AS(gw::model_from_json(json::parse(R"({"d":2,"types":[{"atoms":[{"k":[0],"p":1}]}]})")),
                  gw::ValidationError);
  CHECK_THROWS_AS(gw::model_from_json(json::parse(R"({"types":[]})")), gw::ValidationError);
}

TEST_CASE("state, set and path parsers") {
  CHECK(gw::parse_state("(1,0)", 2) == State{1, 0});
  CHECK(gw::parse_state("3", 1) == State{3});
  CHECK(gw::parse_state(" 2 , 5 ", 2) == State{2, 5});
  CHECK_THROWS_AS(gw::parse_state("(1)", 2), gw::ValidationError);
  CHECK_THROWS_AS(gw::parse_state("(-1,0)", 2), gw::ValidationError);
  CHECK_THROWS_AS(gw::parse_state("x", 1), gw::ValidationError);

  const auto f = gw::parse_set("finite:[(1,1),(2,0)]", 2);
  CHECK(f.kind() == gw::ConditioningSet::Kind::Finite);
  CHECK(f.listed().size() == 2);
  CHECK(gw::parse_set("cofinite:[(1,0)]", 2).kind() == gw::ConditioningSet::Kind::Cofinite);
  CHECK(gw::parse_set("norm=3", 2).level() == 3);
  CHECK(gw::parse_set("norm>=3", 2).kind() == gw::ConditioningSet::Kind::NormAtLeast);
  CHECK(gw::parse_set("nonextinct", 2).kind() == gw::ConditioningSet::Kind::NonExtinct);
  CHECK_THROWS_AS(gw::parse_set("everything", 2), gw::ValidationError);

  const auto p = gw::parse_path("1:(1,1);3:(0,2)", State{1, 0});
  REQUIRE(p.marks.size() == 2);
  CHECK(p.marks[1].time == 3);
  CHECK(p.marks[1].state == State{0, 2});
  CHECK_THROWS_AS(gw::parse_path("3:(1,1);1:(0,2)", State{1, 0}), gw::ValidationError);
}

TEST_CASE("numbers are written with full precision") {
  for (double x : {0.1, 1.0 / 3.0, 0.51469, 1e-300, std::numeric_limits<double>::max()})
    CHECK(std::stod(gw::format_double(x)) == x);
  std::ostringstream out;
  gw::CsvWriter csv(out);
  csv.header({"n", "state", "p"});
  csv.cell(3).cell(State{1, 2}).cell(1.0 / 3.0);
  csv.end_row();
  CHECK(out.str() == "n,state,p\n3,(1;2),0.33333333333333331\n");
}
