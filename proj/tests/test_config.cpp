#include <doctest.h>

#include "starmm/config.hpp"
#include "starmm/common.hpp"

using namespace starmm;

TEST_SUITE_BEGIN("config");

TEST_CASE("parses keys, comments and blank lines") {
  auto cfg = KeyValueConfig::from_string(
      "# comment\n"
      "n_bs = 2\n"
      "\n"
      "power = 1e5   # trailing comment\n"
      "name = desk scale\n");
  CHECK(cfg.get_int("n_bs") == 2);
  CHECK(cfg.get_double("power") == doctest::Approx(1e5));
  CHECK(cfg.get_string("name") == "desk scale");
  CHECK(cfg.get_int("missing", 7) == 7);
  CHECK_FALSE(cfg.has("missing"));
}

TEST_CASE("list and bool values") {
  auto cfg = KeyValueConfig::from_string(
      "values = 1e4, 1e5 1e6\n"
      "methods = IGS-NOMA-ES-T_U, PGS-NOMA\n"
      "flag = true\n");
  auto vals = cfg.get_double_list("values");
  REQUIRE(vals.size() == 3);
  CHECK(vals[1] == doctest::Approx(1e5));
  auto methods = cfg.get_string_list("methods");
  REQUIRE(methods.size() == 2);
  CHECK(methods[0] == "IGS-NOMA-ES-T_U");
  CHECK(cfg.get_bool("flag"));
}

TEST_CASE("malformed input throws") {
  CHECK_THROWS_AS(KeyValueConfig::from_string("just a line\n"), ConfigError);
  auto cfg = KeyValueConfig::from_string("x = notanumber\n");
  CHECK_THROWS_AS(cfg.get_double("x"), ConfigError);
  CHECK_THROWS_AS(cfg.get_string("absent"), ConfigError);
}

TEST_SUITE_END();
