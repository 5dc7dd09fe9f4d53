#include "doctest.h"

#include <sstream>

#include "rfim/config.hpp"

using namespace rfim;

namespace {

Config from(const std::string& text) {
  std::istringstream is(text);
  return Config::parse(is);
}

}  // namespace

TEST_CASE("parse values, comments and lists") {
  const auto c = from("# header\nbeta = 0.25\n\n  L = 4, 8 ,16\nfield=gaussian  # trailing\nflag = true\n");
  CHECK(c.get_double("beta") == 0.25);
  CHECK(c.get_ints("L") == std::vector<int>{4, 8, 16});
  CHECK(c.get_string("field") == "gaussian");
  CHECK(c.get_bool("flag"));
  CHECK(c.get_double("missing", 1.5) == 1.5);
  CHECK(c.get_doubles("L") == std::vector<double>{4, 8, 16});
}

TEST_CASE("errors are ConfigError") {
  CHECK_THROWS_AS(from("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(from("no equals sign\n"), ConfigError);
  const auto c = from("n = 2.5\nw = -3\nb = maybe\n");
  CHECK_THROWS_AS(c.get_int("n"), ConfigError);
  CHECK_THROWS_AS(c.get_uint("w"), ConfigError);
  CHECK_THROWS_AS(c.get_bool("b"), ConfigError);
  CHECK_THROWS_AS(c.get_double("absent"), ConfigError);
  CHECK_THROWS_AS(Config::load("/nonexistent/path.cfg"), ConfigError);
}

TEST_CASE("unused keys are reported") {
  const auto c = from("beta = 0.1\ntypo = 3\n");
  (void)c.get_double("beta");
  CHECK(c.unused_keys() == std::vector<std::string>{"typo"});
}

TEST_CASE("canonical form and hash") {
  const auto a = from("b = 2\na = 1\n");
  const auto b = from("a = 1\nb = 2\n");
  CHECK(a.serialize() == "a = 1\nb = 2\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  auto c = b;
  c.set("b", "3");
  CHECK(c.hash() != b.hash());
  Config d;
  d.set("a", "9");
  d.merge_defaults(a);
  CHECK(d.get_int("a") == 9);
  CHECK(d.get_int("b") == 2);
}
