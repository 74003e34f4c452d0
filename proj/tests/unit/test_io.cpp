#include <doctest.h>

#include <cstdlib>
#include <cmath>
#include <cstring>
#include <sstream>

#include "qvar/catalog.hpp"
#include "qvar/frequency.hpp"
#include "qvar/invariants.hpp"
#include "qvar/io.hpp"
#include "qvar/parallel.hpp"

using namespace qvar;

TEST_CASE("Q-point JSON round trip") {
  const QPoint p(2, 3, {0.1, -2.5, 1e-300, 3.0, 1.0 / 3.0, -0.0});
  const QPoint r = qpoint_from_json(Json::parse(to_json(p).dump()));
  CHECK(std::memcmp(r.flat().data(), p.flat().data(), p.flat().size_bytes()) == 0);
  CHECK_THROWS_AS(qpoint_from_json(Json::parse(R"({"q": 2, "n": 1, "values": [[1]]})")), FormatError);
}

TEST_CASE("field JSON round trip is exact") {
  const auto e = make_catalog("branch_sqrt");
  const QField f = branch_decompose(sample(e.map, Grid::centered_box(2, 1.0, 1.0 / 16)));
  const QField r = qfield_from_json(Json::parse(to_json(f).dump()));
  CHECK(r.grid().same_as(f.grid()));
  CHECK(r.values() == f.values());
  CHECK(r.labels() == f.labels());
  CHECK(r.collapsed_mask() == f.collapsed_mask());
}

TEST_CASE("malformed field JSON") {
  Json j = to_json(sample(make_catalog("cone_1d").map, Grid::centered_box(1, 1.0, 0.25)));
  Json a = j;
  a.erase("q");
  CHECK_THROWS_AS(qfield_from_json(a), FormatError);
  Json b = j;
  b["values"].erase(0);
  CHECK_THROWS_AS(qfield_from_json(b), FormatError);
  Json c = j;
  c["grid"]["h"] = "x";
  CHECK_THROWS_AS(qfield_from_json(c), FormatError);
  Json d = j;
  d["values"][0][0] = "nan";
  CHECK_THROWS_AS(qfield_from_json(d), FormatError);
}

TEST_CASE("number parsing and formatting") {
  CHECK(parse_number("1/128") == 1.0 / 128);
  CHECK(parse_number("0.01") == 0.01);
  CHECK(parse_number("-3") == -3.0);
  CHECK_THROWS_AS(parse_number("abc"), UsageError);
  CHECK_THROWS_AS(parse_number("1/0"), UsageError);
  CHECK(parse_list("1,2.5,1/4") == std::vector<double>{1.0, 2.5, 0.25});
  for (double x : {0.1, 1.0 / 3.0, 6.02e23, -1e-310})
    CHECK(std::strtod(fmt17(x).c_str(), nullptr) == x);
  std::ostringstream os;
  write_csv(os, {"a", "b"}, {{1.0, 0.5}});
  CHECK(os.str() == "a,b\n1,0.5\n");
}

TEST_CASE("sums do not depend on the worker count") {
  auto term = [](std::size_t i) { return std::sin(0.37 * i) / (1.0 + i); };
  std::vector<double> sums;
  std::vector<double> freq;
  const auto e = make_catalog("branch_sqrt");
  const QField z = sample(e.map, Grid::centered_box(2, 1.0, 1.0 / 64));
  const double o[2] = {0.0, 0.0};
  for (const char* t : {"1", "3", "4"}) {
    setenv("QVAR_THREADS", t, 1);
    CHECK(thread_count() == std::atoi(t));
    sums.push_back(deterministic_sum(100003, term));
    freq.push_back(frequency(z, o, 0.5).I);
  }
  unsetenv("QVAR_THREADS");
  CHECK(std::memcmp(&sums[0], &sums[1], sizeof(double)) == 0);
  CHECK(std::memcmp(&sums[0], &sums[2], sizeof(double)) == 0);
  CHECK(std::memcmp(&freq[0], &freq[2], sizeof(double)) == 0);
  std::vector<double> v(1000);
  long double ref = 0.0L;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = std::sin(0.37 * i) / (1.0 + i);
    ref += v[i];
  }
  CHECK(pairwise_sum(v.data(), v.size()) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-15));
}

TEST_CASE("field invariants hold on a catalog field") {
  const auto e = make_catalog("branch_sqrt");
  const QField z = sample(e.map, Grid::centered_box(2, 1.0, 1.0 / 32));
  InvariantOptions opt;
  opt.trials = 200;
  const auto rows = field_invariants(z, opt);
  CHECK(!rows.empty());
  for (const auto& r : rows)
    if (!r.pass) FAIL_CHECK(r.module << "/" << r.name << " " << r.value << " > " << r.tolerance << " " << r.note);
  CHECK(all_pass(rows));
}
