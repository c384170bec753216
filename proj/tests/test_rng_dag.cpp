#include <doctest.h>

#include "gscalei/dag.hpp"
#include "gscalei/errors.hpp"
#include "gscalei/rng.hpp"

using namespace gscalei;

TEST_CASE("rng streams are deterministic and independent") {
  Rng a(17), b(17);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  CHECK(derive_stream(17, 1) != derive_stream(17, 2));
  CHECK(derive_stream(17, 1) != derive_stream(18, 1));
  Rng s1(derive_stream(17, 1)), s2(derive_stream(17, 2));
  CHECK(s1.next_u64() != s2.next_u64());
}

TEST_CASE("rng uniform and normal moments") {
  Rng rng(5);
  const int n = 200000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sum_sq += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sum_sq / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));

  double nsum = 0, nsq = 0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.normal();
    nsum += g;
    nsq += g * g;
  }
  CHECK(nsum / n == doctest::Approx(0.0).epsilon(0.01));
  CHECK(nsq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("er dag density extremes") {
  Rng rng(1);
  const Dag empty = sample_er_dag(3, 0.0, rng);
  CHECK(empty.edge_count() == 0);
  for (int i = 0; i < 3; ++i) CHECK(empty.is_root(i));

  const Dag complete = sample_er_dag(3, 1.0, rng);
  CHECK(complete.edge_count() == 3);
  CHECK(complete.has_edge(0, 1));
  CHECK(complete.has_edge(0, 2));
  CHECK(complete.has_edge(1, 2));
}

TEST_CASE("er dag mean edge count at density 0.5") {
  Rng rng(2024);
  double total = 0;
  const int draws = 1000;
  for (int i = 0; i < draws; ++i) total += sample_er_dag(5, 0.5, rng).edge_count();
  // 10 pairs at p=0.5: mean 5.0, MC tolerance 0.3.
  CHECK(total / draws == doctest::Approx(5.0).epsilon(0.06));
}

TEST_CASE("dag invariants rejected") {
  CHECK_THROWS_AS(Dag(2, {{0}, {}}, {0, 1}), InvalidGraph);     // parent after child
  CHECK_THROWS_AS(Dag(2, {{}, {1}}, {0, 1}), InvalidGraph);     // self parent
  CHECK_THROWS_AS(Dag(2, {{}, {0}}, {1, 1}), InvalidGraph);     // bad topo order
  CHECK_THROWS_AS(Dag(2, {{}, {0}}, {1, 0}), InvalidGraph);     // topo violates edge
  CHECK_NOTHROW(Dag(2, {{}, {0}}, {0, 1}));
}

TEST_CASE("dag children and edges agree") {
  const Dag dag(4, {{}, {0}, {0, 1}, {2}}, {0, 1, 2, 3});
  const auto ch = dag.children();
  CHECK(ch[0] == std::vector<int>{1, 2});
  CHECK(ch[1] == std::vector<int>{2});
  CHECK(ch[2] == std::vector<int>{3});
  CHECK(dag.edge_count() == 4);
  CHECK(dag.has_edge(0, 2));
  CHECK(!dag.has_edge(2, 0));
}
