#include <doctest.h>

#include <random>

#include "causeprobe/error.hpp"
#include "causeprobe/metrics.hpp"
#include "support.hpp"

using namespace causeprobe;
using namespace causeprobe::metrics;

namespace {

CausalGraph chain_abc() {
  CausalGraph g({"A", "B", "C"});
  g.add_directed(0, 1);
  g.add_directed(1, 2);
  return g;
}

CausalGraph altitude_truth() {
  CausalGraph g({"altitude", "temperature"});
  g.add_directed(0, 1);
  return g;
}

}  // namespace

TEST_CASE("SHD examples") {
  const auto truth = chain_abc();
  CHECK(shd(truth, truth) == 0);
  CHECK(shd(CausalGraph({"altitude", "temperature"}), altitude_truth()) == 1);
  CausalGraph pred({"A", "B", "C"});
  pred.add_directed(1, 0);
  pred.add_directed(1, 2);
  pred.add_directed(0, 2);
  CHECK(shd(pred, truth) == 2);
  CausalGraph sym({"A", "B", "C"});
  sym.add_symmetric(0, 1);
  sym.add_directed(1, 2);
  CHECK(shd(sym, truth) == 1);
  CHECK_THROWS_AS(shd(CausalGraph({"A", "B", "D"}), truth), InputError);
}

TEST_CASE("SHD properties on random graphs") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 300; ++t) {
    const auto a = support::random_graph(rng, 4, false);
    const auto b = support::random_graph(rng, 4, false);
    const auto c = support::random_graph(rng, 4, false);
    CHECK(shd(a, a) == 0);
    CHECK(shd(a, b) == shd(b, a));
    CHECK(shd(a, b) <= 6);
    CHECK(shd(a, c) <= shd(a, b) + shd(b, c));
    CHECK(shd(a, b) == support::shd_oracle(a, b));
  }
}

TEST_CASE("SID examples") {
  const auto truth = altitude_truth();
  const auto empty = sid(CausalGraph({"altitude", "temperature"}), truth);
  CHECK(empty.min == 1);
  CHECK(empty.max == 1);
  CHECK(sid(truth, truth).max == 0);

  const auto abc = chain_abc();
  CausalGraph reversed_chain({"A", "B", "C"});
  reversed_chain.add_directed(1, 0);
  reversed_chain.add_directed(2, 1);
  const auto r = sid(reversed_chain, abc);
  CHECK(r.min == r.max);
  CHECK(r.min == support::sid_oracle(reversed_chain, abc));
  CHECK(r.extensions == 1);
  CHECK_FALSE(r.cyclic_prediction);
}

TEST_CASE("SID over orientation extensions") {
  CausalGraph pred({"altitude", "temperature"});
  pred.add_symmetric(0, 1);
  const auto r = sid(pred, altitude_truth());
  CHECK(r.extensions == 2);
  CHECK(r.min == 0);
  // temperature -> altitude misses (altitude, temperature) and leaves the
  // back-door path open for (temperature, altitude).
  CHECK(r.max == 2);
  CHECK(r.mean == doctest::Approx((r.min + r.max) / 2.0));

  CausalGraph cyclic({"A", "B", "C"});
  cyclic.add_directed(0, 1);
  cyclic.add_directed(1, 2);
  cyclic.add_directed(2, 0);
  const auto c = sid(cyclic, chain_abc());
  CHECK(c.cyclic_prediction);
  CHECK(c.extensions == 1);

  CausalGraph bad_truth({"A", "B"});
  bad_truth.add_symmetric(0, 1);
  CHECK_THROWS_AS(sid(bad_truth, bad_truth), InputError);
}

TEST_CASE("SID matches the path-enumeration oracle on all 3-node DAG pairs") {
  const auto dags = support::all_dags(3);
  REQUIRE(dags.size() == 25);
  for (const auto& truth : dags) {
    CHECK(sid(truth, truth).max == 0);
    for (const auto& pred : dags) {
      const auto r = sid(pred, truth);
      CHECK(r.min == r.max);
      CHECK(r.min == support::sid_oracle(pred, truth));
    }
  }
}

TEST_CASE("SID matches the oracle on random 4- and 5-node DAGs") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = t % 2 == 0 ? 4 : 5;
    const auto truth = support::random_graph(rng, n, true);
    const auto pred = support::random_graph(rng, n, true);
    CHECK(sid(pred, truth).max == support::sid_oracle(pred, truth));
  }
}

TEST_CASE("d-separation basics") {
  // A -> C <- B
  CausalGraph g({"A", "B", "C"});
  g.add_directed(0, 2);
  g.add_directed(1, 2);
  CHECK(d_separated(g, 0, 1, {false, false, false}));
  CHECK_FALSE(d_separated(g, 0, 1, {false, false, true}));
  const auto chain = chain_abc();
  CHECK_FALSE(d_separated(chain, 0, 2, {false, false, false}));
  CHECK(d_separated(chain, 0, 2, {false, true, false}));
}

TEST_CASE("F1 on skeletons") {
  const auto truth = chain_abc();
  CausalGraph flipped({"A", "B", "C"});
  flipped.add_directed(1, 0);
  flipped.add_symmetric(1, 2);
  CHECK(f1(flipped, truth).f1 == 1.0);
  CHECK(f1(CausalGraph({"A", "B", "C"}), truth).f1 == 0.0);
  CausalGraph half({"A", "B", "C"});
  half.add_directed(0, 1);
  half.add_directed(0, 2);
  const auto r = f1(half, truth);
  CHECK(r.precision == 0.5);
  CHECK(r.recall == 0.5);
  CHECK(r.f1 == 0.5);
  CHECK(f1(CausalGraph({"A", "B"}), CausalGraph({"A", "B"})).f1 == 0.0);
}

TEST_CASE("sparsity and decisiveness") {
  CausalGraph empty({"A", "B", "C"});
  CHECK(sparsity(3, empty) == 1.0);
  CHECK(decisiveness(empty) == 0.0);
  CausalGraph full({"A", "B", "C"});
  full.add_symmetric(0, 1);
  full.add_symmetric(0, 2);
  full.add_symmetric(1, 2);
  CHECK(sparsity(3, full) == 0.0);
  CHECK(decisiveness(full) == 0.0);
  CHECK(sparsity(2, altitude_truth()) == 0.5);
  CHECK(decisiveness(altitude_truth()) == 1.0);
  CausalGraph mixed({"A", "B", "C"});
  mixed.add_directed(0, 1);
  mixed.add_symmetric(1, 2);
  CHECK(decisiveness(mixed) == 0.5);
  CHECK_THROWS_AS(sparsity(1, CausalGraph({"A"})), InputError);
  CHECK_THROWS_AS(sparsity(4, empty), InputError);

  // Adding half-edges strictly lowers sparsity.
  CausalGraph g({"A", "B", "C", "D"});
  double last = sparsity(4, g);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      g.add_directed(i, j);
      const double s1 = sparsity(4, g);
      CHECK(s1 < last);
      g.add_symmetric(i, j);
      const double s2 = sparsity(4, g);
      CHECK(s2 < s1);
      last = s2;
    }
  }
  CHECK(last == 0.0);
}

TEST_CASE("ADS") {
  std::map<int, CausalGraph> same;
  for (int id = 1; id <= 5; ++id) same.emplace(id, chain_abc());
  CHECK(ads(same) == 0.0);

  CausalGraph all_sym({"A", "B"});
  all_sym.add_symmetric(0, 1);
  std::map<int, CausalGraph> extremes;
  for (int id = 1; id <= 3; ++id) extremes.emplace(id, all_sym);
  for (int id = 4; id <= 5; ++id) extremes.emplace(id, altitude_truth());
  CHECK(ads(extremes) == 1.0);

  CHECK(ads_from_groups({0.2, 0.2, 0.2}, {0.6, 0.8}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ads_from_groups({0.6, 0.8}, {0.2, 0.2, 0.2}) == -ads_from_groups({0.2, 0.2, 0.2}, {0.6, 0.8}));
  std::map<int, CausalGraph> only_sym{{1, all_sym}, {2, all_sym}};
  CHECK_THROWS_AS(ads(only_sym), InputError);
}

TEST_CASE("graph difference") {
  const auto a = chain_abc();
  CHECK(graph_difference(a, a).empty());
  CausalGraph b = a;
  b.add_directed(1, 0);
  const auto d = graph_difference(a, b);
  REQUIRE(d.size() == 1);
  CHECK(d[0].a == "A");
  CHECK(d[0].b == "B");
  CHECK(d[0].before == EdgeState::Forward);
  CHECK(d[0].after == EdgeState::Backward);
  CausalGraph c({"A", "B", "C"});
  c.add_directed(0, 2);
  CHECK(graph_difference(a, c).size() == 3);
}

TEST_CASE("population standard deviation") {
  const auto s = summarize({1, 1, 1, 1, 0});
  CHECK(s.mean == doctest::Approx(0.8));
  CHECK(s.stddev == doctest::Approx(0.4));
  CHECK(summarize({0.5}).stddev == 0.0);
  CHECK_THROWS_AS(summarize({}), InputError);
}

TEST_CASE("metrics are invariant under consistent node permutation") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 100; ++t) {
    const auto truth = support::random_graph(rng, 4, true);
    const auto pred = support::random_graph(rng, 4, false);
    std::vector<std::size_t> order{0, 1, 2, 3};
    std::shuffle(order.begin(), order.end(), rng);
    const auto tp = truth.permuted(order);
    const auto pp = pred.permuted(order);
    CHECK(shd(pp, tp) == shd(pred, truth));
    CHECK(f1(pp, tp).f1 == f1(pred, truth).f1);
    CHECK(sparsity(4, pp) == sparsity(4, pred));
    CHECK(decisiveness(pp) == decisiveness(pred));
    CHECK(decisiveness(pred.relabeled({"w", "x", "y", "z"})) == decisiveness(pred));
    const auto s1 = sid(pp, tp);
    const auto s2 = sid(pred, truth);
    CHECK(s1.min == s2.min);
    CHECK(s1.max == s2.max);
    CHECK(s1.mean == doctest::Approx(s2.mean));
    // Misordered labels are aligned rather than rejected.
    CHECK(shd(pp, truth) == shd(pred, truth));
  }
}
