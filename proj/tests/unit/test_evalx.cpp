#include <algorithm>
#include <map>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "okbc/error.hpp"
#include "okbc/evalx.hpp"

using namespace okbc;
using namespace okbc::evalx;

namespace {

using Groups = std::vector<std::vector<std::size_t>>;

Groups groups_of(const std::vector<std::int64_t>& labels) {
  std::map<std::int64_t, std::vector<std::size_t>> m;
  for (std::size_t i = 0; i < labels.size(); ++i) m[labels[i]].push_back(i);
  Groups out;
  for (auto& [k, v] : m) out.push_back(v);
  return out;
}

// Pure iff all members share a label in the other partition.
double purity_share(const Groups& a, const std::vector<std::int64_t>& other) {
  std::size_t pure = 0;
  for (const auto& c : a) {
    bool ok = true;
    for (auto e : c) ok = ok && other[e] == other[c.front()];
    pure += ok;
  }
  return static_cast<double>(pure) / static_cast<double>(a.size());
}

double overlap_share(const Groups& a, const Groups& b, std::size_t n) {
  std::size_t total = 0;
  for (const auto& c : a) {
    std::size_t best = 0;
    for (const auto& g : b) {
      std::size_t k = 0;
      for (auto e : c) k += std::count(g.begin(), g.end(), e);
      best = std::max(best, k);
    }
    total += best;
  }
  return static_cast<double>(total) / static_cast<double>(n);
}

Prf oracle_pairwise(const std::vector<std::int64_t>& p, const std::vector<std::int64_t>& g) {
  double hits = 0, pp = 0, gp = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const bool a = p[i] == p[j], b = g[i] == g[j];
      hits += a && b;
      pp += a;
      gp += b;
    }
  }
  const double P = pp == 0 ? (gp == 0 ? 1.0 : 0.0) : hits / pp;
  const double R = gp == 0 ? (pp == 0 ? 1.0 : 0.0) : hits / gp;
  return {P, R, f1_of(P, R)};
}

}  // namespace

TEST_CASE("worked fixture") {
  // a1 a2 b1 b2
  const std::vector<std::int64_t> gold{0, 0, 1, 1}, pred{5, 5, 5, 6};
  const auto r = report(pred, gold);
  CHECK(r.macro.p == 0.5);
  CHECK(r.macro.r == 0.5);
  CHECK(r.micro.p == 0.75);
  CHECK(r.micro.r == 0.75);
  CHECK(r.pair.p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(r.pair.r == 0.5);
  CHECK(r.pair.f1 == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(r.average_f1 == doctest::Approx(0.55).epsilon(1e-15));
  CHECK(r.elements == 4);
}

TEST_CASE("conventions") {
  const std::vector<std::int64_t> gold{0, 0, 1, 1}, singles{0, 1, 2, 3}, one{0, 0, 0, 0};
  CHECK(report(gold, gold).average_f1 == 1.0);
  CHECK(macro_prf(singles, gold).p == 1.0);
  const auto pw = pairwise_prf(singles, gold);
  CHECK(pw.p == 0.0);
  CHECK(pw.f1 == 0.0);
  CHECK(pairwise_prf(singles, singles).f1 == 1.0);
  const auto mi = micro_prf(one, gold);
  CHECK(mi.p == 0.5);
  CHECK(mi.r == 1.0);
  CHECK(f1_of(0, 0) == 0.0);
  CHECK_THROWS_AS(report(gold, std::vector<std::int64_t>{0}), Error);
}

TEST_CASE("brute-force oracle on random clusterings") {
  Rng rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(50);
    const std::size_t kp = 1 + rng.uniform_index(n), kg = 1 + rng.uniform_index(n);
    std::vector<std::int64_t> p(n), g(n);
    for (auto& x : p) x = static_cast<std::int64_t>(rng.uniform_index(kp));
    for (auto& x : g) x = static_cast<std::int64_t>(rng.uniform_index(kg));
    const auto P = groups_of(p), G = groups_of(g);
    const auto macro = macro_prf(p, g);
    CHECK(macro.p == purity_share(P, g));
    CHECK(macro.r == purity_share(G, p));
    const auto micro = micro_prf(p, g);
    CHECK(micro.p == overlap_share(P, G, n));
    CHECK(micro.r == overlap_share(G, P, n));
    const auto pair = pairwise_prf(p, g);
    const auto o = oracle_pairwise(p, g);
    CHECK(pair.p == o.p);
    CHECK(pair.r == o.r);
    CHECK(pair.f1 == o.f1);
    // Symmetry.
    const auto sw = report(g, p);
    CHECK(sw.macro.p == macro.r);
    CHECK(sw.micro.p == micro.r);
    CHECK(sw.pair.p == pair.r);
    const auto r = report(p, g);
    for (double x : {r.macro.f1, r.micro.f1, r.pair.f1, r.average_f1}) CHECK((x >= 0.0 && x <= 1.0));
  }
}

TEST_CASE("splitting a predicted cluster never raises pairwise recall") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(30);
    std::vector<std::int64_t> p(n), g(n);
    for (auto& x : p) x = static_cast<std::int64_t>(rng.uniform_index(4));
    for (auto& x : g) x = static_cast<std::int64_t>(rng.uniform_index(4));
    auto q = p;
    for (auto& x : q) {
      if (x == 0 && rng.uniform01() < 0.5) x = 99;
    }
    CHECK(pairwise_prf(q, g).r <= pairwise_prf(p, g).r);
  }
}

TEST_CASE("keyed assignments and files") {
  const auto dir = fixtures::scratch("evalx");
  fixtures::write_file(dir / "pred.tsv", "0\tNP\t1:subj\ta\n0\tNP\t1:obj\tb\n1\tNP\t2:subj\tc\n0\tRP\t0\tr\n");
  fixtures::write_file(dir / "gold.tsv", "x\tNP\t1:subj\ny\tNP\t1:obj\ny\tNP\t2:subj\n");
  const auto pred = load_assignment(dir / "pred.tsv");
  CHECK(pred.size() == 3);
  CHECK(load_assignment(dir / "pred.tsv", "").size() == 4);
  const auto r = report(pred, load_assignment(dir / "gold.tsv"));
  CHECK(r.micro.p == doctest::Approx(2.0 / 3.0));
  Assignment partial = pred;
  partial.erase(partial.begin());
  CHECK_THROWS_AS(report(partial, load_assignment(dir / "gold.tsv")), Error);
  fixtures::write_file(dir / "dup.tsv", "0\tNP\t1:subj\n1\tNP\t1:subj\n");
  CHECK_THROWS_AS(load_assignment(dir / "dup.tsv"), Error);
  fixtures::write_file(dir / "bad.tsv", "0\n");
  CHECK_THROWS_AS(load_assignment(dir / "bad.tsv"), Error);

  std::ostringstream table;
  print_table(r, table);
  CHECK(table.str().find("Aver.") != std::string::npos);
  CHECK(to_json(r).find("\"average_f1\"") != std::string::npos);
}
