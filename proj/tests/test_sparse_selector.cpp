// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <bit>
#include <set>

#include "cogmimo/errors.hpp"
#include "cogmimo/sparse_selector.hpp"
#include "test_util.hpp"

using namespace cogmimo;

namespace {

Scenario make_scene(std::vector<SourceDescriptor> src) {
  Scenario s;
  s.sources = std::move(src);
  s.noise_power = 1.0;
  return s;
}

// Independent feasibility filter on bitmasks: c_i + r_{i-1} + r_i + r_{i+1} <= 1
// for every i, evaluated literally.
bool feasible_bits(int m, unsigned tx, unsigned rx) {
  auto bit = [&](unsigned v, int i) { return i >= 0 && i < m && (v >> i & 1u) ? 1 : 0; };
  for (int i = 0; i < m; ++i)
    if (bit(tx, i) + bit(rx, i - 1) + bit(rx, i) + bit(rx, i + 1) > 1) return false;
  return true;
}

long count_feasible_bits(int m, int n) {
  long count = 0;
  for (unsigned tx = 0; tx < (1u << m); ++tx) {
    if (std::popcount(tx) != n) continue;
    for (unsigned rx = 0; rx < (1u << m); ++rx)
      if (std::popcount(rx) == n && feasible_bits(m, tx, rx)) ++count;
  }
  return count;
}

double group_norm(const RVector& w, const IndexList& mask) {
  double s = 0.0;
  for (int k : mask) s += w[k] * w[k];
  return std::sqrt(s);
}

void check_pair(const Subarray& s, int m, int n) {
  CHECK(static_cast<int>(s.tx.size()) == n);
  CHECK(static_cast<int>(s.rx.size()) == n);
  CHECK(is_feasible_pair(m, s, n, true));
  const SelectionPair pair = SelectionPair::from_subarray(m, s);
  CHECK(pair.c.sum() == n);
  CHECK(pair.r.sum() == n);
  CHECK(isolation_violation(pair.c, pair.r) <= 0.0);
}

}  // namespace

TEST_CASE("group masks for M=2") {
  const GroupMasks g = build_group_masks(2);
  auto sorted = [](IndexList v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  CHECK(sorted(g.transmit[0]) == IndexList{0, 2, 4, 6});
  CHECK(sorted(g.receive[0]) == IndexList{0, 1, 4, 5});
  CHECK_THROWS_AS(build_group_masks(1), DomainError);
}

TEST_CASE("group masks partition the real-lift coordinates per side") {
  for (int m = 2; m <= 7; ++m) {
    const GroupMasks g = build_group_masks(m);
    std::vector<int> tx_count(2 * m * m, 0), rx_count(2 * m * m, 0);
    for (int i = 0; i < m; ++i) {
      CHECK(static_cast<int>(g.transmit[i].size()) == 2 * m);
      CHECK(static_cast<int>(g.receive[i].size()) == 2 * m);
      for (int k : g.transmit[i]) ++tx_count[k];
      for (int k : g.receive[i]) ++rx_count[k];
      // Transmit antenna i owns virtual column i; receive antenna i owns row i.
      for (int k : g.transmit[i]) CHECK((k % (m * m)) % m == i);
      for (int k : g.receive[i]) CHECK((k % (m * m)) / m == i);
    }
    CHECK(std::all_of(tx_count.begin(), tx_count.end(), [](int c) { return c == 1; }));
    CHECK(std::all_of(rx_count.begin(), rx_count.end(), [](int c) { return c == 1; }));
  }
}

TEST_CASE("reweighting endpoints and a midpoint") {
  SelectorConfig cfg;
  cfg.alpha0 = 1.0;
  cfg.beta0 = 10.0;
  cfg.epsilon = 1e-3;
  const RVector c = (RVector(3) << 0.0, 1.0, 0.5).finished();
  const auto [p, q] = update_reweights(c, c, cfg);
  CHECK(p[0] == 1.0 / cfg.epsilon);
  CHECK(p[1] == -1.0 / cfg.epsilon);
  const double mid = 0.5 / (1.0 - std::exp(-5.0) + 1e-3) - 500.0;
  CHECK(p[2] == doctest::Approx(mid).epsilon(1e-14));
  CHECK(q == p);
}

TEST_CASE("reweighting is strictly decreasing in activation") {
  for (double a0 : {1.0, 1.5, 3.0}) {
    for (double b0 : {1.0, 10.0, 20.0}) {
      SelectorConfig cfg;
      cfg.alpha0 = a0;
      cfg.beta0 = b0;
      RVector c(201);
      for (int i = 0; i <= 200; ++i) c[i] = i / 200.0;
      const RVector p = update_reweights(c, c, cfg).first;
      for (int i = 1; i <= 200; ++i) CHECK(p[i] < p[i - 1]);
    }
  }
}

TEST_CASE("isolation rows and pair feasibility") {
  const Subarray ok{{0, 4}, {2, 6}};
  CHECK(is_feasible_pair(8, ok, 2, true));
  CHECK_FALSE(is_feasible_pair(8, {{0, 4}, {1, 6}}, 2, true));   // neighbour
  CHECK_FALSE(is_feasible_pair(8, {{0, 4}, {4, 6}}, 2, true));   // same position
  CHECK(is_feasible_pair(8, {{0, 4}, {1, 6}}, 2, false));
  CHECK_FALSE(is_feasible_pair(8, {{0, 4}, {4, 6}}, 2, false));  // never shared
  CHECK_FALSE(is_feasible_pair(8, {{0, 4}, {6}}, 2, true));      // cardinality
  const SelectionPair bad = SelectionPair::from_subarray(8, {{3}, {2, 4}});
  CHECK(isolation_violation(bad.c, bad.r) == doctest::Approx(2.0));
  const SelectionPair good = SelectionPair::from_subarray(8, ok);
  CHECK(good.transmit() == ok.tx);
  CHECK(good.receive() == ok.rx);
}

TEST_CASE("infeasible selections are reported with a certificate") {
  for (auto [m, n] : {std::pair{3, 2}, {18, 9}, {8, 5}}) {
    try {
      check_selection_feasible(m, n, true);
      FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
      CHECK(e.violation() > 0.0);
      REQUIRE(static_cast<int>(e.certificate().size()) == m);
      for (double z : e.certificate()) CHECK(z >= -1e-9);
    }
  }
  CHECK_NOTHROW(check_selection_feasible(18, 4, true));
  CHECK_NOTHROW(check_selection_feasible(8, 2, true));
  CHECK_THROWS_AS(check_selection_feasible(4, 3, false), InfeasibleError);
  CHECK(enumerate_feasible_pairs(3, 2, true).empty());
  CHECK_THROWS_AS(brute_force_oracle(ArrayGeometry(3), make_scene({{SourceKind::target, 60.0, 20.0}}), 2),
                  InfeasibleError);
}

TEST_CASE("feasible pair enumeration") {
  const auto small = enumerate_feasible_pairs(4, 1, true);
  CHECK(small.size() == 6);
  for (const auto& s : small) CHECK(std::abs(s.rx[0] - s.tx[0]) >= 2);

  const auto pairs = enumerate_feasible_pairs(8, 2, true);
  CHECK(static_cast<long>(pairs.size()) == count_feasible_bits(8, 2));
  CHECK(pairs.size() == 36);
  for (std::size_t i = 1; i < pairs.size(); ++i)
    CHECK((pairs[i - 1].tx < pairs[i].tx ||
           (pairs[i - 1].tx == pairs[i].tx && pairs[i - 1].rx < pairs[i].rx)));
  CHECK(static_cast<long>(enumerate_feasible_pairs(7, 2, true).size()) == count_feasible_bits(7, 2));
  CHECK(count_feasible_bits(7, 2) == 9);
  CHECK(count_feasible_bits(10, 3) == 4);
  CHECK(static_cast<long>(enumerate_feasible_pairs(10, 3, true).size()) ==
        count_feasible_bits(10, 3));
  CHECK_THROWS_AS(enumerate_feasible_pairs(18, 4, true), CombinatorialLimitError);
}

TEST_CASE("rounding takes top-N transmit and feasible receive, ties to lower index") {
  const RVector c = (RVector(8) << 0.9, 0.1, 0.1, 0.1, 0.8, 0.0, 0.0, 0.0).finished();
  const RVector r = (RVector(8) << 0.0, 0.9, 0.5, 0.0, 0.0, 0.1, 0.5, 0.0).finished();
  bool fallback = true;
  const Subarray s = round_selection(c, r, 2, true, &fallback);
  CHECK(s.tx == IndexList{0, 4});
  CHECK(s.rx == IndexList{2, 6});
  CHECK_FALSE(fallback);

  const RVector flat = RVector::Constant(8, 0.25);
  const Subarray t = round_selection(flat, flat, 2, true);
  CHECK(t.tx == IndexList{0, 1});
  check_pair(t, 8, 2);
}

TEST_CASE("subproblem reduces to Capon without sparsity pressure") {
  std::mt19937_64 gen(5);
  const int m = 3;
  const CMatrix r = test::random_hpd(gen, m * m, 1.0);
  const CVector b = virtual_steering(ArrayGeometry(m), 65.0);
  SelectorConfig cfg;
  cfg.num_selected = m;
  cfg.isolation = false;
  cfg.alpha = 0.0;
  cfg.beta = 0.0;
  const auto res = solve_subproblem(realify(r), realify(b), build_group_masks(m),
                                    RVector::Zero(m), RVector::Zero(m), cfg);
  const CVector capon = capon_weights(r, b).weights;
  CHECK((complexify(res.w) - capon).norm() < 1e-5 * capon.norm());
  CHECK(res.kkt_residual <= cfg.subproblem_tol);
}

TEST_CASE("a punished antenna is switched off") {
  // M = 6 with N = 2 admits a single isolated pair, so nothing could be switched off there.
  const int m = 8;
  const ArrayGeometry g(m);
  const Scenario s = make_scene({{SourceKind::target, 65.0, 20.0}, {SourceKind::deceptive, 55.0, 15.0}});
  const CMatrix r = oracle_covariance(g, s);
  SelectorConfig cfg;
  cfg.num_selected = 2;
  for (int k : {0, 2, 5}) {
    RVector p = RVector::Constant(m, -1.0 / cfg.epsilon);
    p[k] = 1.0 / cfg.epsilon;
    const RVector q = RVector::Zero(m);
    const auto res = solve_subproblem(realify(r), realify(virtual_steering(g, 65.0)),
                                      build_group_masks(m), p, q, cfg);
    CHECK(res.c[k] < cfg.binary_tol);
  }
}

TEST_CASE("subproblem solution satisfies every constraint") {
  const int m = 4;
  const ArrayGeometry g(m);
  const GroupMasks masks = build_group_masks(m);
  SelectorConfig cfg;
  cfg.num_selected = 1;
  const RVector b = realify(virtual_steering(g, 90.0));
  for (const RMatrix& rr : {RMatrix(RMatrix::Identity(2 * m * m, 2 * m * m)),
                            realify(oracle_covariance(g, make_scene({{SourceKind::target, 90.0, 20.0},
                                                                     {SourceKind::coexisting, 70.0, 15.0}})))}) {
    const auto res = solve_subproblem(rr, b, masks, RVector::Zero(m), RVector::Zero(m), cfg);
    const double tol = 1e-6;
    CHECK(std::abs(res.w.dot(b) - 1.0) < tol);
    CHECK(std::abs(res.c.sum() - 1.0) < tol);
    CHECK(std::abs(res.r.sum() - 1.0) < tol);
    for (int i = 0; i < m; ++i) {
      CHECK(res.c[i] >= -tol);
      CHECK(res.c[i] <= 1.0 + tol);
      CHECK(res.r[i] >= -tol);
      CHECK(res.r[i] <= 1.0 + tol);
      CHECK(group_norm(res.w, masks.transmit[i]) <= res.c[i] + tol);
      CHECK(group_norm(res.w, masks.receive[i]) <= res.r[i] + tol);
    }
    CHECK(isolation_violation(res.c, res.r) <= tol);
  }
}

TEST_CASE("small broadside selection matches brute force") {
  const ArrayGeometry g(4);
  const Scenario s = make_scene({{SourceKind::target, 90.0, 20.0}});
  SelectorConfig cfg;
  cfg.num_selected = 1;
  const auto out = select_transceiver(oracle_covariance(g, s), g, 90.0, cfg);
  check_pair(out.selection.subarray(), 4, 1);
  const double got = output_sinr_db(out.beam.weights, g, s, out.selection.subarray());
  const auto best = brute_force_oracle(g, s, 1);
  CHECK(got == doctest::Approx(best.best_sinr_db).epsilon(1e-9));
}

TEST_CASE("selection on an interference scene is feasible, sparse and Capon-consistent") {
  const int m = 8;
  const ArrayGeometry g(m);
  const Scenario s = make_scene({{SourceKind::target, 65.0, 20.0},
                                 {SourceKind::deceptive, 50.0, 15.0},
                                 {SourceKind::deceptive, 60.0, 15.0}});
  const CMatrix r = oracle_covariance(g, s);
  SelectorConfig cfg;
  cfg.num_selected = 2;
  const auto out = select_transceiver(r, g, 65.0, cfg);
  const Subarray sel = out.selection.subarray();
  check_pair(sel, m, 2);
  check_pair(out.rounded, m, 2);
  CHECK(out.selection.binary);
  CHECK(out.outer_iterations >= 1);
  CHECK(!out.objective_history.empty());

  // Capon identity on the selected subarray.
  const IndexList idx = sel.virtual_indices(m);
  const CVector bs = restrict(virtual_steering(g, 65.0), idx);
  const CMatrix rs = restrict(r, idx);
  CHECK(out.final_quadratic * bs.dot(rs.llt().solve(bs)).real() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(out.beam.weights.dot(bs) - 1.0) < 1e-9);

  // Embedded weights vanish on every unselected antenna's group.
  const RVector wr = realify(embed_weights(out.beam.weights, sel, m));
  const GroupMasks masks = build_group_masks(m);
  for (int i = 0; i < m; ++i) {
    if (std::find(sel.tx.begin(), sel.tx.end(), i) == sel.tx.end())
      CHECK(group_norm(wr, masks.transmit[i]) == 0.0);
    if (std::find(sel.rx.begin(), sel.rx.end(), i) == sel.rx.end())
      CHECK(group_norm(wr, masks.receive[i]) == 0.0);
  }

  const auto best = brute_force_oracle(g, s, 2);
  const double got = output_sinr_db(out.beam.weights, g, s, sel);
  CHECK(got <= best.best_sinr_db + 1e-9);
  CHECK(got >= best.best_sinr_db - 0.5);
}

TEST_CASE("local refinement never lowers the merit and stays feasible") {
  const int m = 8;
  const ArrayGeometry g(m);
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> ang(20.0, 160.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Scenario s = make_scene({{SourceKind::target, ang(gen), 20.0},
                                   {SourceKind::deceptive, ang(gen), 15.0},
                                   {SourceKind::coexisting, ang(gen), 15.0}});
    const CMatrix r = oracle_covariance(g, s);
    const CVector b = virtual_steering(g, s.target().angle_deg);
    const Subarray start{{0, 1}, {4, 7}};
    int swaps = -1;
    const Subarray end = refine_selection(r, b, start, m, true, {}, &swaps);
    check_pair(end, m, 2);
    CHECK(swaps >= 0);
    CHECK(selection_merit(r, b, end, m) >= selection_merit(r, b, start, m));
  }
}

TEST_CASE("brute force with no interference beats hand-picked pairs") {
  const int m = 8;
  const ArrayGeometry g(m);
  const Scenario s = make_scene({{SourceKind::target, 70.0, 20.0}});
  const auto best = brute_force_oracle(g, s, 2);
  CHECK(best.pairs_evaluated == 36);
  for (const Subarray& hand : {Subarray{{0, 1}, {3, 7}}, Subarray{{6, 7}, {0, 3}}, Subarray{{0, 7}, {2, 5}}}) {
    REQUIRE(is_feasible_pair(m, hand, 2, true));
    CHECK(best.best_sinr_db >= optimal_sinr_db(g, s, hand) - 1e-12);
  }
  // Covariance-scored search reaches the same SINR when the covariance is exact.
  // Without interference every pair ties, so the winning indices may differ.
  const auto by_cov = brute_force_oracle(oracle_covariance(g, s), g, 70.0, 2);
  CHECK(optimal_sinr_db(g, s, by_cov.best.subarray()) == doctest::Approx(best.best_sinr_db).epsilon(1e-9));
}

TEST_CASE("selector configuration validation") {
  SelectorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.binary_tol = 0.5;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.alpha = -1.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.num_selected = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("paper-scale selection beats the conventional layout near the target") {
  const ArrayGeometry g(18);
  const Scenario s = make_scene({{SourceKind::target, 65.0, 20.0},
                                 {SourceKind::deceptive, 60.0, 15.0},
                                 {SourceKind::deceptive, 70.0, 15.0}});
  SelectorConfig cfg;
  cfg.num_selected = 4;
  const auto out = select_transceiver(oracle_covariance(g, s), g, 65.0, cfg);
  check_pair(out.selection.subarray(), 18, 4);
  const Subarray conventional{{0, 4, 8, 12}, {14, 15, 16, 17}};
  CHECK(output_sinr_db(out.beam.weights, g, s, out.selection.subarray()) >=
        optimal_sinr_db(g, s, conventional) - 0.1);
}
