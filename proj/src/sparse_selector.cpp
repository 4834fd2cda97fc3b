// SPDX-License-Identifier: Apache-2.0
#include "cogmimo/sparse_selector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cogmimo/cone_solver.hpp"
#include "cogmimo/errors.hpp"

namespace cogmimo {

void SelectorConfig::validate() const {
  if (num_selected < 1) throw DomainError("selector: N must be positive");
  if (alpha && !(*alpha >= 0.0)) throw DomainError("selector: alpha must be nonnegative");
  if (beta && !(*beta >= 0.0)) throw DomainError("selector: beta must be nonnegative");
  if (!(alpha0 > 0.0 && beta0 > 0.0 && epsilon > 0.0))
    throw DomainError("selector: reweighting parameters must be positive");
  if (refine_starts < 1) throw DomainError("selector: refine_starts must be positive");
  if (max_outer_iters < 1) throw DomainError("selector: need at least one outer iteration");
  if (!(binary_tol > 0.0 && binary_tol < 0.5)) throw DomainError("selector: binary_tol must lie in (0, 0.5)");
  if (!(subproblem_tol > 0.0)) throw DomainError("selector: subproblem_tol must be positive");
}

GroupMasks build_group_masks(int num_antennas) {
  if (num_antennas < 2) throw DomainError("group masks need M >= 2");
  const int m = num_antennas;
  const int half = m * m;
  GroupMasks g;
  g.num_antennas = m;
  g.transmit.resize(m);
  g.receive.resize(m);
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < m; ++p) g.transmit[i].push_back(p * m + i);
    for (int p = 0; p < m; ++p) g.transmit[i].push_back(half + p * m + i);
    for (int q = 0; q < m; ++q) g.receive[i].push_back(i * m + q);
    for (int q = 0; q < m; ++q) g.receive[i].push_back(half + i * m + q);
  }
  return g;
}

SelectionPair SelectionPair::from_subarray(int num_antennas, const Subarray& sub) {
  SelectionPair s;
  s.c = RVector::Zero(num_antennas);
  s.r = RVector::Zero(num_antennas);
  for (int i : sub.tx) s.c[i] = 1.0;
  for (int j : sub.rx) s.r[j] = 1.0;
  s.binary = true;
  return s;
}

namespace {

IndexList active(const RVector& v) {
  IndexList idx;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] > 0.5) idx.push_back(static_cast<int>(i));
  return idx;
}

}  // namespace

IndexList SelectionPair::transmit() const { return active(c); }
IndexList SelectionPair::receive() const { return active(r); }

double isolation_violation(const RVector& c, const RVector& r) {
  const auto m = c.size();
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m; ++i) {
    double row = c[i] + r[i];
    if (i > 0) row += r[i - 1];
    if (i + 1 < m) row += r[i + 1];
    worst = std::max(worst, row - 1.0);
  }
  return worst;
}

bool is_feasible_pair(int num_antennas, const Subarray& sub, int num_selected, bool isolation) {
  if (static_cast<int>(sub.tx.size()) != num_selected ||
      static_cast<int>(sub.rx.size()) != num_selected)
    return false;
  std::vector<int> tx(num_antennas, 0), rx(num_antennas, 0);
  for (int i : sub.tx) {
    if (i < 0 || i >= num_antennas || tx[i]) return false;
    tx[i] = 1;
  }
  for (int j : sub.rx) {
    if (j < 0 || j >= num_antennas || rx[j] || tx[j]) return false;
    rx[j] = 1;
  }
  if (!isolation) return true;
  for (int i = 0; i < num_antennas; ++i) {
    int row = tx[i] + rx[i];
    if (i > 0) row += rx[i - 1];
    if (i + 1 < num_antennas) row += rx[i + 1];
    if (row > 1) return false;
  }
  return true;
}

void check_selection_feasible(int num_antennas, int num_selected, bool isolation) {
  const int m = num_antennas;
  if (num_selected < 1 || num_selected > m)
    throw InfeasibleError("cannot select " + std::to_string(num_selected) + " of " +
                          std::to_string(m) + " antennas");
  if (!isolation) {
    if (2 * num_selected > m)
      throw InfeasibleError("disjoint transmit and receive sets exceed the array");
    return;
  }
  // Phase-1 LP over (c, r, t): minimize t subject to box, cardinality and
  // isolation rows relaxed by t. Feasible iff t* <= 0.
  const int n = 2 * m + 1;
  const int tcol = 2 * m;
  ConeProgram lp;
  lp.q = RVector::Zero(n);
  lp.q[tcol] = 1.0;
  lp.A = SparseRowMatrix(2, n);
  for (int i = 0; i < m; ++i) {
    lp.A.insert(0, i) = 1.0;
    lp.A.insert(1, m + i) = 1.0;
  }
  lp.b = RVector::Constant(2, num_selected);
  const int rows = 4 * m + m + 1;
  lp.G = SparseRowMatrix(rows, n);
  lp.h = RVector::Zero(rows);
  for (int v = 0; v < 2 * m; ++v) {
    lp.G.insert(v, v) = -1.0;           // -x <= 0
    lp.G.insert(2 * m + v, v) = 1.0;    // x <= 1
    lp.h[2 * m + v] = 1.0;
  }
  for (int i = 0; i < m; ++i) {
    const int row = 4 * m + i;
    lp.G.insert(row, i) = 1.0;
    for (int j = std::max(0, i - 1); j <= std::min(m - 1, i + 1); ++j) lp.G.insert(row, m + j) = 1.0;
    lp.G.insert(row, tcol) = -1.0;
    lp.h[row] = 1.0;
  }
  lp.G.insert(rows - 1, tcol) = -1.0;  // t >= -1
  lp.h[rows - 1] = 1.0;
  lp.G.makeCompressed();
  lp.A.makeCompressed();
  lp.num_linear = rows;
  const ConeSolution sol = solve_cone_program(lp);
  if (sol.status != ConeStatus::optimal)
    throw SolverError("isolation feasibility check did not converge", sol.iterations,
                      sol.kkt_residual());
  const double t = sol.x[tcol];
  if (t > 1e-6) {
    std::vector<double> cert(m);
    for (int i = 0; i < m; ++i) cert[i] = sol.z[4 * m + i];
    throw InfeasibleError("isolation constraints leave no room for " +
                              std::to_string(num_selected) + " transmit and " +
                              std::to_string(num_selected) + " receive antennas among " +
                              std::to_string(m),
                          std::move(cert), t);
  }
}

SubproblemResult solve_subproblem(const RMatrix& r_real, const RVector& b_real,
                                  const GroupMasks& masks, const RVector& p, const RVector& q,
                                  const SelectorConfig& cfg) {
  cfg.validate();
  const int m = masks.num_antennas;
  const int nw = 2 * m * m;
  if (r_real.rows() != nw || r_real.cols() != nw || b_real.size() != nw)
    throw DomainError("subproblem: covariance/steering do not match the group masks");
  if (p.size() != m || q.size() != m) throw DomainError("subproblem: reweight vectors have wrong length");

  const double scale = std::max(r_real.trace() / nw, std::numeric_limits<double>::min());
  const double alpha = cfg.alpha ? *cfg.alpha : 0.1 * scale;
  const double beta = cfg.beta ? *cfg.beta : 0.1 * scale;

  const int n = nw + 2 * m;
  const int cc = nw, rc = nw + m;  // column offsets of c and r
  ConeProgram prog;
  prog.P = RMatrix::Zero(n, n);
  prog.P.topLeftCorner(nw, nw) = (2.0 / scale) * r_real;
  prog.q = RVector::Zero(n);
  prog.q.segment(cc, m) = (alpha / scale) * p;
  prog.q.segment(rc, m) = (beta / scale) * q;

  prog.A = SparseRowMatrix(3, n);
  for (int k = 0; k < nw; ++k)
    if (b_real[k] != 0.0) prog.A.insert(0, k) = b_real[k];
  for (int i = 0; i < m; ++i) {
    prog.A.insert(1, cc + i) = 1.0;
    prog.A.insert(2, rc + i) = 1.0;
  }
  prog.b = RVector(3);
  prog.b << 1.0, cfg.num_selected, cfg.num_selected;

  const int nlin = cfg.isolation ? 5 * m : 4 * m;
  const int gdim = 2 * m + 1;
  const int rows = nlin + 2 * m * gdim;
  prog.G = SparseRowMatrix(rows, n);
  prog.G.reserve(Eigen::VectorXi::Constant(rows, 5));
  prog.h = RVector::Zero(rows);
  for (int i = 0; i < m; ++i) {
    prog.G.insert(i, cc + i) = -1.0;
    prog.G.insert(m + i, cc + i) = 1.0;
    prog.h[m + i] = 1.0;
    prog.G.insert(2 * m + i, rc + i) = -1.0;
    prog.G.insert(3 * m + i, rc + i) = 1.0;
    prog.h[3 * m + i] = 1.0;
  }
  if (cfg.isolation) {
    for (int i = 0; i < m; ++i) {
      const int row = 4 * m + i;
      prog.G.insert(row, cc + i) = 1.0;
      for (int j = std::max(0, i - 1); j <= std::min(m - 1, i + 1); ++j)
        prog.G.insert(row, rc + j) = 1.0;
      prog.h[row] = 1.0;
    }
  }
  // (c_i, P_i w) and (r_j, Q_j w) in second-order cones.
  int row = nlin;
  for (int side = 0; side < 2; ++side) {
    const auto& groups = side == 0 ? masks.transmit : masks.receive;
    const int off = side == 0 ? cc : rc;
    for (int i = 0; i < m; ++i) {
      prog.G.insert(row++, off + i) = -1.0;
      for (int k : groups[i]) prog.G.insert(row++, k) = -1.0;
      prog.soc_dims.push_back(gdim);
    }
  }
  prog.G.makeCompressed();
  prog.A.makeCompressed();
  prog.num_linear = nlin;

  ConeSolverOptions opts;
  const ConeSolution sol = solve_cone_program(prog, opts);
  if (sol.status != ConeStatus::optimal && !(sol.kkt_residual() <= cfg.subproblem_tol))
    throw SolverError("reweighted subproblem: " + to_string(sol.status), sol.iterations,
                      sol.kkt_residual());

  SubproblemResult out;
  out.w = sol.x.head(nw);
  out.c = sol.x.segment(cc, m);
  out.r = sol.x.segment(rc, m);
  out.quadratic = out.w.dot(r_real * out.w);
  out.objective = out.quadratic + alpha * p.dot(out.c) + beta * q.dot(out.r);
  out.kkt_residual = sol.kkt_residual();
  out.iterations = sol.iterations;
  return out;
}

std::pair<RVector, RVector> update_reweights(const RVector& c, const RVector& r,
                                             const SelectorConfig& cfg) {
  auto curve = [&](const RVector& v) {
    RVector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double x = std::clamp(v[i], 0.0, 1.0);
      out[i] = (1.0 - x) / (1.0 - std::exp(-cfg.beta0 * x) + cfg.epsilon) -
               std::pow(x, cfg.alpha0) / cfg.epsilon;
    }
    return out;
  };
  return {curve(c), curve(r)};
}

namespace {

// Indices sorted by decreasing value; ties keep the lower index first.
IndexList order_desc(const RVector& v) {
  IndexList idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] > v[b]; });
  return idx;
}

bool greedy_receive(const IndexList& tx, const RVector& r, int num_selected, bool isolation,
                    IndexList& rx) {
  const int m = static_cast<int>(r.size());
  std::vector<int> t(m, 0), taken(m, 0);
  for (int i : tx) t[i] = 1;
  rx.clear();
  for (int j : order_desc(r)) {
    if (static_cast<int>(rx.size()) == num_selected) break;
    if (t[j]) continue;
    bool ok = true;
    if (isolation) {
      taken[j] = 1;
      for (int i = std::max(0, j - 1); i <= std::min(m - 1, j + 1) && ok; ++i) {
        int row = t[i] + taken[i];
        if (i > 0) row += taken[i - 1];
        if (i + 1 < m) row += taken[i + 1];
        ok = row <= 1;
      }
      if (!ok) taken[j] = 0;
    }
    if (ok) {
      taken[j] = 1;
      rx.push_back(j);
    }
  }
  std::sort(rx.begin(), rx.end());
  return static_cast<int>(rx.size()) == num_selected;
}

template <typename Fn>
void for_each_combination(int n, int k, Fn&& fn) {
  IndexList comb(k);
  std::iota(comb.begin(), comb.end(), 0);
  if (k > n) return;
  while (true) {
    if (!fn(comb)) return;
    int i = k - 1;
    while (i >= 0 && comb[i] == n - k + i) --i;
    if (i < 0) return;
    ++comb[i];
    for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
  }
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

}  // namespace

namespace {

// Feasible pairs from the `count` transmit sets with the largest sum of c,
// each completed by the greedy receive pass.
std::vector<Subarray> rounding_candidates(const RVector& c, const RVector& r, int num_selected,
                                          bool isolation, int count) {
  std::vector<std::pair<double, IndexList>> sets;
  for_each_combination(static_cast<int>(c.size()), num_selected, [&](const IndexList& comb) {
    double score = 0.0;
    for (int i : comb) score += c[i];
    sets.emplace_back(score, comb);
    return true;
  });
  std::stable_sort(sets.begin(), sets.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<Subarray> out;
  IndexList rx;
  for (const auto& [score, tx] : sets) {
    if (static_cast<int>(out.size()) == count) break;
    if (greedy_receive(tx, r, num_selected, isolation, rx)) out.push_back({tx, rx});
  }
  return out;
}

}  // namespace

Subarray round_selection(const RVector& c, const RVector& r, int num_selected, bool isolation,
                         bool* used_fallback) {
  const int m = static_cast<int>(c.size());
  if (used_fallback) *used_fallback = false;
  IndexList tx = order_desc(c);
  tx.resize(num_selected);
  std::sort(tx.begin(), tx.end());
  IndexList rx;
  if (greedy_receive(tx, r, num_selected, isolation, rx)) return {tx, rx};

  if (used_fallback) *used_fallback = true;
  std::vector<std::pair<double, IndexList>> candidates;
  for_each_combination(m, num_selected, [&](const IndexList& comb) {
    double score = 0.0;
    for (int i : comb) score += c[i];
    candidates.emplace_back(score, comb);
    return true;
  });
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [score, cand] : candidates)
    if (greedy_receive(cand, r, num_selected, isolation, rx)) return {cand, rx};
  throw InfeasibleError("no binary transmit/receive pair satisfies the constraints");
}

CVector embed_weights(const CVector& w, const Subarray& sub, int num_antennas) {
  const IndexList idx = sub.virtual_indices(num_antennas);
  if (w.size() != static_cast<Eigen::Index>(idx.size()))
    throw DomainError("weight length does not match subarray");
  CVector out = CVector::Zero(num_antennas * num_antennas);
  for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = w[static_cast<Eigen::Index>(k)];
  return out;
}

double selection_merit(const CMatrix& r_virtual, const CVector& b_virtual, const Subarray& sub,
                       int num_antennas, const LoadingOptions& loading) {
  const IndexList idx = sub.virtual_indices(num_antennas);
  const CMatrix rs = load_if_ill_conditioned(restrict(r_virtual, idx), loading);
  const CVector bs = restrict(b_virtual, idx);
  Eigen::LLT<CMatrix> llt(rs);
  if (llt.info() != Eigen::Success) throw NumericalError("subarray covariance is not positive definite");
  return bs.dot(llt.solve(bs)).real();
}

Subarray refine_selection(const CMatrix& r_virtual, const CVector& b_virtual, Subarray start,
                          int num_antennas, bool isolation, const LoadingOptions& loading,
                          int* swaps) {
  const int m = num_antennas;
  const int n = static_cast<int>(start.tx.size());
  if (!is_feasible_pair(m, start, n, isolation))
    throw DomainError("refinement needs a feasible starting pair");
  Subarray best = std::move(start);
  double best_merit = selection_merit(r_virtual, b_virtual, best, m, loading);
  int moves = 0;
  while (true) {
    Subarray cand_best;
    double cand_merit = best_merit;
    auto consider = [&](Subarray cand) {
      std::sort(cand.tx.begin(), cand.tx.end());
      std::sort(cand.rx.begin(), cand.rx.end());
      if (!is_feasible_pair(m, cand, n, isolation)) return;
      const double merit = selection_merit(r_virtual, b_virtual, cand, m, loading);
      if (merit > cand_merit * (1.0 + 1e-12)) {
        cand_merit = merit;
        cand_best = std::move(cand);
      }
    };
    // Moves of one or two antennas in any role; isolation often blocks
    // single moves.
    auto slot = [&](Subarray& s, int k) -> int& { return k < n ? s.tx[k] : s.rx[k - n]; };
    for (int k1 = 0; k1 < 2 * n; ++k1)
      for (int to1 = 0; to1 < m; ++to1) {
        Subarray one = best;
        slot(one, k1) = to1;
        consider(one);
        for (int k2 = k1 + 1; k2 < 2 * n; ++k2)
          for (int to2 = 0; to2 < m; ++to2) {
            Subarray two = one;
            slot(two, k2) = to2;
            consider(two);
          }
      }
    if (cand_best.tx.empty()) break;
    best = std::move(cand_best);
    best_merit = cand_merit;
    ++moves;
  }
  if (swaps) *swaps = moves;
  return best;
}

SelectionOutcome select_transceiver(const CMatrix& r_virtual, const ArrayGeometry& geom,
                                    double look_angle_deg, const SelectorConfig& cfg) {
  cfg.validate();
  const int m = geom.size();
  if (r_virtual.rows() != geom.virtual_size() || r_virtual.cols() != geom.virtual_size())
    throw DomainError("selection needs the full M^2 x M^2 virtual covariance");
  check_selection_feasible(m, cfg.num_selected, cfg.isolation);

  const CMatrix loaded = load_if_ill_conditioned(r_virtual, cfg.loading);
  const CVector b = virtual_steering(geom, look_angle_deg);
  const RMatrix r_real = realify(loaded);
  const RVector b_real = realify(b);
  const GroupMasks masks = build_group_masks(m);

  SelectionOutcome out;
  RVector p = RVector::Zero(m), q = RVector::Zero(m);
  SubproblemResult sub;
  std::vector<Subarray> pocket;
  auto is_binary = [&](const RVector& v) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) worst = std::max(worst, std::min(v[i], 1.0 - v[i]));
    return worst < cfg.binary_tol;
  };
  for (int k = 0; k < cfg.max_outer_iters; ++k) {
    sub = solve_subproblem(r_real, b_real, masks, p, q, cfg);
    out.objective_history.push_back(sub.objective);
    out.outer_iterations = k + 1;
    if (cfg.refine) {
      for (Subarray& s : rounding_candidates(sub.c, sub.r, cfg.num_selected, cfg.isolation,
                                             cfg.refine_starts))
        if (std::find(pocket.begin(), pocket.end(), s) == pocket.end()) pocket.push_back(std::move(s));
    }
    if (is_binary(sub.c) && is_binary(sub.r)) {
      out.converged_binary = true;
      break;
    }
    std::tie(p, q) = update_reweights(sub.c, sub.r, cfg);
  }
  out.relaxed = {sub.c, sub.r, false};
  out.rounded =
      round_selection(sub.c, sub.r, cfg.num_selected, cfg.isolation, &out.rounding_fallback);

  Subarray chosen = out.rounded;
  if (cfg.refine) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Subarray& start : pocket) {
      int swaps = 0;
      Subarray s = refine_selection(r_virtual, b, start, m, cfg.isolation, cfg.loading, &swaps);
      const double merit = selection_merit(r_virtual, b, s, m, cfg.loading);
      if (merit > best) {
        best = merit;
        chosen = std::move(s);
        out.refinement_swaps = swaps;
      }
    }
  }
  out.selection = SelectionPair::from_subarray(m, chosen);

  const IndexList idx = chosen.virtual_indices(m);
  const CMatrix r_sel = load_if_ill_conditioned(restrict(r_virtual, idx), cfg.loading);
  out.beam = capon_weights(r_sel, restrict(b, idx), look_angle_deg, cfg.loading);
  out.final_quadratic = out.beam.weights.dot(r_sel * out.beam.weights).real();
  return out;
}

std::vector<Subarray> enumerate_feasible_pairs(int num_antennas, int num_selected,
                                               bool isolation, long max_pairs) {
  const double bound = binomial(num_antennas, num_selected) *
                       binomial(num_antennas - num_selected, num_selected);
  if (bound > static_cast<double>(max_pairs))
    throw CombinatorialLimitError("enumeration of " + std::to_string(static_cast<long>(bound)) +
                                  " candidate pairs exceeds the limit of " +
                                  std::to_string(max_pairs));
  std::vector<Subarray> out;
  for_each_combination(num_antennas, num_selected, [&](const IndexList& tx) {
    IndexList rest;
    for (int k = 0; k < num_antennas; ++k)
      if (!std::binary_search(tx.begin(), tx.end(), k)) rest.push_back(k);
    for_each_combination(static_cast<int>(rest.size()), num_selected, [&](const IndexList& pick) {
      Subarray s{tx, {}};
      for (int i : pick) s.rx.push_back(rest[i]);
      if (is_feasible_pair(num_antennas, s, num_selected, isolation)) out.push_back(std::move(s));
      return true;
    });
    return true;
  });
  return out;
}

namespace {

template <typename Score>
OracleResult search(int num_antennas, int num_selected, bool isolation, long max_pairs,
                    Score&& score) {
  const auto pairs = enumerate_feasible_pairs(num_antennas, num_selected, isolation, max_pairs);
  if (pairs.empty()) throw InfeasibleError("no feasible transmit/receive pair to enumerate");
  OracleResult best;
  best.best_sinr_db = -std::numeric_limits<double>::infinity();
  const Subarray* arg = nullptr;
  for (const auto& s : pairs) {
    const double v = score(s);
    ++best.pairs_evaluated;
    if (arg == nullptr || v > best.best_sinr_db) {
      best.best_sinr_db = v;
      arg = &s;
    }
  }
  best.best = SelectionPair::from_subarray(num_antennas, *arg);
  return best;
}

}  // namespace

OracleResult brute_force_oracle(const ArrayGeometry& geom, const Scenario& scenario,
                                int num_selected, bool isolation, long max_pairs) {
  scenario.validate();
  const int m = geom.size();
  const CMatrix rin = interference_noise_covariance(geom, scenario);
  const CVector b = virtual_steering(geom, scenario.target().angle_deg);
  const double s2 = scenario.signal_power;
  const double sig = s2 * s2 * scenario.source_variance(scenario.target());
  return search(m, num_selected, isolation, max_pairs, [&](const Subarray& s) {
    const IndexList idx = s.virtual_indices(m);
    const CVector bs = restrict(b, idx);
    Eigen::LLT<CMatrix> llt(restrict(rin, idx));
    const double merit = bs.dot(llt.solve(bs)).real();
    return sig > 0.0 ? to_db(sig * merit) : -std::numeric_limits<double>::infinity();
  });
}

OracleResult brute_force_oracle(const CMatrix& r_virtual, const ArrayGeometry& geom,
                                double look_angle_deg, int num_selected, bool isolation,
                                long max_pairs) {
  const int m = geom.size();
  const CVector b = virtual_steering(geom, look_angle_deg);
  return search(m, num_selected, isolation, max_pairs, [&](const Subarray& s) {
    const IndexList idx = s.virtual_indices(m);
    const CVector bs = restrict(b, idx);
    Eigen::LLT<CMatrix> llt(load_if_ill_conditioned(restrict(r_virtual, idx)));
    return to_db(bs.dot(llt.solve(bs)).real());
  });
}

}  // namespace cogmimo
