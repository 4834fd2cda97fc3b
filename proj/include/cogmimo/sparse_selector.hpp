// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "cogmimo/beamformer.hpp"
#include "cogmimo/core_model.hpp"
#include "cogmimo/types.hpp"

namespace cogmimo {

struct SelectorConfig {
  int num_selected = 4;  // N antennas per side
  /// Trade-off weights on p'c and q'r. Unset means 0.1 * trace(R~) / (2 M^2).
  std::optional<double> alpha;
  std::optional<double> beta;
  double alpha0 = 1.0;   // reweighting curve shape
  double beta0 = 20.0;
  double epsilon = 1e-3;
  int max_outer_iters = 50;
  double binary_tol = 1e-2;
  double subproblem_tol = 1e-6;
  bool isolation = true;
  /// Keep the best rounded outer iterate and polish it by single-antenna
  /// swaps scored by b^H R^-1 b. Off gives the plain reweighted result.
  bool refine = true;
  int refine_starts = 4;  // transmit sets per iterate, by decreasing sum of c
  LoadingOptions loading;

  void validate() const;
};

/// Real-lift coordinates (of the 2 M^2 vector [Re w; Im w]) tied to each
/// physical antenna. Transmit antenna i owns virtual column {p*M + i}, receive
/// antenna j owns virtual row {j*M + q}; each list includes the imaginary twins.
struct GroupMasks {
  int num_antennas = 0;
  std::vector<IndexList> transmit;
  std::vector<IndexList> receive;
};

GroupMasks build_group_masks(int num_antennas);

/// Relaxed or binary transmit (c) and receive (r) activations.
struct SelectionPair {
  RVector c;
  RVector r;
  bool binary = false;

  static SelectionPair from_subarray(int num_antennas, const Subarray& sub);
  IndexList transmit() const;  // indices with activation > 1/2
  IndexList receive() const;
  Subarray subarray() const { return {transmit(), receive()}; }
};

/// Largest violation of the isolation rows
///   c_i + r_{i-1} + r_i + r_{i+1} <= 1   (neighbours clipped at the ends).
double isolation_violation(const RVector& c, const RVector& r);

/// True when the binary pair has N per side, disjoint sets and no isolation
/// violation (when `isolation` is set).
bool is_feasible_pair(int num_antennas, const Subarray& sub, int num_selected, bool isolation);

/// Throws InfeasibleError (with Farkas multipliers on the isolation rows)
/// when no relaxed (c, r) can satisfy box, cardinality and isolation.
void check_selection_feasible(int num_antennas, int num_selected, bool isolation);

struct SubproblemResult {
  RVector w;  // real-lifted weights, length 2 M^2
  RVector c;
  RVector r;
  double objective = 0.0;  // w'Rw + alpha p'c + beta q'r
  double quadratic = 0.0;  // w'Rw
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// One convex reweighted mixed l2,1 program over (w, c, r).
SubproblemResult solve_subproblem(const RMatrix& r_real, const RVector& b_real,
                                  const GroupMasks& masks, const RVector& p, const RVector& q,
                                  const SelectorConfig& cfg);

/// Reweighting p_i = (1 - c_i) / (1 - exp(-beta0 c_i) + eps) - c_i^alpha0 / eps,
/// and the same for q from r. Rewards activation 1, punishes activation 0.
std::pair<RVector, RVector> update_reweights(const RVector& c, const RVector& r,
                                             const SelectorConfig& cfg);

struct SelectionOutcome {
  SelectionPair selection;  // binary
  SelectionPair relaxed;    // last relaxed iterate
  BeamformerSolution beam;  // Capon weights on the selected virtual subarray
  int outer_iterations = 0;
  bool converged_binary = false;
  bool rounding_fallback = false;
  Subarray rounded;       // rounding of the last relaxed iterate
  int refinement_swaps = 0;
  double final_quadratic = 0.0;  // w'R w of `beam` on the (loaded) covariance
  std::vector<double> objective_history;
};

/// Full reweighted selection on the M^2 x M^2 virtual covariance, followed by
/// rounding and exact Capon weights on the selected subarray.
SelectionOutcome select_transceiver(const CMatrix& r_virtual, const ArrayGeometry& geom,
                                    double look_angle_deg, const SelectorConfig& cfg);

/// Binary rounding: top-N of c as transmit, then the highest r entries that
/// keep the pair feasible. Falls back to other transmit sets in order of
/// decreasing sum of c when the greedy receive pass fails.
Subarray round_selection(const RVector& c, const RVector& r, int num_selected, bool isolation,
                         bool* used_fallback = nullptr);

/// b^H R_s^-1 b on the selected virtual subarray (after loading); the
/// selection merit, monotone in output SINR when R includes the target.
double selection_merit(const CMatrix& r_virtual, const CVector& b_virtual, const Subarray& sub,
                       int num_antennas, const LoadingOptions& loading = {});

/// Best-improvement local search over single transmit or receive moves that
/// keep the pair feasible. Returns the local optimum; `swaps` counts moves.
Subarray refine_selection(const CMatrix& r_virtual, const CVector& b_virtual, Subarray start,
                          int num_antennas, bool isolation, const LoadingOptions& loading = {},
                          int* swaps = nullptr);

/// All feasible binary pairs, transmit sets and receive sets in lexicographic order.
std::vector<Subarray> enumerate_feasible_pairs(int num_antennas, int num_selected,
                                               bool isolation, long max_pairs = 1'000'000);

struct OracleResult {
  SelectionPair best;
  double best_sinr_db = 0.0;
  long pairs_evaluated = 0;
};

/// Exhaustive search for the feasible pair with the highest analytic output SINR.
OracleResult brute_force_oracle(const ArrayGeometry& geom, const Scenario& scenario,
                                int num_selected, bool isolation = true,
                                long max_pairs = 1'000'000);

/// Same search scored by b^H R^-1 b on an arbitrary covariance (e.g. a sensed one).
OracleResult brute_force_oracle(const CMatrix& r_virtual, const ArrayGeometry& geom,
                                double look_angle_deg, int num_selected, bool isolation = true,
                                long max_pairs = 1'000'000);

/// Places subarray weights at their virtual indices in a length-M^2 vector.
CVector embed_weights(const CVector& w, const Subarray& sub, int num_antennas);

}  // namespace cogmimo
