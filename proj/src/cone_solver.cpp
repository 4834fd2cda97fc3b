// SPDX-License-Identifier: Apache-2.0
#include "cogmimo/cone_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cogmimo/errors.hpp"

namespace cogmimo {

std::string to_string(ConeStatus status) {
  switch (status) {
    case ConeStatus::optimal: return "optimal";
    case ConeStatus::iteration_limit: return "iteration_limit";
    case ConeStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

double ConeSolution::kkt_residual() const {
  return std::max({primal_residual, dual_residual, std::min(gap, relative_gap)});
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ConeLayout {
  int num_linear = 0;
  std::vector<int> dims;
  std::vector<int> offsets;
  int total = 0;
  int degree = 0;

  ConeLayout(int nl, const std::vector<int>& soc) : num_linear(nl), dims(soc) {
    int off = nl;
    for (int d : soc) {
      offsets.push_back(off);
      off += d;
    }
    total = off;
    degree = nl + static_cast<int>(soc.size());
  }
};

// det of a second-order-cone vector, t^2 - ||u||^2, computed as a product to
// keep precision near the boundary.
double soc_det(const Eigen::Ref<const RVector>& v) {
  const double nu = v.tail(v.size() - 1).norm();
  return (v[0] - nu) * (v[0] + nu);
}

double soc_step(const Eigen::Ref<const RVector>& x, const Eigen::Ref<const RVector>& d) {
  const double det = soc_det(x);
  if (!(det > 0.0)) return 0.0;
  const double root = std::sqrt(det);
  const double x0 = x[0] / root;
  const auto x1 = x.tail(x.size() - 1) / root;
  const double d0 = d[0];
  const auto d1 = d.tail(d.size() - 1);
  const double xd = x0 * d0 - x1.dot(d1);
  const double rho0 = xd / root;
  const double factor = (xd + d0) / (x0 + 1.0);
  const double rho1 = (d1 - factor * x1).norm() / root;
  const double sigma = rho1 - rho0;
  return sigma > 0.0 ? 1.0 / sigma : kInf;
}

// Nesterov-Todd scaling W with W z = W^{-1} s = lambda. Linear part is
// diagonal; each second-order cone uses W = beta [[w0, w1'], [w1, I + w1 w1'/(1+w0)]]
// with w'Jw = 1.
struct NtScaling {
  RVector lin;                    // sqrt(s/z)
  std::vector<double> beta;
  std::vector<RVector> wbar;

  void apply(const ConeLayout& cl, const RVector& v, RVector& out, bool inverse) const {
    out.resize(v.size());
    for (int i = 0; i < cl.num_linear; ++i) out[i] = inverse ? v[i] / lin[i] : v[i] * lin[i];
    for (std::size_t k = 0; k < cl.dims.size(); ++k) {
      const int off = cl.offsets[k], dim = cl.dims[k];
      const RVector& w = wbar[k];
      const double w0 = w[0];
      const auto w1 = w.tail(dim - 1);
      const double v0 = v[off];
      const auto v1 = v.segment(off + 1, dim - 1);
      const double sgn = inverse ? -1.0 : 1.0;
      const double scale = inverse ? 1.0 / beta[k] : beta[k];
      const double w1v1 = w1.dot(v1);
      out[off] = scale * (w0 * v0 + sgn * w1v1);
      out.segment(off + 1, dim - 1) = scale * (v1 + (sgn * v0 + w1v1 / (1.0 + w0)) * w1);
    }
  }

  // Dense W^{-1} block for cone k.
  RMatrix inverse_block(int k, int dim) const {
    const RVector& w = wbar[k];
    RMatrix m(dim, dim);
    m(0, 0) = w[0];
    m.block(0, 1, 1, dim - 1) = -w.tail(dim - 1).transpose();
    m.block(1, 0, dim - 1, 1) = -w.tail(dim - 1);
    m.block(1, 1, dim - 1, dim - 1) = RMatrix::Identity(dim - 1, dim - 1) +
                                     w.tail(dim - 1) * w.tail(dim - 1).transpose() / (1.0 + w[0]);
    return m / beta[k];
  }
};

bool compute_scaling(const ConeLayout& cl, const RVector& s, const RVector& z, NtScaling& w,
                     RVector& lambda) {
  w.lin.resize(cl.num_linear);
  lambda.resize(cl.total);
  for (int i = 0; i < cl.num_linear; ++i) {
    if (!(s[i] > 0.0 && z[i] > 0.0)) return false;
    w.lin[i] = std::sqrt(s[i] / z[i]);
    lambda[i] = std::sqrt(s[i] * z[i]);
  }
  w.beta.assign(cl.dims.size(), 1.0);
  w.wbar.assign(cl.dims.size(), RVector());
  for (std::size_t k = 0; k < cl.dims.size(); ++k) {
    const int off = cl.offsets[k], dim = cl.dims[k];
    const auto sk = s.segment(off, dim);
    const auto zk = z.segment(off, dim);
    const double sdet = soc_det(sk), zdet = soc_det(zk);
    if (!(sdet > 0.0 && zdet > 0.0)) return false;
    const RVector sn = sk / std::sqrt(sdet);
    const RVector zn = zk / std::sqrt(zdet);
    const double gamma = std::sqrt((1.0 + sn.dot(zn)) / 2.0);
    RVector wb(dim);
    wb[0] = (sn[0] + zn[0]) / (2.0 * gamma);
    wb.tail(dim - 1) = (sn.tail(dim - 1) - zn.tail(dim - 1)) / (2.0 * gamma);
    w.beta[k] = std::pow(sdet / zdet, 0.25);
    w.wbar[k] = std::move(wb);
  }
  RVector wz;
  w.apply(cl, z, wz, false);
  for (std::size_t k = 0; k < cl.dims.size(); ++k)
    lambda.segment(cl.offsets[k], cl.dims[k]) = wz.segment(cl.offsets[k], cl.dims[k]);
  return true;
}

// Jordan product u o v.
RVector jordan(const ConeLayout& cl, const RVector& u, const RVector& v) {
  RVector out(cl.total);
  out.head(cl.num_linear) = u.head(cl.num_linear).cwiseProduct(v.head(cl.num_linear));
  for (std::size_t k = 0; k < cl.dims.size(); ++k) {
    const int off = cl.offsets[k], dim = cl.dims[k];
    const auto uk = u.segment(off, dim);
    const auto vk = v.segment(off, dim);
    out[off] = uk.dot(vk);
    out.segment(off + 1, dim - 1) = uk[0] * vk.tail(dim - 1) + vk[0] * uk.tail(dim - 1);
  }
  return out;
}

// Solves lambda o x = u for x.
RVector jordan_divide(const ConeLayout& cl, const RVector& lambda, const RVector& u) {
  RVector x(cl.total);
  x.head(cl.num_linear) = u.head(cl.num_linear).cwiseQuotient(lambda.head(cl.num_linear));
  for (std::size_t k = 0; k < cl.dims.size(); ++k) {
    const int off = cl.offsets[k], dim = cl.dims[k];
    const auto l = lambda.segment(off, dim);
    const auto uk = u.segment(off, dim);
    const double l0 = l[0];
    const auto l1 = l.tail(dim - 1);
    const double det = soc_det(l);
    const double x0 = (l0 * uk[0] - l1.dot(uk.tail(dim - 1))) / det;
    x[off] = x0;
    x.segment(off + 1, dim - 1) = (uk.tail(dim - 1) - x0 * l1) / l0;
  }
  return x;
}

RVector identity_element(const ConeLayout& cl) {
  RVector e = RVector::Zero(cl.total);
  e.head(cl.num_linear).setOnes();
  for (int off : cl.offsets) e[off] = 1.0;
  return e;
}

// Shifts v into the interior of K the way CVXOPT initializes its iterates.
void shift_into_cone(const ConeLayout& cl, RVector& v) {
  double alpha = -kInf;
  for (int i = 0; i < cl.num_linear; ++i) alpha = std::max(alpha, -v[i]);
  for (std::size_t k = 0; k < cl.dims.size(); ++k) {
    const auto vk = v.segment(cl.offsets[k], cl.dims[k]);
    alpha = std::max(alpha, vk.tail(vk.size() - 1).norm() - vk[0]);
  }
  if (alpha >= -1e-8 * std::max(1.0, v.norm())) v += (1.0 + std::max(alpha, 0.0)) * identity_element(cl);
}

// Factorization of the reduced Newton system
//   [H A'; A 0],  H = P + G' W^{-2} G.
class NewtonSystem {
 public:
  NewtonSystem(const ConeProgram& prog, const ConeLayout& cl) : prog_(prog), cl_(cl) {
    const int n = static_cast<int>(prog.q.size());
    // Cache, per cone, the columns it touches and a dense copy of its rows.
    for (std::size_t k = 0; k < cl.dims.size(); ++k) {
      const int off = cl.offsets[k], dim = cl.dims[k];
      IndexList cols;
      for (int r = off; r < off + dim; ++r)
        for (SparseRowMatrix::InnerIterator it(prog.G, r); it; ++it)
          cols.push_back(static_cast<int>(it.col()));
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      RMatrix local = RMatrix::Zero(dim, static_cast<Eigen::Index>(cols.size()));
      for (int r = off; r < off + dim; ++r)
        for (SparseRowMatrix::InnerIterator it(prog.G, r); it; ++it) {
          const auto pos = std::lower_bound(cols.begin(), cols.end(), static_cast<int>(it.col())) -
                           cols.begin();
          local(r - off, pos) = it.value();
        }
      cone_cols_.push_back(std::move(cols));
      cone_rows_.push_back(std::move(local));
    }
    base_ = prog.P.size() == 0 ? RMatrix::Zero(n, n) : prog.P;
  }

  bool factor(const NtScaling& w) {
    w_ = &w;
    RMatrix h = base_;
    for (int i = 0; i < cl_.num_linear; ++i) {
      const double inv2 = 1.0 / (w.lin[i] * w.lin[i]);
      for (SparseRowMatrix::InnerIterator a(prog_.G, i); a; ++a)
        for (SparseRowMatrix::InnerIterator c(prog_.G, i); c; ++c)
          h(a.col(), c.col()) += inv2 * a.value() * c.value();
    }
    for (std::size_t k = 0; k < cl_.dims.size(); ++k) {
      const RMatrix scaled = w.inverse_block(static_cast<int>(k), cl_.dims[k]) * cone_rows_[k];
      const RMatrix contrib = scaled.transpose() * scaled;
      const IndexList& cols = cone_cols_[k];
      h(cols, cols) += contrib;
    }
    const double diag_max = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    double reg = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      RMatrix hr = h;
      if (reg > 0.0) hr.diagonal().array() += reg;
      llt_.compute(hr);
      if (llt_.info() == Eigen::Success) break;
      reg = reg == 0.0 ? 1e-14 * diag_max : reg * 100.0;
    }
    if (llt_.info() != Eigen::Success) return false;
    h_ = std::move(h);
    const RMatrix at = RMatrix(prog_.A.transpose());
    hinv_at_ = llt_.solve(at);
    const RMatrix schur = prog_.A * hinv_at_;
    if (schur.size() > 0) {
      schur_.compute(schur);
      if (schur_.info() != Eigen::Success) return false;
    }
    return true;
  }

  // Solves [P A' G'; A 0 0; G 0 -W'W] [dx; dy; dz] = [bx; by; bz].
  void solve(const RVector& bx, const RVector& by, const RVector& bz, RVector& dx, RVector& dy,
             RVector& dz, int refinement) const {
    solve_once(bx, by, bz, dx, dy, dz);
    for (int it = 0; it < refinement; ++it) {
      RVector rx, ry, rz;
      residual(bx, by, bz, dx, dy, dz, rx, ry, rz);
      RVector ex, ey, ez;
      solve_once(rx, ry, rz, ex, ey, ez);
      dx += ex;
      dy += ey;
      dz += ez;
    }
  }

 private:
  void apply_w2(const RVector& v, RVector& out, bool inverse) const {
    RVector tmp;
    w_->apply(cl_, v, tmp, inverse);
    w_->apply(cl_, tmp, out, inverse);
  }

  void solve_once(const RVector& bx, const RVector& by, const RVector& bz, RVector& dx,
                  RVector& dy, RVector& dz) const {
    RVector w2bz;
    apply_w2(bz, w2bz, true);
    const RVector g = bx + prog_.G.transpose() * w2bz;
    const RVector u = llt_.solve(g);
    if (by.size() > 0) {
      dy = schur_.solve(prog_.A * u - by);
      dx = u - hinv_at_ * dy;
    } else {
      dy.resize(0);
      dx = u;
    }
    apply_w2(RVector(prog_.G * dx - bz), dz, true);
  }

  void residual(const RVector& bx, const RVector& by, const RVector& bz, const RVector& dx,
                const RVector& dy, const RVector& dz, RVector& rx, RVector& ry,
                RVector& rz) const {
    rx = bx - prog_.G.transpose() * dz;
    if (prog_.P.size() != 0) rx -= prog_.P * dx;
    if (dy.size() > 0) rx -= prog_.A.transpose() * dy;
    ry = by - prog_.A * dx;
    RVector w2dz;
    apply_w2(dz, w2dz, false);
    rz = bz - (prog_.G * dx - w2dz);
  }

  const ConeProgram& prog_;
  const ConeLayout& cl_;
  const NtScaling* w_ = nullptr;
  std::vector<IndexList> cone_cols_;
  std::vector<RMatrix> cone_rows_;
  RMatrix base_;
  RMatrix h_;
  RMatrix hinv_at_;
  Eigen::LLT<RMatrix> llt_;
  Eigen::LDLT<RMatrix> schur_;
};

}  // namespace

double max_cone_step(const RVector& x, const RVector& d, int num_linear,
                     const std::vector<int>& soc_dims) {
  const ConeLayout cl(num_linear, soc_dims);
  double alpha = kInf;
  for (int i = 0; i < num_linear; ++i)
    if (d[i] < 0.0) alpha = std::min(alpha, -x[i] / d[i]);
  for (std::size_t k = 0; k < cl.dims.size(); ++k)
    alpha = std::min(alpha, soc_step(x.segment(cl.offsets[k], cl.dims[k]),
                                     d.segment(cl.offsets[k], cl.dims[k])));
  return alpha;
}

ConeSolution solve_cone_program(const ConeProgram& prog, const ConeSolverOptions& opts) {
  const ConeLayout cl(prog.num_linear, prog.soc_dims);
  const auto n = prog.q.size();
  if (prog.G.rows() != cl.total || prog.G.cols() != n || prog.h.size() != cl.total)
    throw DomainError("cone program: G/h do not match the cone layout");
  if (prog.A.rows() != prog.b.size() || (prog.A.rows() > 0 && prog.A.cols() != n))
    throw DomainError("cone program: A/b shape mismatch");
  if (prog.P.size() != 0 && (prog.P.rows() != n || prog.P.cols() != n))
    throw DomainError("cone program: P shape mismatch");
  for (int d : prog.soc_dims)
    if (d < 2) throw DomainError("second-order cones need dimension >= 2");

  NewtonSystem kkt(prog, cl);
  ConeSolution sol;
  sol.status = ConeStatus::numerical_failure;

  const double resx0 = std::max(1.0, prog.q.norm());
  const double resy0 = std::max(1.0, prog.b.norm());
  const double resz0 = std::max(1.0, prog.h.norm());

  // Initial point: least-squares slack problem (W = I), then shift into K.
  NtScaling ident;
  ident.lin = RVector::Ones(cl.num_linear);
  ident.beta.assign(cl.dims.size(), 1.0);
  for (int d : cl.dims) {
    RVector e = RVector::Zero(d);
    e[0] = 1.0;
    ident.wbar.push_back(e);
  }
  if (!kkt.factor(ident)) return sol;
  RVector x, y, z;
  kkt.solve(-prog.q, prog.b, prog.h, x, y, z, opts.refinement_steps);
  RVector s = -z;
  shift_into_cone(cl, s);
  shift_into_cone(cl, z);

  // Non-optimal exits report the iterate with the smallest KKT residual; the
  // last iterates near the boundary are often worse than earlier ones.
  ConeSolution best;
  auto give_up = [&](ConeStatus status) {
    best.status = status;
    return best;
  };

  const RVector e = identity_element(cl);
  NtScaling w;
  RVector lambda;

  for (int iter = 0; iter <= opts.max_iterations; ++iter) {
    RVector px = prog.P.size() == 0 ? RVector::Zero(n) : RVector(prog.P * x);
    RVector rx = px + prog.q + prog.G.transpose() * z;
    if (y.size() > 0) rx += prog.A.transpose() * y;
    const RVector ry = prog.A * x - prog.b;
    const RVector rz = prog.G * x + s - prog.h;

    const double pcost = 0.5 * x.dot(px) + prog.q.dot(x);
    const double gap = s.dot(z);
    const double dcost = pcost + y.dot(ry) + z.dot(prog.G * x - prog.h);
    double relgap = kInf;
    if (pcost < 0.0) relgap = gap / -pcost;
    else if (dcost > 0.0) relgap = gap / dcost;
    const double pres = std::max(ry.size() ? ry.norm() / resy0 : 0.0, rz.norm() / resz0);
    const double dres = rx.norm() / resx0;

    sol.x = x;
    sol.y = y;
    sol.z = z;
    sol.s = s;
    sol.iterations = iter;
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.gap = gap;
    sol.relative_gap = relgap;
    sol.primal_objective = pcost;

    if (pres <= opts.feastol && dres <= opts.feastol && (gap <= opts.abstol || relgap <= opts.reltol)) {
      sol.status = ConeStatus::optimal;
      return sol;
    }
    if (best.x.size() == 0 || sol.kkt_residual() < best.kkt_residual()) best = sol;
    if (iter == opts.max_iterations) return give_up(ConeStatus::iteration_limit);

    if (!compute_scaling(cl, s, z, w, lambda) || !kkt.factor(w))
      return give_up(ConeStatus::numerical_failure);
    const double mu = gap / cl.degree;
    const RVector lambda_sq = jordan(cl, lambda, lambda);

    auto newton = [&](const RVector& bs, RVector& dx, RVector& dy, RVector& dz, RVector& ds) {
      RVector w_ls;
      w.apply(cl, jordan_divide(cl, lambda, bs), w_ls, false);
      kkt.solve(-rx, RVector(-ry), RVector(-rz - w_ls), dx, dy, dz, opts.refinement_steps);
      RVector w2dz, tmp;
      w.apply(cl, dz, tmp, false);
      w.apply(cl, tmp, w2dz, false);
      ds = w_ls - w2dz;
    };
    auto scaled_step = [&](const RVector& ds, const RVector& dz, RVector& ds_t, RVector& dz_t) {
      w.apply(cl, ds, ds_t, true);
      w.apply(cl, dz, dz_t, false);
      return std::min(max_cone_step(lambda, ds_t, cl.num_linear, cl.dims),
                      max_cone_step(lambda, dz_t, cl.num_linear, cl.dims));
    };

    // Predictor.
    RVector dxa, dya, dza, dsa, dsa_t, dza_t;
    newton(-lambda_sq, dxa, dya, dza, dsa);
    const double alpha_aff = std::min(1.0, scaled_step(dsa, dza, dsa_t, dza_t));
    const double sigma = std::pow(std::clamp(1.0 - alpha_aff, 0.0, 1.0), 3.0);

    // Corrector.
    RVector dx, dy, dz, ds, ds_t, dz_t;
    const RVector bs = -lambda_sq - jordan(cl, dsa_t, dza_t) + sigma * mu * e;
    newton(bs, dx, dy, dz, ds);
    const double alpha_max = scaled_step(ds, dz, ds_t, dz_t);
    const double alpha = std::min(1.0, opts.step_fraction * alpha_max);
    if (!(alpha > 0.0) || !dx.allFinite()) return give_up(ConeStatus::numerical_failure);
    x += alpha * dx;
    if (y.size() > 0) y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
  }
  return sol;
}

}  // namespace cogmimo
