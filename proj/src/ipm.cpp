#include "pqflex/ipm.hpp"

#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace pqflex {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal:
      return "Optimal";
    case SolveStatus::Infeasible:
      return "Infeasible";
    case SolveStatus::IterLimit:
      return "IterLimit";
    case SolveStatus::NumericFailure:
      return "NumericFailure";
  }
  return "?";
}

double KktReport::overall() const {
  return std::max({stationarity, primal_equality, primal_inequality, complementarity});
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kScaleMax = 100.0;  // multiplier scaling threshold for the optimality error
constexpr double kGradMax = 100.0;   // objective gradient scaling threshold
constexpr double kRowMax = 100.0;    // constraint gradient scaling threshold

// The problem with variable bounds turned into explicit rows: fixed variables
// become equalities, finite bounds become one-sided inequalities.
class Augmented {
 public:
  Augmented(const NlpProblem& p, double relax) : p_(p) {
    n_ = p.num_variables();
    me0_ = p.num_equalities();
    mi0_ = p.num_inequalities();
    const Vector& l = p.lower_bounds();
    const Vector& u = p.upper_bounds();
    for (int i = 0; i < n_; ++i) {
      const bool fl = std::isfinite(l[i]);
      const bool fu = std::isfinite(u[i]);
      if (fl && fu && u[i] - l[i] <= 1e-12 * std::max(1.0, std::abs(l[i]))) {
        fixed_.push_back(i);
        fixed_val_.push_back(0.5 * (l[i] + u[i]));
        continue;
      }
      if (fl) {
        lower_.push_back(i);
        lower_val_.push_back(l[i] - relax * std::max(1.0, std::abs(l[i])));
      }
      if (fu) {
        upper_.push_back(i);
        upper_val_.push_back(u[i] + relax * std::max(1.0, std::abs(u[i])));
      }
    }
    // Rows with large gradients at the initial point are scaled down to kRowMax.
    const Vector x0 = p.initial_point();
    row_scale_e_ = row_scales(p.equality_jacobian(x0), me0_);
    row_scale_i_ = row_scales(p.inequality_jacobian(x0), mi0_);
  }

  int n() const { return n_; }
  int me() const { return me0_ + static_cast<int>(fixed_.size()); }
  int mi() const { return mi0_ + static_cast<int>(lower_.size() + upper_.size()); }
  int me0() const { return me0_; }
  int mi0() const { return mi0_; }
  const NlpProblem& problem() const { return p_; }

  Vector eq(const Vector& x) const {
    Vector c(me());
    c.head(me0_) = row_scale_e_.cwiseProduct(p_.equalities(x));
    for (std::size_t k = 0; k < fixed_.size(); ++k) c[me0_ + static_cast<int>(k)] = x[fixed_[k]] - fixed_val_[k];
    return c;
  }

  Vector ineq(const Vector& x) const {
    Vector d(mi());
    d.head(mi0_) = row_scale_i_.cwiseProduct(p_.inequalities(x));
    int r = mi0_;
    for (std::size_t k = 0; k < lower_.size(); ++k) d[r++] = x[lower_[k]] - lower_val_[k];
    for (std::size_t k = 0; k < upper_.size(); ++k) d[r++] = upper_val_[k] - x[upper_[k]];
    return d;
  }

  SparseMatrix eq_jac(const Vector& x) const {
    std::vector<Triplet> t;
    append(row_scale_e_.asDiagonal() * p_.equality_jacobian(x), t);
    for (std::size_t k = 0; k < fixed_.size(); ++k) t.emplace_back(me0_ + static_cast<int>(k), fixed_[k], 1.0);
    SparseMatrix J(me(), n_);
    J.setFromTriplets(t.begin(), t.end());
    return J;
  }

  SparseMatrix ineq_jac(const Vector& x) const {
    std::vector<Triplet> t;
    append(row_scale_i_.asDiagonal() * p_.inequality_jacobian(x), t);
    int r = mi0_;
    for (int i : lower_) t.emplace_back(r++, i, 1.0);
    for (int i : upper_) t.emplace_back(r++, i, -1.0);
    SparseMatrix J(mi(), n_);
    J.setFromTriplets(t.begin(), t.end());
    return J;
  }

  /// Hessian of the Lagrangian in the scaled rows; y and z may include the bound rows.
  SparseMatrix hessian(const Vector& x, double sigma, const Vector& y, const Vector& z) const {
    return p_.lagrangian_hessian(x, sigma, row_scale_e_.cwiseProduct(y.head(me0_)),
                                 row_scale_i_.cwiseProduct(z.head(mi0_)));
  }

  // Moves x strictly inside its bounds (fixed variables are set exactly).
  void push(Vector& x, double kappa) const {
    const Vector& l = p_.lower_bounds();
    const Vector& u = p_.upper_bounds();
    for (std::size_t k = 0; k < fixed_.size(); ++k) x[fixed_[k]] = fixed_val_[k];
    for (int i = 0; i < n_; ++i) {
      if (std::find(fixed_.begin(), fixed_.end(), i) != fixed_.end()) continue;
      const bool fl = std::isfinite(l[i]);
      const bool fu = std::isfinite(u[i]);
      double pl = kappa * std::max(1.0, std::abs(l[i]));
      double pu = kappa * std::max(1.0, std::abs(u[i]));
      if (fl && fu) {
        pl = std::min(pl, 0.01 * (u[i] - l[i]));
        pu = std::min(pu, 0.01 * (u[i] - l[i]));
      }
      if (fl) x[i] = std::max(x[i], l[i] + pl);
      if (fu) x[i] = std::min(x[i], u[i] - pu);
    }
  }

 private:
  static Vector row_scales(const SparseMatrix& J, int rows) {
    Vector g = Vector::Zero(rows);
    for (int k = 0; k < J.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(J, k); it; ++it)
        g[it.row()] = std::max(g[it.row()], std::abs(it.value()));
    Vector scale(rows);
    for (int r = 0; r < rows; ++r) scale[r] = g[r] > kRowMax ? kRowMax / g[r] : 1.0;
    return scale;
  }

  static void append(const SparseMatrix& m, std::vector<Triplet>& t) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  }

  const NlpProblem& p_;
  int n_ = 0, me0_ = 0, mi0_ = 0;
  std::vector<int> fixed_, lower_, upper_;
  std::vector<double> fixed_val_, lower_val_, upper_val_;
  Vector row_scale_e_, row_scale_i_;
};

// min rho * sum(elastic) + zeta/2 * ||D (x - x_ref)||^2
// s.t. c(x) - pos + neg = 0, d(x) + relax >= 0, original bounds on x.
class ElasticProblem : public NlpProblem {
 public:
  ElasticProblem(const NlpProblem& p, Vector x_ref, double zeta, double rho)
      : p_(p), x_ref_(std::move(x_ref)), zeta_(zeta), rho_(rho) {
    n_ = p.num_variables();
    me_ = p.num_equalities();
    mi_ = p.num_inequalities();
    const int total = n_ + 2 * me_ + mi_;
    lower_ = Vector::Zero(total);
    upper_ = Vector::Constant(total, kInf);
    lower_.head(n_) = p.lower_bounds();
    upper_.head(n_) = p.upper_bounds();
    weight_ = Vector(n_);
    for (int i = 0; i < n_; ++i) weight_[i] = std::min(1.0, 1.0 / std::max(std::abs(x_ref_[i]), 1e-12));
  }

  int num_variables() const override { return n_ + 2 * me_ + mi_; }
  int num_equalities() const override { return me_; }
  int num_inequalities() const override { return mi_; }
  const Vector& lower_bounds() const override { return lower_; }
  const Vector& upper_bounds() const override { return upper_; }

  Vector initial_point() const override {
    Vector v = Vector::Zero(num_variables());
    v.head(n_) = x_ref_;
    const Vector c = p_.equalities(x_ref_);
    const Vector d = p_.inequalities(x_ref_);
    for (int r = 0; r < me_; ++r) {
      v[n_ + r] = std::max(c[r], 0.0) + 1e-4;
      v[n_ + me_ + r] = std::max(-c[r], 0.0) + 1e-4;
    }
    for (int r = 0; r < mi_; ++r) v[n_ + 2 * me_ + r] = std::max(-d[r], 0.0) + 1e-4;
    return v;
  }

  double objective(const Vector& v) const override {
    const Vector dx = weight_.cwiseProduct(v.head(n_) - x_ref_);
    return rho_ * v.tail(2 * me_ + mi_).sum() + 0.5 * zeta_ * dx.squaredNorm();
  }

  Vector gradient(const Vector& v) const override {
    Vector g = Vector::Constant(num_variables(), rho_);
    g.head(n_) = zeta_ * weight_.cwiseProduct(weight_).cwiseProduct(v.head(n_) - x_ref_);
    return g;
  }

  Vector equalities(const Vector& v) const override {
    return p_.equalities(v.head(n_)) - v.segment(n_, me_) + v.segment(n_ + me_, me_);
  }

  Vector inequalities(const Vector& v) const override { return p_.inequalities(v.head(n_)) + v.tail(mi_); }

  SparseMatrix equality_jacobian(const Vector& v) const override {
    std::vector<Triplet> t;
    const SparseMatrix J = p_.equality_jacobian(v.head(n_));
    for (int k = 0; k < J.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(J, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int r = 0; r < me_; ++r) {
      t.emplace_back(r, n_ + r, -1.0);
      t.emplace_back(r, n_ + me_ + r, 1.0);
    }
    SparseMatrix out(me_, num_variables());
    out.setFromTriplets(t.begin(), t.end());
    return out;
  }

  SparseMatrix inequality_jacobian(const Vector& v) const override {
    std::vector<Triplet> t;
    const SparseMatrix J = p_.inequality_jacobian(v.head(n_));
    for (int k = 0; k < J.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(J, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int r = 0; r < mi_; ++r) t.emplace_back(r, n_ + 2 * me_ + r, 1.0);
    SparseMatrix out(mi_, num_variables());
    out.setFromTriplets(t.begin(), t.end());
    return out;
  }

  SparseMatrix lagrangian_hessian(const Vector& v, double sigma, const Vector& y, const Vector& z) const override {
    const SparseMatrix H = p_.lagrangian_hessian(v.head(n_), 0.0, y, z);
    std::vector<Triplet> t;
    for (int k = 0; k < H.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(H, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < n_; ++i) t.emplace_back(i, i, sigma * zeta_ * weight_[i] * weight_[i]);
    SparseMatrix out(num_variables(), num_variables());
    out.setFromTriplets(t.begin(), t.end());
    return out;
  }

 private:
  const NlpProblem& p_;
  Vector x_ref_;
  double zeta_;
  double rho_;
  int n_ = 0, me_ = 0, mi_ = 0;
  Vector lower_, upper_, weight_;
};

struct Errors {
  double dual = 0.0;
  double primal = 0.0;
  double comp = 0.0;
  double overall() const { return std::max({dual, primal, comp}); }
};

double norm_inf(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

Errors optimality(const Vector& grad, const SparseMatrix& Ae, const SparseMatrix& Ai, const Vector& c, const Vector& d,
                  const Vector& y, const Vector& z, const Vector& s, double mu) {
  const double me = static_cast<double>(y.size());
  const double mi = static_cast<double>(z.size());
  const double mult = (y.lpNorm<1>() + z.lpNorm<1>()) / std::max(1.0, me + mi);
  const double s_d = std::max(kScaleMax, mult) / kScaleMax;
  const double s_c = std::max(kScaleMax, z.lpNorm<1>() / std::max(1.0, mi)) / kScaleMax;
  Errors e;
  Vector rd = grad;
  if (y.size()) rd -= Ae.transpose() * y;
  if (z.size()) rd -= Ai.transpose() * z;
  e.dual = norm_inf(rd) / s_d;
  e.primal = std::max(norm_inf(c), norm_inf(d - s));
  e.comp = z.size() ? norm_inf((s.cwiseProduct(z).array() - mu).matrix()) / s_c : 0.0;
  return e;
}

class InteriorPoint {
 public:
  InteriorPoint(const NlpProblem& problem, const SolverSettings& settings, bool allow_restoration)
      : aug_(problem, settings.bound_relax), st_(settings), allow_restoration_(allow_restoration) {}

  NlpSolution run(Vector x, double mu_init) {
    const auto t0 = std::chrono::steady_clock::now();
    NlpSolution sol = iterate(std::move(x), mu_init);
    sol.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sol;
  }

 private:
  struct FilterEntry {
    double theta;
    double phi;
  };

  NlpSolution iterate(Vector x, double mu) {
    const int n = aug_.n(), me = aug_.me(), mi = aug_.mi();
    aug_.push(x, st_.bound_push);
    const NlpProblem& p = aug_.problem();

    {
      const double gmax = norm_inf(p.gradient(x));
      sigma_ = gmax > kGradMax ? kGradMax / gmax : 1.0;
    }
    Vector s = aug_.ineq(x).cwiseMax(st_.bound_push);
    Vector z = Vector::Ones(mi);
    Vector y = Vector::Zero(me);
    const double mu_min = st_.tol_kkt / 10.0;

    std::vector<FilterEntry> filter;
    double theta_max = -1.0, theta_min = -1.0;
    double delta_w_last = 0.0;
    int restorations = 0;
    int total_iters = 0;
    NlpSolution out;

    for (int iter = 0;; ++iter) {
      const Vector grad = sigma_ * p.gradient(x);
      const Vector c = aug_.eq(x);
      const Vector d = aug_.ineq(x);
      if (!grad.allFinite() || !c.allFinite() || !d.allFinite())
        return finish(NlpSolution{}, SolveStatus::NumericFailure, x, y, z, s, total_iters, restorations,
                      fmt::format("non-finite evaluation at iteration {}", iter));
      const SparseMatrix Ae = aug_.eq_jac(x);
      const SparseMatrix Ai = aug_.ineq_jac(x);
      const double theta = c.lpNorm<1>() + (d - s).lpNorm<1>();
      if (theta_max < 0.0) {
        theta_max = 1e4 * std::max(1.0, theta);
        theta_min = 1e-4 * std::max(1.0, theta);
      }

      Errors e0 = optimality(grad, Ae, Ai, c, d, y, z, s, 0.0);
      if (st_.verbose)
        std::fprintf(stderr, "iter %3d  mu %.2e  dual %.2e  primal %.2e  comp %.2e  obj %.8e\n", iter, mu, e0.dual,
                     e0.primal, e0.comp, p.objective(x));
      if (e0.overall() <= st_.tol_kkt) {
        out.kkt_residual = e0.overall();
        return finish(std::move(out), SolveStatus::Optimal, x, y, z, s, total_iters, restorations, "converged");
      }
      if (total_iters >= st_.max_iter) {
        out.kkt_residual = e0.overall();
        return finish(std::move(out), SolveStatus::IterLimit, x, y, z, s, total_iters, restorations,
                      "iteration limit");
      }
      ++total_iters;

      // Monotone barrier update.
      while (mu > mu_min && optimality(grad, Ae, Ai, c, d, y, z, s, mu).overall() <= 10.0 * mu) {
        mu = std::max(mu_min, std::min(0.2 * mu, std::pow(mu, 1.5)));
        filter.clear();
      }
      const double tau = std::max(st_.tau_min, 1.0 - mu);

      // Newton system in (dx, -dy) after eliminating slacks and inequality duals.
      const Vector Sigma = z.cwiseQuotient(s);
      const SparseMatrix W = aug_.hessian(x, sigma_, y, z);
      const SparseMatrix AtSA = Ai.transpose() * (Sigma.asDiagonal() * Ai);
      Vector rhs(n + me);
      rhs.head(n) = -grad;
      if (me) rhs.head(n) += Ae.transpose() * y;
      if (mi) rhs.head(n) += Ai.transpose() * (mu * s.cwiseInverse() - Sigma.cwiseProduct(d - s));
      rhs.tail(me) = -c;

      Vector sol_vec;
      double delta_w = 0.0;
      if (!factor_and_solve(W, AtSA, Ae, rhs, delta_w_last, delta_w, sol_vec)) {
        if (!restore(x, s, y, z, mu, filter, restorations, total_iters, out))
          return out;
        theta_max = -1.0;
        continue;
      }
      if (delta_w > 0.0) delta_w_last = delta_w;

      const Vector dx = sol_vec.head(n);
      const Vector dy = -sol_vec.tail(me);
      const Vector ds = Ai * dx + (d - s);
      const Vector dz = mu * s.cwiseInverse() - z - Sigma.cwiseProduct(ds);

      const double alpha_max = boundary_step(s, ds, tau);
      const double alpha_z = boundary_step(z, dz, tau);

      // Filter line search on the barrier problem.
      const double phi = sigma_ * p.objective(x) - mu * s.array().log().sum();
      const double dphi = grad.dot(dx) - mu * ds.cwiseQuotient(s).sum();
      const double s_theta = 1.1, s_phi = 2.3, delta = 1.0;
      double alpha_min = 0.05 * st_.gamma_theta;
      if (dphi < 0.0) {
        alpha_min = 0.05 * std::min({st_.gamma_theta, st_.gamma_phi * theta / -dphi,
                                     delta * std::pow(theta, s_theta) / std::pow(-dphi, s_phi)});
      }
      double alpha = alpha_max;
      bool accepted = false;
      bool armijo_step = false;
      Vector x_trial, s_trial;
      constexpr double eps = std::numeric_limits<double>::epsilon();
      const double noise = 10.0 * eps * std::abs(phi);
      const bool tiny_step =
          (dx.array().abs() / (1.0 + x.array().abs())).maxCoeff() < 10.0 * eps && theta <= theta_min;
      if (tiny_step) {
        x_trial = x + alpha * dx;
        s_trial = s + alpha * ds;
        accepted = armijo_step = true;
      }
      while (!accepted && alpha >= alpha_min) {
        x_trial = x + alpha * dx;
        s_trial = s + alpha * ds;
        const Vector c_t = aug_.eq(x_trial);
        const Vector d_t = aug_.ineq(x_trial);
        const double f_t = p.objective(x_trial);
        if (c_t.allFinite() && d_t.allFinite() && std::isfinite(f_t)) {
          const double theta_t = c_t.lpNorm<1>() + (d_t - s_trial).lpNorm<1>();
          const double phi_t = sigma_ * f_t - mu * s_trial.array().log().sum();
          bool blocked = theta_t > theta_max;
          for (const auto& fe : filter)
            if (theta_t >= fe.theta && phi_t >= fe.phi) blocked = true;
          if (!blocked) {
            const bool switching =
                dphi < 0.0 && alpha * std::pow(-dphi, s_phi) > delta * std::pow(theta, s_theta);
            if (theta <= theta_min && switching) {
              if (phi_t - phi - st_.armijo_eta * alpha * dphi <= noise) {
                accepted = true;
                armijo_step = true;
              }
            } else if (theta_t <= (1.0 - st_.gamma_theta) * theta || phi_t - phi + st_.gamma_phi * theta <= noise) {
              accepted = true;
            }
          }
        }
        if (accepted) break;
        alpha *= st_.backtrack;
      }

      if (!accepted) {
        if (st_.verbose)
          std::fprintf(stderr, "line search failed: alpha_max %.2e alpha_min %.2e theta %.2e dphi %.2e\n", alpha_max,
                       alpha_min, theta, dphi);
        if (!restore(x, s, y, z, mu, filter, restorations, total_iters, out))
          return out;
        theta_max = -1.0;
        continue;
      }
      if (st_.verbose)
        std::fprintf(stderr, "          alpha %.2e  alpha_z %.2e  delta_w %.2e  |dx| %.2e\n", alpha, alpha_z, delta_w,
                     norm_inf(dx));
      if (!armijo_step) filter.push_back({(1.0 - st_.gamma_theta) * theta, phi - st_.gamma_phi * theta});

      x = std::move(x_trial);
      s = std::move(s_trial);
      y += alpha * dy;
      z += alpha_z * dz;
      // Keep z close to mu / s.
      constexpr double kappa_sigma = 1e10;
      for (int i = 0; i < mi; ++i)
        z[i] = std::max(std::min(z[i], kappa_sigma * mu / s[i]), mu / (kappa_sigma * s[i]));
    }
  }

  static double boundary_step(const Vector& v, const Vector& dv, double tau) {
    double alpha = 1.0;
    for (int i = 0; i < v.size(); ++i)
      if (dv[i] < 0.0) alpha = std::min(alpha, -tau * v[i] / dv[i]);
    return alpha;
  }

  bool factor_and_solve(const SparseMatrix& W, const SparseMatrix& AtSA, const SparseMatrix& Ae, const Vector& rhs,
                        double delta_w_last, double& delta_w, Vector& out) {
    const int n = static_cast<int>(W.rows());
    const int me = static_cast<int>(Ae.rows());
    constexpr double delta_c = 1e-10;
    delta_w = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
      std::vector<Triplet> t;
      t.reserve(static_cast<std::size_t>(W.nonZeros() + AtSA.nonZeros() + Ae.nonZeros() + n + me));
      for (int k = 0; k < W.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(W, k); it; ++it)
          if (it.row() >= it.col()) t.emplace_back(it.row(), it.col(), it.value());
      for (int k = 0; k < AtSA.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(AtSA, k); it; ++it)
          if (it.row() >= it.col()) t.emplace_back(it.row(), it.col(), it.value());
      for (int i = 0; i < n; ++i) t.emplace_back(i, i, delta_w);
      for (int k = 0; k < Ae.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(Ae, k); it; ++it) t.emplace_back(n + it.row(), it.col(), it.value());
      for (int i = 0; i < me; ++i) t.emplace_back(n + i, n + i, -delta_c);
      SparseMatrix K(n + me, n + me);
      K.setFromTriplets(t.begin(), t.end());

      if (K.nonZeros() != pattern_nnz_ || K.rows() != pattern_rows_) {
        ldlt_.analyzePattern(K);
        pattern_nnz_ = K.nonZeros();
        pattern_rows_ = K.rows();
      }
      ldlt_.factorize(K);
      bool ok = ldlt_.info() == Eigen::Success;
      if (ok) {
        const Vector& D = ldlt_.vectorD();
        int pos = 0, neg = 0;
        for (int i = 0; i < D.size(); ++i) {
          if (D[i] > 0.0) ++pos;
          else if (D[i] < 0.0) ++neg;
        }
        ok = pos == n && neg == me && D.allFinite();
        if (st_.verbose && !ok) std::fprintf(stderr, "    inertia %d/%d vs %d/%d dw %.1e\n", pos, neg, n, me, delta_w);
      }
      if (ok) {
        out = ldlt_.solve(rhs);
        // Iterative refinement against the factored matrix.
        const auto Kfull = K.selfadjointView<Eigen::Lower>();
        for (int r = 0; r < 3; ++r) {
          const Vector res = rhs - Kfull * out;
          if (norm_inf(res) <= 1e-14 * std::max(1.0, norm_inf(rhs))) break;
          out += ldlt_.solve(res);
        }
        const Vector res = rhs - Kfull * out;
        // Near-singular systems pass the inertia test with tiny pivots; treat a
        // blown-up or unresolved solution like a wrong inertia.
        if (out.allFinite() && norm_inf(out) <= 1e10 * std::max(1.0, norm_inf(rhs)) &&
            norm_inf(res) <= 1e-6 * std::max(1.0, norm_inf(rhs)))
          return true;
        if (st_.verbose) std::fprintf(stderr, "    resid %.2e |out| %.2e dw %.1e\n", norm_inf(res), norm_inf(out), delta_w);
      }
      if (delta_w == 0.0) {
        delta_w = delta_w_last == 0.0 ? 1e-4 : std::max(1e-20, delta_w_last / 3.0);
      } else {
        delta_w *= delta_w_last == 0.0 ? 100.0 : 8.0;
      }
      if (delta_w > 1e40) break;
    }
    return false;
  }

  // Elastic restoration. Returns false (with `out` filled) when the solve must
  // stop; true when the main iteration can resume from the restored point.
  bool restore(Vector& x, Vector& s, Vector& y, Vector& z, double mu, std::vector<FilterEntry>& filter,
               int& restorations, int& total_iters, NlpSolution& out) {
    const NlpProblem& p = aug_.problem();
    auto violation = [&](const Vector& v) {
      return std::max(norm_inf(p.equalities(v)), norm_inf(p.inequalities(v).cwiseMin(0.0)));
    };
    if (!allow_restoration_ || restorations >= st_.max_restorations) {
      const bool infeasible = violation(x) > std::sqrt(st_.tol_kkt);
      out = finish(NlpSolution{}, infeasible ? SolveStatus::Infeasible : SolveStatus::NumericFailure, x, y, z, s,
                   total_iters, restorations,
                   allow_restoration_ ? "restoration limit reached" : "line search failed");
      return false;
    }
    ++restorations;
    ElasticProblem elastic(p, x, std::sqrt(std::max(mu, 1e-12)), 1000.0);
    SolverSettings sub = st_;
    sub.max_iter = std::max(50, st_.max_iter - total_iters);
    InteriorPoint inner(elastic, sub, false);
    const NlpSolution r = inner.run(elastic.initial_point(), std::max(mu, 1e-4));
    total_iters += r.iterations;
    const Vector xr = r.x.head(aug_.n());
    const double v = violation(xr);
    if (r.status != SolveStatus::Optimal || v > std::max(100.0 * st_.tol_kkt, 1e-7)) {
      const bool infeasible = v > std::max(100.0 * st_.tol_kkt, 1e-7);
      out = finish(NlpSolution{}, infeasible ? SolveStatus::Infeasible : SolveStatus::NumericFailure, xr,
                   Vector::Zero(aug_.me()), Vector::Zero(aug_.mi()), aug_.ineq(xr).cwiseMax(1e-12), total_iters,
                   restorations,
                   infeasible ? fmt::format("restoration converged to infeasibility {:.3e}", v)
                              : fmt::format("restoration failed ({})", to_string(r.status)));
      out.infeasibility = v;
      return false;
    }
    x = xr;
    aug_.push(x, 0.0);
    s = aug_.ineq(x).cwiseMax(std::max(mu, 1e-8));
    z = (mu * s.cwiseInverse()).cwiseMax(1e-8);
    y.setZero();
    filter.clear();
    return true;
  }

  NlpSolution finish(NlpSolution sol, SolveStatus status, const Vector& x, const Vector& y, const Vector& z,
                     const Vector& s, int iters, int restorations, std::string message) const {
    const NlpProblem& p = aug_.problem();
    sol.status = status;
    sol.x = x;
    sol.y = y;
    sol.z = z;
    sol.s = s;
    sol.objective = p.objective(x);
    sol.objective_scale = sigma_;
    sol.iterations = iters;
    sol.restorations = restorations;
    sol.message = std::move(message);
    if (status != SolveStatus::Infeasible || sol.infeasibility == 0.0)
      sol.infeasibility = std::max(norm_inf(p.equalities(x)), norm_inf(p.inequalities(x).cwiseMin(0.0)));
    return sol;
  }

  Augmented aug_;
  SolverSettings st_;
  bool allow_restoration_;
  double sigma_ = 1.0;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  Eigen::Index pattern_nnz_ = -1;
  Eigen::Index pattern_rows_ = -1;
};

}  // namespace

NlpSolution solve_nlp(const NlpProblem& problem, const SolverSettings& settings, const std::optional<Vector>& warm_start) {
  if (warm_start && warm_start->size() != problem.num_variables())
    throw std::invalid_argument(
        fmt::format("warm start has {} entries, problem has {}", warm_start->size(), problem.num_variables()));
  InteriorPoint ipm(problem, settings, settings.max_restorations > 0);
  return ipm.run(warm_start ? *warm_start : problem.initial_point(),
                 warm_start ? settings.mu_init_warm : settings.mu_init);
}

KktReport kkt_report(const NlpProblem& problem, const NlpSolution& solution) {
  Augmented aug(problem, SolverSettings{}.bound_relax);
  const Vector& x = solution.x;
  KktReport r;
  const Vector c = aug.eq(x);
  const Vector d = aug.ineq(x);
  const Vector grad = solution.objective_scale * problem.gradient(x);
  const bool have_duals = solution.y.size() == aug.me() && solution.z.size() == aug.mi() && solution.s.size() == aug.mi();
  const Vector y = have_duals ? solution.y : Vector::Zero(aug.me());
  const Vector z = have_duals ? solution.z : Vector::Zero(aug.mi());
  const Vector s = have_duals ? solution.s : d.cwiseMax(0.0);
  const Errors e = optimality(grad, aug.eq_jac(x), aug.ineq_jac(x), c, d, y, z, s, 0.0);
  r.stationarity = e.dual;
  r.primal_equality = norm_inf(c);
  r.primal_inequality = std::max(norm_inf(d - s), norm_inf(d.cwiseMin(0.0)));
  r.complementarity = e.comp;
  return r;
}

}  // namespace pqflex
