#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <utility>
#include <vector>

namespace pqflex {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/**
 * Smooth nonlinear program
 *
 *   min f(x)  s.t.  c(x) = 0,  d(x) >= 0,  lower <= x <= upper.
 *
 * Bounds may be infinite. Hessians are returned as the lower triangle of
 * sigma * H_f - sum_i y_i H_ci - sum_j z_j H_dj.
 */
class NlpProblem {
 public:
  virtual ~NlpProblem() = default;

  virtual int num_variables() const = 0;
  virtual int num_equalities() const = 0;
  virtual int num_inequalities() const = 0;
  virtual const Vector& lower_bounds() const = 0;
  virtual const Vector& upper_bounds() const = 0;
  virtual Vector initial_point() const = 0;

  virtual double objective(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual Vector equalities(const Vector& x) const = 0;
  virtual Vector inequalities(const Vector& x) const = 0;
  virtual SparseMatrix equality_jacobian(const Vector& x) const = 0;
  virtual SparseMatrix inequality_jacobian(const Vector& x) const = 0;
  virtual SparseMatrix lagrangian_hessian(const Vector& x, double sigma, const Vector& y,
                                          const Vector& z) const = 0;
};

/// coef * x[i] * x[j]; i == j gives a square term.
struct QuadTerm {
  int i = 0;
  int j = 0;
  double coef = 0.0;
};

/// Polynomial of degree <= 2 in sparse form.
struct QuadForm {
  std::vector<QuadTerm> quad;
  std::vector<std::pair<int, double>> linear;
  double constant = 0.0;

  double eval(const Vector& x) const;
  /// g += scale * gradient at x.
  void add_gradient(const Vector& x, double scale, Vector& g) const;
  /// Appends scale * Hessian entries (lower triangle) to `out`.
  void add_hessian(double scale, std::vector<Triplet>& out) const;
};

/// NlpProblem whose objective and constraints are all QuadForms, so every
/// Hessian is constant in x.
class QuadraticModel : public NlpProblem {
 public:
  Vector lower;
  Vector upper;
  Vector start;
  QuadForm objective_form;
  std::vector<QuadForm> equality_rows;
  std::vector<QuadForm> inequality_rows;

  int num_variables() const override { return static_cast<int>(lower.size()); }
  int num_equalities() const override { return static_cast<int>(equality_rows.size()); }
  int num_inequalities() const override { return static_cast<int>(inequality_rows.size()); }
  const Vector& lower_bounds() const override { return lower; }
  const Vector& upper_bounds() const override { return upper; }
  Vector initial_point() const override { return start; }

  double objective(const Vector& x) const override { return objective_form.eval(x); }
  Vector gradient(const Vector& x) const override;
  Vector equalities(const Vector& x) const override;
  Vector inequalities(const Vector& x) const override;
  SparseMatrix equality_jacobian(const Vector& x) const override;
  SparseMatrix inequality_jacobian(const Vector& x) const override;
  SparseMatrix lagrangian_hessian(const Vector& x, double sigma, const Vector& y, const Vector& z) const override;

  /// Resizes bounds/start to n variables (bounds infinite, start zero).
  void resize(int n);
};

}  // namespace pqflex
