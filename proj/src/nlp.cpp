#include "pqflex/nlp.hpp"

#include <limits>

namespace pqflex {

double QuadForm::eval(const Vector& x) const {
  double v = constant;
  for (const auto& [i, a] : linear) v += a * x[i];
  for (const auto& t : quad) v += t.coef * x[t.i] * x[t.j];
  return v;
}

void QuadForm::add_gradient(const Vector& x, double scale, Vector& g) const {
  for (const auto& [i, a] : linear) g[i] += scale * a;
  for (const auto& t : quad) {
    if (t.i == t.j) {
      g[t.i] += scale * 2.0 * t.coef * x[t.i];
    } else {
      g[t.i] += scale * t.coef * x[t.j];
      g[t.j] += scale * t.coef * x[t.i];
    }
  }
}

void QuadForm::add_hessian(double scale, std::vector<Triplet>& out) const {
  for (const auto& t : quad) {
    if (t.i == t.j) {
      out.emplace_back(t.i, t.i, scale * 2.0 * t.coef);
    } else {
      out.emplace_back(std::max(t.i, t.j), std::min(t.i, t.j), scale * t.coef);
    }
  }
}

namespace {

Vector eval_rows(const std::vector<QuadForm>& rows, const Vector& x) {
  Vector v(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) v[static_cast<Eigen::Index>(r)] = rows[r].eval(x);
  return v;
}

SparseMatrix jacobian_rows(const std::vector<QuadForm>& rows, const Vector& x) {
  std::vector<Triplet> t;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int row = static_cast<int>(r);
    for (const auto& [i, a] : rows[r].linear) t.emplace_back(row, i, a);
    for (const auto& q : rows[r].quad) {
      if (q.i == q.j) {
        t.emplace_back(row, q.i, 2.0 * q.coef * x[q.i]);
      } else {
        t.emplace_back(row, q.i, q.coef * x[q.j]);
        t.emplace_back(row, q.j, q.coef * x[q.i]);
      }
    }
  }
  SparseMatrix J(static_cast<Eigen::Index>(rows.size()), x.size());
  J.setFromTriplets(t.begin(), t.end());
  return J;
}

}  // namespace

void QuadraticModel::resize(int n) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  lower = Vector::Constant(n, -inf);
  upper = Vector::Constant(n, inf);
  start = Vector::Zero(n);
}

Vector QuadraticModel::gradient(const Vector& x) const {
  Vector g = Vector::Zero(x.size());
  objective_form.add_gradient(x, 1.0, g);
  return g;
}

Vector QuadraticModel::equalities(const Vector& x) const { return eval_rows(equality_rows, x); }
Vector QuadraticModel::inequalities(const Vector& x) const { return eval_rows(inequality_rows, x); }
SparseMatrix QuadraticModel::equality_jacobian(const Vector& x) const { return jacobian_rows(equality_rows, x); }
SparseMatrix QuadraticModel::inequality_jacobian(const Vector& x) const { return jacobian_rows(inequality_rows, x); }

SparseMatrix QuadraticModel::lagrangian_hessian(const Vector& x, double sigma, const Vector& y,
                                                const Vector& z) const {
  std::vector<Triplet> t;
  objective_form.add_hessian(sigma, t);
  for (std::size_t r = 0; r < equality_rows.size(); ++r) equality_rows[r].add_hessian(-y[static_cast<Eigen::Index>(r)], t);
  for (std::size_t r = 0; r < inequality_rows.size(); ++r)
    inequality_rows[r].add_hessian(-z[static_cast<Eigen::Index>(r)], t);
  SparseMatrix H(x.size(), x.size());
  H.setFromTriplets(t.begin(), t.end());
  return H;
}

}  // namespace pqflex
