#include "synlik/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "synlik/errors.hpp"

namespace synlik::linalg {

Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index n = a.cols();
  if (a.rows() != b.size()) throw InputError("nnls: dimension mismatch");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (n == 0) return x;

  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() *
                     a.cwiseAbs().colwise().sum().maxCoeff() *
                     static_cast<double>(std::max(a.rows(), n));
  Eigen::VectorXd w = a.transpose() * (b - a * x);

  auto solve_passive = [&](Eigen::VectorXd& s) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
    Eigen::VectorXd sp = ap.colPivHouseholderQr().solve(b);
    s.setZero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) s(idx[k]) = sp(static_cast<Eigen::Index>(k));
  };

  const int max_outer = static_cast<int>(3 * n + 10);
  for (int outer = 0; outer < max_outer; ++outer) {
    Eigen::Index t = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best) {
        best = w(j);
        t = j;
      }
    }
    if (t < 0) break;
    passive[static_cast<std::size_t>(t)] = true;

    Eigen::VectorXd s;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      solve_passive(s);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) feasible = false;
      if (feasible) break;
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) {
          const double denom = x(j) - s(j);
          if (denom > 0.0) alpha = std::min(alpha, x(j) / denom);
        }
      }
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
    }
    for (Eigen::Index j = 0; j < n; ++j) x(j) = passive[static_cast<std::size_t>(j)] ? s(j) : 0.0;
    w = a.transpose() * (b - a * x);
  }
  return x;
}

Eigen::VectorXd bounded_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                      const std::vector<bool>& nonnegative) {
  const Eigen::Index n = a.cols();
  if (static_cast<Eigen::Index>(nonnegative.size()) != n)
    throw InputError("bounded_least_squares: constraint mask has wrong length");
  Eigen::Index n_free = 0;
  for (bool nn : nonnegative) n_free += nn ? 0 : 1;

  // x_free = p - q with p, q >= 0.
  Eigen::MatrixXd split(a.rows(), n + n_free);
  split.leftCols(n) = a;
  Eigen::Index col = n;
  for (Eigen::Index j = 0; j < n; ++j)
    if (!nonnegative[static_cast<std::size_t>(j)]) split.col(col++) = -a.col(j);

  const Eigen::VectorXd z = nnls(split, b);
  Eigen::VectorXd x = z.head(n);
  col = n;
  for (Eigen::Index j = 0; j < n; ++j)
    if (!nonnegative[static_cast<std::size_t>(j)]) x(j) -= z(col++);
  return x;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

bool is_psd(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  if (!m.allFinite()) return false;
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (asym > 1e-9 * scale) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

Eigen::MatrixXd ridged_inverse(const Eigen::MatrixXd& m, double ridge_scale, bool* ridged) {
  const Eigen::MatrixXd sym = symmetrize(m);
  const Eigen::Index n = sym.rows();
  if (ridged) *ridged = false;
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) {
    // Cholesky can succeed on numerically singular input; check conditioning.
    const double dmin = llt.matrixL().toDenseMatrix().diagonal().minCoeff();
    const double dmax = llt.matrixL().toDenseMatrix().diagonal().maxCoeff();
    if (dmin > 1e-7 * dmax) return llt.solve(Eigen::MatrixXd::Identity(n, n));
  }
  if (ridged) *ridged = true;
  double trace = sym.trace();
  if (!(trace > 0.0)) trace = static_cast<double>(n);
  const double ridge = ridge_scale * trace / static_cast<double>(n);
  Eigen::MatrixXd reg = sym;
  reg.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt2(reg);
  if (llt2.info() == Eigen::Success) return llt2.solve(Eigen::MatrixXd::Identity(n, n));
  return pseudo_inverse_symmetric(reg);
}

Eigen::MatrixXd pseudo_inverse_symmetric(const Eigen::MatrixXd& m, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m));
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cutoff = rel_tol * std::max(ev.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  Eigen::VectorXd inv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) inv(i) = std::abs(ev(i)) > cutoff ? 1.0 / ev(i) : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

double log_det_spd(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("matrix is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace synlik::linalg
