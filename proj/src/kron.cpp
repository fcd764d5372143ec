#include "flowgp/kron.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace flowgp {

namespace {

std::string num_str(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// Shared driver for kron-structured products and solves.  Walks the factors
// from last (fastest-varying index) to first; each pass reshapes the running
// vector column-major so the active factor's index is the row index, applies
// the factor to every column at once, and stores the transpose so the next
// factor's index rotates into place.  After the first factor's pass the
// result is laid out with factor 0 slowest, matching the input convention.
template <typename ApplyFn>
Eigen::VectorXd kron_apply(const std::vector<Eigen::MatrixXd>& factors,
                           const Eigen::Ref<const Eigen::VectorXd>& v,
                           const char* op, ApplyFn&& apply) {
  if (factors.empty()) {
    throw ShapeError(std::string(op) + ": factor list is empty");
  }
  Eigen::Index expected = 1;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (factors[i].rows() < 1 || factors[i].cols() < 1) {
      throw ShapeError(std::string(op) + ": factor " + std::to_string(i) +
                       " is empty");
    }
    expected *= factors[i].cols();
  }
  if (v.size() != expected) {
    throw ShapeError(std::string(op) + ": vector length " +
                     std::to_string(v.size()) +
                     " does not match the product of factor columns " +
                     std::to_string(expected));
  }
  Eigen::VectorXd cur = v;
  for (std::size_t k = factors.size(); k-- > 0;) {
    const Eigen::MatrixXd& f = factors[k];
    const Eigen::Index cols = cur.size() / f.cols();
    Eigen::Map<const Eigen::MatrixXd> u(cur.data(), f.cols(), cols);
    Eigen::MatrixXd zt = apply(f, u).transpose();
    cur = Eigen::Map<Eigen::VectorXd>(zt.data(), zt.size());
  }
  return cur;
}

void require_square(const std::vector<Eigen::MatrixXd>& factors,
                    const char* op) {
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (factors[i].rows() != factors[i].cols()) {
      throw ShapeError(std::string(op) + ": factor " + std::to_string(i) +
                       " is " + std::to_string(factors[i].rows()) + "x" +
                       std::to_string(factors[i].cols()) +
                       ", expected square");
    }
  }
}

}  // namespace

KronMatrix::KronMatrix(std::vector<Eigen::MatrixXd> factors)
    : factors_(std::move(factors)) {
  if (factors_.empty()) {
    throw ShapeError("KronMatrix: factor list is empty");
  }
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const Eigen::MatrixXd& f = factors_[i];
    if (f.rows() != f.cols() || f.rows() < 1) {
      throw ShapeError("KronMatrix: factor " + std::to_string(i) + " is " +
                       std::to_string(f.rows()) + "x" +
                       std::to_string(f.cols()) + ", expected square");
    }
    if (!f.allFinite()) {
      throw NumericError("KronMatrix: factor " + std::to_string(i) +
                         " has non-finite entries");
    }
    const double scale = f.cwiseAbs().maxCoeff();
    const double asym = (f - f.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale) {
      throw ShapeError("KronMatrix: factor " + std::to_string(i) +
                       " is asymmetric, |A - A^T|_max = " + num_str(asym) +
                       " against scale " + num_str(scale));
    }
  }
}

Eigen::Index KronMatrix::total_side() const {
  Eigen::Index side = 1;
  for (const auto& f : factors_) side *= f.rows();
  return side;
}

Eigen::VectorXd EigenFactorization::joint_values() const {
  return kron_vector(values);
}

std::vector<Eigen::MatrixXd> EigenFactorization::transposed_vectors() const {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) out.push_back(v.transpose());
  return out;
}

Eigen::VectorXd kron_matvec(const std::vector<Eigen::MatrixXd>& factors,
                            const Eigen::Ref<const Eigen::VectorXd>& v) {
  return kron_apply(factors, v, "kron_matvec",
                    [](const Eigen::MatrixXd& f, const auto& u) {
                      return Eigen::MatrixXd(f * u);
                    });
}

Eigen::VectorXd kron_solve_lower(const std::vector<Eigen::MatrixXd>& factors,
                                 const Eigen::Ref<const Eigen::VectorXd>& v) {
  require_square(factors, "kron_solve_lower");
  return kron_apply(factors, v, "kron_solve_lower",
                    [](const Eigen::MatrixXd& f, const auto& u) {
                      return Eigen::MatrixXd(
                          f.triangularView<Eigen::Lower>().solve(u));
                    });
}

Eigen::VectorXd kron_solve_lower_transposed(
    const std::vector<Eigen::MatrixXd>& factors,
    const Eigen::Ref<const Eigen::VectorXd>& v) {
  require_square(factors, "kron_solve_lower_transposed");
  return kron_apply(
      factors, v, "kron_solve_lower_transposed",
      [](const Eigen::MatrixXd& f, const auto& u) {
        return Eigen::MatrixXd(
            f.transpose().triangularView<Eigen::Upper>().solve(u));
      });
}

EigenFactorization kron_eigendecompose(const KronMatrix& k) {
  EigenFactorization out;
  out.vectors.reserve(k.factors().size());
  out.values.reserve(k.factors().size());
  for (std::size_t i = 0; i < k.factors().size(); ++i) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k.factors()[i]);
    if (es.info() != Eigen::Success) {
      throw NumericError("kron_eigendecompose: factor " + std::to_string(i) +
                         " did not converge");
    }
    Eigen::VectorXd e = es.eigenvalues();  // ascending
    const double magnitude =
        std::max(std::abs(e(0)), std::abs(e(e.size() - 1)));
    if (e(0) < -1e-10 * magnitude) {
      throw NumericError("kron_eigendecompose: factor " + std::to_string(i) +
                         " has eigenvalue " + num_str(e(0)) +
                         " below the PSD tolerance " +
                         num_str(-1e-10 * magnitude));
    }
    out.values.push_back(e.cwiseMax(0.0));
    out.vectors.push_back(es.eigenvectors());
  }
  return out;
}

LowerTriangular cholesky_with_jitter(const Eigen::Ref<const Eigen::MatrixXd>& m,
                                     const JitterPolicy& policy) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw ShapeError("cholesky_with_jitter: matrix is " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                     ", expected square");
  }
  if (!m.allFinite()) {
    throw NumericError("cholesky_with_jitter: matrix has non-finite entries");
  }
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    throw ShapeError("cholesky_with_jitter: matrix is asymmetric, |A - A^T|_max = " +
                     num_str(asym) + " against scale " + num_str(scale));
  }
  const double mean_diag = m.diagonal().mean();
  double jitter = 0.0;
  while (true) {
    Eigen::MatrixXd a = m;
    if (jitter > 0.0) a.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd L = llt.matrixL();
      if (L.allFinite() && L.diagonal().minCoeff() > 0.0) {
        return {std::move(L), jitter};
      }
    }
    const double next =
        (jitter == 0.0) ? policy.initial * mean_diag : jitter * policy.growth;
    if (!(next > jitter) || next > policy.maximum * mean_diag * (1.0 + 1e-12)) {
      throw NumericError(
          "cholesky_with_jitter: factorization failed; final jitter attempted " +
          num_str(jitter));
    }
    jitter = next;
  }
}

double kron_trace(const std::vector<Eigen::MatrixXd>& factors) {
  if (factors.empty()) {
    throw ShapeError("kron_trace: factor list is empty");
  }
  require_square(factors, "kron_trace");
  double t = 1.0;
  for (const auto& f : factors) t *= f.trace();
  return t;
}

Eigen::VectorXd kron_vector(const std::vector<Eigen::VectorXd>& parts) {
  if (parts.empty()) {
    throw ShapeError("kron_vector: part list is empty");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Ones(1);
  for (const auto& p : parts) {
    if (p.size() < 1) throw ShapeError("kron_vector: empty part");
    Eigen::VectorXd next(out.size() * p.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      next.segment(i * p.size(), p.size()) = out(i) * p;
    }
    out = std::move(next);
  }
  return out;
}

Eigen::MatrixXd kron_dense(const std::vector<Eigen::MatrixXd>& factors) {
  if (factors.empty()) {
    throw ShapeError("kron_dense: factor list is empty");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Ones(1, 1);
  for (const auto& f : factors) {
    Eigen::MatrixXd next(out.rows() * f.rows(), out.cols() * f.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      for (Eigen::Index j = 0; j < out.cols(); ++j) {
        next.block(i * f.rows(), j * f.cols(), f.rows(), f.cols()) =
            out(i, j) * f;
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace flowgp
