#ifndef SGEIT_ILU0_H_
#define SGEIT_ILU0_H_

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace sgeit {

/// Zero-fill incomplete LU factorization usable as an Eigen iterative-solver
/// preconditioner. L (unit diagonal) and U share the sparsity pattern of the
/// input matrix.
class Ilu0 {
 public:
  using Scalar = double;
  using StorageIndex = int;
  using Vector = Eigen::VectorXd;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  Ilu0() = default;
  template <typename MatrixType>
  explicit Ilu0(const MatrixType& matrix) { compute(matrix); }

  template <typename MatrixType>
  Ilu0& analyzePattern(const MatrixType&) { return *this; }
  template <typename MatrixType>
  Ilu0& factorize(const MatrixType& matrix) { return compute(matrix); }
  template <typename MatrixType>
  Ilu0& compute(const MatrixType& matrix) {
    factor(Eigen::SparseMatrix<double, Eigen::RowMajor>(matrix));
    return *this;
  }

  Eigen::Index rows() const { return lu_.rows(); }
  Eigen::Index cols() const { return lu_.cols(); }

  template <typename Rhs>
  Vector solve(const Rhs& b) const {
    Vector x = b;
    apply(x);
    return x;
  }

  Eigen::ComputationInfo info() const { return info_; }

 private:
  void factor(Eigen::SparseMatrix<double, Eigen::RowMajor> matrix);
  void apply(Vector& x) const;

  Eigen::SparseMatrix<double, Eigen::RowMajor> lu_;
  std::vector<int> diagonal_;
  Eigen::ComputationInfo info_ = Eigen::Success;
};

}  // namespace sgeit

#endif  // SGEIT_ILU0_H_
