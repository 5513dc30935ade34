#include "sgeit/ilu0.h"

namespace sgeit {

void Ilu0::factor(Eigen::SparseMatrix<double, Eigen::RowMajor> matrix) {
  matrix.makeCompressed();
  lu_ = std::move(matrix);
  const int n = static_cast<int>(lu_.rows());
  const int* outer = lu_.outerIndexPtr();
  const int* inner = lu_.innerIndexPtr();
  double* value = lu_.valuePtr();

  diagonal_.assign(n, -1);
  for (int i = 0; i < n; ++i)
    for (int p = outer[i]; p < outer[i + 1]; ++p)
      if (inner[p] == i) diagonal_[i] = p;

  info_ = Eigen::Success;
  std::vector<int> position(n, -1);
  for (int i = 0; i < n; ++i) {
    if (diagonal_[i] < 0) {
      info_ = Eigen::NumericalIssue;
      return;
    }
    for (int p = outer[i]; p < outer[i + 1]; ++p) position[inner[p]] = p;
    for (int p = outer[i]; p < outer[i + 1] && inner[p] < i; ++p) {
      const int k = inner[p];
      value[p] /= value[diagonal_[k]];
      const double factor = value[p];
      for (int q = diagonal_[k] + 1; q < outer[k + 1]; ++q) {
        const int target = position[inner[q]];
        if (target >= 0) value[target] -= factor * value[q];
      }
    }
    for (int p = outer[i]; p < outer[i + 1]; ++p) position[inner[p]] = -1;
    if (value[diagonal_[i]] == 0.0) {
      info_ = Eigen::NumericalIssue;
      return;
    }
  }
}

void Ilu0::apply(Vector& x) const {
  const int n = static_cast<int>(lu_.rows());
  const int* outer = lu_.outerIndexPtr();
  const int* inner = lu_.innerIndexPtr();
  const double* value = lu_.valuePtr();
  for (int i = 0; i < n; ++i) {
    double s = x[i];
    for (int p = outer[i]; p < diagonal_[i]; ++p) s -= value[p] * x[inner[p]];
    x[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int p = diagonal_[i] + 1; p < outer[i + 1]; ++p) s -= value[p] * x[inner[p]];
    x[i] = s / value[diagonal_[i]];
  }
}

}  // namespace sgeit
