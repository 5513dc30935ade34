#ifndef SGEIT_CHAOS_H_
#define SGEIT_CHAOS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "sgeit/fem.h"

namespace sgeit {

/// Values and derivatives of the Legendre polynomials L_0..L_n normalized so
/// that the integral of L_k L_l over [-1, 1] is the Kronecker delta.
struct LegendreValues {
  std::vector<double> values;
  std::vector<double> derivatives;
};

LegendreValues legendre_eval(int max_degree, double y);

/// Span-based variant for hot loops; both outputs need max_degree + 1 slots.
void legendre_eval(int max_degree, double y, std::span<double> values,
                   std::span<double> derivatives);

/// Integral of y L_m(y) L_{m+1}(y) over [-1, 1], the only nonzero off-diagonal
/// entry of multiplication by y in the orthonormal basis.
double legendre_coupling(int m);

/// Binomial coefficient, or nullopt when it exceeds `cap`.
std::optional<std::size_t> binomial_capped(std::size_t n, std::size_t k, std::size_t cap);

/// One nonzero component of a multi-index: dimension `dim` (0-based) has degree `degree`.
struct IndexTerm {
  int dim;
  int degree;
};

/// Total-degree multi-index set in graded order: by total degree, and within a
/// degree lexicographically with larger leading components first. The zero
/// multi-index is entry 0.
class MultiIndexSet {
 public:
  MultiIndexSet() = default;
  /// Takes explicit indices; throws InputError unless they are exactly the
  /// total-degree set of (dimension, order) in the canonical order.
  MultiIndexSet(int dimension, int order, std::vector<std::vector<int>> indices);

  int dimension() const { return dimension_; }
  int order() const { return order_; }
  std::size_t size() const { return sparse_offsets_.empty() ? 0 : sparse_offsets_.size() - 1; }

  /// Dense components of entry i.
  std::vector<int> index(std::size_t i) const;
  /// Nonzero components of entry i, sorted by dimension.
  std::span<const IndexTerm> terms(std::size_t i) const {
    return {terms_.data() + sparse_offsets_[i], sparse_offsets_[i + 1] - sparse_offsets_[i]};
  }
  int total_degree(std::size_t i) const;
  std::optional<std::size_t> find(std::span<const IndexTerm> terms) const;
  /// Position of `i` with dimension k raised by one, if it lies in the set.
  std::optional<std::size_t> raise(std::size_t i, int k) const;

 private:
  friend MultiIndexSet iso_td(int, int, std::size_t);
  void add(std::vector<IndexTerm> terms);

  int dimension_ = 0;
  int order_ = 0;
  std::vector<IndexTerm> terms_;
  std::vector<std::size_t> sparse_offsets_{0};
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> lookup_;
};

inline constexpr std::size_t kDefaultIndexCap = 50'000'000;

/// All multi-indices of total degree at most `order` in `dimension` variables.
MultiIndexSet iso_td(int dimension, int order, std::size_t cap = kDefaultIndexCap);

/// G_0 .. G_P with (G_k)_{mu,mu'} the integral of y_k L_mu L_mu' over the
/// hypercube (G_0 is the identity).
struct MomentMatrices {
  std::vector<SparseMatrix> G;

  int dimension() const { return static_cast<int>(G.size()) - 1; }
  int size() const { return G.empty() ? 0 : static_cast<int>(G[0].rows()); }
};

MomentMatrices moment_matrices(const MultiIndexSet& indices);

}  // namespace sgeit

#endif  // SGEIT_CHAOS_H_
