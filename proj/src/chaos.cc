#include "sgeit/chaos.h"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "sgeit/error.h"

namespace sgeit {

namespace {

std::uint64_t hash_terms(std::span<const IndexTerm> terms) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& t : terms) {
    h = (h ^ static_cast<std::uint64_t>(t.dim)) * 1099511628211ull;
    h = (h ^ static_cast<std::uint64_t>(t.degree)) * 1099511628211ull;
  }
  return h;
}

bool same_terms(std::span<const IndexTerm> a, std::span<const IndexTerm> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].dim != b[i].dim || a[i].degree != b[i].degree) return false;
  return true;
}

// Compositions of `remaining` into the dimensions pos..P-1, larger leading
// components first.
void enumerate(int pos, int dimension, int remaining, std::vector<IndexTerm>& prefix,
               const std::function<void(const std::vector<IndexTerm>&)>& emit) {
  if (pos == dimension - 1) {
    if (remaining > 0) prefix.push_back({pos, remaining});
    emit(prefix);
    if (remaining > 0) prefix.pop_back();
    return;
  }
  for (int v = remaining; v >= 0; --v) {
    if (v > 0) prefix.push_back({pos, v});
    enumerate(pos + 1, dimension, remaining - v, prefix, emit);
    if (v > 0) prefix.pop_back();
  }
}

}  // namespace

void legendre_eval(int max_degree, double y, std::span<double> values,
                   std::span<double> derivatives) {
  // Orthonormal recurrence: y L_n = c_{n} L_{n+1} + c_{n-1} L_{n-1}, c_n = legendre_coupling(n).
  values[0] = 1.0 / std::sqrt(2.0);
  derivatives[0] = 0.0;
  if (max_degree == 0) return;
  values[1] = std::sqrt(1.5) * y;
  derivatives[1] = std::sqrt(1.5);
  for (int n = 1; n < max_degree; ++n) {
    const double next = legendre_coupling(n);
    const double prev = legendre_coupling(n - 1);
    values[n + 1] = (y * values[n] - prev * values[n - 1]) / next;
    derivatives[n + 1] = (values[n] + y * derivatives[n] - prev * derivatives[n - 1]) / next;
  }
}

LegendreValues legendre_eval(int max_degree, double y) {
  if (max_degree < 0) throw InputError("Legendre degree must be non-negative");
  LegendreValues out;
  out.values.resize(max_degree + 1);
  out.derivatives.resize(max_degree + 1);
  legendre_eval(max_degree, y, out.values, out.derivatives);
  return out;
}

double legendre_coupling(int m) {
  const double d = static_cast<double>(m);
  return (d + 1.0) / std::sqrt((2.0 * d + 1.0) * (2.0 * d + 3.0));
}

std::optional<std::size_t> binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  // Running value C(n - k + i, i) stays an integer at every step.
  unsigned __int128 value = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    value = value * (n - k + i) / i;
    if (value > cap) return std::nullopt;
  }
  return static_cast<std::size_t>(value);
}

MultiIndexSet::MultiIndexSet(int dimension, int order, std::vector<std::vector<int>> indices) {
  const MultiIndexSet canonical = iso_td(dimension, order);
  if (indices.size() != canonical.size())
    throw InputError("index set has " + std::to_string(indices.size()) +
                     " entries, expected binomial(P+Q, Q) = " +
                     std::to_string(canonical.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] != canonical.index(i))
      throw InputError("index set entry " + std::to_string(i) +
                       " is out of the canonical total-degree order");
  }
  *this = canonical;
}

void MultiIndexSet::add(std::vector<IndexTerm> terms) {
  const std::size_t position = size();
  lookup_[hash_terms(terms)].push_back(position);
  terms_.insert(terms_.end(), terms.begin(), terms.end());
  sparse_offsets_.push_back(terms_.size());
}

std::vector<int> MultiIndexSet::index(std::size_t i) const {
  std::vector<int> dense(dimension_, 0);
  for (const auto& t : terms(i)) dense[t.dim] = t.degree;
  return dense;
}

int MultiIndexSet::total_degree(std::size_t i) const {
  int d = 0;
  for (const auto& t : terms(i)) d += t.degree;
  return d;
}

std::optional<std::size_t> MultiIndexSet::find(std::span<const IndexTerm> terms) const {
  auto it = lookup_.find(hash_terms(terms));
  if (it == lookup_.end()) return std::nullopt;
  for (std::size_t candidate : it->second)
    if (same_terms(this->terms(candidate), terms)) return candidate;
  return std::nullopt;
}

std::optional<std::size_t> MultiIndexSet::raise(std::size_t i, int k) const {
  if (total_degree(i) >= order_) return std::nullopt;
  std::vector<IndexTerm> raised;
  bool placed = false;
  for (const auto& t : terms(i)) {
    if (!placed && t.dim == k) {
      raised.push_back({k, t.degree + 1});
      placed = true;
      continue;
    }
    if (!placed && t.dim > k) {
      raised.push_back({k, 1});
      placed = true;
    }
    raised.push_back(t);
  }
  if (!placed) raised.push_back({k, 1});
  return find(raised);
}

MultiIndexSet iso_td(int dimension, int order, std::size_t cap) {
  if (dimension < 1) throw InputError("index set dimension must be at least 1");
  if (order < 0) throw InputError("total degree must be non-negative");
  const auto count = binomial_capped(static_cast<std::size_t>(dimension + order),
                                     static_cast<std::size_t>(order), cap);
  if (!count)
    throw InputError("index set cardinality binomial(" + std::to_string(dimension + order) +
                     ", " + std::to_string(order) + ") exceeds the cap of " +
                     std::to_string(cap));

  MultiIndexSet set;
  set.dimension_ = dimension;
  set.order_ = order;
  set.lookup_.reserve(*count);
  std::vector<IndexTerm> prefix;
  for (int degree = 0; degree <= order; ++degree)
    enumerate(0, dimension, degree, prefix,
              [&](const std::vector<IndexTerm>& terms) { set.add(terms); });
  return set;
}

MomentMatrices moment_matrices(const MultiIndexSet& indices) {
  const int P = indices.dimension();
  const auto n = static_cast<Eigen::Index>(indices.size());
  MomentMatrices out;
  out.G.reserve(P + 1);

  SparseMatrix identity(n, n);
  identity.setIdentity();
  out.G.push_back(std::move(identity));

  std::vector<std::vector<Eigen::Triplet<double>>> triplets(P);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto dense = indices.index(i);
    for (int k = 0; k < P; ++k) {
      const auto j = indices.raise(i, k);
      if (!j) continue;
      const double value = legendre_coupling(dense[k]);
      const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(*j);
      triplets[k].emplace_back(a, b, value);
      triplets[k].emplace_back(b, a, value);
    }
  }
  for (int k = 0; k < P; ++k) {
    SparseMatrix g(n, n);
    g.setFromTriplets(triplets[k].begin(), triplets[k].end());
    out.G.push_back(std::move(g));
  }
  return out;
}

}  // namespace sgeit
