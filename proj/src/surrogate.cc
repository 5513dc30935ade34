#include "sgeit/surrogate.h"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "sgeit/error.h"

namespace sgeit {

namespace {

using json = nlohmann::json;

constexpr std::size_t kMagicLength = sizeof(kSurrogateMagic) - 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  return v;
}

json vector_json(std::span<const double> v) { return json(std::vector<double>(v.begin(), v.end())); }

std::vector<double> json_vector(const json& j, std::size_t expected, const char* what) {
  auto v = j.get<std::vector<double>>();
  if (v.size() != expected)
    throw InputError(std::string("surrogate header field '") + what + "' has wrong length");
  return v;
}

}  // namespace

Surrogate::Surrogate(ParameterModel parameters, MultiIndexSet indices,
                     std::vector<Eigen::VectorXd> currents, std::vector<Eigen::VectorXd> beta)
    : parameters_(std::move(parameters)),
      indices_(std::move(indices)),
      currents_(std::move(currents)),
      beta_(std::move(beta)) {
  parameters_.validate();
  const int M = num_electrodes();
  const auto ng = static_cast<Eigen::Index>(indices_.size());
  if (M < 2) throw InputError("surrogate needs at least two electrodes");
  if (indices_.dimension() != dimension())
    throw InputError("index set dimension differs from pixels + electrodes");
  if (currents_.size() != beta_.size() || currents_.empty())
    throw InputError("surrogate needs one coefficient vector per current pattern");
  coefficients_.resize(Eigen::Index{num_patterns()} * (M - 1), ng);
  for (int p = 0; p < num_patterns(); ++p) {
    if (currents_[p].size() != M) throw InputError("current pattern length differs from M");
    if (beta_[p].size() != Eigen::Index{M - 1} * ng)
      throw InputError("coefficient vector of pattern " + std::to_string(p + 1) +
                       " does not hold (M-1) * N_gamma values");
    for (int i = 0; i < M - 1; ++i)
      coefficients_.row(Eigen::Index{p} * (M - 1) + i) = beta_[p].segment(i * ng, ng).transpose();
  }
}

void Surrogate::check_point(std::span<const double> y) const {
  if (static_cast<int>(y.size()) != dimension())
    throw InputError("parameter vector has length " + std::to_string(y.size()) + ", expected " +
                     std::to_string(dimension()));
  static std::atomic<bool> warned{false};
  if (!in_hypercube(y) && !warned.exchange(true))
    std::cerr << "warning: surrogate evaluated outside the parameter hypercube\n";
}

Eigen::VectorXd Surrogate::basis_values(std::span<const double> y) const {
  check_point(y);
  const int Q = order();
  std::vector<double> table(std::size_t(dimension()) * (Q + 1)), scratch(Q + 1);
  for (int k = 0; k < dimension(); ++k) {
    std::span<double> row(table.data() + std::size_t(k) * (Q + 1), Q + 1);
    legendre_eval(Q, y[k], row, scratch);
    for (double& v : row) v *= std::sqrt(2.0);
  }
  Eigen::VectorXd psi(indices_.size());
  for (std::size_t mu = 0; mu < indices_.size(); ++mu) {
    double v = 1.0;
    for (const auto& t : indices_.terms(mu)) v *= table[std::size_t(t.dim) * (Q + 1) + t.degree];
    psi[mu] = v;
  }
  return psi;
}

void Surrogate::expand(const Eigen::VectorXd& w, Eigen::VectorXd& out) const {
  const int M = num_electrodes();
  out.resize(stacked_size());
  for (int p = 0; p < num_patterns(); ++p) {
    double first = 0.0;
    for (int i = 0; i < M - 1; ++i) {
      const double wi = w[p * (M - 1) + i];
      first += wi;
      out[p * M + i + 1] = -wi;
    }
    out[p * M] = first;
  }
}

void Surrogate::evaluate(std::span<const double> y, Eigen::VectorXd& stacked,
                         Eigen::MatrixXd* jacobian) const {
  check_point(y);
  const int Q = order();
  const int P = dimension();
  const int M = num_electrodes();
  const double root2 = std::sqrt(2.0);
  std::vector<double> values(std::size_t(P) * (Q + 1)), derivs(std::size_t(P) * (Q + 1));
  for (int k = 0; k < P; ++k) {
    std::span<double> v(values.data() + std::size_t(k) * (Q + 1), Q + 1);
    std::span<double> d(derivs.data() + std::size_t(k) * (Q + 1), Q + 1);
    legendre_eval(Q, y[k], v, d);
    for (int q = 0; q <= Q; ++q) {
      v[q] *= root2;
      d[q] *= root2;
    }
  }
  auto value_at = [&](const IndexTerm& t) { return values[std::size_t(t.dim) * (Q + 1) + t.degree]; };

  const auto ng = static_cast<Eigen::Index>(indices_.size());
  Eigen::VectorXd psi(ng);
  for (Eigen::Index mu = 0; mu < ng; ++mu) {
    double v = 1.0;
    for (const auto& t : indices_.terms(mu)) v *= value_at(t);
    psi[mu] = v;
  }
  const Eigen::VectorXd w = coefficients_ * psi;
  expand(w, stacked);
  if (!jacobian) return;

  // d psi_mu / d y_k is nonzero only for dimensions in the support of mu.
  Eigen::MatrixXd jw = Eigen::MatrixXd::Zero(coefficients_.rows(), P);
  for (Eigen::Index mu = 0; mu < ng; ++mu) {
    const auto terms = indices_.terms(mu);
    for (std::size_t a = 0; a < terms.size(); ++a) {
      double d = derivs[std::size_t(terms[a].dim) * (Q + 1) + terms[a].degree];
      for (std::size_t b = 0; b < terms.size(); ++b)
        if (b != a) d *= value_at(terms[b]);
      jw.col(terms[a].dim) += d * coefficients_.col(mu);
    }
  }
  jacobian->resize(stacked_size(), P);
  for (int p = 0; p < num_patterns(); ++p) {
    auto first = jacobian->row(p * M);
    first.setZero();
    for (int i = 0; i < M - 1; ++i) {
      const auto row = jw.row(p * (M - 1) + i);
      first += row;
      jacobian->row(p * M + i + 1) = -row;
    }
  }
}

Eigen::VectorXd Surrogate::voltage(int pattern, std::span<const double> y) const {
  if (pattern < 0 || pattern >= num_patterns())
    throw InputError("pattern index " + std::to_string(pattern) + " out of range");
  const int M = num_electrodes();
  const Eigen::VectorXd psi = basis_values(y);
  const Eigen::VectorXd w = coefficients_.middleRows(Eigen::Index{pattern} * (M - 1), M - 1) * psi;
  Eigen::VectorXd u(M);
  double first = 0.0;
  for (int i = 0; i < M - 1; ++i) {
    first += w[i];
    u[i + 1] = -w[i];
  }
  u[0] = first;
  return u;
}

Eigen::VectorXd Surrogate::stacked(std::span<const double> y) const {
  Eigen::VectorXd out;
  evaluate(y, out, nullptr);
  return out;
}

Eigen::MatrixXd Surrogate::jacobian(std::span<const double> y) const {
  Eigen::VectorXd values;
  Eigen::MatrixXd jac;
  evaluate(y, values, &jac);
  return jac;
}

Surrogate make_surrogate(const SgfemSolution& solution, const MultiIndexSet& indices,
                         ParameterModel parameters) {
  std::vector<Eigen::VectorXd> beta;
  beta.reserve(solution.patterns.size());
  for (const auto& p : solution.patterns) beta.push_back(p.beta);
  return Surrogate(std::move(parameters), indices, solution.currents, std::move(beta));
}

std::string serialize_surrogate(const Surrogate& s) {
  const auto& params = s.parameters();
  json header;
  header["M"] = s.num_electrodes();
  header["L"] = s.num_pixels();
  header["Q"] = s.order();
  header["sigma0"] = params.sigma0;
  header["sigma"] = params.sigma;
  header["a"] = params.contact.a;
  header["b"] = params.contact.b;
  json seeds = json::array();
  for (const auto& r : params.seeds) seeds.push_back({r.x(), r.y()});
  header["seeds"] = std::move(seeds);
  json patterns = json::array();
  for (const auto& c : s.currents()) patterns.push_back(vector_json({c.data(), std::size_t(c.size())}));
  header["patterns"] = std::move(patterns);
  json index_set = json::array();
  for (std::size_t mu = 0; mu < s.indices().size(); ++mu) index_set.push_back(s.indices().index(mu));
  header["index_set"] = std::move(index_set);

  const std::string text = header.dump();
  std::string out(kSurrogateMagic, kMagicLength);
  put_u64(out, text.size());
  out += text;
  for (int p = 0; p < s.num_patterns(); ++p) {
    const auto& beta = s.beta(p);
    for (Eigen::Index k = 0; k < beta.size(); ++k) put_u64(out, std::bit_cast<std::uint64_t>(beta[k]));
  }
  return out;
}

Surrogate deserialize_surrogate(const std::string& bytes) {
  if (bytes.size() < kMagicLength + 8 || bytes.compare(0, kMagicLength, kSurrogateMagic) != 0) {
    if (bytes.size() >= 10 && bytes.compare(0, 10, "SGFEM-EIT/") == 0)
      throw InputError("unsupported surrogate file version");
    throw InputError("not a surrogate file (bad magic)");
  }
  const std::uint64_t header_length = get_u64(bytes, kMagicLength);
  const std::size_t header_start = kMagicLength + 8;
  if (header_length > bytes.size() - header_start) throw InputError("corrupt surrogate header");

  json header;
  try {
    header = json::parse(bytes.substr(header_start, header_length));
  } catch (const json::exception& e) {
    throw InputError(std::string("corrupt surrogate header: ") + e.what());
  }
  try {
    const int M = header.at("M").get<int>();
    const int L = header.at("L").get<int>();
    const int Q = header.at("Q").get<int>();
    if (M < 2 || L < 1 || Q < 0) throw InputError("surrogate header has invalid dimensions");

    ParameterModel params;
    params.sigma0 = header.at("sigma0").get<double>();
    params.sigma = json_vector(header.at("sigma"), L, "sigma");
    params.contact.a = json_vector(header.at("a"), M, "a");
    params.contact.b = json_vector(header.at("b"), M, "b");
    for (const auto& r : header.at("seeds")) params.seeds.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
    if (static_cast<int>(params.seeds.size()) != L) throw InputError("surrogate seed count differs from L");

    MultiIndexSet indices(L + M, Q, header.at("index_set").get<std::vector<std::vector<int>>>());

    std::vector<Eigen::VectorXd> currents;
    for (const auto& p : header.at("patterns")) {
      const auto v = json_vector(p, M, "patterns");
      currents.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), M));
    }
    const std::size_t per_pattern = std::size_t(M - 1) * indices.size();
    const std::size_t payload_start = header_start + header_length;
    if (bytes.size() - payload_start != 8 * per_pattern * currents.size())
      throw InputError("surrogate payload size does not match the header");
    std::vector<Eigen::VectorXd> beta;
    std::size_t pos = payload_start;
    for (std::size_t p = 0; p < currents.size(); ++p) {
      Eigen::VectorXd b(per_pattern);
      for (std::size_t k = 0; k < per_pattern; ++k, pos += 8) b[k] = std::bit_cast<double>(get_u64(bytes, pos));
      beta.push_back(std::move(b));
    }
    return Surrogate(std::move(params), std::move(indices), std::move(currents), std::move(beta));
  } catch (const json::exception& e) {
    throw InputError(std::string("corrupt surrogate header: ") + e.what());
  }
}

void save_surrogate(const Surrogate& surrogate, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  const std::string bytes = serialize_surrogate(surrogate);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Surrogate load_surrogate(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_surrogate(bytes);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace sgeit
