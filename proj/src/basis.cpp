#include "xite/basis.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/Cholesky>

#include "xite/error.hpp"

namespace xite {

namespace {

constexpr char kMagic[4] = {'X', 'I', 'T', 'B'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("truncated basis file while reading " + what);
  return value;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const std::string& what) {
  const auto len = read_pod<std::uint32_t>(in, what + " length");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw ValidationError("truncated basis file while reading " + what);
  return s;
}

void check_classes(const std::vector<int>& y, std::size_t n) {
  if (y.size() != n) throw ValidationError("label vector length does not match sample count");
  std::size_t n0 = 0, n1 = 0;
  for (int v : y) {
    if (v == 0) ++n0;
    else if (v == 1) ++n1;
    else throw ValidationError("language labels must be 0 or 1");
  }
  if (n0 < 2 || n1 < 2) {
    throw ValidationError("LDA needs at least 2 samples per language (got " +
                          std::to_string(n0) + " and " + std::to_string(n1) + ")");
  }
}

}  // namespace

ScatterStats compute_scatter(const Eigen::MatrixXd& X, const std::vector<int>& y) {
  const auto n = static_cast<std::size_t>(X.cols());
  check_classes(y, n);
  const Eigen::Index d = X.rows();

  ScatterStats st;
  st.mu0 = Eigen::VectorXd::Zero(d);
  st.mu1 = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < n; ++i) {
    (y[i] == 0 ? st.mu0 : st.mu1) += X.col(static_cast<Eigen::Index>(i));
    (y[i] == 0 ? st.n0 : st.n1) += 1;
  }
  st.mu0 /= static_cast<double>(st.n0);
  st.mu1 /= static_cast<double>(st.n1);

  Eigen::MatrixXd Xc = X;
  for (std::size_t i = 0; i < n; ++i) {
    Xc.col(static_cast<Eigen::Index>(i)) -= (y[i] == 0 ? st.mu0 : st.mu1);
  }
  st.Sw.noalias() = Xc * Xc.transpose() / static_cast<double>(n - 2);  // pooled, unbiased
  return st;
}

Eigen::VectorXd lda_axis(const Eigen::MatrixXd& X, const std::vector<int>& y, double shrinkage) {
  const ScatterStats st = compute_scatter(X, y);
  const Eigen::Index d = X.rows();
  const Eigen::VectorXd diff = st.mu1 - st.mu0;
  if (diff.norm() < 1e-12) {
    throw ComputeError("degenerate LDA: language means coincide");
  }
  const double eps = shrinkage * st.Sw.trace() / static_cast<double>(d);
  Eigen::MatrixXd A = st.Sw;
  A.diagonal().array() += eps;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    throw ComputeError("within-class scatter not positive definite even with shrinkage");
  }
  Eigen::VectorXd v = llt.solve(diff);
  const double norm = v.norm();
  if (!std::isfinite(norm) || norm < 1e-300) {
    throw ComputeError("non-finite or zero LDA axis");
  }
  v /= norm;
  if (v.dot(diff) < 0.0) v = -v;
  return v;
}

LanguageBasis derive_basis(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint32_t k,
                           double shrinkage) {
  const Eigen::Index d = X.rows();
  if (k > static_cast<std::uint32_t>(d)) {
    throw ValidationError("k=" + std::to_string(k) + " exceeds dimension " + std::to_string(d));
  }
  check_classes(y, static_cast<std::size_t>(X.cols()));

  LanguageBasis basis;
  basis.V.resize(d, 0);
  basis.shrinkage = shrinkage;

  for (std::uint32_t i = 0; i < k; ++i) {
    Eigen::MatrixXd Xd = X;
    if (basis.V.cols() > 0) {
      Xd.noalias() -= basis.V * (basis.V.transpose() * X);
    }
    Eigen::VectorXd v;
    try {
      v = lda_axis(Xd, y, shrinkage);
    } catch (const ComputeError&) {
      break;  // residual separation exhausted; early stop with fewer axes
    }
    // Re-orthogonalize against the axes found so far (twice is enough).
    for (int pass = 0; pass < 2 && basis.V.cols() > 0; ++pass) {
      v.noalias() -= basis.V * (basis.V.transpose() * v);
    }
    const double norm = v.norm();
    if (norm < 1e-8) break;
    v /= norm;

    basis.axis_fisher.push_back(fisher_ratio(Xd, y, v));
    basis.V.conservativeResize(Eigen::NoChange, basis.V.cols() + 1);
    basis.V.col(basis.V.cols() - 1) = v;
  }
  basis.k = static_cast<std::uint32_t>(basis.V.cols());
  if (basis.k == 0) throw ComputeError("no language-separable axis could be extracted");
  return basis;
}

Eigen::VectorXd project_onto_basis(const LanguageBasis& basis, const Eigen::VectorXd& x) {
  if (x.size() != basis.V.rows()) {
    throw ValidationError("projection dimension " + std::to_string(x.size()) +
                          " does not match basis d=" + std::to_string(basis.V.rows()));
  }
  return basis.V * (basis.V.transpose() * x);
}

double fisher_ratio(const Eigen::MatrixXd& X, const std::vector<int>& y,
                    const Eigen::VectorXd& direction) {
  const auto n = static_cast<std::size_t>(X.cols());
  check_classes(y, n);
  if (std::abs(direction.norm() - 1.0) > 1e-6) {
    throw ValidationError("fisher_ratio direction must be unit-norm");
  }
  const Eigen::VectorXd z = X.transpose() * direction;

  double s0 = 0.0, s1 = 0.0;
  std::size_t n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    (y[i] == 0 ? s0 : s1) += z[static_cast<Eigen::Index>(i)];
    (y[i] == 0 ? n0 : n1) += 1;
  }
  const double m0 = s0 / static_cast<double>(n0);
  const double m1 = s1 / static_cast<double>(n1);
  const double g = (s0 + s1) / static_cast<double>(n);

  double within = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dz = z[static_cast<Eigen::Index>(i)] - (y[i] == 0 ? m0 : m1);
    within += dz * dz;
  }
  within /= static_cast<double>(n);
  const double between = (static_cast<double>(n0) * (m0 - g) * (m0 - g) +
                          static_cast<double>(n1) * (m1 - g) * (m1 - g)) /
                         static_cast<double>(n);
  return between / (within + 1e-12);
}

void corpus_matrix(const Dataset& corpus, const std::string& source_lang,
                   const std::string& target_lang, Eigen::MatrixXd& X, std::vector<int>& y) {
  X.resize(corpus.d, static_cast<Eigen::Index>(corpus.size()));
  y.clear();
  y.reserve(corpus.size());
  Eigen::Index col = 0;
  for (const auto& rec : corpus.records) {
    int lang;
    if (rec.lang == source_lang) lang = 0;
    else if (rec.lang == target_lang) lang = 1;
    else {
      throw ValidationError("basis corpus record '" + rec.id + "' has language '" + rec.lang +
                            "', expected '" + source_lang + "' or '" + target_lang + "'");
    }
    for (std::uint32_t j = 0; j < corpus.d; ++j) X(j, col) = rec.vec[j];
    y.push_back(lang);
    ++col;
  }
}

LanguageBasis derive_basis_from_corpus(const Dataset& corpus, const std::string& source_lang,
                                       const std::string& target_lang, std::uint32_t k,
                                       double shrinkage) {
  Eigen::MatrixXd X;
  std::vector<int> y;
  corpus_matrix(corpus, source_lang, target_lang, X, y);
  LanguageBasis basis = derive_basis(X, y, k, shrinkage);
  basis.source_lang = source_lang;
  basis.target_lang = target_lang;
  std::size_t n0 = 0;
  for (int v : y) n0 += (v == 0);
  basis.n_used = std::min<std::uint64_t>(n0, y.size() - n0);
  return basis;
}

Eigen::MatrixXd neutral_complement(const LanguageBasis& basis) {
  const Eigen::Index d = basis.V.rows();
  const Eigen::Index k = basis.V.cols();
  if (k >= d) return Eigen::MatrixXd(d, 0);
  // Gram-Schmidt the standard basis against V; keep the d-k survivors.
  Eigen::MatrixXd Q(d, d - k);
  Eigen::Index got = 0;
  for (Eigen::Index i = 0; i < d && got < d - k; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(d, i);
    v.noalias() -= basis.V * (basis.V.transpose() * v);
    if (got > 0) {
      auto Qc = Q.leftCols(got);
      v.noalias() -= Qc * (Qc.transpose() * v);
      v.noalias() -= Qc * (Qc.transpose() * v);
    }
    const double n = v.norm();
    if (n < 1e-8) continue;
    Q.col(got++) = v / n;
  }
  return Q.leftCols(got).eval();
}

void save_basis(const LanguageBasis& basis, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(basis.V.rows()));
  write_pod<std::uint32_t>(out, basis.k);
  write_string(out, basis.source_lang);
  write_string(out, basis.target_lang);
  write_pod<std::uint64_t>(out, basis.n_used);
  write_pod<double>(out, basis.shrinkage);
  write_pod<std::uint8_t>(out, basis.centered ? 1 : 0);
  for (double f : basis.axis_fisher) write_pod(out, f);
  for (Eigen::Index i = 0; i < basis.V.rows(); ++i) {
    for (Eigen::Index j = 0; j < basis.V.cols(); ++j) write_pod<double>(out, basis.V(i, j));
  }
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

LanguageBasis load_basis(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError("'" + path + "': bad magic, not a basis file");
  }
  const auto version = read_pod<std::uint16_t>(in, "version");
  if (version != kVersion) {
    throw ValidationError("'" + path + "': unsupported version " + std::to_string(version));
  }
  LanguageBasis basis;
  const auto d = read_pod<std::uint32_t>(in, "d");
  basis.k = read_pod<std::uint32_t>(in, "k");
  basis.source_lang = read_string(in, "source lang");
  basis.target_lang = read_string(in, "target lang");
  basis.n_used = read_pod<std::uint64_t>(in, "n_used");
  basis.shrinkage = read_pod<double>(in, "shrinkage");
  basis.centered = read_pod<std::uint8_t>(in, "centered flag") != 0;
  basis.axis_fisher.resize(basis.k);
  for (auto& f : basis.axis_fisher) f = read_pod<double>(in, "axis fisher");
  basis.V.resize(d, basis.k);
  for (std::uint32_t i = 0; i < d; ++i) {
    for (std::uint32_t j = 0; j < basis.k; ++j) basis.V(i, j) = read_pod<double>(in, "V entry");
  }
  return basis;
}

}  // namespace xite
