#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "xite/dataset.hpp"

namespace xite {

struct LanguageBasis {
  Eigen::MatrixXd V;  // d x k, orthonormal columns, extraction order
  std::uint32_t k = 0;
  std::string source_lang;
  std::string target_lang;
  std::uint64_t n_used = 0;  // sentences per language
  double shrinkage = 1e-4;
  bool centered = true;  // class means absorb location; recorded for audit
  std::vector<double> axis_fisher;

  std::uint32_t d() const { return static_cast<std::uint32_t>(V.rows()); }
};

struct ScatterStats {
  Eigen::VectorXd mu0;
  Eigen::VectorXd mu1;
  Eigen::MatrixXd Sw;  // pooled within-class scatter / (n - 2)
  std::size_t n0 = 0;
  std::size_t n1 = 0;
};

ScatterStats compute_scatter(const Eigen::MatrixXd& X, const std::vector<int>& y);

// v = normalize((Sw + eps I)^-1 (mu1 - mu0)), eps = shrinkage * tr(Sw)/d,
// sign fixed so v . (mu1 - mu0) >= 0. Solved by LLT, no explicit inverse.
Eigen::VectorXd lda_axis(const Eigen::MatrixXd& X, const std::vector<int>& y, double shrinkage);

// Iterative LDA with projection-and-subtraction deflation: each iteration
// deflates the ORIGINAL data by the axes found so far (X - VV^T X), extracts
// the next axis, re-orthogonalizes it against V, renormalizes, appends.
// Stops early if the residual axis norm falls below 1e-8 (k then reflects
// the number actually extracted).
LanguageBasis derive_basis(const Eigen::MatrixXd& X, const std::vector<int>& y, std::uint32_t k,
                           double shrinkage);

// VV^T x, back in d dimensions.
Eigen::VectorXd project_onto_basis(const LanguageBasis& basis, const Eigen::VectorXd& x);

// Between-class variance along `direction` over (within-class variance + 1e-12).
double fisher_ratio(const Eigen::MatrixXd& X, const std::vector<int>& y,
                    const Eigen::VectorXd& direction);

// Columns of X from a bilingual corpus; y[i] = 0 for source_lang, 1 for
// target_lang. Records with any other tag are rejected.
void corpus_matrix(const Dataset& corpus, const std::string& source_lang,
                   const std::string& target_lang, Eigen::MatrixXd& X, std::vector<int>& y);

LanguageBasis derive_basis_from_corpus(const Dataset& corpus, const std::string& source_lang,
                                       const std::string& target_lang, std::uint32_t k,
                                       double shrinkage);

// Experimental: orthonormal complement of V (the language-neutral axes).
// No acceptance criteria attach to this; exposed behind a CLI flag.
Eigen::MatrixXd neutral_complement(const LanguageBasis& basis);

void save_basis(const LanguageBasis& basis, const std::string& path);
LanguageBasis load_basis(const std::string& path);

}  // namespace xite
