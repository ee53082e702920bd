#include "jointlap/numkernel.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

namespace jointlap {

SymSparse::SymSparse(int dim, const std::vector<Eigen::Triplet<double>>& entries) {
  if (dim < 1) throw DimensionMismatch("SymSparse: dim must be >= 1");
  std::vector<Eigen::Triplet<double>> low;
  low.reserve(entries.size());
  for (const auto& t : entries) {
    if (t.row() < 0 || t.row() >= dim || t.col() < 0 || t.col() >= dim)
      throw DimensionMismatch("SymSparse: entry out of range");
    if (t.row() >= t.col())
      low.emplace_back(t.row(), t.col(), t.value());
    else
      low.emplace_back(t.col(), t.row(), t.value());
  }
  lower_.resize(dim, dim);
  lower_.setFromTriplets(low.begin(), low.end());  // duplicates summed
  lower_.makeCompressed();
}

Eigen::SparseMatrix<double> SymSparse::full() const {
  Eigen::SparseMatrix<double> f =
      lower_.selfadjointView<Eigen::Lower>();
  return f;
}

Eigen::MatrixXd SymSparse::dense() const {
  return Eigen::MatrixXd(full());
}

CholFactor factorize(const SymSparse& Q) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                        Eigen::AMDOrdering<int>> ldlt;
  ldlt.compute(Q.lower().selfadjointView<Eigen::Lower>());
  if (ldlt.info() != Eigen::Success)
    throw NotPositiveDefinite("factorize: sparse LDLT failed");

  double max_diag = 0.0;
  for (int j = 0; j < Q.dim(); ++j) {
    // diagonal lives in the lower triangle
    for (Eigen::SparseMatrix<double>::InnerIterator it(Q.lower(), j); it; ++it)
      if (it.row() == j) max_diag = std::max(max_diag, std::abs(it.value()));
  }
  const double tol = 1e-12 * max_diag;
  const Eigen::VectorXd D = ldlt.vectorD();
  double logdet = 0.0;
  for (int i = 0; i < D.size(); ++i) {
    if (!(D[i] > tol))
      throw NotPositiveDefinite("factorize: pivot " + std::to_string(D[i]) +
                                " at index " + std::to_string(i));
    logdet += std::log(D[i]);
  }

  CholFactor f;
  f.dim_ = Q.dim();
  f.logdet_ = logdet;
  f.perm_ = ldlt.permutationP();
  // fold D into the unit factor: L_nonunit = L_unit * sqrt(D)
  Eigen::SparseMatrix<double> L = ldlt.matrixL();
  Eigen::VectorXd sqrtD = D.cwiseSqrt();
  for (int j = 0; j < L.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(L, j); it; ++it)
      it.valueRef() *= sqrtD[j];
  L.makeCompressed();
  f.L_ = std::move(L);
  return f;
}

Eigen::VectorXd CholFactor::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != dim_)
    throw DimensionMismatch("solve: rhs length " + std::to_string(rhs.size()) +
                            " != dim " + std::to_string(dim_));
  Eigen::VectorXd b = perm_ * rhs;
  L_.triangularView<Eigen::Lower>().solveInPlace(b);
  L_.transpose().triangularView<Eigen::Upper>().solveInPlace(b);
  return perm_.inverse() * b;
}

Eigen::VectorXd CholFactor::solve_white(const Eigen::VectorXd& z) const {
  if (z.size() != dim_)
    throw DimensionMismatch("solve_white: length mismatch");
  Eigen::VectorXd b = z;
  L_.transpose().triangularView<Eigen::Upper>().solveInPlace(b);
  return perm_.inverse() * b;
}

Eigen::VectorXd solve_system(const CholFactor& f, const Eigen::VectorXd& rhs) {
  return f.solve(rhs);
}

namespace {

// Binary search for row i in column j of a compressed column matrix.
// Returns -1 when (i, j) is structurally zero.
inline int find_entry(const Eigen::SparseMatrix<double>& L, int i, int j) {
  const int* rows = L.innerIndexPtr();
  const int* outer = L.outerIndexPtr();
  int lo = outer[j], hi = outer[j + 1];
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (rows[mid] < i)
      lo = mid + 1;
    else
      hi = mid;
  }
  return (lo < outer[j + 1] && rows[lo] == i) ? lo : -1;
}

}  // namespace

Eigen::VectorXd takahashi_marginal_variances(const CholFactor& f) {
  const Eigen::SparseMatrix<double>& L = f.matrixL();
  const int n = f.dim();
  const int* outer = L.outerIndexPtr();
  const int* rows = L.innerIndexPtr();
  const double* vals = L.valuePtr();

  // Selected inverse Z of the permuted matrix, stored on the pattern of L.
  std::vector<double> Z(static_cast<size_t>(L.nonZeros()), 0.0);

  auto z_at = [&](int a, int b) -> double {
    // entry (max, min) of the symmetric Z; zero outside the pattern
    int i = std::max(a, b), j = std::min(a, b);
    int k = find_entry(L, i, j);
    return k >= 0 ? Z[k] : 0.0;
  };

  for (int i = n - 1; i >= 0; --i) {
    const int start = outer[i], end = outer[i + 1];
    // column i of L holds the diagonal first, then rows > i
    const double Lii = vals[start];
    const double inv_d = 1.0 / (Lii * Lii);
    // off-diagonal targets, bottom-up so that Z entries of this column
    // needed by the diagonal are in place
    for (int p = end - 1; p > start; --p) {
      const int j = rows[p];  // j > i, computing Z(j, i)
      double s = 0.0;
      for (int q = start + 1; q < end; ++q)
        s += vals[q] * z_at(rows[q], j);
      Z[p] = -s / Lii;
    }
    double s = 0.0;
    for (int q = start + 1; q < end; ++q) s += vals[q] * Z[q];
    Z[start] = inv_d - s / Lii;
  }

  Eigen::VectorXd diag(n);
  for (int i = 0; i < n; ++i) diag[i] = Z[outer[i]];
  // undo the fill-reducing permutation
  Eigen::VectorXd out(n);
  const auto& p = f.permutation();
  for (int i = 0; i < n; ++i) out[i] = diag[p.indices()[i]];
  return out;
}

}  // namespace jointlap
