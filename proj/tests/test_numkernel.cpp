#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "jointlap/numkernel.hpp"

using namespace jointlap;

namespace {

// random sparse SPD matrix Q = B^T B + d I with a banded B
SymSparse random_spd(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - 2); j <= i; ++j) B(i, j) = unif(rng);
  const Eigen::MatrixXd D = B.transpose() * B +
                            0.5 * Eigen::MatrixXd::Identity(n, n);
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      if (D(i, j) != 0.0) trip.emplace_back(i, j, D(i, j));
  return SymSparse(n, trip);
}

}  // namespace

TEST_CASE("SymSparse folds both triangles and sums duplicates") {
  std::vector<Eigen::Triplet<double>> trip{
      {0, 0, 2.0}, {1, 1, 3.0}, {0, 1, 0.5}, {1, 0, 0.25}, {1, 1, 1.0}};
  const SymSparse Q(2, trip);
  Eigen::MatrixXd expect(2, 2);
  expect << 2.0, 0.75, 0.75, 4.0;
  CHECK((Q.dense() - expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("factorize matches dense logdet and solve") {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 5 + rep;
    const SymSparse Q = random_spd(n, rng);
    const CholFactor f = factorize(Q);
    const Eigen::MatrixXd D = Q.dense();

    const double logdet_oracle = Eigen::LLT<Eigen::MatrixXd>(D)
                                     .matrixL()
                                     .toDenseMatrix()
                                     .diagonal()
                                     .array()
                                     .log()
                                     .sum() *
                                 2.0;
    CHECK(f.logdet() == doctest::Approx(logdet_oracle).epsilon(1e-10));

    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) rhs[i] = std::sin(i + rep + 1.0);
    const Eigen::VectorXd x = f.solve(rhs);
    const Eigen::VectorXd x_oracle = D.ldlt().solve(rhs);
    CHECK((x - x_oracle).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("factorize rejects indefinite and near-singular matrices") {
  std::vector<Eigen::Triplet<double>> trip{
      {0, 0, 1.0}, {1, 1, -1.0}};
  CHECK_THROWS_AS(factorize(SymSparse(2, trip)), NotPositiveDefinite);

  // rank-1: ones * ones^T
  std::vector<Eigen::Triplet<double>> sing{
      {0, 0, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}};
  CHECK_THROWS_AS(factorize(SymSparse(2, sing)), NotPositiveDefinite);
}

TEST_CASE("takahashi recursions reproduce the dense inverse diagonal") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 8 + 3 * rep;
    const SymSparse Q = random_spd(n, rng);
    const CholFactor f = factorize(Q);
    const Eigen::VectorXd v = takahashi_marginal_variances(f);
    const Eigen::VectorXd v_oracle = Q.dense().inverse().diagonal();
    CHECK((v - v_oracle).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("solve_white induces covariance Q^{-1}") {
  std::mt19937_64 rng(11);
  const int n = 12;
  const SymSparse Q = random_spd(n, rng);
  const CholFactor f = factorize(Q);
  // the map z -> x is linear; recover it column by column
  Eigen::MatrixXd M(n, n);
  for (int j = 0; j < n; ++j)
    M.col(j) = f.solve_white(Eigen::VectorXd::Unit(n, j));
  const Eigen::MatrixXd cov = M * M.transpose();
  const Eigen::MatrixXd cov_oracle = Q.dense().inverse();
  CHECK((cov - cov_oracle).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("solve agrees with solve_system helper") {
  std::mt19937_64 rng(3);
  const SymSparse Q = random_spd(6, rng);
  const CholFactor f = factorize(Q);
  const Eigen::VectorXd rhs = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
  CHECK((f.solve(rhs) - solve_system(f, rhs)).norm() == doctest::Approx(0.0));
}
