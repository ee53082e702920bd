#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "jointlap/lgm.hpp"

using namespace jointlap;

namespace {

ModelSpec joint_spec() {
  // one gaussian marker, random intercept + slope, one cause
  ModelSpec spec;
  LongSubmodelSpec sm;
  sm.fixed_terms = {Term::Intercept(), Term::Time(0), Term::Covariate(0),
                    Term::Covariate(1)};
  sm.random_terms = {0, 1};
  spec.longitudinal.push_back(sm);
  spec.re_blocks.push_back({{{1, 0}, {1, 1}}, 0.0, 1.0});
  SurvSubmodelSpec sv;
  sv.baseline.bins = 4;
  sv.n_covariates = 1;
  sv.association_terms.push_back({1, AssociationTerm::Kind::current_value, 0});
  spec.survival.push_back(sv);
  return validate(std::move(spec));
}

}  // namespace

TEST_CASE("rw1 and rw2 precision equal tau D^T D") {
  const int B = 6;
  Eigen::MatrixXd D1 = Eigen::MatrixXd::Zero(B - 1, B);
  for (int i = 0; i < B - 1; ++i) {
    D1(i, i) = -1.0;
    D1(i, i + 1) = 1.0;
  }
  Eigen::MatrixXd D2 = Eigen::MatrixXd::Zero(B - 2, B);
  for (int i = 0; i < B - 2; ++i) {
    D2(i, i) = 1.0;
    D2(i, i + 1) = -2.0;
    D2(i, i + 2) = 1.0;
  }
  const double tau = 1.7;
  CHECK((rw1_precision(B, tau).dense() - tau * D1.transpose() * D1)
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK((rw2_precision(B, tau).dense() - tau * D2.transpose() * D2)
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("rw2 annihilates constants and linear trends") {
  const int B = 15;
  const Eigen::MatrixXd Q = rw2_precision(B, 2.3).dense();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(B);
  const Eigen::VectorXd lin = Eigen::VectorXd::LinSpaced(B, 0.0, 14.0);
  CHECK((Q * ones).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((Q * lin).cwiseAbs().maxCoeff() < 1e-12);
  // rw1 kills constants only
  const Eigen::MatrixXd Q1 = rw1_precision(B, 2.3).dense();
  CHECK((Q1 * ones).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((Q1 * lin).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("re_precision builds L L^T from log-cholesky coordinates") {
  Eigen::VectorXd coords(3);
  coords << 0.2, -0.4, 0.7;  // log diag 0.2, -0.4; off(1,0) = 0.7
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(2, 2);
  L(0, 0) = std::exp(0.2);
  L(1, 1) = std::exp(-0.4);
  L(1, 0) = 0.7;
  const Eigen::MatrixXd expect = L * L.transpose();
  CHECK((re_precision(coords, 2) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("latent index layout and names") {
  const ModelSpec spec = joint_spec();
  SurvDataset sd;
  sd.records = {{7, 2.0, 1, {0.5}}, {9, 3.0, 0, {-0.5}}};
  const LatentIndex idx = build_latent_index(spec, sd, 1);
  CHECK(idx.n_subjects == 2);
  CHECK(idx.re_dim == 2);
  CHECK(idx.bins == 4);
  // 2*2 RE + 4 baseline + 1 gamma + 4 beta
  CHECK(idx.dim() == 13);
  CHECK(idx.re_offset(1) == 2);
  CHECK(idx.baseline_offset(0) == 4);
  CHECK(idx.gamma_offset(0) == 8);
  CHECK(idx.beta_offset(0) == 9);
  CHECK(idx.subject_index.at(9) == 1);

  const auto names = idx.names(spec);
  REQUIRE(static_cast<int>(names.size()) == idx.dim());
  CHECK(names[4] == "logbase1_bin0");
  CHECK(names[8] == "gamma1");
  CHECK(names[9] == "beta10");
  CHECK(names[12] == "beta13");
}

TEST_CASE("prior precision matches a hand-assembled dense oracle") {
  const ModelSpec spec = joint_spec();
  SurvDataset sd;
  sd.records = {{1, 2.0, 1, {0.5}}, {2, 3.0, 0, {-0.5}}};
  LongDataset ld;
  ld.records = {{1, 1, 0.5, 1.0, {0.1, 1.0}}, {2, 1, 1.0, -0.3, {0.2, 0.0}}};
  const AssembledModel model(spec, ld, sd);

  Eigen::VectorXd theta(6);
  theta << 0.3, 0.1, -0.2, 0.4, 0.6, 0.8;
  const Eigen::MatrixXd Q = model.prior_precision(theta).dense();

  const HyperMap hyper(spec);
  const Eigen::MatrixXd P = hyper.block_precision(theta, 0);
  const double tau_base = std::exp(0.6);
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(13, 13);
  expect.block(0, 0, 2, 2) = P;
  expect.block(2, 2, 2, 2) = P;
  expect.block(4, 4, 4, 4) =
      rw2_precision(4, tau_base).dense() +
      1e-5 * tau_base * Eigen::MatrixXd::Identity(4, 4);
  expect(8, 8) = 1.0 / 6.25;  // gamma, N(0, 2.5)
  for (int j = 9; j < 13; ++j) expect(j, j) = 1.0 / 6.25;
  CHECK((Q - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("observation terms and eta wiring") {
  const ModelSpec spec = joint_spec();
  SurvDataset sd;
  sd.records = {{1, 1.5, 1, {0.5}}};
  LongDataset ld;
  ld.records = {{1, 1, 0.5, 2.0, {0.3, 1.0}}};
  const AssembledModel model(spec, ld, sd);

  // 1 longitudinal term + 4 pseudo-observations (T* in the last bin)
  REQUIRE(model.terms.size() == 5);
  const ObsTerm& lt = model.terms[0];
  CHECK(lt.family == FamilyKind::gaussian);
  CHECK(lt.scale_index == 0);
  CHECK(lt.y == doctest::Approx(2.0));

  Eigen::VectorXd u = Eigen::VectorXd::Zero(model.index.dim());
  u[0] = 0.7;   // b_intercept subject 1
  u[1] = -0.2;  // b_slope
  u[model.index.beta_offset(0) + 0] = 1.0;   // beta10
  u[model.index.beta_offset(0) + 1] = 0.5;   // beta11 (time)
  u[model.index.beta_offset(0) + 2] = 2.0;   // beta12 (x1)
  u[model.index.beta_offset(0) + 3] = -1.0;  // beta13 (x2)
  // eta = (1 + 0.7) + (0.5 - 0.2)*0.5 + 2*0.3 - 1*1
  CHECK(model.eta(lt, u, {0.0}) == doctest::Approx(1.45).epsilon(1e-12));

  // survival term at t_eval: baseline bin + gamma w + phi * eta_long(t_eval)
  const ObsTerm& st = model.terms.back();
  CHECK(st.family == FamilyKind::poisson);
  CHECK(st.y == 1);
  CHECK(st.offset == doctest::Approx(std::log(0.375)).epsilon(1e-12));
  u[model.index.baseline_offset(0) + 3] = 0.9;
  u[model.index.gamma_offset(0)] = 0.4;
  const double t_eval = 0.5 * (1.125 + 1.5);  // last bin midpoint
  const double eta_long = (1.0 + 0.7) + (0.5 - 0.2) * t_eval + 2.0 * 0.3 - 1.0;
  const double phi = 0.6;
  const double expect = st.offset + 0.9 + 0.4 * 0.5 + phi * eta_long;
  CHECK(model.eta(st, u, {phi}) == doctest::Approx(expect).epsilon(1e-12));
}
