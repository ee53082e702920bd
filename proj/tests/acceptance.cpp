// Acceptance gate. Each criterion prints one PASS/FAIL line with its
// pinned tolerances; run with a criterion number 1..8 or "all".

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "jointlap/bench.hpp"
#include "jointlap/infer.hpp"
#include "jointlap/simulate.hpp"

using namespace jointlap;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Checker {
  bool ok = true;
  std::string detail;
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

int report(int criterion, const Checker& c, double elapsed,
           const std::string& summary) {
  std::cout << "criterion " << criterion << ": " << (c.ok ? "PASS" : "FAIL")
            << " — " << summary << " [" << elapsed << " s]";
  if (!c.ok) std::cout << " | " << c.detail;
  std::cout << "\n";
  return c.ok ? 0 : 1;
}

// ---- criterion 1: gaussian exactness ------------------------------------

int criterion1() {
  const auto t0 = clock_type::now();
  Checker c;

  ModelSpec spec;
  LongSubmodelSpec sm;
  sm.fixed_terms = {Term::Intercept(), Term::Time(0), Term::Covariate(0)};
  sm.random_terms = {0};
  spec.longitudinal.push_back(sm);
  spec.re_blocks.push_back({{{1, 0}}, 0.0, 1.0});
  spec = validate(std::move(spec));

  std::mt19937_64 rng(314);
  std::normal_distribution<double> norm;
  LongDataset ld;
  SurvDataset sd;
  for (int i = 0; i < 30; ++i) {
    sd.records.push_back({i + 1, 5.0, 0, {}});
    const double b = 0.4 * norm(rng);
    const double x = norm(rng);
    for (int j = 0; j < 5; ++j)
      ld.records.push_back(
          {i + 1, 1, j * 1.0, 0.2 - 0.1 * j + 0.1 * x + b + 0.4 * norm(rng),
           {x}});
  }
  const AssembledModel model(spec, ld, sd);
  Engine eng(model);

  Eigen::VectorXd theta(2);
  theta << std::log(1.0 / 0.16), 0.4;
  const GaussianApprox ga = eng.inner_newton(theta);

  const int n = model.index.dim();
  const Eigen::MatrixXd Q0 = model.prior_precision(theta).dense();
  const double tau = std::exp(theta[0]);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(model.terms.size(), n);
  Eigen::VectorXd y(model.terms.size());
  for (size_t r = 0; r < model.terms.size(); ++r) {
    y[r] = model.terms[r].y;
    for (const auto& [i, v] : model.terms[r].a.entries) A(r, i) = v;
  }
  const Eigen::MatrixXd H = Q0 + tau * A.transpose() * A;
  const Eigen::VectorXd mean = H.ldlt().solve(tau * A.transpose() * y);
  const Eigen::VectorXd sd_oracle = H.inverse().diagonal().cwiseSqrt();

  const double mean_err = (ga.mode - mean).cwiseAbs().maxCoeff();
  const double sd_err = (ga.marginal_sd() - sd_oracle).cwiseAbs().maxCoeff();
  c.expect(mean_err < 1e-8, "posterior mean error " + std::to_string(mean_err));
  c.expect(sd_err < 1e-8, "posterior sd error " + std::to_string(sd_err));

  double ll = 0.0;
  for (size_t r = 0; r < model.terms.size(); ++r)
    ll += loglik_eta(FamilyKind::gaussian, y[r], A.row(r).dot(mean), tau).value;
  const double logdetQ0 =
      Eigen::LDLT<Eigen::MatrixXd>(Q0).vectorD().array().log().sum();
  const double logdetH =
      Eigen::LDLT<Eigen::MatrixXd>(H).vectorD().array().log().sum();
  const double oracle = model.hyper.log_prior(theta) + 0.5 * logdetQ0 -
                        0.5 * mean.dot(Q0 * mean) + ll - 0.5 * logdetH;
  const double lp_err = std::abs(eng.log_hyper_post(theta) - oracle);
  c.expect(lp_err < 1e-8, "log marginal error " + std::to_string(lp_err));

  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 1.0, "runtime over 1 s");
  return report(1, c, elapsed,
                "gaussian exactness within 1e-8 (mean err " +
                    std::to_string(mean_err) + ", marginal err " +
                    std::to_string(lp_err) + ")");
}

// ---- criterion 2: augmentation equivalence ------------------------------

int criterion2() {
  const auto t0 = clock_type::now();
  Checker c;
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> utime(0.05, 9.5);
  std::uniform_real_distribution<double> uhaz(0.05, 1.5);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int M = 1 + rep % 2;
    const int B = 3 + rep % 6;
    SurvDataset sd;
    for (int i = 0; i < 6 + rep % 9; ++i)
      sd.records.push_back(
          {i + 1, utime(rng), static_cast<int>(rng() % (M + 1)), {}});
    const BinPartition part = partition_time(sd, B);
    std::vector<std::vector<double>> hazards(M, std::vector<double>(B));
    for (auto& hm : hazards)
      for (auto& h : hm) h = uhaz(rng);

    double exact = 0.0;
    for (const auto& r : sd.records)
      exact += exact_surv_loglik(r, hazards, part);
    double pseudo = 0.0;
    for (const auto& p : poisson_augment(sd, part, M)) {
      const double lam = hazards[p.cause - 1][p.bin];
      pseudo += p.y * std::log(lam) - lam * p.exposure;
    }
    worst = std::max(worst, std::abs(pseudo - exact) /
                                std::max(1.0, std::abs(exact)));
  }
  c.expect(worst < 1e-10, "worst relative gap " + std::to_string(worst));
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 1.0, "runtime over 1 s");
  return report(2, c, elapsed,
                "poisson augmentation equals exact survival loglik over 100 "
                "fixtures incl. M=2, worst gap " +
                    std::to_string(worst) + " (tol 1e-10)");
}

// ---- criterion 3: small-model brute-force oracle ------------------------

// posterior of a K=1 gaussian random-intercept joint model, integrating
// each subject's intercept with 15-node adaptive Gauss-Hermite and
// sampling the remaining 12 parameters by random-walk Metropolis
struct Oracle {
  // per subject data
  struct Subject {
    std::vector<double> t, y;   // longitudinal
    double x1 = 0, x2 = 0;
    std::vector<int> bin;       // pseudo observations
    std::vector<int> yev;
    std::vector<double> expo, teval;
  };
  std::vector<Subject> subjects;
  const HyperMap* hyper = nullptr;
  Eigen::MatrixXd rw2_dense;  // unscaled rw2 + ridge at tau = 1
  int B = 4;

  // 15-node Gauss-Hermite abscissas/weights (physicists' convention),
  // from the eigendecomposition of the Jacobi matrix
  std::vector<double> gh_x, gh_w;

  void init_gh(int nodes = 15) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nodes, nodes);
    for (int i = 1; i < nodes; ++i)
      J(i, i - 1) = J(i - 1, i) = std::sqrt(i / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    for (int i = 0; i < nodes; ++i) {
      gh_x.push_back(es.eigenvalues()[i]);
      const double v0 = es.eigenvectors()(0, i);
      gh_w.push_back(std::sqrt(M_PI) * v0 * v0);
    }
  }

  // log integrated likelihood of one subject
  double subject_loglik(const Subject& s, const Eigen::VectorXd& beta,
                        const Eigen::VectorXd& lb, double tau_eps,
                        double tau_b, double phi) const {
    auto logf = [&](double b, double* d1 = nullptr, double* d2 = nullptr) {
      double v = -0.5 * tau_b * b * b + 0.5 * std::log(tau_b) -
                 0.5 * std::log(2.0 * M_PI);
      double g1 = -tau_b * b, g2 = -tau_b;
      for (size_t j = 0; j < s.t.size(); ++j) {
        const double mu = beta[0] + beta[1] * s.t[j] + beta[2] * s.x1 +
                          beta[3] * s.x2 + b;
        const double r = s.y[j] - mu;
        v += 0.5 * (std::log(tau_eps) - std::log(2.0 * M_PI)) -
             0.5 * tau_eps * r * r;
        g1 += tau_eps * r;
        g2 -= tau_eps;
      }
      for (size_t p = 0; p < s.bin.size(); ++p) {
        const double eta_long = beta[0] + beta[1] * s.teval[p] +
                                beta[2] * s.x1 + beta[3] * s.x2 + b;
        const double eta = lb[s.bin[p]] + phi * eta_long +
                           std::log(s.expo[p]);
        const double mu = std::exp(eta);
        v += s.yev[p] * eta - mu;
        g1 += phi * (s.yev[p] - mu);
        g2 -= phi * phi * mu;
      }
      if (d1) *d1 = g1;
      if (d2) *d2 = g2;
      return v;
    };

    // newton for the conditional mode of b
    double b = 0.0;
    for (int it = 0; it < 40; ++it) {
      double g1, g2;
      logf(b, &g1, &g2);
      const double step = -g1 / g2;
      b += step;
      if (std::abs(step) < 1e-10) break;
    }
    double g1, g2;
    logf(b, &g1, &g2);
    const double sigma = 1.0 / std::sqrt(-g2);

    double lmax = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(gh_x.size());
    for (size_t k = 0; k < gh_x.size(); ++k) {
      const double bk = b + std::sqrt(2.0) * sigma * gh_x[k];
      terms[k] = std::log(gh_w[k]) + gh_x[k] * gh_x[k] + logf(bk);
      lmax = std::max(lmax, terms[k]);
    }
    double sum = 0.0;
    for (double tk : terms) sum += std::exp(tk - lmax);
    return std::log(std::sqrt(2.0) * sigma) + lmax + std::log(sum);
  }

  // psi = (beta[4], lb[4], theta[4]); theta as in the engine layout
  double log_post(const Eigen::VectorXd& psi) const {
    const Eigen::VectorXd beta = psi.segment(0, 4);
    const Eigen::VectorXd lb = psi.segment(4, B);
    const Eigen::VectorXd theta = psi.segment(4 + B, 4);
    const double tau_eps = std::exp(theta[0]);
    const double tau_b = std::exp(2.0 * theta[1]);  // 1x1 log-cholesky
    const double tau_base = std::exp(theta[2]);
    const double phi = theta[3];

    double lp = hyper->log_prior(theta);
    for (int j = 0; j < 4; ++j) lp += gaussian_logpdf(beta[j], 0.0, 2.5);
    const Eigen::MatrixXd Qlb = tau_base * rw2_dense;
    lp += 0.5 * Eigen::LDLT<Eigen::MatrixXd>(Qlb).vectorD().array().log().sum();
    lp -= 0.5 * lb.dot(Qlb * lb);
    for (const auto& s : subjects)
      lp += subject_loglik(s, beta, lb, tau_eps, tau_b, phi);
    return std::isfinite(lp) ? lp
                             : -std::numeric_limits<double>::infinity();
  }
};

int criterion3() {
  const auto t0 = clock_type::now();
  Checker c;

  // informative design so the association posterior is tight enough to
  // compare a point estimate against the oracle posterior mean
  ScenarioConfig cfg = scenario_preset(1);
  cfg.n_subjects = 40;
  cfg.random_slope = {false};
  cfg.re_cov = Eigen::MatrixXd::Constant(1, 1, 1.0);
  cfg.beta[0] << 0.2, -0.1, 1.0, -0.5;
  cfg.phi = {0.5};
  cfg.target_event_fraction = 0.6;
  cfg.cont_visit_spacing = 0.5;
  cfg.seed = 2025;
  const SimulatedData data = simulate_scenario(cfg);

  const int B = 4;
  const ModelSpec spec = scenario_modelspec(cfg, B);
  const AssembledModel model(spec, data.longitudinal, data.survival);
  Engine eng(model);
  InferenceConfig icfg;
  const FitResult fit = eng.fit(icfg);
  c.expect(fit.converged, "engine fit did not converge");

  std::vector<double> eb_beta(4, 0.0);
  for (const auto& r : fit.latent_summaries)
    for (int j = 0; j < 4; ++j)
      if (r.name == "beta1" + std::to_string(j)) eb_beta[j] = r.mean;
  const double eb_phi = fit.theta_mode[fit.theta_mode.size() - 1];

  // oracle setup on the identical augmented data
  Oracle oracle;
  oracle.hyper = &model.hyper;
  oracle.B = B;
  oracle.init_gh();
  {
    const Eigen::MatrixXd base = rw2_precision(B, 1.0).dense();
    oracle.rw2_dense = base + 1e-5 * Eigen::MatrixXd::Identity(B, B);
  }
  oracle.subjects.resize(cfg.n_subjects);
  for (const auto& r : data.longitudinal.records) {
    auto& s = oracle.subjects[r.subject - 1];
    s.t.push_back(r.time);
    s.y.push_back(r.value);
    s.x1 = r.covariates[0];
    s.x2 = r.covariates[1];
  }
  const BinPartition part = partition_time(data.survival, B);
  for (const auto& p : poisson_augment(data.survival, part, 1)) {
    auto& s = oracle.subjects[p.subject - 1];
    s.bin.push_back(p.bin);
    s.yev.push_back(p.y);
    s.expo.push_back(p.exposure);
    s.teval.push_back(p.t_eval);
  }

  // random-walk metropolis, adapted during burn-in
  const int dim = 4 + B + 4;
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(dim);
  psi.segment(0, 4) << 0.2, -0.1, 0.1, -0.2;
  Eigen::VectorXd step = Eigen::VectorXd::Constant(dim, 0.05);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> norm;
  std::uniform_real_distribution<double> unif;

  double lp = oracle.log_post(psi);
  const int burn = 4000, keep = 20000;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd mean_acc = Eigen::VectorXd::Zero(dim);
  int kept = 0;
  for (int sweep = 0; sweep < burn + keep; ++sweep) {
    for (int d = 0; d < dim; ++d) {
      Eigen::VectorXd cand = psi;
      cand[d] += step[d] * norm(rng);
      const double lc = oracle.log_post(cand);
      if (std::log(unif(rng)) < lc - lp) {
        psi = cand;
        lp = lc;
        acc[d] += 1.0;
      }
    }
    if (sweep < burn && sweep % 200 == 199) {
      for (int d = 0; d < dim; ++d) {
        const double rate = acc[d] / 200.0;
        step[d] *= rate > 0.45 ? 1.4 : (rate < 0.2 ? 0.7 : 1.0);
      }
      acc.setZero();
    }
    if (sweep >= burn) {
      mean_acc += psi;
      ++kept;
    }
  }
  const Eigen::VectorXd post_mean = mean_acc / kept;

  if (std::getenv("JOINTLAP_ACC_DEBUG")) {
    std::cerr << "theta_mode: " << fit.theta_mode.transpose() << "\n";
    std::cerr << "oracle mean: " << post_mean.transpose() << "\n";
    std::cerr << "oracle step: " << step.transpose() << "\n";
    for (const auto& r : fit.hyper_summaries)
      std::cerr << r.name << " " << r.mean << " sd " << r.sd << "\n";
  }

  double worst_beta = 0.0;
  for (int j = 0; j < 4; ++j)
    worst_beta = std::max(worst_beta, std::abs(eb_beta[j] - post_mean[j]));
  const double phi_gap = std::abs(eb_phi - post_mean[dim - 1]);
  c.expect(worst_beta < 0.05,
           "beta gap " + std::to_string(worst_beta) + " over 0.05");
  c.expect(phi_gap < 0.05, "phi gap " + std::to_string(phi_gap) + " over 0.05");

  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 120.0, "runtime over 2 min");
  return report(3, c, elapsed,
                "EB matches AGH(15)+MCMC oracle, worst beta gap " +
                    std::to_string(worst_beta) + ", phi gap " +
                    std::to_string(phi_gap) + " (tol 0.05)");
}

// ---- criteria 4-6: replicate benchmarks ---------------------------------

int benchmark_criterion(int criterion, int scenario, int replicates,
                        double phi_bias_tol, double beta_bias_tol,
                        bool check_all_cp, bool check_phi_cp,
                        double per_fit_budget_s) {
  const auto t0 = clock_type::now();
  Checker c;
  const ScenarioConfig cfg = scenario_preset(scenario);
  const auto results = run_replicates(cfg, replicates, Strategy::EB, 20260823);

  int conv = 0;
  double max_fit_s = 0.0;
  for (const auto& r : results) {
    conv += r.converged;
    max_fit_s = std::max(max_fit_s, r.wall_s);
  }
  c.expect(conv == replicates,
           "converged " + std::to_string(conv) + "/" +
               std::to_string(replicates));
  if (per_fit_budget_s > 0)
    c.expect(max_fit_s <= per_fit_budget_s,
             "slowest fit " + std::to_string(max_fit_s) + " s over budget");

  const BenchReport report_data = metrics(results, scenario_truth(cfg));
  double worst_phi_bias = 0.0, worst_beta_bias = 0.0;
  std::string cp_fail;
  for (const auto& row : report_data.rows) {
    if (row.name.rfind("phi", 0) == 0)
      worst_phi_bias = std::max(worst_phi_bias, std::abs(row.bias));
    if (row.name.rfind("beta", 0) == 0)
      worst_beta_bias = std::max(worst_beta_bias, std::abs(row.bias));
    const bool cp_ok = row.coverage >= 0.88 && row.coverage <= 0.99;
    if (check_all_cp && !cp_ok)
      cp_fail += row.name + "=" + std::to_string(row.coverage) + " ";
    if (check_phi_cp && row.name.rfind("phi", 0) == 0 && !cp_ok)
      cp_fail += row.name + "=" + std::to_string(row.coverage) + " ";
  }
  c.expect(worst_phi_bias <= phi_bias_tol,
           "phi bias " + std::to_string(worst_phi_bias));
  if (beta_bias_tol > 0)
    c.expect(worst_beta_bias <= beta_bias_tol,
             "beta bias " + std::to_string(worst_beta_bias));
  c.expect(cp_fail.empty(), "coverage outside [0.88, 0.99]: " + cp_fail);

  const double elapsed = seconds_since(t0);
  std::string summary =
      "scenario " + std::to_string(scenario) + ", " +
      std::to_string(replicates) + " replicates: conv " + std::to_string(conv) +
      "/" + std::to_string(replicates) + ", |bias phi| " +
      std::to_string(worst_phi_bias) + " (tol " + std::to_string(phi_bias_tol) +
      ")";
  if (beta_bias_tol > 0)
    summary += ", |bias beta| " + std::to_string(worst_beta_bias) + " (tol " +
               std::to_string(beta_bias_tol) + ")";
  if (per_fit_budget_s > 0)
    summary += ", slowest fit " + std::to_string(max_fit_s) + " s";
  return report(criterion, c, elapsed, summary);
}

// ---- criterion 7: structural invariants ---------------------------------

int criterion7() {
  const auto t0 = clock_type::now();
  Checker c;

  {
    const Eigen::MatrixXd Q = rw2_precision(15, 3.1).dense();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(15);
    const Eigen::VectorXd lin = Eigen::VectorXd::LinSpaced(15, 0.0, 14.0);
    c.expect((Q * ones).cwiseAbs().maxCoeff() < 1e-12, "rw2 constant null");
    c.expect((Q * lin).cwiseAbs().maxCoeff() < 1e-12, "rw2 linear null");
  }

  {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ueta(-4.0, 4.0);
    const double h = 2e-6;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const FamilyKind fam = static_cast<FamilyKind>(i % 3);
      const double eta = ueta(rng);
      const double y = fam == FamilyKind::gaussian ? ueta(rng)
                       : fam == FamilyKind::poisson
                           ? static_cast<double>(i % 9)
                           : static_cast<double>(i % 2);
      const double scale = fam == FamilyKind::gaussian ? 0.5 + (i % 5) : 1.0;
      const auto d0 = loglik_eta(fam, y, eta, scale);
      const auto dp = loglik_eta(fam, y, eta + h, scale);
      const auto dm = loglik_eta(fam, y, eta - h, scale);
      const double e1 = std::abs((dp.value - dm.value) / (2 * h) - d0.d1) /
                        std::max(1.0, std::abs(d0.d1));
      const double e2 = std::abs((dp.d1 - dm.d1) / (2 * h) - d0.d2) /
                        std::max(1.0, std::abs(d0.d2));
      worst = std::max({worst, e1, e2});
    }
    c.expect(worst < 1e-6, "loglik_eta FD rel err " + std::to_string(worst));
  }

  {
    ModelSpec spec;
    for (int k = 0; k < 2; ++k) {
      LongSubmodelSpec sm;
      sm.marker_id = k + 1;
      sm.fixed_terms = {Term::Intercept(), Term::Time(0), Term::Covariate(0),
                        Term::Covariate(1)};
      sm.random_terms = {0, 1};
      spec.longitudinal.push_back(sm);
    }
    spec.re_blocks.push_back({{{1, 0}, {1, 1}, {2, 0}, {2, 1}}, 0.0, 1.0});
    SurvSubmodelSpec sv;
    sv.association_terms.push_back({1, AssociationTerm::Kind::current_value, 0});
    sv.association_terms.push_back({2, AssociationTerm::Kind::current_value, 0});
    spec.survival.push_back(sv);
    spec = validate(std::move(spec));
    const HyperMap hyper(spec);
    std::mt19937_64 rng(13);
    std::normal_distribution<double> norm;
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      Eigen::VectorXd theta(hyper.dim());
      for (int i = 0; i < theta.size(); ++i) theta[i] = 0.5 * norm(rng);
      const Eigen::VectorXd back = hyper.from_natural(hyper.to_natural(theta));
      worst = std::max(worst, (theta - back).cwiseAbs().maxCoeff());
    }
    c.expect(worst < 1e-12, "theta round trip " + std::to_string(worst));
  }

  {
    const double lambda = pc_lambda_for(1.0, 0.01);
    double mass = 0.0;
    const int N = 40000;
    const double s_hi = 35.0 / lambda;
    const double ds = s_hi / N;
    for (int i = 0; i < N; ++i) {
      const double s = (i + 0.5) * ds;
      mass += std::exp(pc_prec_logpdf(1.0 / (s * s), lambda)) * 2.0 *
              std::pow(s, -3.0) * ds;
    }
    c.expect(std::abs(mass - 1.0) < 1e-3,
             "pc prior mass " + std::to_string(mass));
  }

  {
    std::vector<SubjectTruth> subjects(2);
    subjects[0].covariates = {0.0, 0.0};
    subjects[0].eta0 = {1.0};
    subjects[0].eta1 = {0.0};
    subjects[1].covariates = {0.0, 0.0};
    subjects[1].eta0 = {0.0};
    subjects[1].eta1 = {0.0};
    const double p1 = std::exp(1.0) / (std::exp(1.0) + 1.0);
    std::mt19937_64 rng(17);
    const int draws = 100000;
    int hits = 0;
    for (int d = 0; d < draws; ++d) {
      const SurvDataset sd =
          permalgo({0.7, 90.0}, {5.0, 0.9}, subjects, {1.0}, {}, rng);
      for (const auto& r : sd.records)
        if (r.event == 1 && r.subject == 1) ++hits;
    }
    const double phat = static_cast<double>(hits) / draws;
    const double se = std::sqrt(p1 * (1.0 - p1) / draws);
    c.expect(std::abs(phat - p1) < 3.0 * se,
             "permalgo assignment " + std::to_string(phat) + " vs " +
                 std::to_string(p1));
  }

  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 60.0, "runtime over 1 min");
  return report(7, c, elapsed,
                "structural invariants (rw2 null space, loglik derivatives, "
                "theta round trip, pc prior mass, permalgo assignment)");
}

// ---- criterion 8: optional real-data reproduction -----------------------

int criterion8() {
  const char* long_csv = std::getenv("JOINTLAP_PBC_LONG");
  const char* surv_csv = std::getenv("JOINTLAP_PBC_SURV");
  if (!long_csv || !surv_csv) {
    std::cout << "criterion 8: SKIP — optional clinical dataset not provided "
                 "(set JOINTLAP_PBC_LONG and JOINTLAP_PBC_SURV)\n";
    return 0;
  }
  const auto t0 = clock_type::now();
  Checker c;
  const std::string cmd = std::string("./jointlap fit --config "
                                      "configs/pbc_model.json --long ") +
                          long_csv + " --surv " + surv_csv +
                          " --out /tmp/jointlap_pbc";
  const int rc = std::system(cmd.c_str());
  c.expect(rc == 0, "fit exited with " + std::to_string(rc));
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 900.0, "runtime over 15 min");
  return report(8, c, elapsed, "clinical five-marker competing-risks fit");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <criterion 1..8 | all>\n";
    return 2;
  }
  const std::string arg = argv[1];
  auto run = [](int k) {
    switch (k) {
      case 1: return criterion1();
      case 2: return criterion2();
      case 3: return criterion3();
      case 4:
        return benchmark_criterion(4, 1, 100, 0.03, 0.02, true, false, 60.0);
      case 5:
        return benchmark_criterion(5, 4, 100, 0.04, 0.0, false, true, 0.0);
      case 6:
        return benchmark_criterion(6, 10, 20, 0.06, 0.0, false, false, 0.0);
      case 7: return criterion7();
      case 8: return criterion8();
      default:
        std::cerr << "unknown criterion\n";
        return 2;
    }
  };
  if (arg == "all") {
    int rc = 0;
    for (int k = 1; k <= 8; ++k) rc |= run(k);
    return rc;
  }
  return run(std::stoi(arg));
}
