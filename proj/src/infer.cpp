#include "jointlap/infer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <random>

#include <json.hpp>

namespace jointlap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

double log1pexp(double x) {
  // log(1 + e^x) without overflow
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

}  // namespace

LoglikDerivs loglik_eta(FamilyKind family, double y, double eta, double scale) {
  LoglikDerivs d;
  switch (family) {
    case FamilyKind::gaussian: {
      const double r = y - eta;
      d.value = 0.5 * (std::log(scale) - kLog2Pi) - 0.5 * scale * r * r;
      d.d1 = scale * r;
      d.d2 = -scale;
      break;
    }
    case FamilyKind::poisson: {
      const double mu = std::exp(eta);
      d.value = y * eta - mu - std::lgamma(y + 1.0);
      d.d1 = y - mu;
      d.d2 = -mu;
      break;
    }
    case FamilyKind::binomial: {
      const double p = sigmoid(eta);
      d.value = y * eta - log1pexp(eta);
      d.d1 = y - p;
      d.d2 = -p * (1.0 - p);
      break;
    }
  }
  return d;
}

namespace {

struct EffectiveRow {
  std::vector<std::pair<int, double>> entries;  // sorted, merged
  double offset = 0.0;
  FamilyKind family = FamilyKind::gaussian;
  double y = 0.0;
  double scale = 1.0;

  double dot(const Eigen::VectorXd& u) const {
    double s = offset;
    for (const auto& [i, v] : entries) s += v * u[i];
    return s;
  }
};

// Folds the association copies into plain design rows at fixed phi.
std::vector<EffectiveRow> effective_rows(const AssembledModel& model,
                                         const HyperNatural& w) {
  std::vector<EffectiveRow> rows;
  rows.reserve(model.terms.size());
  for (const auto& t : model.terms) {
    EffectiveRow r;
    r.family = t.family;
    r.y = t.y;
    r.offset = t.offset;
    if (t.scale_index >= 0) r.scale = w.tau_eps[t.scale_index];
    auto& e = r.entries;
    e = t.a.entries;
    for (const auto& [j, sub] : t.phi_rows)
      for (const auto& [i, v] : sub.entries) e.emplace_back(i, w.phi[j] * v);
    std::sort(e.begin(), e.end());
    size_t out = 0;
    for (size_t i = 0; i < e.size(); ++i) {
      if (out > 0 && e[out - 1].first == e[i].first)
        e[out - 1].second += e[i].second;
      else
        e[out++] = e[i];
    }
    e.resize(out);
    rows.push_back(std::move(r));
  }
  return rows;
}

double latent_objective(const SymSparse& Q, const std::vector<EffectiveRow>& rows,
                        const Eigen::VectorXd& u, double* quad_out = nullptr) {
  const Eigen::VectorXd Qu = Q.lower().selfadjointView<Eigen::Lower>() * u;
  const double quad = u.dot(Qu);
  if (quad_out) *quad_out = quad;
  double ll = 0.0;
  for (const auto& r : rows) {
    const auto d = loglik_eta(r.family, r.y, r.dot(u), r.scale);
    ll += d.value;
  }
  if (!std::isfinite(ll)) return kNegInf;
  return -0.5 * quad + ll;
}

}  // namespace

namespace {

GaussianApprox newton_solve(const AssembledModel& m,
                            const Eigen::VectorXd& theta,
                            const Eigen::VectorXd* warm_start,
                            int max_iterations) {
  const int n = m.index.dim();
  const HyperNatural w = m.hyper.to_natural(theta);
  const SymSparse Q = m.prior_precision(theta);
  const auto rows = effective_rows(m, w);
  const CholFactor Qf = factorize(Q);

  Eigen::VectorXd u = (warm_start && warm_start->size() == n)
                          ? *warm_start
                          : Eigen::VectorXd::Zero(n);
  double f = latent_objective(Q, rows, u);
  if (!std::isfinite(f)) {
    u.setZero();
    f = latent_objective(Q, rows, u);
  }

  GaussianApprox out;
  std::vector<Eigen::Triplet<double>> trip;
  int iter = 0;
  for (;; ++iter) {
    if (iter >= max_iterations)
      throw InnerDivergence("latent Newton did not converge in " +
                            std::to_string(max_iterations) + " iterations");
    // gradient and curvature at u
    Eigen::VectorXd grad =
        -(Q.lower().selfadjointView<Eigen::Lower>() * u).eval();
    trip.clear();
    for (int j = 0; j < Q.lower().outerSize(); ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(Q.lower(), j); it; ++it)
        trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                          it.value());
    for (const auto& r : rows) {
      const auto d = loglik_eta(r.family, r.y, r.dot(u), r.scale);
      const double wgt = -d.d2;
      for (const auto& [i, vi] : r.entries) {
        grad[i] += d.d1 * vi;
        for (const auto& [j, vj] : r.entries)
          if (j <= i) trip.emplace_back(i, j, wgt * vi * vj);
      }
    }
    const SymSparse H(n, trip);
    const CholFactor Hf = factorize(H);

    const double tol = 1e-6 * (1.0 + u.cwiseAbs().maxCoeff());
    bool done = grad.cwiseAbs().maxCoeff() <= tol;

    if (!done) {
      const Eigen::VectorXd delta = Hf.solve(grad);
      double step = 1.0;
      bool improved = false;
      for (int h = 0; h < 50; ++h) {
        const Eigen::VectorXd cand = u + step * delta;
        const double fc = latent_objective(Q, rows, cand);
        if (std::isfinite(fc) && fc > f) {
          u = cand;
          f = fc;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      // H is positive definite so the Newton step ascends; failing to
      // improve at any scale means rounding-limited convergence
      done = !improved;
    }

    if (done) {
      out.mode = u;
      out.curvature = Hf;
      out.logdet_Q = Qf.logdet();
      out.newton_iterations = iter;
      double quad = 0.0, ll = 0.0;
      for (const auto& r : rows)
        ll += loglik_eta(r.family, r.y, r.dot(u), r.scale).value;
      (void)latent_objective(Q, rows, u, &quad);
      out.quad = quad;
      out.loglik = ll;
      return out;
    }
  }
}

}  // namespace

GaussianApprox Engine::inner_newton(const Eigen::VectorXd& theta,
                                    const Eigen::VectorXd* warm_start,
                                    int max_iterations) const {
  // a warm start far from the new mode can stall or blow up the
  // curvature; fall back to a cold start before giving up
  if (warm_start && warm_start->size() == model_->index.dim()) {
    try {
      return newton_solve(*model_, theta, warm_start, max_iterations);
    } catch (const NotPositiveDefinite&) {
    } catch (const InnerDivergence&) {
    }
  }
  return newton_solve(*model_, theta, nullptr, max_iterations);
}

double Engine::log_hyper_post(const Eigen::VectorXd& theta) const {
  try {
    const Eigen::VectorXd* warm =
        warm_mode_ ? &warm_mode_.value() : nullptr;
    const GaussianApprox g = inner_newton(theta, warm);
    warm_mode_ = g.mode;
    const double lp = model_->hyper.log_prior(theta) + 0.5 * g.logdet_Q -
                      0.5 * g.quad + g.loglik - 0.5 * g.curvature.logdet();
    return std::isfinite(lp) ? lp : kNegInf;
  } catch (const NotPositiveDefinite&) {
    return kNegInf;
  } catch (const InnerDivergence&) {
    return kNegInf;
  }
}

namespace {

Eigen::VectorXd fd_gradient(const Engine& eng, const Eigen::VectorXd& theta,
                            double h) {
  const int p = static_cast<int>(theta.size());
  Eigen::VectorXd g(p);
  for (int i = 0; i < p; ++i) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    g[i] = (eng.log_hyper_post(tp) - eng.log_hyper_post(tm)) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const Engine& eng, const Eigen::VectorXd& theta,
                           double h) {
  const int p = static_cast<int>(theta.size());
  Eigen::MatrixXd H(p, p);
  const double f0 = eng.log_hyper_post(theta);
  for (int i = 0; i < p; ++i) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    H(i, i) =
        (eng.log_hyper_post(tp) - 2.0 * f0 + eng.log_hyper_post(tm)) / (h * h);
  }
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < i; ++j) {
      Eigen::VectorXd tpp = theta, tpm = theta, tmp = theta, tmm = theta;
      tpp[i] += h;
      tpp[j] += h;
      tpm[i] += h;
      tpm[j] -= h;
      tmp[i] -= h;
      tmp[j] += h;
      tmm[i] -= h;
      tmm[j] -= h;
      const double v = (eng.log_hyper_post(tpp) - eng.log_hyper_post(tpm) -
                        eng.log_hyper_post(tmp) + eng.log_hyper_post(tmm)) /
                       (4.0 * h * h);
      H(i, j) = H(j, i) = v;
    }
  return H;
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::MatrixXd> Engine::optimize_hyper(
    const Eigen::VectorXd& theta0, const InferenceConfig& cfg, bool* converged,
    int* iterations) const {
  const int p = static_cast<int>(theta0.size());
  Eigen::VectorXd theta = theta0;
  double f = log_hyper_post(theta);
  if (!std::isfinite(f))
    throw InnerDivergence("hyper optimization: infeasible start");
  auto gradient = [&](const Eigen::VectorXd& th) {
    Eigen::VectorXd gr = fd_gradient(*this, th, cfg.grad_step);
    // a perturbed point can be infeasible; drop that component rather
    // than poison the search direction
    for (int i = 0; i < p; ++i)
      if (!std::isfinite(gr[i])) gr[i] = 0.0;
    return gr;
  };
  Eigen::VectorXd g = gradient(theta);
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(p, p);

  bool conv = g.cwiseAbs().maxCoeff() <= cfg.grad_tol;
  int it = 0;
  while (!conv && it < cfg.max_outer_iterations) {
    ++it;
    Eigen::VectorXd dir = Hinv * g;
    if (dir.dot(g) <= 0 || !dir.allFinite()) {
      Hinv.setIdentity();
      dir = g;
    }
    double fnew = kNegInf;
    Eigen::VectorXd cand;
    bool accepted = false;
    auto line_search = [&]() {
      const double slope = dir.dot(g);
      double step = 1.0;
      for (int h = 0; h < 40; ++h) {
        cand = theta + step * dir;
        fnew = log_hyper_post(cand);
        if (std::isfinite(fnew) && fnew >= f + 1e-4 * step * slope) {
          accepted = true;
          return;
        }
        step *= 0.5;
      }
    };
    line_search();
    if (!accepted && !dir.isApprox(g)) {
      Hinv.setIdentity();
      dir = g;
      line_search();
    }
    if (!accepted) {
      // an unimprovable point with the gradient near the FD noise floor
      // is the mode: the attainable gain g^2 / curvature is below the
      // evaluation noise. Re-estimate with a larger step to cut the
      // noise and accept a small multiple of the target tolerance.
      Eigen::VectorXd gc = fd_gradient(*this, theta, 10.0 * cfg.grad_step);
      for (int i = 0; i < p; ++i)
        if (!std::isfinite(gc[i])) gc[i] = 0.0;
      conv = gc.cwiseAbs().maxCoeff() <= 10.0 * cfg.grad_tol;
      break;
    }
    const Eigen::VectorXd s = cand - theta;
    theta = cand;
    f = fnew;
    const Eigen::VectorXd gnew = gradient(theta);
    // BFGS on the negated objective: y = -(gnew - g)
    const Eigen::VectorXd y = g - gnew;
    const double sy = s.dot(y);
    if (sy > 1e-8 * s.norm() * y.norm()) {
      const Eigen::VectorXd Hy = Hinv * y;
      const double yHy = y.dot(Hy);
      Hinv += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
              (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    g = gnew;
    conv = g.cwiseAbs().maxCoeff() <= cfg.grad_tol &&
           s.cwiseAbs().maxCoeff() <= cfg.step_tol;
  }
  if (converged) *converged = conv;
  if (iterations) *iterations = it;
  const Eigen::MatrixXd hess = fd_hessian(*this, theta, 1e-3);
  return {theta, 0.5 * (hess + hess.transpose())};
}

std::vector<HyperPoint> Engine::explore(const Eigen::VectorXd& theta_star,
                                        const Eigen::MatrixXd& hess,
                                        const InferenceConfig& cfg) const {
  std::vector<HyperPoint> pts;
  auto add_point = [&](const Eigen::VectorXd& th) {
    HyperPoint p;
    p.theta = th;
    p.log_post = log_hyper_post(th);
    if (std::isfinite(p.log_post)) {
      p.approx = inner_newton(th, warm_mode_ ? &warm_mode_.value() : nullptr);
      p.marginal_sd = p.approx.marginal_sd();
    }
    pts.push_back(std::move(p));
  };
  add_point(theta_star);

  if (cfg.strategy == Strategy::FULL) {
    const Eigen::MatrixXd neg = -hess;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(neg);
    if (es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0) {
      const int p = static_cast<int>(theta_star.size());
      for (int i = 0; i < p; ++i) {
        const Eigen::VectorXd dir =
            es.eigenvectors().col(i) / std::sqrt(es.eigenvalues()[i]);
        add_point(theta_star + cfg.ccd_z * dir);
        add_point(theta_star - cfg.ccd_z * dir);
      }
    }
  }

  double lmax = kNegInf;
  for (const auto& p : pts)
    if (std::isfinite(p.log_post)) lmax = std::max(lmax, p.log_post);
  double total = 0.0;
  for (auto& p : pts) {
    p.weight = std::isfinite(p.log_post) ? std::exp(p.log_post - lmax) : 0.0;
    total += p.weight;
  }
  if (total > 0)
    for (auto& p : pts) p.weight /= total;
  return pts;
}

double mixture_mean(const MarginalMixture& mix) {
  double m = 0.0;
  for (const auto& c : mix) m += c.weight * c.mean;
  return m;
}

double mixture_sd(const MarginalMixture& mix) {
  const double m = mixture_mean(mix);
  double v = 0.0;
  for (const auto& c : mix)
    v += c.weight * (c.sd * c.sd + c.mean * c.mean);
  return std::sqrt(std::max(v - m * m, 0.0));
}

double mixture_quantile(const MarginalMixture& mix, double p) {
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  for (const auto& c : mix) {
    if (c.weight <= 0) continue;
    lo = std::min(lo, c.mean - 12.0 * std::max(c.sd, 1e-12));
    hi = std::max(hi, c.mean + 12.0 * std::max(c.sd, 1e-12));
  }
  auto cdf = [&](double x) {
    double s = 0.0;
    for (const auto& c : mix) {
      if (c.weight <= 0) continue;
      s += c.sd > 0 ? c.weight * std_normal_cdf((x - c.mean) / c.sd)
                    : (x >= c.mean ? c.weight : 0.0);
    }
    return s;
  };
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-12 * (1.0 + std::abs(mid))) break;
  }
  return 0.5 * (lo + hi);
}

std::vector<MarginalMixture> latent_marginals(
    const std::vector<HyperPoint>& points, const std::vector<int>& coords) {
  std::vector<MarginalMixture> out(coords.size());
  for (size_t k = 0; k < coords.size(); ++k) {
    const int c = coords[k];
    for (const auto& p : points) {
      if (p.weight <= 0) continue;
      out[k].push_back({p.weight, p.approx.mode[c], p.marginal_sd[c]});
    }
  }
  return out;
}

namespace {

double empirical_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double idx = p * (static_cast<double>(v.size()) - 1.0);
  const size_t lo = static_cast<size_t>(idx);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

struct NaturalFn {
  std::string name;
  std::function<double(const HyperNatural&)> eval;
};

std::vector<NaturalFn> natural_functions(const ModelSpec& spec) {
  std::vector<NaturalFn> fns;
  int g = 0;
  for (const auto& sm : spec.longitudinal) {
    if (sm.family.kind != FamilyKind::gaussian) continue;
    const int gi = g++;
    fns.push_back({"sigma_eps" + std::to_string(sm.marker_id),
                   [gi](const HyperNatural& w) {
                     return 1.0 / std::sqrt(w.tau_eps[gi]);
                   }});
  }
  for (size_t b = 0; b < spec.re_blocks.size(); ++b) {
    const auto& blk = spec.re_blocks[b];
    std::vector<std::string> lab;
    for (const auto& [mk, pos] : blk.members)
      lab.push_back("b" + std::to_string(mk) + std::to_string(pos));
    for (int i = 0; i < blk.dim(); ++i) {
      const size_t bb = b;
      const int ii = i;
      fns.push_back({"sigma2_" + lab[i], [bb, ii](const HyperNatural& w) {
                       return w.re_cov[bb](ii, ii);
                     }});
    }
    for (int i = 0; i < blk.dim(); ++i)
      for (int j = i + 1; j < blk.dim(); ++j) {
        const size_t bb = b;
        const int ii = i, jj = j;
        fns.push_back({"cov_" + lab[i] + "_" + lab[j],
                       [bb, ii, jj](const HyperNatural& w) {
                         return w.re_cov[bb](ii, jj);
                       }});
      }
  }
  for (size_t m = 0; m < spec.survival.size(); ++m) {
    const size_t mm = m;
    fns.push_back({"sigma_base" + std::to_string(m + 1),
                   [mm](const HyperNatural& w) {
                     return 1.0 / std::sqrt(w.tau_baseline[mm]);
                   }});
  }
  int nphi = 0;
  for (const auto& sv : spec.survival)
    nphi += static_cast<int>(sv.association_terms.size());
  for (int j = 0; j < nphi; ++j) {
    const int jj = j;
    fns.push_back({"phi" + std::to_string(j + 1),
                   [jj](const HyperNatural& w) { return w.phi[jj]; }});
  }
  return fns;
}

Eigen::MatrixXd safe_chol(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  return Eigen::MatrixXd::Zero(cov.rows(), cov.cols());
}

int pick_component(const std::vector<HyperPoint>& points, double unif) {
  double acc = 0.0;
  for (size_t h = 0; h < points.size(); ++h) {
    acc += points[h].weight;
    if (unif <= acc) return static_cast<int>(h);
  }
  return static_cast<int>(points.size()) - 1;
}

}  // namespace

std::vector<SummaryRow> hyper_summaries(const AssembledModel& model,
                                        const std::vector<HyperPoint>& points,
                                        const Eigen::MatrixXd& hyper_cov,
                                        int n_samples, std::uint64_t seed) {
  const auto fns = natural_functions(model.spec);
  const Eigen::MatrixXd C = safe_chol(hyper_cov);
  const int p = static_cast<int>(points.front().theta.size());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;

  std::vector<std::vector<double>> samples(fns.size());
  for (auto& s : samples) s.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    const int h = pick_component(points, ud(rng));
    Eigen::VectorXd z(p);
    for (int i = 0; i < p; ++i) z[i] = nd(rng);
    const Eigen::VectorXd theta = points[h].theta + C * z;
    const HyperNatural w = model.hyper.to_natural(theta);
    for (size_t k = 0; k < fns.size(); ++k)
      samples[k].push_back(fns[k].eval(w));
  }

  std::vector<SummaryRow> rows;
  for (size_t k = 0; k < fns.size(); ++k) {
    SummaryRow r;
    r.name = fns[k].name;
    double m = 0.0;
    for (double v : samples[k]) m += v;
    m /= static_cast<double>(samples[k].size());
    double v2 = 0.0;
    for (double v : samples[k]) v2 += (v - m) * (v - m);
    r.mean = m;
    r.sd = std::sqrt(v2 / std::max<size_t>(samples[k].size() - 1, 1));
    r.q025 = empirical_quantile(samples[k], 0.025);
    r.q975 = empirical_quantile(samples[k], 0.975);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<JointDraw> sample_joint_posterior(
    const std::vector<HyperPoint>& points, const Eigen::MatrixXd& hyper_cov,
    int n_samples, std::uint64_t seed) {
  const Eigen::MatrixXd C = safe_chol(hyper_cov);
  const int p = static_cast<int>(points.front().theta.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;

  std::vector<JointDraw> draws;
  draws.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    const int h = pick_component(points, ud(rng));
    const auto& pt = points[h];
    Eigen::VectorXd z(p);
    for (int i = 0; i < p; ++i) z[i] = nd(rng);
    JointDraw d;
    d.theta = pt.theta + C * z;
    Eigen::VectorXd zu(pt.approx.mode.size());
    for (int i = 0; i < zu.size(); ++i) zu[i] = nd(rng);
    d.u = pt.approx.mode + pt.approx.curvature.solve_white(zu);
    draws.push_back(std::move(d));
  }
  return draws;
}

FitResult Engine::fit(const InferenceConfig& cfg) const {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto secs = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };

  FitResult res;
  res.strategy = cfg.strategy;
  const int p = model_->hyper.dim();
  try {
    const Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(p);
    bool conv = false;
    int iters = 0;
    const auto t1 = clock::now();
    auto [theta_star, hess] = optimize_hyper(theta0, cfg, &conv, &iters);
    const auto t2 = clock::now();
    res.theta_mode = theta_star;
    res.hyper_hessian = hess;
    res.converged = conv;
    res.outer_iterations = iters;
    if (!conv) res.failure_reason = "hyper optimization did not converge";

    res.points = explore(theta_star, hess, cfg);
    const auto t3 = clock::now();
    res.log_marginal = res.points.front().log_post;
    if (!std::isfinite(res.log_marginal) || res.points.front().weight <= 0) {
      res.converged = false;
      res.failure_reason = "posterior not evaluable at the hyper mode";
      res.timings.total_s = secs(t0, clock::now());
      return res;
    }

    const auto& idx = model_->index;
    std::vector<int> coords;
    const int first = cfg.skip_latent_re_summaries && idx.n_causes > 0
                          ? idx.baseline_offset(0)
                          : (cfg.skip_latent_re_summaries && idx.n_causes == 0
                                 ? idx.n_subjects * idx.re_dim
                                 : 0);
    for (int c = first; c < idx.dim(); ++c) coords.push_back(c);
    res.latent_mixtures = latent_marginals(res.points, coords);

    const auto names = idx.names(model_->spec);
    for (size_t k = 0; k < coords.size(); ++k) {
      SummaryRow r;
      r.name = names[coords[k]];
      const auto& mix = res.latent_mixtures[k];
      r.mean = mixture_mean(mix);
      r.sd = mixture_sd(mix);
      r.q025 = mixture_quantile(mix, 0.025);
      r.q975 = mixture_quantile(mix, 0.975);
      res.latent_summaries.push_back(std::move(r));
    }

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-hess);
    if (es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0)
      cov = (-hess).inverse();
    res.hyper_summaries = hyper_summaries(*model_, res.points, cov,
                                          cfg.hyper_samples, cfg.seed);
    const auto t4 = clock::now();
    res.timings.optimize_s = secs(t1, t2);
    res.timings.explore_s = secs(t2, t3);
    res.timings.summarize_s = secs(t3, t4);
  } catch (const std::exception& e) {
    res.converged = false;
    res.failure_reason = e.what();
  }
  res.timings.total_s = secs(t0, clock::now());
  return res;
}

// ---- serialization -------------------------------------------------------

namespace {

nlohmann::json summary_table(const std::vector<SummaryRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"name", r.name},
                   {"mean", r.mean},
                   {"sd", r.sd},
                   {"q025", r.q025},
                   {"q975", r.q975}});
  return arr;
}

}  // namespace

std::string fit_to_json(const FitResult& fit, const AssembledModel& model) {
  nlohmann::json j;
  j["strategy"] = fit.strategy == Strategy::EB ? "eb" : "full";
  j["converged"] = fit.converged;
  if (!fit.failure_reason.empty()) j["failure_reason"] = fit.failure_reason;
  j["outer_iterations"] = fit.outer_iterations;
  j["log_marginal"] = fit.log_marginal;

  const auto hnames = model.hyper.names();
  nlohmann::json mode = nlohmann::json::object();
  for (int i = 0; i < fit.theta_mode.size(); ++i)
    mode[hnames[i]] = fit.theta_mode[i];
  j["theta_mode"] = mode;

  nlohmann::json pts = nlohmann::json::array();
  for (const auto& pt : fit.points) {
    nlohmann::json pj;
    pj["log_post"] = pt.log_post;
    pj["weight"] = pt.weight;
    pj["theta"] = std::vector<double>(pt.theta.data(),
                                      pt.theta.data() + pt.theta.size());
    pts.push_back(std::move(pj));
  }
  j["hyper_points"] = pts;

  j["latent"] = summary_table(fit.latent_summaries);
  j["hyper"] = summary_table(fit.hyper_summaries);

  j["timings"] = {{"optimize_s", fit.timings.optimize_s},
                  {"explore_s", fit.timings.explore_s},
                  {"summarize_s", fit.timings.summarize_s},
                  {"total_s", fit.timings.total_s}};
  return j.dump(2);
}

void write_fit_json(const FitResult& fit, const AssembledModel& model,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path);
  out << fit_to_json(fit, model) << "\n";
  if (!out) throw IoError("failed writing output file: " + path);
}

}  // namespace jointlap
