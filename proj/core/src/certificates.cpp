#include "hymem/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace hymem {

namespace {

constexpr std::size_t kMaxStoredViolations = 25;

double psi_sq(const Vector& x, std::size_t dim) {
  if (dim == 0 || dim >= static_cast<std::size_t>(x.size())) {
    return x.squaredNorm();
  }
  return x.head(static_cast<Eigen::Index>(dim)).squaredNorm();
}

double weight(const std::vector<double>& w, int mode, const char* what) {
  if (mode < 1 || static_cast<std::size_t>(mode) > w.size()) {
    if (w.size() == 1) {
      return w.front();
    }
    std::ostringstream msg;
    msg << "KrasovskiiFunctional: no " << what << " weight for mode " << mode;
    throw std::out_of_range(msg.str());
  }
  return w[static_cast<std::size_t>(mode - 1)];
}

}  // namespace

void KrasovskiiFunctional::validate() const {
  if (sigma.empty() || sigma.size() != mu.size()) {
    throw std::invalid_argument("KrasovskiiFunctional: sigma and mu must be non-empty and per mode");
  }
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!(sigma[i] > 0.0) || !(mu[i] >= 0.0)) {
      throw std::invalid_argument("KrasovskiiFunctional: need sigma > 0 and mu >= 0");
    }
  }
  if (!(eta >= 0.0) || !(delay >= 0.0)) {
    throw std::invalid_argument("KrasovskiiFunctional: need eta >= 0 and r >= 0");
  }
}

double KrasovskiiFunctional::sigma_for(int mode) const { return weight(sigma, mode, "sigma"); }
double KrasovskiiFunctional::mu_for(int mode) const { return weight(mu, mode, "mu"); }
double KrasovskiiFunctional::min_sigma() const { return *std::min_element(sigma.begin(), sigma.end()); }
double KrasovskiiFunctional::max_sigma() const { return *std::max_element(sigma.begin(), sigma.end()); }
double KrasovskiiFunctional::max_mu() const { return *std::max_element(mu.begin(), mu.end()); }

double eval_functional(const KrasovskiiFunctional& v, const MemoryArc& arc, int mode) {
  const double sigma = v.sigma_for(mode);
  const double mu = v.mu_for(mode);
  const std::size_t dim = v.continuous_dim;
  double value = sigma * psi_sq(arc.current(), dim);
  if (mu == 0.0 || v.delay == 0.0) {
    return value;
  }
  const double r = v.delay;
  if (arc.depth_used() + 1e-9 * std::max(1.0, r) < r) {
    throw InsufficientHistory("eval_functional: arc does not cover [-r, 0]");
  }
  const double snap = 1e-9 * std::max(1.0, r);
  auto integrand = [&](double s, const Vector& x) { return std::exp(v.eta * s) * psi_sq(x, dim); };

  // Trapezoid per branch; each branch covers [start, end] with k(s) maximal,
  // so panels never cross a jump.
  double integral = 0.0;
  for (std::size_t b = 0; b < arc.branch_count(); ++b) {
    const std::size_t n = arc.branch_size(b);
    const double end = arc.branch_s(b, n - 1);
    if (end <= -r + snap) {
      break;
    }
    std::size_t i = 0;
    double s_prev = 0.0;
    double f_prev = 0.0;
    if (arc.branch_s(b, 0) < -r - snap) {
      while (i < n && arc.branch_s(b, i) <= -r + snap) {
        ++i;
      }
      s_prev = -r;
      f_prev = integrand(-r, arc.sample_at(-r, arc.branch_k(b)));
    } else {
      s_prev = arc.branch_s(b, 0);
      f_prev = integrand(s_prev, arc.branch_value(b, 0));
      i = 1;
    }
    for (; i < n; ++i) {
      const double s = arc.branch_s(b, i);
      const double f = integrand(s, arc.branch_value(b, i));
      integral += 0.5 * (s - s_prev) * (f + f_prev);
      s_prev = s;
      f_prev = f;
    }
  }
  return value + mu * integral;
}

int mode_of(const Vector& x, const std::optional<std::size_t>& mode_component) {
  if (!mode_component) {
    return 1;
  }
  return static_cast<int>(std::lround(x(static_cast<Eigen::Index>(*mode_component))));
}

void CertificateSpec::validate() const {
  functional.validate();
  if (!alpha1.is_k_infinity() || !alpha2.is_k_infinity()) {
    throw std::invalid_argument("certificate: alpha1 and alpha2 must be K-infinity");
  }
  if (decay_rate && !(*decay_rate > 0.0 && *decay_rate <= 1.0)) {
    throw std::invalid_argument("certificate: decay rate v must lie in (0, 1]");
  }
  if (storage_rate && !(*storage_rate >= 0.0)) {
    throw std::invalid_argument("certificate: storage rate must be nonnegative");
  }
}

CertificateSpec sandwich_certificate(const KrasovskiiFunctional& v) {
  v.validate();
  CertificateSpec cert;
  cert.functional = v;
  cert.alpha1 = ClassKFn::power(v.min_sigma(), 2.0);
  cert.alpha2 = ClassKFn::power(v.max_sigma() + v.max_mu() * v.delay, 2.0);
  return cert;
}

double numeric_dini(const KrasovskiiFunctional& v, const SolutionRecord& solution, const HybridTimePoint& at,
                    double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("numeric_dini: h must be positive");
  }
  SampleIndex p0;
  SampleIndex p1;
  try {
    p0 = solution.locate(at);
  } catch (const ArcRangeError&) {
    throw DiniError("numeric_dini: (t, j) is not a recorded point");
  }
  try {
    p1 = solution.locate({at.t + h, at.j});
  } catch (const ArcRangeError&) {
    throw DiniError("numeric_dini: (t + h, j) leaves the flow interval (jump or end of record)");
  }
  const auto& mc = solution.meta().mode_component;
  const double v0 = eval_functional(v, solution.arc_at(p0), mode_of(solution.state(p0), mc));
  const double v1 = eval_functional(v, solution.arc_at(p1), mode_of(solution.state(p1), mc));
  return (v1 - v0) / (solution.time(p1) - solution.time(p0));
}

FunctionalTrace trace_functional(const KrasovskiiFunctional& v, const SolutionRecord& solution) {
  FunctionalTrace tr;
  const auto& mc = solution.meta().mode_component;
  const std::size_t n = solution.point_count();
  tr.points.reserve(n);
  tr.values.reserve(n);
  solution.for_each_point([&](SampleIndex p) {
    tr.points.push_back(p);
    tr.values.push_back(eval_functional(v, solution.arc_at(p), mode_of(solution.state(p), mc)));
  });
  tr.dini.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (solution.has_successor(tr.points[i])) {
      const double dt = solution.time(tr.points[i + 1]) - solution.time(tr.points[i]);
      tr.dini[i] = (tr.values[i + 1] - tr.values[i]) / dt;
    }
  }
  return tr;
}

std::vector<double> jump_increments(const KrasovskiiFunctional& v, const SolutionRecord& solution) {
  const auto tr = trace_functional(v, solution);
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < tr.points.size(); ++i) {
    if (tr.points[i + 1].piece != tr.points[i].piece) {
      out.push_back(tr.values[i + 1] - tr.values[i]);
    }
  }
  return out;
}

double lambda_max_sym(const Matrix& a) {
  const Matrix s = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double spectral_norm(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

FlowBoundCoefficients flow_bound_coefficients(const QuadcopterParams& params, const KrasovskiiFunctional& v,
                                              int mode, double eps1, double eps2) {
  if (!(eps1 > 0.0) || !(eps2 > 0.0)) {
    throw std::invalid_argument("flow bound: eps1 and eps2 must be positive");
  }
  const double sigma = v.sigma_for(mode);
  const double mu = v.mu_for(mode);
  const double lam = lambda_max_sym(quadcopter::drift_matrix(params));
  const double nb = spectral_norm(quadcopter::input_matrix(params));
  const double nk = spectral_norm(quadcopter::feedback_gain(params, mode));
  FlowBoundCoefficients c;
  c.c0 = 2.0 * sigma * lam + mu + eps1 + eps2;
  c.c_r = sigma * sigma * nb * nb * nk * nk / eps1 - mu * std::exp(-v.eta * params.delay);
  c.c_u = sigma * sigma * nb * nb / eps2;
  return c;
}

double analytic_flow_bound(const QuadcopterParams& params, const CertificateSpec& cert, double eps1, double eps2,
                           const MemoryArc& arc, const Vector& u) {
  const Vector& x = arc.current();
  const int mode = static_cast<int>(std::lround(x(quadcopter::kModeIndex)));
  const auto c = flow_bound_coefficients(params, cert.functional, mode, eps1, eps2);
  const double psi0 = x.head(quadcopter::kPsiDim).squaredNorm();
  const double psir = arc.eval_delayed(-params.delay).head(quadcopter::kPsiDim).squaredNorm();
  return c.c0 * psi0 + c.c_r * psir + c.c_u * u.squaredNorm();
}

void ConditionReport::record(std::size_t run, const HybridTimePoint& at, double lhs, double rhs, double slack) {
  ++checked;
  const double margin = rhs - lhs;
  worst_margin = std::min(worst_margin, margin);
  if (lhs > rhs + tol + slack || std::isnan(lhs) || std::isnan(rhs)) {
    pass = false;
    ++violation_count;
    if (violations.size() < kMaxStoredViolations) {
      violations.push_back({run, at, lhs, rhs, margin});
    }
  }
}

void CheckReport::finalize() {
  pass = std::all_of(conditions.begin(), conditions.end(), [](const ConditionReport& c) { return c.pass; });
}

double default_check_tol(double h) noexcept { return 1e-3 * h / 0.005; }

namespace {

enum class FlowRule { Iiss, Exponential, Storage };

ConditionReport make_condition(const std::string& name, double tol) {
  ConditionReport c;
  c.name = name;
  c.tol = tol;
  return c;
}

CheckReport check_lkf_conditions(const CertificateSpec& cert, const std::vector<const SolutionRecord*>& runs,
                                 double tol, FlowRule rule, const std::string& name) {
  cert.validate();
  CheckReport report;
  report.name = name;
  report.tol = tol;
  ConditionReport sandwich = make_condition("sandwich_upper", tol);
  ConditionReport sandwich_lo = make_condition("sandwich_lower", tol);
  ConditionReport flow = make_condition("flow_dissipation", tol);
  ConditionReport jump = make_condition("jump_nonincrease", tol);
  double rate = 0.0;
  const ClassKFn* supply = &cert.rho;
  if (rule == FlowRule::Exponential) {
    if (!cert.decay_rate) {
      throw std::invalid_argument("check_exponential: certificate has no decay rate v");
    }
    rate = *cert.decay_rate;
    report.parameters["v"] = rate;
  } else if (rule == FlowRule::Storage) {
    if (!cert.storage_rate) {
      throw std::invalid_argument("check_storage: certificate has no storage rate");
    }
    rate = *cert.storage_rate;
    if (cert.rho_hat) {
      supply = &*cert.rho_hat;
    }
    report.parameters["storage_rate"] = rate;
  }
  report.parameters["sigma_1"] = cert.functional.sigma.front();
  report.parameters["mu_1"] = cert.functional.mu.front();
  report.parameters["eta"] = cert.functional.eta;
  report.parameters["r"] = cert.functional.delay;

  for (std::size_t run = 0; run < runs.size(); ++run) {
    const SolutionRecord& rec = *runs[run];
    const auto tr = trace_functional(cert.functional, rec);
    const TargetSet& w = rec.meta().target;
    for (std::size_t i = 0; i < tr.points.size(); ++i) {
      const SampleIndex p = tr.points[i];
      const HybridTimePoint at = rec.point(p);
      const double v = tr.values[i];
      const double x_norm = point_distance(rec.state(p), w);
      const double arc_norm = sup_norm_to_set(rec.arc_at(p), w);
      sandwich_lo.record(run, at, cert.alpha1(x_norm), v);
      sandwich.record(run, at, v, cert.alpha2(arc_norm));
      if (!std::isnan(tr.dini[i])) {
        const double u_norm = rec.input(p).norm();
        double rhs = (*supply)(u_norm);
        if (rule == FlowRule::Iiss) {
          rhs -= cert.alpha3(x_norm);
        } else {
          rhs -= rate * v;
        }
        flow.record(run, at, tr.dini[i], rhs);
      } else if (i + 1 < tr.points.size() && tr.points[i + 1].piece != p.piece) {
        jump.record(run, at, tr.values[i + 1], v);
      }
    }
  }
  ConditionReport merged = sandwich_lo;
  merged.name = "sandwich";
  merged.checked = sandwich.checked;
  merged.pass = sandwich.pass && sandwich_lo.pass;
  merged.violation_count += sandwich.violation_count;
  merged.worst_margin = std::min(sandwich.worst_margin, sandwich_lo.worst_margin);
  for (const auto& v : sandwich.violations) {
    if (merged.violations.size() < kMaxStoredViolations) {
      merged.violations.push_back(v);
    }
  }
  report.conditions = {merged, flow, jump};
  report.finalize();
  return report;
}

}  // namespace

CheckReport check_iiss_lkf(const CertificateSpec& cert, const std::vector<const SolutionRecord*>& runs, double tol) {
  return check_lkf_conditions(cert, runs, tol, FlowRule::Iiss, "iiss_lkf");
}

CheckReport check_exponential(const CertificateSpec& cert, const std::vector<const SolutionRecord*>& runs,
                              double tol) {
  return check_lkf_conditions(cert, runs, tol, FlowRule::Exponential, "exponential_decay");
}

CheckReport check_storage(const CertificateSpec& cert, const std::vector<const SolutionRecord*>& runs, double tol) {
  return check_lkf_conditions(cert, runs, tol, FlowRule::Storage, "storage_functional");
}

CheckReport check_jump_nonincrease(const KrasovskiiFunctional& v, const std::vector<const SolutionRecord*>& runs,
                                   double tol) {
  CheckReport report;
  report.name = "jump_nonincrease";
  report.tol = tol;
  ConditionReport cond = make_condition("jump_nonincrease", tol);
  double max_change = 0.0;
  for (std::size_t run = 0; run < runs.size(); ++run) {
    const SolutionRecord& rec = *runs[run];
    const auto tr = trace_functional(v, rec);
    for (std::size_t i = 0; i + 1 < tr.points.size(); ++i) {
      if (tr.points[i + 1].piece != tr.points[i].piece) {
        cond.record(run, rec.point(tr.points[i]), tr.values[i + 1], tr.values[i]);
        max_change = std::max(max_change, std::abs(tr.values[i + 1] - tr.values[i]));
      }
    }
  }
  report.statistics["max_abs_change"] = max_change;
  report.conditions = {cond};
  report.finalize();
  return report;
}

CheckReport flow_bound_audit(const QuadcopterParams& params, const CertificateSpec& cert, double eps1, double eps2,
                             const std::vector<const SolutionRecord*>& runs, double tol) {
  CheckReport report;
  report.name = "flow_bound_audit";
  report.tol = tol;
  report.parameters = {{"eps1", eps1},
                       {"eps2", eps2},
                       {"sigma_1", cert.functional.sigma.front()},
                       {"mu_1", cert.functional.mu.front()},
                       {"eta", cert.functional.eta},
                       {"r", cert.functional.delay}};
  ConditionReport cond = make_condition("dini_below_bound", tol);
  double max_slack = 0.0;
  for (std::size_t run = 0; run < runs.size(); ++run) {
    const SolutionRecord& rec = *runs[run];
    const auto tr = trace_functional(cert.functional, rec);
    const double h = rec.meta().options.step;
    for (std::size_t i = 0; i < tr.points.size(); ++i) {
      if (std::isnan(tr.dini[i])) {
        continue;
      }
      // Local Lipschitz estimate of the Dini sequence from neighbours in the same interval.
      double lip = 0.0;
      if (i > 0 && !std::isnan(tr.dini[i - 1])) {
        lip = std::max(lip, std::abs(tr.dini[i] - tr.dini[i - 1]) / h);
      }
      if (i + 1 < tr.points.size() && !std::isnan(tr.dini[i + 1])) {
        lip = std::max(lip, std::abs(tr.dini[i + 1] - tr.dini[i]) / h);
      }
      const double slack = 2.0 * h * lip;
      max_slack = std::max(max_slack, slack);
      const SampleIndex p = tr.points[i];
      const double bound = analytic_flow_bound(params, cert, eps1, eps2, rec.arc_at(p), rec.input(p));
      cond.record(run, rec.point(p), tr.dini[i], bound, slack);
    }
  }
  report.statistics["max_discretization_slack"] = max_slack;
  report.conditions = {cond};
  report.finalize();
  return report;
}

}  // namespace hymem
