// Acceptance suite: one PASS/FAIL line per criterion at the stated tolerances.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "test_support.hpp"

using namespace hymem;
using namespace hymem::test;

namespace {

int failures = 0;

void verdict(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %2d: %s | %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  if (!pass) {
    ++failures;
  }
}

void info(const std::string& s) { std::printf("INFO %s\n", s.c_str()); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Tail {
  double min = INFINITY;
  double max = -INFINITY;
  double mean = 0.0;
};

// Statistics of component k (or |x|_W when k < 0) over t in [t0, t1].
Tail tail_stats(const SolutionRecord& rec, int k, double t0, double t1) {
  Tail out;
  double sum = 0.0;
  std::size_t n = 0;
  rec.for_each_point([&](SampleIndex i) {
    const double t = rec.time(i);
    if (t < t0 - 1e-12 || t > t1 + 1e-12) {
      return;
    }
    const double v = k < 0 ? point_distance(rec.state(i), rec.meta().target) : rec.state(i)(k);
    out.min = std::min(out.min, v);
    out.max = std::max(out.max, v);
    sum += v;
    ++n;
  });
  out.mean = n > 0 ? sum / static_cast<double>(n) : NAN;
  return out;
}

std::vector<const SolutionRecord*> ptrs(const std::vector<SolutionRecord>& v) {
  std::vector<const SolutionRecord*> out;
  for (const auto& r : v) {
    out.push_back(&r);
  }
  return out;
}

double dde_max_error(double h, double horizon) {
  const DdeReference ref(0.0, -1.0, 1.0, 1.0, horizon);
  const auto sys = linear_dde_system(0.0, -1.0, 1.0);
  SimOptions o;
  o.step = h;
  o.max_time = horizon;
  const auto rec = simulate(sys, make_constant_arc(vec({1.0}), 1.0, h), InputSignal::zero(1), o);
  double e = 0.0;
  rec.for_each_point([&](SampleIndex i) { e = std::max(e, std::abs(rec.state(i)(0) - ref(rec.time(i)))); });
  return e;
}

// One randomized scenario of the property sweep; returns the first failed property or "".
std::string sweep_case(std::mt19937& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
  QuadcopterParams p;
  p.mass = uni(0.8, 2.0);
  p.drag = uni(0.05, 0.5);
  p.u_max = uni(0.5, 2.0);
  p.kp1 = uni(2.0, 6.0);
  p.kd1 = uni(0.8, 2.0);
  p.kp2 = uni(2.0, 6.0);
  p.kd2 = uni(0.8, 2.0);
  p.delay = std::vector<double>{0.02, 0.05, 0.1}[rng() % 3];
  p.timer_bound = std::vector<double>{0.1, 0.2, 0.25}[rng() % 3];
  const double h = 0.005;
  const auto sys = quadcopter_system(p);

  // Random smooth initial arc rescaled to a sup norm in [0.1, 5].
  Vector a(6);
  Vector b(6);
  for (int i = 0; i < 6; ++i) {
    a(i) = uni(-1.0, 1.0);
    b(i) = uni(-1.0, 1.0);
  }
  const double omega = uni(0.0, 4.0);
  const int mode = 1 + static_cast<int>(rng() % 2);
  auto shape = [&](double s) { return Vector(a + b * std::sin(omega * s)); };
  double sup = 0.0;
  for (double s = -p.delay_depth(); s <= 0.0; s += h) {
    sup = std::max(sup, shape(s).norm());
  }
  const double scale = uni(0.1, 5.0) / std::max(sup, 1e-9);
  const MemoryArc init = make_sampled_arc(
      [&](double s) {
        Vector x = Vector::Zero(8);
        x.head(6) = scale * shape(s);
        x(6) = mode;
        return x;
      },
      p.delay_depth(), h);
  const double target_norm = sup_norm_to_set(init, sys.target);
  if (target_norm < 0.1 - 1e-6 || target_norm > 5.0 + 1e-6) {
    return "initial norm out of range";
  }

  InputSignal u = InputSignal::zero(3);
  switch (rng() % 3) {
    case 0:
      u = InputSignal::constant(vec({uni(-2, 2), uni(-2, 2), uni(-2, 2)}));
      break;
    case 1:
      u = InputSignal::exp_decay(vec({uni(-2, 2), uni(-2, 2), uni(-2, 2)}), uni(0.1, 2.0));
      break;
    default:
      u = InputSignal::table({0.0, 1.0, 2.5}, {vec({uni(-2, 2), 0, 0}), vec({0, uni(-2, 2), 0}),
                                               vec({0, 0, uni(-2, 2)})});
  }
  SimOptions o;
  o.step = h;
  o.max_time = 5.0;
  const auto rec = simulate(sys, init, u, o);

  // Solution-pair audit.
  const auto audit = audit_solution_pair(sys, rec);
  if (!audit.pass) {
    return "solution-pair audit: " + (audit.failures.empty() ? std::string() : audit.failures.front());
  }

  // Comparison-function inverse round trip.
  const double tol = 1e-10;
  for (int k = 0; k < 20; ++k) {
    const ClassKFn f = random_class_k(rng);
    const double y = f(uni(0.0, 20.0));
    if (y < f.supremum() && std::abs(f(numeric_inverse(f, y, tol)) - y) > 10.0 * tol) {
      return "inverse round trip: " + f.describe();
    }
  }

  // Energy trace monotonicity.
  const auto e = input_energy(rec, random_class_k(rng));
  for (std::size_t i = 1; i < e.energy.size(); ++i) {
    if (e.energy[i] < e.energy[i - 1]) {
      return "energy decreased";
    }
  }

  // Dini-integral reconstruction on every flow interval.
  KrasovskiiFunctional v;
  v.sigma = {uni(0.5, 2.0), uni(0.5, 2.0)};
  v.mu = {uni(0.0, 2.0), uni(0.0, 2.0)};
  v.eta = uni(0.0, 3.0);
  v.delay = p.delay;
  v.continuous_dim = 6;
  const auto tr = trace_functional(v, rec);
  std::size_t start = 0;
  for (std::size_t i = 0; i < tr.points.size(); ++i) {
    const bool last = i + 1 == tr.points.size() || tr.points[i + 1].piece != tr.points[i].piece;
    if (!last) {
      continue;
    }
    double integral = 0.0;
    double dmax = 0.0;
    for (std::size_t k = start; k + 1 < i; ++k) {
      integral += 0.5 * h * (tr.dini[k] + tr.dini[k + 1]);
      dmax = std::max({dmax, std::abs(tr.dini[k]), std::abs(tr.dini[k + 1])});
    }
    if (i > start) {
      integral += 0.5 * h * tr.dini[start] + 0.5 * h * tr.dini[i - 1];
      const double err = std::abs(tr.values[i] - tr.values[start] - integral);
      if (err > h * dmax + 1e-12) {
        return "Dini reconstruction error " + fmt("%.3g", err);
      }
    }
    start = i + 1;
  }

  // Quadrature of the functional converges at second order.
  const double amp = uni(0.5, 2.0);
  const double rate = uni(0.5, 3.0);
  KrasovskiiFunctional q;
  q.sigma = {1.0};
  q.mu = {uni(0.5, 2.0)};
  q.eta = uni(0.5, 3.0);
  q.delay = 0.5;
  q.continuous_dim = 1;
  const double exact =
      amp * amp + q.mu[0] * amp * amp * (1.0 - std::exp(-(q.eta + 2.0 * rate) * 0.5)) / (q.eta + 2.0 * rate);
  auto qerr = [&](double step) {
    const auto arc = make_sampled_arc([&](double s) { return vec({amp * std::exp(rate * s)}); }, 0.5, step);
    return std::abs(eval_functional(q, arc, 1) - exact);
  };
  const double ratio = qerr(0.01) / qerr(0.005);
  if (ratio < 3.5 || ratio > 4.5) {
    return "quadrature ratio " + fmt("%.3f", ratio);
  }
  return "";
}

}  // namespace

int main() {
  const QuadcopterParams params;
  const double h = 0.005;

  const auto u1 = run_quadcopter(input_u1());
  const auto u2 = run_quadcopter(input_u2());
  const auto u3 = run_quadcopter(input_u3());
  std::vector<SolutionRecord> zero;
  for (double n : {0.5, 1.0, 2.0}) {
    zero.push_back(run_quadcopter(input_zero(), position_with_norm(n)));
  }
  const std::vector<const SolutionRecord*> six = {&u1, &u2, &u3, &zero[0], &zero[1], &zero[2]};

  {
    const auto n = state_norms(u1);
    const double peak = *std::max_element(n.norm.begin(), n.norm.end());
    const double last = n.norm.back();
    verdict(1, last < 0.05 * peak, "u1 norm at 20 s below 5% of peak",
            "final " + fmt("%.4g", last) + ", peak " + fmt("%.4g", peak) + ", ratio " + fmt("%.3g", last / peak));
  }
  {
    const auto n = state_norms(u2);
    const double sup = *std::max_element(n.norm.begin(), n.norm.end());
    const Tail t = tail_stats(u2, -1, 15.0, 20.0);
    const double variation = t.max - t.min;
    verdict(2, std::isfinite(sup) && variation < 0.1 * t.mean, "u2 bounded, tail variation below 10% of tail mean",
            "sup " + fmt("%.4g", sup) + ", tail variation " + fmt("%.4g", variation) + ", tail mean " +
                fmt("%.4g", t.mean));
  }
  {
    const double v_star = derived_steady_state_v(params, vec({1.5, 0.0, -0.2}))(0);
    const Tail v1 = tail_stats(u3, 3, 15.0, 20.0);
    std::vector<double> ts;
    std::vector<double> ns;
    u3.for_each_point([&](SampleIndex i) {
      if (u3.time(i) >= 10.0 - 1e-12) {
        ts.push_back(u3.time(i));
        ns.push_back(point_distance(u3.state(i), u3.meta().target));
      }
    });
    const AffineFit fit = fit_affine(ts, ns);
    const bool v_ok = std::abs(v1.mean - v_star) <= 0.05 * v_star;
    verdict(3, v_ok && fit.r2 >= 0.99, "u3 v1 tail mean 2.5 +- 5% and affine norm growth (R^2 >= 0.99)",
            "v1 tail mean over [15,20] " + fmt("%.5f", v1.mean) + " vs " + fmt("%.3f", v_star) + " (band " +
                fmt("[%.4f,", 0.95 * v_star) + fmt(" %.4f])", 1.05 * v_star) + ", R^2 " + fmt("%.5f", fit.r2) +
                ", slope " + fmt("%.4f", fit.slope));
    const auto long_run = run_quadcopter(input_u3(), vec({1, 1, 0.5}), 60.0);
    info("criterion 3 cross-check: long-horizon v1(60) = " + fmt("%.5f", long_run.state(long_run.last_point())(3)) +
         "; closed-form saturated transient v1 = 2.5(1 - exp(-t/6)) has mean " +
         fmt("%.5f", 2.5 - 3.0 * (std::exp(-2.5) - std::exp(-10.0 / 3.0))) + " on [15,20]");
  }
  {
    bool ok = true;
    double worst = 0.0;
    for (const auto* r : six) {
      ok = ok && r->jump_count() == 100;
      for (std::size_t k = 0; k < r->jumps().size(); ++k) {
        const double ref = 0.2 * static_cast<double>(k + 1);
        const double err = std::abs(r->jumps()[k].t - ref);
        worst = std::max(worst, err / ulp_at(ref));
        ok = ok && err <= ulp_at(ref);
      }
    }
    verdict(4, ok, "100 jumps per 20 s run at t = 0.2k +- 1 ulp", "worst deviation " + fmt("%.2f ulp", worst));
  }
  {
    const double e1 = dde_max_error(0.1, 10.0);
    const double e2 = dde_max_error(0.05, 10.0);
    const double e_abs = dde_max_error(0.01, 4.0);
    const double ratio = e1 / e2;
    verdict(5, ratio >= 12.0 && ratio <= 20.0 && e_abs < 1e-8, "RK4 order on x' = -x(t-1) and absolute error",
            "error ratio h=0.1/0.05 over [0,10] " + fmt("%.3f", ratio) + ", max error h=0.01 over [0,4] " +
                fmt("%.3g", e_abs));
  }
  {
    KrasovskiiFunctional v = reference_functional(params);
    const auto arc = make_constant_arc(vec({0.6, 0.0, 0.0, 0.0, 0.8, 0.0}), params.delay, 1e-3);
    v.continuous_dim = 6;
    const double value = eval_functional(v, arc, 1);
    verdict(6, std::abs(value - 1.047581) <= 1e-5, "functional of a constant unit arc",
            "V = " + fmt("%.7f", value));
  }
  {
    const auto rep = flow_bound_audit(params, reference_certificate(params), 1.0, 1.0, six, default_check_tol(h));
    const auto& c = rep.conditions.front();
    verdict(7, rep.pass, "numeric Dini below the analytic flow bound on six runs",
            std::to_string(c.checked) + " flow points, " + std::to_string(c.violation_count) +
                " violations, worst margin " + fmt("%.3g", c.worst_margin) + ", max slack 2hL " +
                fmt("%.3g", rep.statistics.at("max_discretization_slack")));
  }
  {
    const auto rep = check_jump_nonincrease(reference_functional(params), six, 1e-9);
    verdict(8, rep.pass, "|V(phi+) - V(phi)| <= 1e-9 at every jump",
            std::to_string(rep.conditions.front().checked) + " jumps, max |change| " +
                fmt("%.3g", rep.statistics.at("max_abs_change")));
  }
  ClassKFn rho = ClassKFn::linear(1.0);
  {
    const KLLFn beta = fit_kll_beta(ptrs(zero));
    const auto sys = quadcopter_system(params);
    const auto free = simulate(sys, u1.initial_arc(), input_zero(), u1.meta().options);
    rho = fit_iiss_rho({&u1}, {&free}, beta);
    const auto r1 = check_iiss_bound(u1, beta, rho, initial_norm(u1), 0.05);
    const auto r2 = check_iiss_bound(u2, beta, rho, initial_norm(u2), 0.05);
    verdict(9, r1.pass && r2.pass, "iISS bound with beta fitted on 0-input runs, rho fitted on u1",
            "beta gain " + fmt("%.4f", beta.gain(1.0)) + ", rate " + fmt("%.4f", beta.rate) + ", rho c " +
                fmt("%.4f", rho(1.0)) + ", max ratio u1 " + fmt("%.4f", r1.max_ratio) + ", u2 " +
                fmt("%.4f", r2.max_ratio));
  }
  {
    const auto cert = reference_certificate(params);
    const auto rep = check_bebs(u1, cert.alpha1, cert.alpha2, rho, 0.05);
    verdict(10, rep.pass, "BEBS on u1 with certificate alphas and the fitted rho",
            "max ratio " + fmt("%.4f", rep.max_ratio));
  }
  {
    std::mt19937 rng(20240601);
    int bad = 0;
    std::string first;
    for (int k = 0; k < 50; ++k) {
      const std::string why = sweep_case(rng);
      if (!why.empty()) {
        if (bad++ == 0) {
          first = "scenario " + std::to_string(k) + ": " + why;
        }
      }
    }
    verdict(11, bad == 0, "property suites over a 50-scenario randomized sweep",
            bad == 0 ? "50/50 scenarios green" : std::to_string(bad) + " failing; first " + first);
  }

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "SOME FAIL", failures);
  return failures == 0 ? 0 : 1;
}
