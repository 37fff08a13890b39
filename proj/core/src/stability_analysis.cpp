#include "hymem/stability_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hymem {

namespace {

constexpr double kInflate = 1.0 + 1e-6;


}  // namespace

EnergyTrace input_energy(const SolutionRecord& solution, const ClassKFn& rho) {
  EnergyTrace tr;
  double acc = 0.0;
  bool have_prev = false;
  SampleIndex prev;
  double f_prev = 0.0;
  solution.for_each_point([&](SampleIndex p) {
    const double f = rho(solution.input(p).norm());
    if (have_prev && prev.piece == p.piece) {
      acc += 0.5 * (solution.time(p) - solution.time(prev)) * (f + f_prev);
    }
    tr.at.push_back(solution.point(p));
    tr.energy.push_back(acc);
    prev = p;
    f_prev = f;
    have_prev = true;
  });
  return tr;
}

NormSeries state_norms(const SolutionRecord& solution) {
  NormSeries s;
  const TargetSet& w = solution.meta().target;
  solution.for_each_point([&](SampleIndex p) {
    s.t.push_back(solution.time(p));
    s.j.push_back(solution.jump_index(p));
    s.norm.push_back(point_distance(solution.state(p), w));
  });
  return s;
}

double initial_norm(const SolutionRecord& solution) {
  return sup_norm_to_set(solution.initial_arc(), solution.meta().target);
}

void BoundReport::record(std::size_t run, const HybridTimePoint& at, double value, double bound) {
  ++checked;
  double ratio = 0.0;
  if (bound > 0.0) {
    ratio = value / bound;
  } else if (value > 0.0) {
    ratio = std::numeric_limits<double>::infinity();
  }
  if (ratios.size() <= run) {
    ratios.resize(run + 1);
  }
  ratios[run].push_back(ratio);
  const BoundPoint bp{run, at, value, bound, ratio};
  if (!worst || ratio > worst->ratio) {
    worst = bp;
  }
  max_ratio = std::max(max_ratio, ratio);
  if (!(value <= bound * (1.0 + tol))) {
    pass = false;
    ++violation_count;
    if (!first_violation) {
      first_violation = bp;
    }
  }
}

BoundReport check_iiss_bound(const SolutionRecord& solution, const KLLFn& beta, const ClassKFn& rho,
                             double initial_norm_value, double tol) {
  BoundReport rep;
  rep.name = "iiss_bound";
  rep.tol = tol;
  rep.parameters = {{"beta_rate", beta.rate}, {"initial_norm", initial_norm_value}};
  const auto energy = input_energy(solution, rho);
  const auto norms = state_norms(solution);
  for (std::size_t i = 0; i < norms.norm.size(); ++i) {
    const double b = std::max(beta(initial_norm_value, norms.t[i], norms.j[i]), energy.energy[i]);
    rep.record(0, energy.at[i], norms.norm[i], b);
  }
  return rep;
}

namespace {

// Future supremum of the norm sequence: a nonincreasing envelope.
std::vector<double> decaying_envelope(const std::vector<double>& v) {
  std::vector<double> env(v.size());
  double m = 0.0;
  for (std::size_t i = v.size(); i-- > 0;) {
    m = std::max(m, v[i]);
    env[i] = m;
  }
  return env;
}

}  // namespace

KLLFn fit_kll_beta(const std::vector<const SolutionRecord*>& zero_input_runs) {
  struct RunData {
    NormSeries s;
    double r0;
  };
  std::vector<RunData> data;
  double rate = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < zero_input_runs.size(); ++k) {
    const SolutionRecord& rec = *zero_input_runs[k];
    RunData d{state_norms(rec), initial_norm(rec)};
    const double peak = d.s.norm.empty() ? 0.0 : *std::max_element(d.s.norm.begin(), d.s.norm.end());
    if (peak == 0.0 && d.r0 == 0.0) {
      continue;
    }
    const auto env = decaying_envelope(d.s.norm);
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < env.size(); ++i) {
      if (env[i] > 1e-10 * peak) {
        xs.push_back(d.s.t[i] + d.s.j[i]);
        ys.push_back(std::log(env[i]));
      }
    }
    if (xs.size() < 2) {
      throw FitError("fit_kll_beta: run has too few points for a regression");
    }
    const double slope = fit_affine(xs, ys).slope;
    if (!(slope < 0.0)) {
      std::ostringstream msg;
      msg << "fit_kll_beta: run " << k << " does not decay (envelope slope " << slope << ")";
      throw FitError(msg.str());
    }
    rate = std::min(rate, -slope);
    data.push_back(std::move(d));
  }
  KLLFn beta;
  if (data.empty()) {
    beta.gain = ClassKFn::linear(1.0);
    beta.rate = 1.0;
    return beta;
  }
  double gain = 0.0;
  for (const auto& d : data) {
    if (d.r0 == 0.0) {
      throw FitError("fit_kll_beta: nonzero run from a zero initial arc cannot be majorized");
    }
    for (std::size_t i = 0; i < d.s.norm.size(); ++i) {
      gain = std::max(gain, d.s.norm[i] * std::exp(rate * (d.s.t[i] + d.s.j[i])) / d.r0);
    }
  }
  beta.gain = ClassKFn::linear(std::max(gain, 1e-300) * kInflate);
  beta.rate = rate;
  return beta;
}

ClassKFn fit_iiss_rho(const std::vector<const SolutionRecord*>& calibration, const KLLFn& beta) {
  const ClassKFn id = ClassKFn::linear(1.0);
  double c = 0.0;
  for (const auto* rec : calibration) {
    const double r0 = initial_norm(*rec);
    const auto e = input_energy(*rec, id);
    const auto n = state_norms(*rec);
    for (std::size_t i = 0; i < n.norm.size(); ++i) {
      if (n.norm[i] <= beta(r0, n.t[i], n.j[i])) {
        continue;
      }
      if (e.energy[i] <= 0.0) {
        throw FitError("fit_iiss_rho: beta fails where the input energy is zero");
      }
      c = std::max(c, n.norm[i] / e.energy[i]);
    }
  }
  return ClassKFn::linear(std::max(c, 1e-12) * kInflate);
}

ClassKFn fit_iiss_rho(const std::vector<const SolutionRecord*>& calibration,
                      const std::vector<const SolutionRecord*>& companions, const KLLFn& beta) {
  if (companions.size() != calibration.size()) {
    throw std::invalid_argument("fit_iiss_rho: one 0-input companion per calibration run is required");
  }
  const ClassKFn id = ClassKFn::linear(1.0);
  double c = fit_iiss_rho(calibration, beta)(1.0) / kInflate;
  for (std::size_t k = 0; k < calibration.size(); ++k) {
    const SolutionRecord& run = *calibration[k];
    const SolutionRecord& free = *companions[k];
    if (run.point_count() != free.point_count()) {
      throw FitError("fit_iiss_rho: companion run does not share the calibration time grid");
    }
    const std::size_t nc = run.meta().continuous_dim;
    const auto e = input_energy(run, id);
    std::size_t i = 0;
    run.for_each_point([&](SampleIndex si) {
      const HybridTimePoint p = run.point(si);
      const double dev = (run.state(si).head(nc) - free.state(free.locate(p)).head(nc)).norm();
      if (dev > 0.0) {
        if (e.energy[i] <= 0.0) {
          throw FitError("fit_iiss_rho: run departs from its 0-input companion with zero input energy");
        }
        c = std::max(c, dev / e.energy[i]);
      }
      ++i;
    });
  }
  return ClassKFn::linear(std::max(c, 1e-12) * kInflate);
}

ClassKFn fit_bebs_rho(const std::vector<const SolutionRecord*>& calibration, const ClassKFn& alpha1,
                      const ClassKFn& alpha2) {
  const ClassKFn id = ClassKFn::linear(1.0);
  double c = 0.0;
  for (const auto* rec : calibration) {
    const double base = alpha2(initial_norm(*rec));
    const auto e = input_energy(*rec, id);
    const auto n = state_norms(*rec);
    for (std::size_t i = 0; i < n.norm.size(); ++i) {
      const double need = alpha1(n.norm[i]) - base;
      if (need <= 0.0) {
        continue;
      }
      if (e.energy[i] <= 0.0) {
        throw FitError("fit_bebs_rho: bound fails where the input energy is zero");
      }
      c = std::max(c, need / e.energy[i]);
    }
  }
  return ClassKFn::linear(std::max(c, 1e-12) * kInflate);
}

BoundReport check_bebs(const SolutionRecord& solution, const ClassKFn& alpha1, const ClassKFn& alpha2,
                       const ClassKFn& rho, double tol) {
  if (!alpha1.is_k_infinity()) {
    throw std::invalid_argument("check_bebs: alpha1 must be K-infinity");
  }
  BoundReport rep;
  rep.name = "bebs";
  rep.tol = tol;
  const double base = alpha2(initial_norm(solution));
  rep.parameters["alpha2_initial"] = base;
  const auto e = input_energy(solution, rho);
  const auto n = state_norms(solution);
  for (std::size_t i = 0; i < n.norm.size(); ++i) {
    const double bound = numeric_inverse(alpha1, base + e.energy[i]);
    rep.record(0, e.at[i], n.norm[i], bound);
  }
  return rep;
}

std::size_t tail_begin(const NormSeries& series, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw std::invalid_argument("tail_fraction must lie in (0, 1]");
  }
  if (series.t.empty()) {
    return 0;
  }
  const double total = series.t.back() + series.j.back();
  const double start = (1.0 - tail_fraction) * total;
  std::size_t i = 0;
  while (i < series.t.size() && series.t[i] + series.j[i] < start) {
    ++i;
  }
  return std::min(i, series.t.size() - 1);
}

BoundReport check_asymptotic_gain(const std::vector<const SolutionRecord*>& runs, const ClassKFn& gamma,
                                  double tail_fraction, double tol) {
  BoundReport rep;
  rep.name = "asymptotic_gain";
  rep.tol = tol;
  rep.parameters["tail_fraction"] = tail_fraction;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto n = state_norms(*runs[k]);
    const double energy = input_energy(*runs[k], gamma).total();
    const std::size_t i0 = tail_begin(n, tail_fraction);
    double tail_max = 0.0;
    std::size_t arg = i0;
    for (std::size_t i = i0; i < n.norm.size(); ++i) {
      if (n.norm[i] > tail_max) {
        tail_max = n.norm[i];
        arg = i;
      }
    }
    rep.record(k, {n.t[arg], n.j[arg]}, tail_max, std::max(energy, tol));
  }
  return rep;
}

ClassKFn fit_asymptotic_gain(const std::vector<const SolutionRecord*>& calibration, double tail_fraction) {
  const ClassKFn id = ClassKFn::linear(1.0);
  double c = 0.0;
  for (const auto* rec : calibration) {
    const auto n = state_norms(*rec);
    const double energy = input_energy(*rec, id).total();
    const std::size_t i0 = tail_begin(n, tail_fraction);
    const double tail_max = *std::max_element(n.norm.begin() + static_cast<std::ptrdiff_t>(i0), n.norm.end());
    if (energy <= 0.0) {
      if (tail_max > 0.0) {
        throw FitError("fit_asymptotic_gain: calibration run has a nonzero tail but no input energy");
      }
      continue;
    }
    c = std::max(c, tail_max / energy);
  }
  return ClassKFn::linear(std::max(c, 1e-12) * kInflate);
}

BoundReport check_global_prestability(const std::vector<const SolutionRecord*>& runs, const ClassKFn& alpha,
                                      const ClassKFn& gamma, double tol) {
  BoundReport rep;
  rep.name = "global_prestability";
  rep.tol = tol;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const double a = alpha(initial_norm(*runs[k]));
    const auto e = input_energy(*runs[k], gamma);
    const auto n = state_norms(*runs[k]);
    for (std::size_t i = 0; i < n.norm.size(); ++i) {
      rep.record(k, e.at[i], n.norm[i], std::max(a, e.energy[i]));
    }
  }
  return rep;
}

ClassKFn fit_prestability_alpha(const std::vector<const SolutionRecord*>& zero_input_runs) {
  std::vector<double> lr;
  std::vector<double> lp;
  std::vector<std::pair<double, double>> pts;
  for (const auto* rec : zero_input_runs) {
    const double r0 = initial_norm(*rec);
    const auto n = state_norms(*rec);
    const double peak = n.norm.empty() ? 0.0 : *std::max_element(n.norm.begin(), n.norm.end());
    if (r0 == 0.0) {
      if (peak > 0.0) {
        throw FitError("fit_prestability_alpha: nonzero run from a zero initial arc");
      }
      continue;
    }
    pts.emplace_back(r0, peak);
    lr.push_back(std::log(r0));
    lp.push_back(std::log(std::max(peak, 1e-300)));
  }
  if (pts.empty()) {
    return ClassKFn::linear(1.0);
  }
  double p = 1.0;
  if (pts.size() >= 2 && std::abs(lr.front() - lr.back()) > 0.0) {
    p = fit_affine(lr, lp).slope;
    if (!(p > 0.0)) {
      p = 1.0;
    }
  }
  double c = 0.0;
  for (const auto& [r0, peak] : pts) {
    c = std::max(c, peak / std::pow(r0, p));
  }
  return ClassKFn::power(std::max(c, 1e-12) * kInflate, p);
}

DetectabilityVerdict check_zero_input_detectability(const std::vector<const SolutionRecord*>& runs,
                                                    const std::function<bool(const Vector&)>& in_n,
                                                    double tail_window, double tol) {
  DetectabilityVerdict v;
  v.tol = tol;
  v.tail_window = tail_window;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const SolutionRecord& rec = *runs[k];
    bool zero_input = true;
    bool inside = true;
    rec.for_each_point([&](SampleIndex p) {
      zero_input = zero_input && rec.input(p).lpNorm<Eigen::Infinity>() == 0.0;
      inside = inside && in_n(rec.state(p));
    });
    if (!zero_input) {
      v.excluded.emplace_back(k, "input is not identically zero");
      continue;
    }
    if (!inside) {
      v.excluded.emplace_back(k, "state leaves N");
      continue;
    }
    const auto n = state_norms(rec);
    const double t_from = n.t.back() - tail_window;
    double tail_max = 0.0;
    for (std::size_t i = 0; i < n.norm.size(); ++i) {
      if (n.t[i] >= t_from) {
        tail_max = std::max(tail_max, n.norm[i]);
      }
    }
    v.qualifying.push_back(k);
    v.tail_max.push_back(tail_max);
    v.pass = v.pass && tail_max <= tol;
  }
  return v;
}

Vector derived_steady_state_v(const QuadcopterParams& params, const Vector& u_const) {
  Vector v = Vector::Zero(u_const.size());
  for (Eigen::Index i = 0; i < u_const.size(); ++i) {
    const double u = u_const(i);
    if (std::abs(u) > params.u_max) {
      v(i) = (u - std::copysign(params.u_max, u)) / params.drag;
    }
  }
  return v;
}

AffineFit fit_affine(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_affine: need at least two aligned points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  AffineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

}  // namespace hymem
