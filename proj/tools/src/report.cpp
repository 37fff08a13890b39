#include "hymem_cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hymem::cli {

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json point_json(const HybridTimePoint& p) { return {{"t", p.t}, {"j", p.j}}; }

json bound_point(const BoundPoint& b, const std::vector<std::string>& ids) {
  return {{"run", b.run < ids.size() ? ids[b.run] : std::to_string(b.run)},
          {"at", point_json(b.at)},
          {"value", num(b.value)},
          {"bound", num(b.bound)},
          {"ratio", num(b.ratio)}};
}

json params_json(const std::map<std::string, double>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) {
    j[k] = num(v);
  }
  return j;
}

// Resolves a function slot of a check: explicit, fitted, certificate-derived, or reused.
struct FnContext {
  std::map<std::string, ClassKFn> fitted;
  std::map<std::string, KLLFn> betas;
};

std::vector<const SolutionRecord*> select(const Scenario& sc, const std::vector<const SolutionRecord*>& records,
                                          const std::vector<std::string>& ids, std::vector<std::string>& out_ids) {
  std::vector<const SolutionRecord*> out;
  out_ids.clear();
  if (ids.empty()) {
    for (std::size_t i = 0; i < sc.runs.size(); ++i) {
      out.push_back(records[i]);
      out_ids.push_back(sc.runs[i].id);
    }
    return out;
  }
  for (const auto& id : ids) {
    for (std::size_t i = 0; i < sc.runs.size(); ++i) {
      if (sc.runs[i].id == id) {
        out.push_back(records[i]);
        out_ids.push_back(id);
      }
    }
  }
  return out;
}

json aggregate_bounds(const std::vector<BoundReport>& reps, const std::vector<std::string>& ids, bool& pass) {
  json runs = json::array();
  pass = true;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    json r = to_json(reps[i], {ids[i]});
    r["run"] = ids[i];
    runs.push_back(r);
    pass = pass && reps[i].pass;
  }
  return runs;
}

}  // namespace

json to_json(const CheckReport& r) {
  json conds = json::array();
  for (const auto& c : r.conditions) {
    json viol = json::array();
    for (const auto& v : c.violations) {
      viol.push_back({{"run", v.run},
                      {"at", point_json(v.at)},
                      {"lhs", num(v.lhs)},
                      {"rhs", num(v.rhs)},
                      {"margin", num(v.margin)}});
    }
    conds.push_back({{"name", c.name},
                     {"pass", c.pass},
                     {"checked", c.checked},
                     {"violation_count", c.violation_count},
                     {"worst_margin", num(c.worst_margin)},
                     {"tol", c.tol},
                     {"violations", viol}});
  }
  return {{"name", r.name},
          {"pass", r.pass},
          {"tol", r.tol},
          {"parameters", params_json(r.parameters)},
          {"statistics", params_json(r.statistics)},
          {"conditions", conds}};
}

json to_json(const BoundReport& r, const std::vector<std::string>& run_ids) {
  json j = {{"name", r.name},
            {"pass", r.pass},
            {"tol", r.tol},
            {"max_ratio", num(r.max_ratio)},
            {"checked", r.checked},
            {"violation_count", r.violation_count},
            {"parameters", params_json(r.parameters)}};
  j["first_violation"] = r.first_violation ? bound_point(*r.first_violation, run_ids) : json(nullptr);
  j["worst"] = r.worst ? bound_point(*r.worst, run_ids) : json(nullptr);
  return j;
}

json to_json(const DetectabilityVerdict& v, const std::vector<std::string>& run_ids) {
  json q = json::array();
  for (std::size_t i = 0; i < v.qualifying.size(); ++i) {
    q.push_back({{"run", run_ids[v.qualifying[i]]}, {"tail_max", v.tail_max[i]}});
  }
  json ex = json::array();
  for (const auto& [k, why] : v.excluded) {
    ex.push_back({{"run", run_ids[k]}, {"reason", why}});
  }
  return {{"pass", v.pass}, {"tol", v.tol}, {"tail_window", v.tail_window}, {"qualifying", q}, {"excluded", ex}};
}

json to_json(const AuditReport& a) {
  return {{"pass", a.pass}, {"flow_points", a.flow_points}, {"jumps", a.jumps}, {"failures", a.failures}};
}

json to_json(const KLLFn& beta) { return {{"gain", class_k_to_json(beta.gain)}, {"rate", beta.rate}}; }

CheckOutcome run_checks(const Scenario& sc, const SystemDefinition& sys,
                        const std::vector<const SolutionRecord*>& records) {
  CheckOutcome out;
  json runs = json::array();
  for (std::size_t i = 0; i < sc.runs.size(); ++i) {
    const SolutionRecord& rec = *records[i];
    const auto audit = audit_solution_pair(sys, rec);
    out.pass = out.pass && audit.pass;
    runs.push_back({{"id", sc.runs[i].id},
                    {"end_condition", to_string(rec.meta().end)},
                    {"points", rec.point_count()},
                    {"jumps", rec.jump_count()},
                    {"zeno_trips", rec.meta().zeno_trips},
                    {"final_time", rec.time(rec.last_point())},
                    {"initial_norm", initial_norm(rec)},
                    {"solution_pair_audit", to_json(audit)}});
  }

  FnContext ctx;
  const double h = sc.options.step;
  auto resolve = [&](const CheckSpec& chk, const std::string& slot, const auto& fit) -> ClassKFn {
    const FnSpec& f = chk.fns.at(slot);
    ClassKFn fn;
    switch (f.mode) {
      case FnSpec::Mode::Explicit:
        fn = f.fn;
        break;
      case FnSpec::Mode::Fit: {
        std::vector<std::string> ids;
        fn = fit(select(sc, records, f.fit_runs, ids));
        break;
      }
      case FnSpec::Mode::Certificate:
        fn = slot == "alpha2" ? sc.certificate->spec.alpha2 : sc.certificate->spec.alpha1;
        break;
      case FnSpec::Mode::Reference: {
        auto it = ctx.fitted.find(f.reference);
        if (it == ctx.fitted.end()) {
          throw ScenarioError("scenario key 'analysis.checks." + chk.name + "." + slot + "': '" + f.reference +
                              "' has no resolved function");
        }
        fn = it->second;
        break;
      }
    }
    ctx.fitted[chk.name + "." + slot] = fn;
    return fn;
  };

  json checks = json::array();
  for (const auto& chk : sc.checks) {
    std::vector<std::string> ids;
    const auto sel = select(sc, records, chk.runs, ids);
    json entry = {{"check", chk.name}, {"runs", ids}, {"options", chk.raw.is_null() ? json::object() : chk.raw}};
    bool pass = true;
    if (chk.name == "flow_bound_audit") {
      const double tol = chk.tol_given ? chk.tol : default_check_tol(h);
      const auto rep = flow_bound_audit(sc.quad, sc.certificate->spec, chk.eps1, chk.eps2, sel, tol);
      entry["result"] = to_json(rep);
      pass = rep.pass;
    } else if (chk.name == "jump_nonincrease") {
      const auto rep = check_jump_nonincrease(sc.functional(), sel, chk.tol_given ? chk.tol : 1e-9);
      entry["result"] = to_json(rep);
      pass = rep.pass;
    } else if (chk.name == "iiss_lkf" || chk.name == "exponential" || chk.name == "storage") {
      const double tol = chk.tol_given ? chk.tol : default_check_tol(h);
      const auto& cert = sc.certificate->spec;
      const auto rep = chk.name == "iiss_lkf"      ? check_iiss_lkf(cert, sel, tol)
                       : chk.name == "exponential" ? check_exponential(cert, sel, tol)
                                                   : check_storage(cert, sel, tol);
      entry["result"] = to_json(rep);
      pass = rep.pass;
    } else if (chk.name == "iiss_bound") {
      const double tol = chk.tol_given ? chk.tol : 0.05;
      const FnSpec& bs = chk.fns.at("beta");
      KLLFn beta;
      if (bs.mode == FnSpec::Mode::Fit) {
        std::vector<std::string> bids;
        beta = fit_kll_beta(select(sc, records, bs.fit_runs, bids));
      } else if (bs.mode == FnSpec::Mode::Explicit) {
        beta.gain = bs.fn;
        beta.rate = bs.rate;
      } else {
        throw ScenarioError("scenario key 'analysis.checks.iiss_bound.beta': expected {\"fit\": [...]} or "
                            "{\"gain\": ..., \"rate\": ...}");
      }
      ctx.betas["iiss_bound.beta"] = beta;
      const ClassKFn rho = resolve(chk, "rho", [&](const std::vector<const SolutionRecord*>& cal) {
        // 0-input companions from the same initial arcs separate the input response.
        std::vector<SolutionRecord> free;
        free.reserve(cal.size());
        for (const auto* rec : cal) {
          free.push_back(simulate(sys, rec->initial_arc(), InputSignal::zero(rec->meta().input_dim),
                                  rec->meta().options));
        }
        std::vector<const SolutionRecord*> fp;
        for (const auto& f : free) {
          fp.push_back(&f);
        }
        return fit_iiss_rho(cal, fp, beta);
      });
      std::vector<BoundReport> reps;
      for (const auto* rec : sel) {
        reps.push_back(check_iiss_bound(*rec, beta, rho, initial_norm(*rec), tol));
      }
      entry["beta"] = to_json(beta);
      entry["rho"] = class_k_to_json(rho);
      entry["tol"] = tol;
      entry["result"] = aggregate_bounds(reps, ids, pass);
    } else if (chk.name == "bebs") {
      const double tol = chk.tol_given ? chk.tol : 0.05;
      auto slot_or_cert = [&](const std::string& slot) {
        if (!chk.fns.count(slot)) {
          const ClassKFn f = slot == "alpha1" ? sc.certificate->spec.alpha1 : sc.certificate->spec.alpha2;
          ctx.fitted["bebs." + slot] = f;
          return f;
        }
        return resolve(chk, slot, [](const std::vector<const SolutionRecord*>&) -> ClassKFn {
          throw ScenarioError("scenario key 'analysis.checks.bebs': alpha1/alpha2 cannot be fitted");
        });
      };
      const ClassKFn a1 = slot_or_cert("alpha1");
      const ClassKFn a2 = slot_or_cert("alpha2");
      const ClassKFn rho = resolve(chk, "rho", [&](const std::vector<const SolutionRecord*>& cal) {
        return fit_bebs_rho(cal, a1, a2);
      });
      std::vector<BoundReport> reps;
      for (const auto* rec : sel) {
        reps.push_back(check_bebs(*rec, a1, a2, rho, tol));
      }
      entry["alpha1"] = class_k_to_json(a1);
      entry["alpha2"] = class_k_to_json(a2);
      entry["rho"] = class_k_to_json(rho);
      entry["tol"] = tol;
      entry["result"] = aggregate_bounds(reps, ids, pass);
    } else if (chk.name == "asymptotic_gain") {
      const double tol = chk.tol_given ? chk.tol : 1e-2;
      const ClassKFn gamma = resolve(chk, "gamma", [&](const std::vector<const SolutionRecord*>& cal) {
        return fit_asymptotic_gain(cal, chk.tail_fraction);
      });
      const auto rep = check_asymptotic_gain(sel, gamma, chk.tail_fraction, tol);
      entry["gamma"] = class_k_to_json(gamma);
      entry["result"] = to_json(rep, ids);
      pass = rep.pass;
    } else if (chk.name == "global_prestability") {
      const double tol = chk.tol_given ? chk.tol : 0.05;
      const ClassKFn alpha = resolve(chk, "alpha", [](const std::vector<const SolutionRecord*>& cal) {
        return fit_prestability_alpha(cal);
      });
      const ClassKFn gamma = resolve(chk, "gamma", [](const std::vector<const SolutionRecord*>&) -> ClassKFn {
        throw ScenarioError("scenario key 'analysis.checks.global_prestability.gamma': gamma cannot be fitted");
      });
      const auto rep = check_global_prestability(sel, alpha, gamma, tol);
      entry["alpha"] = class_k_to_json(alpha);
      entry["gamma"] = class_k_to_json(gamma);
      entry["result"] = to_json(rep, ids);
      pass = rep.pass;
    } else if (chk.name == "zero_input_detectability") {
      const double tol = chk.tol_given ? chk.tol : 1e-2;
      const double radius = chk.n_radius;
      const TargetSet w = sys.target;
      auto in_n = [&](const Vector& x) { return radius <= 0.0 || point_distance(x, w) <= radius; };
      const auto v = check_zero_input_detectability(sel, in_n, chk.tail_window, tol);
      entry["result"] = to_json(v, ids);
      pass = v.pass;
    }
    entry["pass"] = pass;
    out.pass = out.pass && pass;
    checks.push_back(std::move(entry));
  }
  out.report = {{"tool", "hymem"},
                {"version", "0.1.0"},
                {"scenario", sc.name},
                {"pass", out.pass},
                {"runs", runs},
                {"checks", checks}};
  return out;
}

}  // namespace hymem::cli
