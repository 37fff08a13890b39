#include "hymem_cli/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace hymem::cli {

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ScenarioError("scenario key '" + path + "': " + what);
}

// Object view that rejects unknown keys and reports typed lookups by path.
class Obj {
 public:
  Obj(const json& j, std::string path, std::initializer_list<const char*> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      fail(path_.empty() ? "<root>" : path_, "expected an object");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!ok.count(it.key())) {
        fail(join(path_, it.key()), "unknown key");
      }
    }
  }

  [[nodiscard]] bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }
  [[nodiscard]] const json& at(const std::string& k) const { return j_.at(k); }
  [[nodiscard]] std::string path(const std::string& k) const { return join(path_, k); }

  [[nodiscard]] double num(const std::string& k, double def) const { return has(k) ? num(k) : def; }
  [[nodiscard]] double num(const std::string& k) const {
    if (!has(k)) {
      fail(path(k), "required number is missing");
    }
    const auto& v = j_.at(k);
    if (!v.is_number()) {
      fail(path(k), "expected a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
      fail(path(k), "must be finite");
    }
    return d;
  }
  [[nodiscard]] int integer(const std::string& k, int def) const {
    if (!has(k)) {
      return def;
    }
    if (!j_.at(k).is_number_integer()) {
      fail(path(k), "expected an integer");
    }
    return j_.at(k).get<int>();
  }
  [[nodiscard]] std::string str(const std::string& k, const std::string& def) const {
    if (!has(k)) {
      return def;
    }
    if (!j_.at(k).is_string()) {
      fail(path(k), "expected a string");
    }
    return j_.at(k).get<std::string>();
  }
  [[nodiscard]] Vector vec(const std::string& k, std::optional<std::size_t> size = std::nullopt) const {
    if (!has(k)) {
      fail(path(k), "required array is missing");
    }
    return vector_from(j_.at(k), path(k), size);
  }
  [[nodiscard]] std::vector<std::string> strings(const std::string& k) const {
    std::vector<std::string> out;
    if (!has(k)) {
      return out;
    }
    const auto& v = j_.at(k);
    if (!v.is_array()) {
      fail(path(k), "expected an array of strings");
    }
    for (const auto& e : v) {
      if (!e.is_string()) {
        fail(path(k), "expected an array of strings");
      }
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  static Vector vector_from(const json& v, const std::string& p, std::optional<std::size_t> size) {
    if (!v.is_array()) {
      fail(p, "expected an array of numbers");
    }
    if (size && v.size() != *size) {
      std::ostringstream msg;
      msg << "expected " << *size << " components, got " << v.size();
      fail(p, msg.str());
    }
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        fail(p, "expected an array of numbers");
      }
      out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

QuadcopterParams parse_quadcopter(const Obj& o) {
  QuadcopterParams p;
  p.mass = o.num("mass", p.mass);
  p.drag = o.num("drag", p.drag);
  p.u_max = o.num("u_max", p.u_max);
  p.delay = o.num("delay", p.delay);
  p.timer_bound = o.num("timer_bound", p.timer_bound);
  p.kp1 = o.num("kp1", p.kp1);
  p.kd1 = o.num("kd1", p.kd1);
  p.kp2 = o.num("kp2", p.kp2);
  p.kd2 = o.num("kd2", p.kd2);
  p.lookback_jumps = o.integer("lookback_jumps", p.lookback_jumps);
  p.timer_tol = o.num("timer_tol", p.timer_tol);
  if (o.has("reset")) {
    const auto& r = o.at("reset");
    if (r.is_string() && r.get<std::string>() == "identity") {
      p.reset = Matrix::Identity(6, 6);
    } else if (r.is_array() && r.size() == 6) {
      for (std::size_t i = 0; i < 6; ++i) {
        p.reset.row(static_cast<Eigen::Index>(i)) =
            Obj::vector_from(r[i], o.path("reset") + "[" + std::to_string(i) + "]", 6).transpose();
      }
    } else {
      fail(o.path("reset"), "expected \"identity\" or a 6x6 array");
    }
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    fail("system", e.what());
  }
  return p;
}

InputSignal parse_input(const json& j, const std::string& path, std::size_t dim) {
  if (j.is_null() || (j.is_object() && j.empty())) {
    return InputSignal::zero(dim);
  }
  const Obj o(j, path, {"type", "amplitude", "rate", "value", "times", "values"});
  const std::string type = o.str("type", "zero");
  if (type == "zero") {
    return InputSignal::zero(dim);
  }
  if (type == "exp_decay") {
    return InputSignal::exp_decay(o.vec("amplitude", dim), o.num("rate"));
  }
  if (type == "constant") {
    return InputSignal::constant(o.vec("value", dim));
  }
  if (type == "table") {
    if (!o.has("times") || !o.has("values") || !o.at("times").is_array() || !o.at("values").is_array()) {
      fail(path, "table input needs arrays 'times' and 'values'");
    }
    std::vector<double> times;
    std::vector<Vector> values;
    const Vector tv = o.vec("times");
    for (Eigen::Index i = 0; i < tv.size(); ++i) {
      times.push_back(tv(i));
    }
    const auto& vals = o.at("values");
    for (std::size_t i = 0; i < vals.size(); ++i) {
      values.push_back(Obj::vector_from(vals[i], o.path("values") + "[" + std::to_string(i) + "]", dim));
    }
    try {
      return InputSignal::table(std::move(times), std::move(values));
    } catch (const std::invalid_argument& e) {
      fail(path, e.what());
    }
  }
  fail(o.path("type"), "unknown input type '" + type + "' (zero, exp_decay, constant, table)");
}

InitialSpec parse_initial(const json& j, const std::string& path, Scenario::SystemKind kind,
                          std::size_t state_dim) {
  InitialSpec s;
  if (j.is_null()) {
    if (kind == Scenario::SystemKind::Quadcopter) {
      s.position = Vector(3);
      s.position << 1.0, 1.0, 0.5;
      s.velocity = Vector::Zero(3);
      return s;
    }
    fail(path, "initial arc is required for this system");
  }
  const Obj o(j, path, {"position", "velocity", "mode", "state"});
  if (o.has("state")) {
    if (o.has("position") || o.has("velocity") || o.has("mode")) {
      fail(path, "give either 'state' or 'position'/'velocity'/'mode'");
    }
    s.kind = InitialSpec::Kind::State;
    s.state = o.vec("state", state_dim);
    return s;
  }
  if (kind != Scenario::SystemKind::Quadcopter) {
    fail(o.path("state"), "required for the linear_dde system");
  }
  s.position = o.has("position") ? o.vec("position", 3) : (Vector(3) << 1.0, 1.0, 0.5).finished();
  s.velocity = o.has("velocity") ? o.vec("velocity", 3) : Vector::Zero(3);
  s.mode = o.integer("mode", 1);
  if (s.mode != 1 && s.mode != 2) {
    fail(o.path("mode"), "must be 1 or 2");
  }
  return s;
}

FnSpec parse_fn(const json& j, const std::string& path, bool allow_beta = false) {
  FnSpec f;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "certificate") {
      f.mode = FnSpec::Mode::Certificate;
      return f;
    }
    if (s.rfind("from:", 0) == 0 && s.size() > 5) {
      f.mode = FnSpec::Mode::Reference;
      f.reference = s.substr(5);
      return f;
    }
    fail(path, "expected a function object, {\"fit\": [...]}, \"certificate\" or \"from:<check>.<slot>\"");
  }
  if (j.is_object() && j.contains("fit")) {
    const Obj o(j, path, {"fit"});
    f.mode = FnSpec::Mode::Fit;
    f.fit_runs = o.strings("fit");
    if (f.fit_runs.empty()) {
      fail(o.path("fit"), "calibration run list is empty");
    }
    return f;
  }
  if (allow_beta && j.is_object() && j.contains("rate")) {
    const Obj o(j, path, {"gain", "rate"});
    f.rate = o.num("rate");
    if (!(f.rate > 0.0)) {
      fail(o.path("rate"), "must be positive");
    }
    f.fn = o.has("gain") ? class_k_from_json(o.at("gain"), o.path("gain")) : ClassKFn::linear(1.0);
    return f;
  }
  f.fn = class_k_from_json(j, path);
  return f;
}

CheckSpec parse_check(const std::string& name, const json& j, const std::string& path) {
  CheckSpec c;
  c.name = name;
  c.raw = j;
  static const std::map<std::string, std::vector<const char*>> fn_slots = {
      {"flow_bound_audit", {}},
      {"jump_nonincrease", {}},
      {"iiss_lkf", {}},
      {"exponential", {}},
      {"storage", {}},
      {"iiss_bound", {"beta", "rho"}},
      {"bebs", {"alpha1", "alpha2", "rho"}},
      {"asymptotic_gain", {"gamma"}},
      {"global_prestability", {"alpha", "gamma"}},
      {"zero_input_detectability", {}},
  };
  const auto slots = fn_slots.find(name);
  if (slots == fn_slots.end()) {
    fail(path, "unknown check");
  }
  const json& opts = j.is_null() ? json::object() : j;
  std::set<std::string> allowed{"runs", "tol"};
  if (name == "flow_bound_audit") {
    allowed.insert({"eps1", "eps2"});
  }
  if (name == "asymptotic_gain") {
    allowed.insert("tail_fraction");
  }
  if (name == "zero_input_detectability") {
    allowed.insert({"tail_window", "n_radius"});
  }
  for (const char* s : slots->second) {
    allowed.insert(s);
  }
  if (!opts.is_object()) {
    fail(path, "expected an object of check options");
  }
  for (auto it = opts.begin(); it != opts.end(); ++it) {
    if (!allowed.count(it.key())) {
      fail(join(path, it.key()), "unknown key");
    }
  }
  const Obj o(opts, path, {"runs", "tol", "eps1", "eps2", "tail_fraction", "tail_window", "n_radius", "beta", "rho",
                           "alpha", "alpha1", "alpha2", "gamma"});
  c.runs = o.strings("runs");
  if (o.has("tol")) {
    c.tol = o.num("tol");
    c.tol_given = true;
    if (!(c.tol >= 0.0)) {
      fail(o.path("tol"), "must be nonnegative");
    }
  }
  c.eps1 = o.num("eps1", c.eps1);
  c.eps2 = o.num("eps2", c.eps2);
  if (!(c.eps1 > 0.0) || !(c.eps2 > 0.0)) {
    fail(path, "eps1 and eps2 must be positive");
  }
  c.tail_fraction = o.num("tail_fraction", c.tail_fraction);
  if (!(c.tail_fraction > 0.0 && c.tail_fraction <= 1.0)) {
    fail(o.path("tail_fraction"), "must lie in (0, 1]");
  }
  c.tail_window = o.num("tail_window", c.tail_window);
  c.n_radius = o.num("n_radius", c.n_radius);
  for (const char* s : slots->second) {
    if (o.has(s)) {
      c.fns[s] = parse_fn(o.at(s), o.path(s), std::string(s) == "beta");
    }
  }
  return c;
}

std::optional<CertificateBlock> parse_certificate(const json& j, const std::string& path, std::size_t psi_dim,
                                                  double delay) {
  if (j.is_null()) {
    return std::nullopt;
  }
  const Obj o(j, path,
              {"sigma", "mu", "eta", "alpha1", "alpha2", "alpha3", "rho", "decay_rate", "storage_rate", "rho_hat",
               "eps1", "eps2"});
  CertificateBlock b;
  KrasovskiiFunctional v;
  auto weights = [&](const char* k) {
    std::vector<double> w;
    if (!o.has(k)) {
      return std::vector<double>{1.0};
    }
    const Vector x = o.vec(k);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      w.push_back(x(i));
    }
    return w;
  };
  v.sigma = weights("sigma");
  v.mu = weights("mu");
  v.eta = o.num("eta", 0.0);
  v.delay = delay;
  v.continuous_dim = psi_dim;
  try {
    v.validate();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  b.spec = sandwich_certificate(v);
  auto fn_or = [&](const char* k, const ClassKFn& def) {
    if (!o.has(k) || (o.at(k).is_string() && o.at(k).get<std::string>() == "certificate")) {
      return def;
    }
    return class_k_from_json(o.at(k), o.path(k));
  };
  b.spec.alpha1 = fn_or("alpha1", b.spec.alpha1);
  b.spec.alpha2 = fn_or("alpha2", b.spec.alpha2);
  b.spec.alpha3 = fn_or("alpha3", b.spec.alpha3);
  b.spec.rho = fn_or("rho", b.spec.rho);
  if (o.has("rho_hat")) {
    b.spec.rho_hat = class_k_from_json(o.at("rho_hat"), o.path("rho_hat"));
  }
  if (o.has("decay_rate")) {
    b.spec.decay_rate = o.num("decay_rate");
  }
  if (o.has("storage_rate")) {
    b.spec.storage_rate = o.num("storage_rate");
  }
  b.eps1 = o.num("eps1", 1.0);
  b.eps2 = o.num("eps2", 1.0);
  return b;
}

}  // namespace

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names = {
      "flow_bound_audit", "jump_nonincrease", "iiss_lkf",        "exponential",         "storage",
      "iiss_bound",       "bebs",             "asymptotic_gain", "global_prestability", "zero_input_detectability"};
  return names;
}

const RunSpec* Scenario::find_run(const std::string& id) const {
  for (const auto& r : runs) {
    if (r.id == id) {
      return &r;
    }
  }
  return nullptr;
}

KrasovskiiFunctional Scenario::functional() const {
  if (certificate) {
    return certificate->spec.functional;
  }
  KrasovskiiFunctional v;
  v.delay = kind == SystemKind::Quadcopter ? quad.delay : dde_r;
  v.continuous_dim = kind == SystemKind::Quadcopter ? quadcopter::kPsiDim : 1;
  return v;
}

json class_k_to_json(const ClassKFn& f) {
  auto stage = [](const ClassKFn::Stage& s) {
    json j;
    switch (s.family) {
      case ClassKFn::Family::Linear:
        j = {{"family", "linear"}, {"c", s.c}};
        break;
      case ClassKFn::Family::Power:
        j = {{"family", "power"}, {"c", s.c}, {"p", s.p}};
        break;
      case ClassKFn::Family::Saturating:
        j = {{"family", "saturating"}, {"c", s.c}};
        break;
    }
    return j;
  };
  const auto& st = f.stages();
  if (st.size() == 1) {
    return stage(st.front());
  }
  // Stages apply innermost first; emit as a right-nested composition.
  json inner = stage(st.front());
  for (std::size_t i = 1; i < st.size(); ++i) {
    inner = json{{"compose", json::array({stage(st[i]), inner})}};
  }
  return inner;
}

ClassKFn class_k_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) {
    fail(path, "expected a comparison function object");
  }
  if (j.contains("compose")) {
    const Obj o(j, path, {"compose"});
    const auto& arr = o.at("compose");
    if (!arr.is_array() || arr.size() != 2) {
      fail(o.path("compose"), "expected [outer, inner]");
    }
    return ClassKFn::compose(class_k_from_json(arr[0], o.path("compose") + "[0]"),
                             class_k_from_json(arr[1], o.path("compose") + "[1]"));
  }
  const Obj o(j, path, {"family", "c", "p"});
  const std::string fam = o.str("family", "");
  try {
    if (fam == "linear") {
      return ClassKFn::linear(o.num("c", 1.0));
    }
    if (fam == "power") {
      return ClassKFn::power(o.num("c", 1.0), o.num("p"));
    }
    if (fam == "saturating") {
      return ClassKFn::saturating(o.num("c", 1.0));
    }
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  fail(o.path("family"), "expected one of linear, power, saturating");
}

json input_to_json(const InputSignal& u) {
  auto arr = [](const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      a.push_back(v(i));
    }
    return a;
  };
  switch (u.kind()) {
    case InputSignal::Kind::Zero:
      return {{"type", "zero"}};
    case InputSignal::Kind::ExpDecay:
      return {{"type", "exp_decay"}, {"amplitude", arr(u.amplitude())}, {"rate", u.rate()}};
    case InputSignal::Kind::Constant:
      return {{"type", "constant"}, {"value", arr(u.amplitude())}};
    case InputSignal::Kind::Table: {
      json values = json::array();
      for (const auto& v : u.table_values()) {
        values.push_back(arr(v));
      }
      return {{"type", "table"}, {"times", u.table_times()}, {"values", values}};
    }
  }
  return {};
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  Scenario sc;
  try {
    sc.raw = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "parse error at line L, column C: ...".
    throw ScenarioError(source + ": " + e.what());
  }
  sc.source = source;
  const Obj root(sc.raw, "",
                 {"name", "system", "integrator", "certificate", "initial", "input", "runs", "analysis", "output"});
  sc.name = root.str("name", "scenario");

  std::size_t state_dim = quadcopter::kStateDim;
  std::size_t input_dim = quadcopter::kInputDim;
  std::size_t psi_dim = quadcopter::kPsiDim;
  double delay = sc.quad.delay;
  {
    const json& sj = root.has("system") ? root.at("system") : json::object();
    const Obj probe(sj, "system",
                    {"type", "mass", "drag", "u_max", "delay", "timer_bound", "kp1", "kd1", "kp2", "kd2", "reset",
                     "lookback_jumps", "timer_tol", "a", "b"});
    const std::string type = probe.str("type", "quadcopter");
    if (type == "quadcopter") {
      const Obj o(sj, "system",
                  {"type", "mass", "drag", "u_max", "delay", "timer_bound", "kp1", "kd1", "kp2", "kd2", "reset",
                   "lookback_jumps", "timer_tol"});
      sc.kind = Scenario::SystemKind::Quadcopter;
      sc.quad = parse_quadcopter(o);
      delay = sc.quad.delay;
    } else if (type == "linear_dde") {
      const Obj o(sj, "system", {"type", "a", "b", "delay"});
      sc.kind = Scenario::SystemKind::LinearDde;
      sc.dde_a = o.num("a", 0.0);
      sc.dde_b = o.num("b", -1.0);
      sc.dde_r = o.num("delay", 1.0);
      if (!(sc.dde_r > 0.0)) {
        fail("system.delay", "must be positive");
      }
      state_dim = 1;
      input_dim = 1;
      psi_dim = 1;
      delay = sc.dde_r;
    } else {
      fail("system.type", "unknown system '" + type + "' (quadcopter, linear_dde)");
    }
  }
  {
    const json& ij = root.has("integrator") ? root.at("integrator") : json::object();
    const Obj o(ij, "integrator",
                {"step", "t_end", "max_time", "priority", "max_consecutive_jumps", "record_stride", "zeno"});
    sc.options.step = o.num("step", sc.kind == Scenario::SystemKind::Quadcopter ? 0.005 : 0.01);
    sc.options.t_end = o.num("t_end", std::numeric_limits<double>::infinity());
    sc.options.max_time = o.num("max_time", o.has("t_end") ? std::numeric_limits<double>::infinity() : 20.0);
    const std::string pr = o.str("priority", "jump-first");
    if (pr == "jump-first") {
      sc.options.priority = JumpPriority::JumpFirst;
    } else if (pr == "flow-first") {
      sc.options.priority = JumpPriority::FlowFirst;
    } else {
      fail(o.path("priority"), "expected jump-first or flow-first");
    }
    sc.options.max_consecutive_jumps = o.integer("max_consecutive_jumps", 16);
    const int stride = o.integer("record_stride", 1);
    if (stride < 1) {
      fail(o.path("record_stride"), "must be at least 1");
    }
    sc.options.record_stride = static_cast<std::size_t>(stride);
    const std::string zeno = o.str("zeno", "error");
    if (zeno != "error" && zeno != "terminate") {
      fail(o.path("zeno"), "expected error or terminate");
    }
    sc.options.throw_on_zeno = zeno == "error";
    if (!(sc.options.step > 0.0)) {
      fail(o.path("step"), "must be positive");
    }
  }
  sc.certificate = parse_certificate(root.has("certificate") ? root.at("certificate") : json(), "certificate",
                                     psi_dim, delay);

  if (root.has("runs")) {
    if (root.has("initial") || root.has("input")) {
      fail("runs", "give either 'runs' or top-level 'initial'/'input', not both");
    }
    const auto& arr = root.at("runs");
    if (!arr.is_array() || arr.empty()) {
      fail("runs", "expected a non-empty array");
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "runs[" + std::to_string(i) + "]";
      const Obj o(arr[i], p, {"id", "initial", "input"});
      RunSpec r;
      r.id = o.str("id", "");
      if (r.id.empty()) {
        fail(o.path("id"), "required run id is missing");
      }
      if (sc.find_run(r.id)) {
        fail(o.path("id"), "duplicate run id '" + r.id + "'");
      }
      r.initial = parse_initial(o.has("initial") ? o.at("initial") : json(), o.path("initial"), sc.kind, state_dim);
      r.input_raw = o.has("input") ? o.at("input") : json();
      r.input = parse_input(r.input_raw, o.path("input"), input_dim);
      sc.runs.push_back(std::move(r));
    }
  } else {
    RunSpec r;
    r.id = sc.name;
    r.initial = parse_initial(root.has("initial") ? root.at("initial") : json(), "initial", sc.kind, state_dim);
    r.input_raw = root.has("input") ? root.at("input") : json();
    r.input = parse_input(r.input_raw, "input", input_dim);
    sc.runs.push_back(std::move(r));
  }

  if (root.has("analysis")) {
    const Obj o(root.at("analysis"), "analysis", {"checks"});
    if (o.has("checks")) {
      const auto& cj = o.at("checks");
      if (!cj.is_object()) {
        fail("analysis.checks", "expected an object keyed by check name");
      }
      for (const auto& name : known_checks()) {
        if (cj.contains(name)) {
          sc.checks.push_back(parse_check(name, cj.at(name), "analysis.checks." + name));
        }
      }
      for (auto it = cj.begin(); it != cj.end(); ++it) {
        if (std::find(known_checks().begin(), known_checks().end(), it.key()) == known_checks().end()) {
          fail("analysis.checks." + it.key(), "unknown check");
        }
      }
    }
  }
  if (root.has("output")) {
    sc.output = root.str("output", "");
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ScenarioError("cannot open scenario file '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

void validate_scenario(const Scenario& sc) {
  const auto grid = uniform_grid(10.0, 1000);
  auto check_k = [&](const ClassKFn& f, const std::string& where) {
    const auto v = validate_class_k(f, grid);
    if (!v.pass) {
      throw ScenarioError("scenario key '" + where + "': not class K (" + v.reason + ")");
    }
  };
  if (sc.certificate) {
    const auto& c = sc.certificate->spec;
    check_k(c.alpha1, "certificate.alpha1");
    check_k(c.alpha2, "certificate.alpha2");
    check_k(c.alpha3, "certificate.alpha3");
    check_k(c.rho, "certificate.rho");
    if (c.rho_hat) {
      check_k(*c.rho_hat, "certificate.rho_hat");
    }
    if (!c.alpha1.is_k_infinity()) {
      throw ScenarioError("scenario key 'certificate.alpha1': must be K-infinity");
    }
    if (!c.alpha2.is_k_infinity()) {
      throw ScenarioError("scenario key 'certificate.alpha2': must be K-infinity");
    }
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(std::string("scenario key 'certificate': ") + e.what());
    }
  }
  const bool quad = sc.kind == Scenario::SystemKind::Quadcopter;
  for (const auto& chk : sc.checks) {
    const std::string base = "analysis.checks." + chk.name;
    for (const auto& id : chk.runs) {
      if (!sc.find_run(id)) {
        throw ScenarioError("scenario key '" + base + ".runs': unknown run id '" + id + "'");
      }
    }
    for (const auto& [slot, fn] : chk.fns) {
      const std::string where = base + "." + slot;
      switch (fn.mode) {
        case FnSpec::Mode::Explicit:
          check_k(fn.fn, where);
          if (slot == "alpha1" && !fn.fn.is_k_infinity()) {
            throw ScenarioError("scenario key '" + where + "': must be K-infinity");
          }
          break;
        case FnSpec::Mode::Fit:
          for (const auto& id : fn.fit_runs) {
            if (!sc.find_run(id)) {
              throw ScenarioError("scenario key '" + where + ".fit': missing calibration run '" + id + "'");
            }
          }
          break;
        case FnSpec::Mode::Certificate:
          if (!sc.certificate) {
            throw ScenarioError("scenario key '" + where + "': refers to the certificate, but none is given");
          }
          break;
        case FnSpec::Mode::Reference: {
          const auto dot = fn.reference.find('.');
          const std::string other = fn.reference.substr(0, dot);
          auto it = std::find_if(sc.checks.begin(), sc.checks.end(),
                                 [&](const CheckSpec& c) { return c.name == other; });
          if (dot == std::string::npos || it == sc.checks.end() || &*it == &chk) {
            throw ScenarioError("scenario key '" + where + "': reference '" + fn.reference +
                                "' does not name another requested check");
          }
          if (std::distance(sc.checks.begin(), it) > std::distance(sc.checks.data(), &chk)) {
            throw ScenarioError("scenario key '" + where + "': reference '" + fn.reference +
                                "' names a check that runs later");
          }
          break;
        }
      }
    }
    const bool needs_cert = chk.name == "iiss_lkf" || chk.name == "exponential" || chk.name == "storage" ||
                            chk.name == "flow_bound_audit";
    if (needs_cert && !sc.certificate) {
      throw ScenarioError("scenario key '" + base + "': requires a 'certificate' block");
    }
    if (chk.name == "flow_bound_audit" && !quad) {
      throw ScenarioError("scenario key '" + base + "': the analytic flow bound is defined for the quadcopter only");
    }
    if (chk.name == "exponential" && !sc.certificate->spec.decay_rate) {
      throw ScenarioError("scenario key 'certificate.decay_rate': required by the exponential check");
    }
    if (chk.name == "storage" && !sc.certificate->spec.storage_rate) {
      throw ScenarioError("scenario key 'certificate.storage_rate': required by the storage check");
    }
    static const std::map<std::string, std::vector<std::string>> required = {
        {"iiss_bound", {"beta", "rho"}},
        {"asymptotic_gain", {"gamma"}},
        {"global_prestability", {"alpha", "gamma"}},
        {"bebs", {"rho"}},
    };
    if (auto r = required.find(chk.name); r != required.end()) {
      for (const auto& slot : r->second) {
        if (!chk.fns.count(slot)) {
          throw ScenarioError("scenario key '" + base + "." + slot + "': required by this check");
        }
      }
    }
    if (chk.name == "bebs" && !sc.certificate &&
        (!chk.fns.count("alpha1") || !chk.fns.count("alpha2") ||
         chk.fns.at("alpha1").mode == FnSpec::Mode::Certificate)) {
      throw ScenarioError("scenario key '" + base + "': alpha1/alpha2 need a certificate block or explicit values");
    }
  }
}

SystemDefinition build_system(const Scenario& sc) {
  if (sc.kind == Scenario::SystemKind::Quadcopter) {
    return quadcopter_system(sc.quad);
  }
  return linear_dde_system(sc.dde_a, sc.dde_b, sc.dde_r);
}

MemoryArc build_initial_arc(const Scenario& sc, const RunSpec& run) {
  const double h = sc.options.step;
  if (run.initial.kind == InitialSpec::Kind::State) {
    const double depth = sc.kind == Scenario::SystemKind::Quadcopter ? sc.quad.delay_depth() : sc.dde_r;
    return make_constant_arc(run.initial.state, depth, h);
  }
  return quadcopter::constant_initial_arc(sc.quad, run.initial.position, run.initial.velocity, run.initial.mode, h);
}

}  // namespace hymem::cli
