#include "hymem_cli/trajectory_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "hymem/stability_analysis.hpp"

namespace hymem::cli {

namespace {

json vec_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    a.push_back(v(i));
  }
  return a;
}

Vector json_vec(const json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  }
  return v;
}

double parse_double(const std::string& s) {
  if (s == "nan") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw TrajectoryError("trajectory: bad number '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    out.push_back(cell);
  }
  return out;
}

json options_to_json(const SimOptions& o) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"step", o.step},
          {"t_end", finite_or_null(o.t_end)},
          {"max_time", finite_or_null(o.max_time)},
          {"priority", to_string(o.priority)},
          {"max_consecutive_jumps", o.max_consecutive_jumps},
          {"zeno", o.throw_on_zeno ? "error" : "terminate"},
          {"record_stride", o.record_stride}};
}

SimOptions options_from_json(const json& j) {
  SimOptions o;
  auto or_inf = [](const json& v) { return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>(); };
  o.step = j.at("step").get<double>();
  o.t_end = or_inf(j.at("t_end"));
  o.max_time = or_inf(j.at("max_time"));
  o.priority = j.at("priority").get<std::string>() == "flow-first" ? JumpPriority::FlowFirst : JumpPriority::JumpFirst;
  o.max_consecutive_jumps = j.at("max_consecutive_jumps").get<int>();
  o.throw_on_zeno = j.at("zeno").get<std::string>() == "error";
  o.record_stride = j.at("record_stride").get<std::size_t>();
  return o;
}

EndCondition end_from_string(const std::string& s) {
  for (auto e : {EndCondition::Horizon, EndCondition::LeftFlowAndJumpSets, EndCondition::ZenoGuard}) {
    if (s == to_string(e)) {
      return e;
    }
  }
  throw TrajectoryError("trajectory: unknown end condition '" + s + "'");
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json target_to_json(const TargetSet& w) {
  json factors = json::array();
  for (const auto& f : w.factors) {
    factors.push_back({{"index", f.index},
                       {"discrete", f.discrete},
                       {"values", f.values},
                       {"lo", f.lo},
                       {"hi", f.hi},
                       {"tol", f.tol}});
  }
  return {{"kind", w.kind == TargetSet::Kind::Origin ? "origin" : "ball"},
          {"continuous_dim", w.continuous_dim},
          {"center", vec_json(w.center)},
          {"radius", w.radius},
          {"factors", factors}};
}

TargetSet target_from_json(const json& j) {
  TargetSet w;
  w.kind = j.at("kind").get<std::string>() == "ball" ? TargetSet::Kind::Ball : TargetSet::Kind::Origin;
  w.continuous_dim = j.at("continuous_dim").get<std::size_t>();
  w.center = json_vec(j.at("center"));
  w.radius = j.at("radius").get<double>();
  for (const auto& f : j.at("factors")) {
    ComponentRange c;
    c.index = f.at("index").get<std::size_t>();
    c.discrete = f.at("discrete").get<bool>();
    c.values = f.at("values").get<std::vector<double>>();
    c.lo = f.at("lo").get<double>();
    c.hi = f.at("hi").get<double>();
    c.tol = f.at("tol").get<double>();
    w.factors.push_back(c);
  }
  return w;
}

std::vector<std::string> trajectory_columns(const SolutionRecord& rec) {
  std::vector<std::string> cols{"t", "j"};
  const auto& m = rec.meta();
  if (m.system_name == "quadcopter") {
    for (const char* c : {"p1", "p2", "p3", "v1", "v2", "v3", "mode", "tau"}) {
      cols.emplace_back(c);
    }
  } else {
    for (std::size_t i = 0; i < m.state_dim; ++i) {
      cols.push_back("x" + std::to_string(i + 1));
    }
  }
  for (std::size_t i = 0; i < m.input_dim; ++i) {
    cols.push_back("u" + std::to_string(i + 1));
  }
  for (const char* c : {"norm_W", "V", "dini", "energy"}) {
    cols.emplace_back(c);
  }
  return cols;
}

void write_trajectory(const std::string& stem, const Scenario& sc, const RunSpec& run, const SolutionRecord& rec) {
  const auto cols = trajectory_columns(rec);
  const auto tr = trace_functional(sc.functional(), rec);
  const auto energy = input_energy(rec, ClassKFn::linear(1.0));
  const auto norms = state_norms(rec);
  const std::size_t stride = rec.meta().options.record_stride;

  std::ofstream csv(stem + ".csv");
  if (!csv) {
    throw TrajectoryError("cannot write '" + stem + ".csv'");
  }
  for (std::size_t c = 0; c < cols.size(); ++c) {
    csv << (c ? "," : "") << cols[c];
  }
  csv << '\n';
  for (std::size_t i = 0; i < tr.points.size(); ++i) {
    const SampleIndex p = tr.points[i];
    const bool boundary = i == 0 || i + 1 == tr.points.size() || tr.points[i - 1].piece != p.piece ||
                          tr.points[i + 1].piece != p.piece;
    if (stride > 1 && !boundary && i % stride != 0) {
      continue;
    }
    csv << format_double(rec.time(p)) << ',' << rec.jump_index(p);
    const Vector& x = rec.state(p);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      csv << ',' << format_double(x(k));
    }
    const Vector& u = rec.input(p);
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      csv << ',' << format_double(u(k));
    }
    csv << ',' << format_double(norms.norm[i]) << ',' << format_double(tr.values[i]) << ','
        << format_double(tr.dini[i]) << ',' << format_double(energy.energy[i]) << '\n';
  }

  const auto& m = rec.meta();
  json jumps = json::array();
  for (const auto& e : rec.jumps()) {
    jumps.push_back(
        {{"t", e.t}, {"j", e.j}, {"bracket_lo", e.bracket_lo}, {"pre", vec_json(e.pre)}, {"post", vec_json(e.post)}});
  }
  // Initial arc: every recorded sample with t <= 0 on branches k <= 0.
  json arc = json::array();
  const auto& hist = rec.history();
  for (std::size_t q = 0; q <= rec.origin_piece(); ++q) {
    const auto& piece = hist.pieces[q];
    const std::size_t n = q == rec.origin_piece() ? rec.forward_begin(q) + 1 : piece.size();
    json t = json::array();
    json x = json::array();
    json dx = json::array();
    for (std::size_t i = 0; i < n; ++i) {
      t.push_back(piece.t[i]);
      x.push_back(vec_json(piece.x[i]));
      dx.push_back(piece.has_derivative(i) ? vec_json(piece.dx[i]) : json(nullptr));
    }
    arc.push_back({{"j", piece.j}, {"t", t}, {"x", x}, {"dx", dx}});
  }
  json meta = {{"tool", "hymem"},
               {"version", "0.1.0"},
               {"scenario", sc.name},
               {"run", run.id},
               {"system", m.system_name},
               {"state_dim", m.state_dim},
               {"input_dim", m.input_dim},
               {"continuous_dim", m.continuous_dim},
               {"mode_component", m.mode_component ? json(*m.mode_component) : json(nullptr)},
               {"delay_depth", m.delay_depth},
               {"target", target_to_json(m.target)},
               {"options", options_to_json(m.options)},
               {"end_condition", to_string(m.end)},
               {"zeno_trips", m.zeno_trips},
               {"points", rec.point_count()},
               {"jump_count", rec.jump_count()},
               {"jumps", jumps},
               {"input", input_to_json(run.input)},
               {"columns", cols},
               {"initial_arc", arc}};
  std::ofstream out(stem + ".meta.json");
  if (!out) {
    throw TrajectoryError("cannot write '" + stem + ".meta.json'");
  }
  out << meta.dump(1) << '\n';
}

int TrajectoryTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

TrajectoryTable read_table(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) {
    throw TrajectoryError("cannot open trajectory file '" + csv_path + "'");
  }
  TrajectoryTable tab;
  std::string line;
  if (!std::getline(in, line)) {
    throw TrajectoryError(csv_path + ": empty trajectory file");
  }
  tab.columns = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != tab.columns.size()) {
      throw TrajectoryError(csv_path + ":" + std::to_string(lineno) + ": wrong number of columns");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      row.push_back(parse_double(c));
    }
    tab.rows.push_back(std::move(row));
  }
  return tab;
}

SolutionRecord read_trajectory(const std::string& stem, const SystemDefinition& sys) {
  json meta;
  {
    std::ifstream in(stem + ".meta.json");
    if (!in) {
      throw TrajectoryError("cannot open '" + stem + ".meta.json'");
    }
    try {
      meta = json::parse(in);
    } catch (const json::parse_error& e) {
      throw TrajectoryError(stem + ".meta.json: " + e.what());
    }
  }
  RecordMeta m;
  m.system_name = meta.at("system").get<std::string>();
  m.state_dim = meta.at("state_dim").get<std::size_t>();
  m.input_dim = meta.at("input_dim").get<std::size_t>();
  m.continuous_dim = meta.at("continuous_dim").get<std::size_t>();
  if (!meta.at("mode_component").is_null()) {
    m.mode_component = meta.at("mode_component").get<std::size_t>();
  }
  m.delay_depth = meta.at("delay_depth").get<double>();
  m.target = target_from_json(meta.at("target"));
  m.options = options_from_json(meta.at("options"));
  m.end = end_from_string(meta.at("end_condition").get<std::string>());
  m.zeno_trips = meta.at("zeno_trips").get<int>();
  if (m.options.record_stride != 1) {
    throw TrajectoryError(stem + ": thinned trajectory (record_stride > 1) cannot be re-checked");
  }
  if (m.system_name != sys.name || m.state_dim != sys.state_dim) {
    throw TrajectoryError(stem + ": trajectory was produced by a different system");
  }

  auto hist = std::make_shared<History>();
  hist->step = m.options.step;
  for (const auto& pj : meta.at("initial_arc")) {
    ArcPiece piece;
    piece.j = pj.at("j").get<int>();
    piece.t = pj.at("t").get<std::vector<double>>();
    bool any_dx = false;
    for (std::size_t i = 0; i < piece.t.size(); ++i) {
      piece.x.push_back(json_vec(pj.at("x")[i]));
      const auto& d = pj.at("dx")[i];
      piece.dx.push_back(d.is_null() ? Vector() : json_vec(d));
      any_dx = any_dx || !d.is_null();
    }
    if (!any_dx) {
      piece.dx.clear();
    }
    hist->pieces.push_back(std::move(piece));
  }
  if (hist->pieces.empty() || hist->pieces.back().j != 0) {
    throw TrajectoryError(stem + ": initial arc must end on branch j = 0");
  }

  const auto tab = read_table(stem + ".csv");
  const std::size_t n = m.state_dim;
  const std::size_t mu = m.input_dim;
  if (tab.columns.size() != 2 + n + mu + 4 || tab.rows.empty()) {
    throw TrajectoryError(stem + ".csv: column layout does not match the metadata");
  }
  std::vector<std::vector<Vector>> inputs(1);
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    const auto& row = tab.rows[r];
    const double t = row[0];
    const int j = static_cast<int>(row[1]);
    Vector x(static_cast<Eigen::Index>(n));
    Vector u(static_cast<Eigen::Index>(mu));
    for (std::size_t k = 0; k < n; ++k) {
      x(static_cast<Eigen::Index>(k)) = row[2 + k];
    }
    for (std::size_t k = 0; k < mu; ++k) {
      u(static_cast<Eigen::Index>(k)) = row[2 + n + k];
    }
    if (r == 0) {
      if (j != 0 || t != 0.0) {
        throw TrajectoryError(stem + ".csv: first row must be (t, j) = (0, 0)");
      }
      inputs.back().push_back(u);
      continue;
    }
    if (j == hist->pieces.back().j + 1) {
      ArcPiece piece;
      piece.j = j;
      hist->pieces.push_back(std::move(piece));
      inputs.emplace_back();
    } else if (j != hist->pieces.back().j) {
      throw TrajectoryError(stem + ".csv: jump counter must increase by one");
    }
    hist->pieces.back().t.push_back(t);
    hist->pieces.back().x.push_back(std::move(x));
    inputs.back().push_back(std::move(u));
  }

  // Recompute forward derivative samples in order, as the integrator did.
  std::shared_ptr<const History> view = hist;
  const std::size_t origin = hist->find_piece(0);
  for (std::size_t q = origin; q < hist->pieces.size(); ++q) {
    auto& piece = hist->pieces[q];
    const std::size_t begin = q == origin ? hist->pieces[origin].size() - (inputs[0].size()) : 0;
    const std::size_t size = piece.size();
    for (std::size_t i = begin; i < size; ++i) {
      const bool last_overall = q + 1 == hist->pieces.size() && i + 1 == size;
      if (i + 1 == size && !last_overall) {
        continue;
      }
      if (q == origin && i == begin && piece.has_derivative(i)) {
        continue;
      }
      const MemoryArc arc(view, SampleIndex{q, i}, m.delay_depth);
      const Vector& u = inputs[q - origin][i - begin];
      if (last_overall && !sys.in_flow_set(arc, u)) {
        continue;
      }
      Vector d = sys.flow_map(arc, u);
      if (piece.dx.size() < size) {
        piece.dx.resize(size);
      }
      piece.dx[i] = std::move(d);
    }
  }

  std::vector<JumpEvent> jumps;
  for (const auto& e : meta.at("jumps")) {
    JumpEvent ev;
    ev.t = e.at("t").get<double>();
    ev.j = e.at("j").get<int>();
    ev.bracket_lo = e.at("bracket_lo").get<double>();
    ev.pre = json_vec(e.at("pre"));
    ev.post = json_vec(e.at("post"));
    jumps.push_back(std::move(ev));
  }
  return SolutionRecord(std::move(view), std::move(inputs), std::move(jumps), std::move(m));
}

}  // namespace hymem::cli
