#include "splitlab/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace splitlab {

namespace {

class Section {
 public:
  Section(YAML::Node node, std::string path, std::string source)
      : node_(std::move(node)), path_(std::move(path)), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& reason, const YAML::Node* at = nullptr) const {
    std::ostringstream msg;
    msg << source_;
    const YAML::Mark mark = at && at->IsDefined() ? at->Mark() : node_.Mark();
    if (mark.line >= 0) msg << ':' << (mark.line + 1);
    msg << ": " << qualified(field) << ": " << reason;
    throw ConfigError(msg.str());
  }

  std::string qualified(const std::string& field) const { return path_.empty() ? field : path_ + "." + field; }

  bool has(const std::string& key) const { return node_[key].IsDefined() && !node_[key].IsNull(); }

  void allow_only(const std::set<std::string>& keys) const {
    if (!node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!keys.count(key)) fail(key, "unknown field", &kv.first);
    }
  }

  template <typename T>
  void read(const std::string& key, T& out) const {
    if (!has(key)) return;
    const YAML::Node v = node_[key];
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      fail(key, "wrong type", &v);
    }
  }

  template <typename T>
  T require(const std::string& key) const {
    if (!has(key)) fail(key, "missing required field");
    T out{};
    read(key, out);
    return out;
  }

  Section child(const std::string& key) const {
    const YAML::Node v = node_[key];
    if (v.IsDefined() && !v.IsNull() && !v.IsMap()) fail(key, "expected a mapping", &v);
    return Section(v.IsDefined() && !v.IsNull() ? v : YAML::Node(YAML::NodeType::Map), qualified(key), source_);
  }

  const YAML::Node& node() const { return node_; }

 private:
  YAML::Node node_;
  std::string path_;
  std::string source_;
};

void read_model(const Section& s, ModelParams& m) {
  s.allow_only({"name", "params"});
  m.name = s.require<std::string>("name");
  if (m.name.empty()) s.fail("name", "must not be empty");
  const Section p = s.child("params");
  p.allow_only({"matrix", "epsilon", "tau", "profile", "shear_source", "shear_target", "dim_e", "e_eigen_indices", "dim",
                "refine_iterations"});
  p.read("matrix", m.matrix);
  p.read("epsilon", m.epsilon);
  p.read("tau", m.tau);
  p.read("profile", m.profile);
  p.read("shear_source", m.shear_source);
  p.read("shear_target", m.shear_target);
  p.read("dim_e", m.dim_e);
  p.read("e_eigen_indices", m.e_eigen_indices);
  p.read("dim", m.dim);
  p.read("refine_iterations", m.refine_iterations);
}

void read_samples(const Section& s, SampleSpec& out) {
  s.allow_only({"count", "seed", "points"});
  s.read("count", out.count);
  s.read("seed", out.seed);
  std::vector<std::vector<double>> pts;
  s.read("points", pts);
  out.points.clear();
  for (const auto& p : pts) out.points.push_back(Eigen::Map<const Vec>(p.data(), static_cast<Eigen::Index>(p.size())));
}

void range(const std::string& field, double v, double lo, double hi, bool lo_open = false) {
  const bool ok = std::isfinite(v) && (lo_open ? v > lo : v >= lo) && v <= hi;
  if (!ok) {
    std::ostringstream msg;
    msg << "<config>: tolerances." << field << ": value " << v << " outside safe range " << (lo_open ? "(" : "[") << lo
        << ", " << hi << "]";
    throw ConfigError(msg.str());
  }
}

[[noreturn]] void bad(const std::string& field, const std::string& reason) {
  throw ConfigError("<config>: " + field + ": " + reason);
}

}  // namespace

void validate(const RunConfig& c) {
  if (c.model.name.empty()) bad("model.name", "missing required field");
  if (c.samples.count < 1 || c.samples.count > 10000) bad("samples.count", "must lie in [1, 10000]");
  if (c.horizons.k_max < 10 || c.horizons.k_max > 10000) bad("horizons.k_max", "must lie in [10, 10000]");
  if (c.horizons.lyapunov_k < 100) bad("horizons.lyapunov_k", "must be >= 100");
  if (c.horizons.k_grid.empty()) bad("horizons.k_grid", "must not be empty");
  for (std::size_t i = 0; i < c.horizons.k_grid.size(); ++i)
    if (c.horizons.k_grid[i] < 1 || (i > 0 && c.horizons.k_grid[i] <= c.horizons.k_grid[i - 1]))
      bad("horizons.k_grid", "must be positive and strictly increasing");
  for (std::size_t i = 0; i < c.horizons.probe_k.size(); ++i)
    if (c.horizons.probe_k[i] < 1 || (i > 0 && c.horizons.probe_k[i] <= c.horizons.probe_k[i - 1]))
      bad("horizons.probe_k", "must be positive and strictly increasing");
  if (c.horizons.h_list.size() < 4) bad("horizons.h_list", "needs at least 4 loop sizes");
  for (double h : c.horizons.h_list)
    if (!(h > 0 && h <= 0.1)) bad("horizons.h_list", "loop sizes must lie in (0, 0.1]");
  const Tolerances& t = c.tolerances;
  range("star_rate_floor", t.star_rate_floor, 0.0, 1.0, true);
  range("star_min_threshold", t.star_min_threshold, -1000.0, -1e-12);
  range("starstar_rate_floor", t.starstar_rate_floor, 0.0, 1.0);
  range("fd_step", t.fd_step, 1e-7, 1e-2);
  range("involutivity", t.involutivity, 0.0, 1e-2, true);
  range("frame_radius", t.frame_radius, 0.0, 0.5, true);
  range("integrator", t.integrator, 1e-14, 1e-6);
  range("holonomy_floor", t.holonomy_floor, 0.0, 1e-6);
  range("margin_zero", t.margin_zero, 0.0, 0.1);
  range("det_product", t.det_product, 0.0, 1e-2, true);
  range("domination_margin", t.domination_margin, 0.0, 0.5);
  if (!(t.bound_constant > 0)) bad("tolerances.bound_constant", "must be positive (.inf disables the bound)");
  if (c.analyses.apriori_trials < 0 || c.analyses.apriori_trials > 10000)
    bad("analyses.apriori_trials", "must lie in [0, 10000]");
  if (!(c.analyses.surface_extent > 0 && c.analyses.surface_extent <= 1.0))
    bad("analyses.surface_extent", "must lie in (0, 1]");
  if (c.analyses.surface_resolution < 2 || c.analyses.surface_resolution > 201)
    bad("analyses.surface_resolution", "must lie in [2, 201]");
  if (c.output_dir.empty()) bad("output.dir", "must not be empty");
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream msg;
    msg << source << ':' << (e.mark.line + 1) << ": syntax: " << e.msg;
    throw ConfigError(msg.str());
  }
  if (!root.IsMap()) throw ConfigError(source + ": top level must be a mapping");
  const Section top(root, "", source);
  top.allow_only({"model", "samples", "horizons", "tolerances", "analyses", "output"});
  RunConfig c;
  if (!top.has("model")) top.fail("model.name", "missing required field");
  read_model(top.child("model"), c.model);
  read_samples(top.child("samples"), c.samples);

  const Section h = top.child("horizons");
  h.allow_only({"k_max", "k_grid", "h_list", "lyapunov_k", "probe_k"});
  h.read("k_max", c.horizons.k_max);
  h.read("k_grid", c.horizons.k_grid);
  h.read("h_list", c.horizons.h_list);
  h.read("lyapunov_k", c.horizons.lyapunov_k);
  h.read("probe_k", c.horizons.probe_k);

  const Section t = top.child("tolerances");
  t.allow_only({"star_rate_floor", "star_min_threshold", "starstar_rate_floor", "fd_step", "involutivity",
                "frame_radius", "integrator", "holonomy_floor", "margin_zero", "det_product", "domination_margin",
                "bound_constant"});
  Tolerances& tol = c.tolerances;
  t.read("star_rate_floor", tol.star_rate_floor);
  t.read("star_min_threshold", tol.star_min_threshold);
  t.read("starstar_rate_floor", tol.starstar_rate_floor);
  t.read("fd_step", tol.fd_step);
  t.read("involutivity", tol.involutivity);
  t.read("frame_radius", tol.frame_radius);
  t.read("integrator", tol.integrator);
  t.read("holonomy_floor", tol.holonomy_floor);
  t.read("margin_zero", tol.margin_zero);
  t.read("det_product", tol.det_product);
  t.read("domination_margin", tol.domination_margin);
  t.read("bound_constant", tol.bound_constant);

  const Section a = top.child("analyses");
  a.allow_only({"domination", "lyapunov", "regularity", "brackets", "holonomy", "bound_probe", "apriori_trials",
                "surface", "surface_extent", "surface_resolution"});
  a.read("domination", c.analyses.domination);
  a.read("lyapunov", c.analyses.lyapunov);
  a.read("regularity", c.analyses.regularity);
  a.read("brackets", c.analyses.brackets);
  a.read("holonomy", c.analyses.holonomy);
  a.read("bound_probe", c.analyses.bound_probe);
  a.read("apriori_trials", c.analyses.apriori_trials);
  a.read("surface", c.analyses.surface);
  a.read("surface_extent", c.analyses.surface_extent);
  a.read("surface_resolution", c.analyses.surface_resolution);

  const Section o = top.child("output");
  o.allow_only({"dir", "name"});
  o.read("dir", c.output_dir);
  o.read("name", c.run_name);

  try {
    validate(c);
  } catch (const ConfigError& e) {
    std::string what = e.what();
    const std::string prefix = "<config>";
    if (what.compare(0, prefix.size(), prefix) == 0) what = source + what.substr(prefix.size());
    throw ConfigError(what);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string to_yaml(const RunConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << c.model.name;
  out << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "matrix" << YAML::Value << YAML::Flow << c.model.matrix;
  out << YAML::Key << "epsilon" << YAML::Value << c.model.epsilon;
  out << YAML::Key << "tau" << YAML::Value << c.model.tau;
  out << YAML::Key << "profile" << YAML::Value << c.model.profile;
  out << YAML::Key << "shear_source" << YAML::Value << c.model.shear_source;
  out << YAML::Key << "shear_target" << YAML::Value << c.model.shear_target;
  out << YAML::Key << "dim_e" << YAML::Value << c.model.dim_e;
  out << YAML::Key << "e_eigen_indices" << YAML::Value << YAML::Flow << c.model.e_eigen_indices;
  out << YAML::Key << "dim" << YAML::Value << c.model.dim;
  out << YAML::Key << "refine_iterations" << YAML::Value << c.model.refine_iterations;
  out << YAML::EndMap << YAML::EndMap;

  out << YAML::Key << "samples" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "count" << YAML::Value << c.samples.count;
  out << YAML::Key << "seed" << YAML::Value << c.samples.seed;
  out << YAML::Key << "points" << YAML::Value << YAML::BeginSeq;
  for (const Vec& p : c.samples.points) out << YAML::Flow << std::vector<double>(p.data(), p.data() + p.size());
  out << YAML::EndSeq << YAML::EndMap;

  out << YAML::Key << "horizons" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "k_max" << YAML::Value << c.horizons.k_max;
  out << YAML::Key << "k_grid" << YAML::Value << YAML::Flow << c.horizons.k_grid;
  out << YAML::Key << "h_list" << YAML::Value << YAML::Flow << c.horizons.h_list;
  out << YAML::Key << "lyapunov_k" << YAML::Value << c.horizons.lyapunov_k;
  out << YAML::Key << "probe_k" << YAML::Value << YAML::Flow << c.horizons.probe_k;
  out << YAML::EndMap;

  const Tolerances& t = c.tolerances;
  out << YAML::Key << "tolerances" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "star_rate_floor" << YAML::Value << t.star_rate_floor;
  out << YAML::Key << "star_min_threshold" << YAML::Value << t.star_min_threshold;
  out << YAML::Key << "starstar_rate_floor" << YAML::Value << t.starstar_rate_floor;
  out << YAML::Key << "fd_step" << YAML::Value << t.fd_step;
  out << YAML::Key << "involutivity" << YAML::Value << t.involutivity;
  out << YAML::Key << "frame_radius" << YAML::Value << t.frame_radius;
  out << YAML::Key << "integrator" << YAML::Value << t.integrator;
  out << YAML::Key << "holonomy_floor" << YAML::Value << t.holonomy_floor;
  out << YAML::Key << "margin_zero" << YAML::Value << t.margin_zero;
  out << YAML::Key << "det_product" << YAML::Value << t.det_product;
  out << YAML::Key << "domination_margin" << YAML::Value << t.domination_margin;
  out << YAML::Key << "bound_constant" << YAML::Value << t.bound_constant;
  out << YAML::EndMap;

  const Analyses& a = c.analyses;
  out << YAML::Key << "analyses" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "domination" << YAML::Value << a.domination;
  out << YAML::Key << "lyapunov" << YAML::Value << a.lyapunov;
  out << YAML::Key << "regularity" << YAML::Value << a.regularity;
  out << YAML::Key << "brackets" << YAML::Value << a.brackets;
  out << YAML::Key << "holonomy" << YAML::Value << a.holonomy;
  out << YAML::Key << "bound_probe" << YAML::Value << a.bound_probe;
  out << YAML::Key << "apriori_trials" << YAML::Value << a.apriori_trials;
  out << YAML::Key << "surface" << YAML::Value << a.surface;
  out << YAML::Key << "surface_extent" << YAML::Value << a.surface_extent;
  out << YAML::Key << "surface_resolution" << YAML::Value << a.surface_resolution;
  out << YAML::EndMap;

  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dir" << YAML::Value << c.output_dir;
  out << YAML::Key << "name" << YAML::Value << c.run_name;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace splitlab
