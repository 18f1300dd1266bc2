#include "splitlab/run.hpp"

#include "splitlab/domination.hpp"
#include "splitlab/frobenius.hpp"
#include "splitlab/lyapunov.hpp"
#include "splitlab/surface.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <optional>
#include <random>

namespace splitlab {

using nlohmann::json;

namespace {

/// Non-finite doubles become the strings "inf", "-inf", "nan" (JSON has no such numbers).
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double as_double(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

json vec(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

json mat(const Mat& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec(Vec(m.row(r).transpose())));
  return a;
}

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const OrbitEscapeError*>(&e)) return "orbit_escape";
  if (dynamic_cast<const SplittingDegeneracyError*>(&e)) return "splitting_degeneracy";
  if (dynamic_cast<const ConvergenceError*>(&e)) return "convergence";
  if (dynamic_cast<const PreconditionError*>(&e)) return "precondition";
  if (dynamic_cast<const StencilEscapeError*>(&e)) return "stencil_escape";
  if (dynamic_cast<const FrameInstabilityError*>(&e)) return "frame_instability";
  if (dynamic_cast<const OracleFailure*>(&e)) return "oracle_failure";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  return "internal";
}

json star_json(const StarDiagnostic& s) {
  return {{"k_max", s.k_max},         {"fwd", vec(s.fwd)},          {"bwd", vec(s.bwd)},
          {"fwd_min", num(s.fwd_min)}, {"bwd_min", num(s.bwd_min)}, {"fwd_slope", num(s.fwd_slope)},
          {"bwd_slope", num(s.bwd_slope)}, {"verdict", to_string(s.verdict)}};
}

json starstar_json(const StarStarTable& t) {
  json triples = json::array();
  for (const auto& r : t.triples)
    triples.push_back({{"i", r.i},
                       {"j", r.j},
                       {"m", r.m},
                       {"fwd_rate", num(r.fwd_rate)},
                       {"fwd_worst_k", r.fwd_worst_k},
                       {"bwd_rate", num(r.bwd_rate)},
                       {"bwd_worst_k", r.bwd_worst_k},
                       {"verdict", to_string(r.verdict)}});
  return {{"k_max", t.k_max},
          {"triples", triples},
          {"forward_implication", {{"applicable", t.forward_implication_applicable}, {"holds", t.forward_implication_holds}}},
          {"backward_implication",
           {{"applicable", t.backward_implication_applicable}, {"holds", t.backward_implication_holds}}}};
}

json lyapunov_json(const LyapunovEstimate& e) {
  json groups = json::array();
  for (const auto& g : group_exponents(e)) groups.push_back({{"value", num(g.value)}, {"multiplicity", g.multiplicity}});
  json checkpoints = json::array();
  for (std::size_t i = 0; i < e.checkpoints.size(); ++i)
    checkpoints.push_back({{"k", e.checkpoint_steps[i]}, {"exponents", vec(e.checkpoints[i])}});
  return {{"subbundle", to_string(e.subbundle)},
          {"horizon", e.horizon},
          {"exponents", vec(e.exponents)},
          {"groups", groups},
          {"checkpoints", checkpoints}};
}

json regularity_json(const RegularityReport& r) {
  json rates = json::array(), devs = json::array();
  for (const auto& v : r.rates) rates.push_back(vec(v));
  for (const auto& v : r.deviations) devs.push_back(vec(v));
  return {{"subbundle", to_string(r.subbundle)},
          {"k_grid", r.k_grid},
          {"exponents", vec(r.exponents)},
          {"rates", rates},
          {"deviations", devs},
          {"max_deviation_at_largest", num(r.max_deviation_at_largest)},
          {"decay_slope", num(r.decay_slope)}};
}

json brackets_json(const BracketDiagnostics& d) {
  return {{"dim", d.dim},
          {"pair_defects", mat(d.pair_defects)},
          {"pair_errors", mat(d.pair_errors)},
          {"max_pair", {d.max_i, d.max_j}},
          {"max_defect", num(d.max_defect)},
          {"c1_norm", num(d.c1_norm)},
          {"tolerance", num(d.tolerance)},
          {"ladder_steps", vec(d.ladder_steps)},
          {"ladder_defects", vec(d.ladder_defects)},
          {"verdict", to_string(d.verdict)},
          {"fd_step", num(d.fd_step)},
          {"richardson_order", d.richardson_order}};
}

json holonomy_json(const ScalingFit& f) {
  json recs = json::array();
  for (const auto& r : f.records)
    recs.push_back({{"h", num(r.h)},
                    {"defect_vector", vec(r.defect_vector)},
                    {"defect", num(r.defect_norm)},
                    {"transverse", num(r.transverse)},
                    {"normalized", num(r.normalized)},
                    {"integrator_steps", r.integrator_steps}});
  const int i = f.records.empty() ? 1 : f.records.front().i;
  const int j = f.records.empty() ? 2 : f.records.front().j;
  return {{"pair", {i, j}},
          {"records", recs},
          {"exponent", num(f.exponent)},
          {"coefficient", num(f.coefficient)},
          {"exponent_defined", f.exponent_defined},
          {"verdict", to_string(f.verdict)}};
}

json bound_json(const BoundProbe& p) {
  json entries = json::array();
  for (const auto& e : p.entries)
    entries.push_back({{"k", e.k},
                       {"D_k", num(e.defect)},
                       {"D_k_error", num(e.defect_error)},
                       {"max_pair", {e.max_i, e.max_j}},
                       {"log_R_k", num(e.log_ratio)},
                       {"K_k", num(e.constant)}});
  return {{"entries", entries}, {"max_K", num(p.max_constant)}, {"bound", num(p.bound)}, {"bounded", p.bounded}};
}

json margins_json(const MarginTable& t, const std::vector<bool>& agree) {
  json entries = json::array();
  for (std::size_t a = 0; a < t.entries.size(); ++a) {
    const auto& e = t.entries[a];
    entries.push_back({{"i", e.i},
                       {"j", e.j},
                       {"m", e.m},
                       {"value", num(e.value)},
                       {"predicted", to_string(e.predicted)},
                       {"agrees_with_triple_bounds", a < agree.size() ? json(agree[a]) : json(nullptr)}});
  }
  return {{"e_exponents", vec(t.e_exponents)},
          {"f_exponents", vec(t.f_exponents)},
          {"entries", entries},
          {"min_margin", num(t.min_margin)},
          {"min_index", t.min_index}};
}

template <typename Writer>
std::string table(Writer&& write) {
  std::ostringstream out;
  write(out);
  return out.str();
}

void write_brackets_table(std::ostream& out, int point_id, const Mat& defects, const Mat& errors, bool header) {
  if (header) out << "point_id,i,j,defect,fd_error\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < defects.rows(); ++i)
    for (Eigen::Index j = i + 1; j < defects.cols(); ++j)
      out << point_id << ',' << (i + 1) << ',' << (j + 1) << ',' << defects(i, j) << ',' << errors(i, j) << '\n';
}

json yaml_to_json(const YAML::Node& n) {
  if (n.IsMap()) {
    json o = json::object();
    for (const auto& kv : n) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
    return o;
  }
  if (n.IsSequence()) {
    json a = json::array();
    for (const auto& v : n) a.push_back(yaml_to_json(v));
    return a;
  }
  if (n.IsNull()) return nullptr;
  const std::string s = n.Scalar();
  if (n.Tag() == "!") return s;
  if (s == "true" || s == "false") return s == "true";
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos == s.size()) return v;
  } catch (...) {
  }
  try {
    return num(n.as<double>());
  } catch (...) {
  }
  return s;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

struct ConditionSummary {
  bool evaluated = false;
  bool holds = true;
  /// Not contradicted, but some sample could not be decided at the numerical resolution.
  bool unresolved = false;
  double value = 0.0;
};

std::string status(const ConditionSummary& c) {
  if (!c.evaluated) return "not_evaluated";
  if (!c.holds) return "fails";
  return c.unresolved ? "unresolved" : "holds";
}

json condition(const std::string& name, const std::string& expression, const ConditionSummary& c,
               const std::string& margin_meaning, double threshold) {
  return {{"condition", name},
          {"expression", expression},
          {"evaluated", c.evaluated},
          {"holds", c.evaluated && c.holds && !c.unresolved},
          {"status", status(c)},
          {"margin", num(c.value)},
          {"margin_meaning", margin_meaning},
          {"threshold", num(threshold)}};
}

}  // namespace

json config_to_json(const RunConfig& config) { return yaml_to_json(YAML::Load(to_yaml(config))); }

std::vector<Vec> sample_points(const RunConfig& config, const ModelSystem& model) {
  std::vector<Vec> pts;
  if (!config.samples.points.empty()) {
    for (const Vec& p : config.samples.points) {
      if (p.size() != model.dim())
        throw ConfigError("samples.points: point dimension does not match the model dimension");
      pts.push_back(model.space.canonicalize(p));
    }
    return pts;
  }
  std::mt19937_64 rng(config.samples.seed);
  for (int i = 0; i < config.samples.count; ++i) pts.push_back(random_point(model.space, rng));
  return pts;
}

RunReport run_analysis(const RunConfig& config) {
  validate(config);
  RunReport run;
  json& rep = run.report;
  rep["schema_version"] = kReportSchemaVersion;
  rep["meta"] = {{"tool", "splitlab"}, {"version", "0.1.0"}};
  rep["config"] = config_to_json(config);
  rep["status"] = "ok";
  rep["errors"] = json::array();

  ModelSystem model;
  try {
    model = model_zoo(config.model);
  } catch (const std::exception& e) {
    rep["status"] = "error";
    rep["errors"].push_back({{"module", "manifold_models"}, {"type", error_type(e)}, {"message", e.what()}});
    run.failed = true;
    return run;
  }
  const ModelTags tags = model_tags(model);
  std::vector<std::string> applicable;
  for (const auto& entry : zoo_catalog())
    if (entry.name == model.name) applicable = entry.tags.applicable_results;
  rep["model"] = {{"name", model.name},
                  {"dim", model.dim()},
                  {"dim_e", tags.dim_e},
                  {"dim_f", tags.dim_f},
                  {"volume_preserving", tags.volume_preserving},
                  {"analytic_splitting", tags.analytic_splitting},
                  {"chart_only", tags.chart_only},
                  {"applicable_results", applicable}};

  const Tolerances& tol = config.tolerances;
  const Analyses& an = config.analyses;
  const int d = model.splitting.dim_e;
  const std::vector<Vec> points = sample_points(config, model);

  StarOptions star_opt{tol.star_rate_floor, tol.star_min_threshold};
  StarStarOptions ss_opt{tol.starstar_rate_floor};
  DefectOptions def_opt;
  def_opt.fd.h = tol.fd_step;
  def_opt.radius = tol.frame_radius;
  def_opt.base_tolerance = tol.involutivity;
  FlowOptions flow_opt;
  flow_opt.abs_tol = tol.integrator;
  flow_opt.rel_tol = tol.integrator;
  flow_opt.frame_radius = tol.frame_radius;
  flow_opt.floor = tol.holonomy_floor;

  std::ostringstream sing_csv, star_csv, ss_csv, lyap_csv, reg_csv, br_csv, hol_csv, bound_csv, margin_csv;
  sing_csv << "point_id,k,i,log_s\n";
  star_csv << "point_id,k,star_fwd,star_bwd\n";
  ss_csv << "point_id,i,j,m,fwd_rate,fwd_worst_k,bwd_rate,bwd_worst_k,verdict\n";
  lyap_csv << "point_id,subbundle,l,exponent\n";
  reg_csv << "point_id,k,l,rate,lambda,deviation\n";
  br_csv << "point_id,i,j,defect,fd_error\n";
  hol_csv << "point_id,h,defect,transverse,normalized\n";
  bound_csv << "point_id,k,D_k,log_R_k,K_k\n";
  margin_csv << "point_id,i,j,m,value,predicted,agrees\n";
  for (auto* s : {&ss_csv, &lyap_csv, &margin_csv}) *s << std::setprecision(17);

  ConditionSummary dyn, vol, ivol, star_c, ss_c, margin_c, br_c, hol_c, vp_c;
  dyn.value = vol.value = ivol.value = -std::numeric_limits<double>::infinity();
  star_c.value = ss_c.value = margin_c.value = std::numeric_limits<double>::infinity();
  br_c.value = hol_c.value = vp_c.value = 0.0;
  std::map<std::string, int> bracket_counts, holonomy_counts;
  bool margins_agree = true;

  json pts = json::array();
  for (std::size_t pid = 0; pid < points.size(); ++pid) {
    const Vec& x = points[pid];
    const int id = static_cast<int>(pid);
    json pj = {{"id", id}, {"x", vec(x)}, {"errors", json::array()}};
    auto guarded = [&](const std::string& module, auto&& body) {
      try {
        body();
      } catch (const std::exception& e) {
        pj["errors"].push_back({{"module", module}, {"type", error_type(e)}, {"message", e.what()}});
        run.failed = true;
      }
    };
    vp_c.evaluated = true;
    vp_c.value = std::max(vp_c.value, std::abs(std::abs(model.jacobian(x).determinant()) - 1.0));

    std::optional<StarStarTable> starstar;
    if (an.domination && d >= 2) {
      guarded("domination", [&] {
        const DominationReport dr = domination_report(model, x, config.horizons.k_max, star_opt, ss_opt);
        pj["domination"] = {{"ratios",
                             {{"dyn_ratio", num(dr.ratios.dyn_ratio)},
                              {"vol_ratio_fwd", num(dr.ratios.vol_ratio_fwd)},
                              {"vol_ratio_bwd", num(dr.ratios.vol_ratio_bwd)},
                              {"exclusivity_holds", volume_exclusivity_holds(dr.ratios)}}},
                            {"star", star_json(dr.star)},
                            {"starstar", starstar_json(dr.starstar)},
                            {"det_ratio_fwd", vec(dr.det_ratio_fwd)},
                            {"det_ratio_bwd", vec(dr.det_ratio_bwd)}};
        dyn.evaluated = vol.evaluated = ivol.evaluated = star_c.evaluated = ss_c.evaluated = true;
        dyn.value = std::max(dyn.value, dr.ratios.dyn_ratio);
        vol.value = std::max(vol.value, dr.ratios.vol_ratio_fwd);
        ivol.value = std::max(ivol.value, dr.ratios.vol_ratio_bwd);
        if (dr.star.verdict == Side::neither) star_c.holds = false;
        star_c.value = std::min(star_c.value, std::max(-dr.star.fwd_slope, -dr.star.bwd_slope));
        for (const auto& t : dr.starstar.triples) {
          if (t.verdict == Side::neither) ss_c.holds = false;
          ss_c.value = std::min(ss_c.value, std::max(t.fwd_rate, t.bwd_rate));
          ss_csv << id << ',' << t.i << ',' << t.j << ',' << t.m << ',' << t.fwd_rate << ',' << t.fwd_worst_k << ','
                 << t.bwd_rate << ',' << t.bwd_worst_k << ',' << to_string(t.verdict) << '\n';
        }
        write_star_csv(star_csv, id, dr.star, false);
        write_singular_csv(sing_csv, id, singular_value_sequence(model, x, config.horizons.k_max, Subbundle::full, true),
                           false);
        starstar = dr.starstar;
      });
    }

    if (an.lyapunov) {
      guarded("lyapunov", [&] {
        json lj;
        for (Subbundle sub : {Subbundle::full, Subbundle::E, Subbundle::F}) {
          const LyapunovEstimate est = lyapunov_spectrum(model, x, config.horizons.lyapunov_k, sub);
          lj[to_string(sub)] = lyapunov_json(est);
          for (std::size_t l = 0; l < est.exponents.size(); ++l)
            lyap_csv << id << ',' << to_string(sub) << ',' << (l + 1) << ',' << est.exponents[l] << '\n';
        }
        if (d >= 2) {
          const MarginTable mt = exponent_condition(model, x, config.horizons.lyapunov_k, tol.margin_zero);
          std::vector<bool> agree;
          if (starstar) agree = margin_agreement(mt, *starstar);
          lj["margins"] = margins_json(mt, agree);
          margin_c.evaluated = true;
          margin_c.value = std::min(margin_c.value, mt.min_margin);
          if (mt.min_margin <= tol.margin_zero) margin_c.holds = false;
          for (std::size_t a = 0; a < mt.entries.size(); ++a) {
            const auto& e = mt.entries[a];
            const bool ok = a < agree.size() && agree[a];
            if (a < agree.size() && !ok) margins_agree = false;
            margin_csv << id << ',' << e.i << ',' << e.j << ',' << e.m << ',' << e.value << ','
                       << to_string(e.predicted) << ',' << (a < agree.size() ? (ok ? "1" : "0") : "") << '\n';
          }
        }
        pj["lyapunov"] = lj;
      });
    }

    if (an.regularity) {
      guarded("regularity", [&] {
        const RegularityReport rr = regularity_check(model, x, config.horizons.k_grid);
        pj["regularity"] = regularity_json(rr);
        write_regularity_csv(reg_csv, id, rr, false);
      });
    }

    if (an.brackets && d >= 2) {
      guarded("frobenius", [&] {
        const BracketDiagnostics bd = bracket_defect(model.splitting, model.space, x, def_opt);
        json bj = brackets_json(bd);
        if (an.apriori_trials > 0) {
          const AprioriRecord ar = apriori_bound_check(model.splitting, model.space, x, an.apriori_trials,
                                                       config.samples.seed + pid, def_opt);
          bj["apriori"] = {{"trials", ar.trials},      {"bound", num(ar.bound)},
                           {"max_lhs", num(ar.max_lhs)}, {"min_slack", num(ar.min_slack)},
                           {"violations", ar.violations}};
        }
        pj["brackets"] = bj;
        write_brackets_table(br_csv, id, bd.pair_defects, bd.pair_errors, false);
        br_c.evaluated = true;
        br_c.value = std::max(br_c.value, bd.max_defect);
        if (bd.verdict == InvolutivityVerdict::non_involutive) br_c.holds = false;
        if (bd.verdict == InvolutivityVerdict::unresolved) br_c.unresolved = true;
        ++bracket_counts[to_string(bd.verdict)];
      });
    }

    if (an.holonomy && d >= 2) {
      guarded("surface_integration", [&] {
        const ScalingFit fit = defect_scaling(model.splitting, model.space, x, config.horizons.h_list, 1, 2, flow_opt);
        pj["holonomy"] = holonomy_json(fit);
        write_holonomy_csv(hol_csv, id, fit, false);
        hol_c.evaluated = true;
        if (!fit.records.empty()) hol_c.value = std::max(hol_c.value, fit.records.back().transverse);
        if (fit.verdict == HolonomyVerdict::non_involutive) hol_c.holds = false;
        if (fit.verdict == HolonomyVerdict::inconclusive) hol_c.unresolved = true;
        ++holonomy_counts[to_string(fit.verdict)];
      });
    }

    if (an.bound_probe && d >= 2 && !config.horizons.probe_k.empty()) {
      guarded("frobenius", [&] {
        BoundProbeOptions bo;
        bo.defect = def_opt;
        bo.bound = tol.bound_constant;
        const BoundProbe bp = dynamical_bound_probe(model, x, config.horizons.probe_k, bo);
        pj["bound_probe"] = bound_json(bp);
        write_bound_csv(bound_csv, id, bp, false);
      });
    }

    if (an.surface && d == 2 && pid == 0) {
      guarded("surface_integration", [&] {
        const SurfaceMesh mesh =
            grow_surface(model.splitting, model.space, x, an.surface_extent, an.surface_resolution, flow_opt);
        pj["surface"] = {{"file", "surface_0.obj"},
                         {"extent", num(mesh.extent)},
                         {"resolution", mesh.resolution},
                         {"rows", mesh.rows},
                         {"max_tangency_residual", num(mesh.max_residual())},
                         {"truncated", mesh.truncated},
                         {"truncation_reason", mesh.truncation_reason}};
        run.meshes["surface_0.obj"] = table([&](std::ostream& o) { write_mesh(o, mesh); });
      });
    }
    if (!pj["errors"].empty()) rep["status"] = "error";
    pts.push_back(pj);
  }
  rep["points"] = pts;

  if (an.domination && model.dim() == 3 && d == 2 && model.volume_preserving) {
    try {
      const VolumeImplicationReport vr = check_dynamical_implies_volume(model, points, tol.det_product);
      json cex = vr.counterexamples;
      rep["volume_implication"] = {{"evaluated", true},
                                   {"holds", vr.holds()},
                                   {"det_tolerance", num(vr.det_tolerance)},
                                   {"max_det_product_deviation", num(vr.max_det_deviation)},
                                   {"counterexamples", cex}};
    } catch (const std::exception& e) {
      rep["volume_implication"] = {{"evaluated", false}, {"reason", e.what()}};
    }
  } else {
    rep["volume_implication"] = {{"evaluated", false},
                                 {"reason", "needs a volume-preserving model with dim 3 and dim E = 2"}};
  }

  const double dom_limit = 1.0 - tol.domination_margin;
  dyn.holds = dyn.value < dom_limit;
  vol.holds = vol.value < dom_limit;
  ivol.holds = ivol.value < dom_limit;
  vp_c.holds = model.volume_preserving && vp_c.value <= 1e-9;

  json conds = json::array();
  conds.push_back(condition("volume_preserving", "|det Dphi| = 1", vp_c, "max |det Dphi| - 1| over samples", 1e-9));
  conds.push_back(condition("dynamical_domination", "||Dphi|E|| / m(Dphi|F) < 1", dyn,
                            "max ratio over samples (holds below threshold)", dom_limit));
  conds.push_back(condition("volume_domination", "|det Dphi|E| / |det Dphi|F| < 1", vol,
                            "max ratio over samples (holds below threshold)", dom_limit));
  conds.push_back(condition("inverse_volume_domination", "|det Dphi^-1|E| / |det Dphi^-1|F| < 1", ivol,
                            "max ratio over samples (holds below threshold)", dom_limit));
  conds.push_back(condition("second_order_liminf",
                            "liminf_k s^k_{d-1} s^k_d / r^k_1 = 0 and/or liminf_k s^-k_1 s^-k_2 / r^-k_l = 0", star_c,
                            "worst-point decay rate of the better side (per step)", tol.star_rate_floor));
  conds.push_back(condition("exponential_triple_bounds",
                            "s^k_i s^k_j / r^k_m <= exp(-lambda k) for all k, forward or backward, every triple", ss_c,
                            "smallest best-side rate lambda over triples and samples", tol.starstar_rate_floor));
  json margin_cond = condition("lyapunov_exponent_margin", "mu_i + mu_j != lambda_m", margin_c,
                               "smallest |mu_i + mu_j - lambda_m| over triples and samples", tol.margin_zero);
  margin_cond["signs_agree_with_triple_bounds"] = margins_agree;
  conds.push_back(margin_cond);
  json br_cond = condition("bracket_involutivity", "|Pi[Y_i, Y_j]| = 0", br_c, "largest max-pair defect over samples",
                           tol.involutivity);
  br_cond["verdict_counts"] = bracket_counts;
  conds.push_back(br_cond);
  json hol_cond = condition("holonomy_closure", "|Pi(loop defect)| = o(h^2)", hol_c,
                            "largest transverse loop defect at the smallest h", tol.holonomy_floor);
  hol_cond["verdict_counts"] = holonomy_counts;
  conds.push_back(hol_cond);

  const bool dim3_d2 = model.dim() == 3 && d == 2;
  const bool general = model.dim() >= 3 && d >= 2;
  auto result = [&](const std::string& name, bool shape_ok, const std::vector<std::string>& needs, bool conds_ok) {
    const bool ok = shape_ok && conds_ok;
    const bool contradicted = ok && bracket_counts.count("non_involutive") > 0;
    return json{{"result", name},
                {"dimension_hypotheses", shape_ok},
                {"conditions", needs},
                {"hypotheses_satisfied", ok},
                {"predicts", ok ? "E uniquely integrable" : "no conclusion"},
                {"contradicted_by_brackets", contradicted}};
  };
  json results = json::array();
  results.push_back(result("volume_preserving_dominated_3d", dim3_d2, {"volume_preserving", "dynamical_domination"},
                           vp_c.holds && dyn.evaluated && dyn.holds));
  results.push_back(result("volume_dominated_3d", dim3_d2, {"volume_domination", "inverse_volume_domination"},
                           vol.evaluated && (vol.holds || ivol.holds)));
  results.push_back(result("second_order_liminf", general, {"second_order_liminf"}, star_c.evaluated && star_c.holds));
  results.push_back(
      result("exponential_triple_bounds", general, {"exponential_triple_bounds"}, ss_c.evaluated && ss_c.holds));
  rep["verdicts"] = {{"conditions", conds}, {"results", results}};

  run.tables["singular.csv"] = sing_csv.str();
  run.tables["star.csv"] = star_csv.str();
  run.tables["starstar.csv"] = ss_csv.str();
  run.tables["lyapunov.csv"] = lyap_csv.str();
  run.tables["margins.csv"] = margin_csv.str();
  run.tables["regularity.csv"] = reg_csv.str();
  run.tables["brackets.csv"] = br_csv.str();
  run.tables["holonomy.csv"] = hol_csv.str();
  run.tables["bound.csv"] = bound_csv.str();
  if (run.failed) rep["status"] = "error";
  return run;
}

std::string resolve_output_root(const RunConfig& config, const std::string& override_root) {
  if (!override_root.empty()) return override_root;
  if (const char* env = std::getenv("SPLITLAB_OUT"); env && *env) return env;
  return config.output_dir;
}

std::string write_run(const RunReport& run, const RunConfig& config, const std::string& root) {
  namespace fs = std::filesystem;
  const std::string name = config.run_name.empty() ? config.model.name : config.run_name;
  const fs::path dir = fs::path(root) / name;
  fs::create_directories(dir);
  json rep = run.report;
  rep["meta"]["created"] = timestamp();
  auto write = [&](const std::string& file, const std::string& text) {
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / file).string());
    out << text;
  };
  write("report.json", rep.dump(2) + "\n");
  write("config.yaml", to_yaml(config));
  for (const auto& [file, text] : run.tables) write(file, text);
  for (const auto& [file, text] : run.meshes) write(file, text);
  return dir.string();
}

json load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open report");
  json rep;
  try {
    in >> rep;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": malformed report JSON: " + e.what());
  }
  if (!rep.is_object() || !rep.contains("schema_version") || !rep["schema_version"].is_string())
    throw ConfigError(path + ": schema_version missing");
  const std::string v = rep["schema_version"].get<std::string>();
  int major = -1;
  try {
    major = std::stoi(v.substr(0, v.find('.')));
  } catch (...) {
  }
  if (major != kReportSchemaMajor)
    throw ConfigError(path + ": unsupported report schema version " + v + " (supported major: " +
                      std::to_string(kReportSchemaMajor) + ")");
  return rep;
}

std::vector<std::string> plot_keys() { return {"star", "regularity", "holonomy", "brackets", "bound"}; }

std::string plotdata_csv(const json& report, const std::string& key) {
  const auto keys = plot_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
    std::string list;
    for (const auto& k : keys) list += (list.empty() ? "" : ", ") + k;
    throw PreconditionError("unknown plot key '" + key + "' (valid keys: " + list + ")");
  }
  std::ostringstream out;
  const json empty = json::array();
  const json& points = report.contains("points") ? report["points"] : empty;
  auto doubles = [](const json& a) {
    std::vector<double> v;
    for (const auto& x : a) v.push_back(as_double(x));
    return v;
  };
  bool header = true;
  auto emit_header = [&](const char* h) {
    if (header) out << h;
    header = false;
  };
  if (key == "star") emit_header("point_id,k,star_fwd,star_bwd\n");
  if (key == "regularity") emit_header("point_id,k,l,rate,lambda,deviation\n");
  if (key == "holonomy") emit_header("point_id,h,defect,transverse,normalized\n");
  if (key == "brackets") emit_header("point_id,i,j,defect,fd_error\n");
  if (key == "bound") emit_header("point_id,k,D_k,log_R_k,K_k\n");
  for (const auto& p : points) {
    const int id = p.at("id").get<int>();
    if (key == "star" && p.contains("domination")) {
      StarDiagnostic s;
      s.fwd = doubles(p["domination"]["star"]["fwd"]);
      s.bwd = doubles(p["domination"]["star"]["bwd"]);
      write_star_csv(out, id, s, false);
    } else if (key == "regularity" && p.contains("regularity")) {
      const json& r = p["regularity"];
      RegularityReport rr;
      rr.k_grid = r["k_grid"].get<std::vector<long>>();
      rr.exponents = doubles(r["exponents"]);
      for (const auto& row : r["rates"]) rr.rates.push_back(doubles(row));
      for (const auto& row : r["deviations"]) rr.deviations.push_back(doubles(row));
      write_regularity_csv(out, id, rr, false);
    } else if (key == "holonomy" && p.contains("holonomy")) {
      ScalingFit fit;
      for (const auto& r : p["holonomy"]["records"]) {
        HolonomyRecord h;
        h.h = as_double(r["h"]);
        h.defect_norm = as_double(r["defect"]);
        h.transverse = as_double(r["transverse"]);
        h.normalized = as_double(r["normalized"]);
        fit.records.push_back(h);
      }
      write_holonomy_csv(out, id, fit, false);
    } else if (key == "brackets" && p.contains("brackets")) {
      const json& b = p["brackets"];
      const int dim = b["dim"].get<int>();
      Mat defects(dim, dim), errors(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          defects(i, j) = as_double(b["pair_defects"][i][j]);
          errors(i, j) = as_double(b["pair_errors"][i][j]);
        }
      write_brackets_table(out, id, defects, errors, false);
    } else if (key == "bound" && p.contains("bound_probe")) {
      BoundProbe bp;
      for (const auto& e : p["bound_probe"]["entries"]) {
        BoundProbeEntry be;
        be.k = e["k"].get<long>();
        be.defect = as_double(e["D_k"]);
        be.log_ratio = as_double(e["log_R_k"]);
        be.constant = as_double(e["K_k"]);
        bp.entries.push_back(be);
      }
      write_bound_csv(out, id, bp, false);
    }
  }
  return out.str();
}

json zoo_json() {
  json a = json::array();
  for (const auto& e : zoo_catalog()) {
    RunConfig c;
    c.model = e.example;
    a.push_back({{"name", e.name},
                 {"summary", e.summary},
                 {"params_schema", e.params_schema},
                 {"example_params", config_to_json(c)["model"]["params"]},
                 {"tags",
                  {{"volume_preserving", e.tags.volume_preserving},
                   {"dim_e", e.tags.dim_e},
                   {"dim_f", e.tags.dim_f},
                   {"analytic_splitting", e.tags.analytic_splitting},
                   {"chart_only", e.tags.chart_only},
                   {"applicable_results", e.tags.applicable_results}}}});
  }
  return a;
}

std::string zoo_listing() {
  std::ostringstream out;
  for (const auto& e : zoo_catalog()) {
    out << e.name << "\n  " << e.summary << "\n  params: " << e.params_schema << "\n  tags: volume_preserving="
        << (e.tags.volume_preserving ? "yes" : "no") << " d=" << e.tags.dim_e << " l=" << e.tags.dim_f
        << " analytic_splitting=" << (e.tags.analytic_splitting ? "yes" : "no")
        << (e.tags.chart_only ? " chart_only=yes" : "") << "\n  applicable results:";
    if (e.tags.applicable_results.empty()) out << " (none; control model)";
    for (const auto& r : e.tags.applicable_results) out << ' ' << r;
    out << "\n";
  }
  return out.str();
}

}  // namespace splitlab
