#ifndef SYMREG_TOOLS_RUN_HPP
#define SYMREG_TOOLS_RUN_HPP

#include "symreg/baselines.hpp"
#include "symreg/bnb.hpp"
#include "symreg/experiments/normalize.hpp"
#include "symreg/experiments/score.hpp"
#include "symreg/io.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

namespace symreg::app {

using nlohmann::json;

enum class Task { kRegister, kDetectSymmetry };

struct RunConfig {
  Task task = Task::kRegister;
  std::filesystem::path model_path;
  std::filesystem::path data_path;  // unused for symmetry detection
  std::string method = "joint";     // joint | register-only | ransac-sym
  int dim = 0;                      // 0: inferred from the files
  std::optional<double> tau;
  double epsilon = 0.5;
  double trim = 0.7;
  double w_reflected = 1.0;
  std::uint64_t seed = 1;
  bool trace = false;
  std::filesystem::path out_dir = ".";
  std::optional<std::filesystem::path> truth_path;

  void validate() const {
    if (method != "joint" && method != "register-only" &&
        method != "ransac-sym") {
      throw std::invalid_argument("unknown method: " + method);
    }
    if (task == Task::kDetectSymmetry && method == "register-only") {
      throw std::invalid_argument(
          "register-only does not apply to symmetry detection");
    }
    if (dim != 0 && dim != 2 && dim != 3) {
      throw std::invalid_argument("dim must be 2 or 3");
    }
    if (tau && !(*tau > 0.0)) throw std::invalid_argument("tau must be > 0");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) {
      throw std::invalid_argument("epsilon must lie in (0, 1]");
    }
    if (!std::filesystem::exists(model_path)) {
      throw std::invalid_argument("model file not found: " +
                                  model_path.string());
    }
    if (task == Task::kRegister && !std::filesystem::exists(data_path)) {
      throw std::invalid_argument("data file not found: " +
                                  data_path.string());
    }
    if (truth_path && !std::filesystem::exists(*truth_path)) {
      throw std::invalid_argument("truth file not found: " +
                                  truth_path->string());
    }
  }

  SolveConfig solve_config() const {
    SolveConfig cfg;
    cfg.tau = tau;
    cfg.epsilon = epsilon;
    cfg.trim.ratio = trim;
    cfg.weights.reflected = w_reflected;
    cfg.record_trace = trace;
    return cfg;
  }
};

//==============================================================================
// JSON encoding

template <int D>
json to_json(const Vec<D>& v) {
  json a = json::array();
  for (int k = 0; k < D; ++k) a.push_back(v(k));
  return a;
}

template <int D>
Vec<D> vec_from_json(const json& a) {
  if (!a.is_array() || a.size() != static_cast<std::size_t>(D)) {
    throw std::invalid_argument("expected an array of " + std::to_string(D) +
                                " numbers");
  }
  Vec<D> v;
  for (int k = 0; k < D; ++k) v(k) = a.at(k).get<double>();
  return v;
}

template <int D>
json to_json(const Pose<D>& p) {
  return {{"angle", p.angle()}, {"translation", to_json<D>(p.translation())}};
}

template <int D>
json to_json(const SymmetryPlane<D>& s) {
  return {{"alpha", s.alpha()},
          {"normal", to_json<D>(s.normal())},
          {"depth", s.depth()}};
}

template <int D>
json to_json(const Hypothesis<D>& h) {
  return {{"pose", to_json(h.pose)}, {"plane", to_json(h.plane)}};
}

template <int D>
Hypothesis<D> hypothesis_from_json(const json& j) {
  const json& pose = j.at("pose");
  const json& plane = j.at("plane");
  return {Pose<D>(pose.at("angle").get<double>(),
                  vec_from_json<D>(pose.at("translation"))),
          SymmetryPlane<D>(plane.at("alpha").get<double>(),
                           plane.at("depth").get<double>())};
}

inline json to_json(const SolveStats& s) {
  return {{"outer_expansions", s.outer_expansions},
          {"inner_expansions", s.inner_expansions},
          {"inner_searches", s.inner_searches},
          {"inner_searches_capped", s.inner_searches_capped},
          {"bound_evaluations", s.bound_evaluations},
          {"icp_runs", s.icp_runs},
          {"icp_improvements", s.icp_improvements},
          {"outer_queue_peak", s.outer_queue_peak},
          {"inner_queue_peak", s.inner_queue_peak},
          {"seconds", s.seconds}};
}

inline json to_json(const experiments::TrialScore& s) {
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  return {{"rotation_deg", s.rotation_deg},
          {"translation", s.translation},
          {"normal_deg", num(s.normal_deg)},
          {"depth", num(s.depth)},
          {"success", s.success}};
}

/// Ground truth as written by the generate subcommand.
template <int D>
Hypothesis<D> load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const json j = json::parse(in);
  if (j.at("dim").get<int>() != D) {
    throw std::invalid_argument("truth file dimensionality mismatch");
  }
  return hypothesis_from_json<D>(j.at("truth"));
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

//==============================================================================

namespace detail {

template <int D>
void write_trace(const std::filesystem::path& path,
                 const std::vector<TraceRecord>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "event,depth,r,alpha,r_half,alpha_half,lower,upper,incumbent\n";
  for (const auto& t : trace) {
    out << to_string(t.event) << ',' << t.depth;
    for (double c : t.center) out << ',' << io::format_double(c);
    for (double h : t.half_width) out << ',' << io::format_double(h);
    out << ',' << io::format_double(t.lower) << ','
        << io::format_double(t.upper) << ',' << io::format_double(t.incumbent)
        << '\n';
  }
}

template <int D>
json run_dim(const RunConfig& cfg) {
  const PointSet<D> model_raw = io::load_points(cfg.model_path).as<D>();
  const bool single = cfg.task == Task::kDetectSymmetry;
  const PointSet<D> data_raw =
      single ? model_raw : io::load_points(cfg.data_path).as<D>();

  const auto norm = experiments::fit_normalization(model_raw, data_raw);
  const PointSet<D> model = norm.forward(model_raw);
  const PointSet<D> data = norm.forward(data_raw);

  json rec;
  rec["dim"] = D;
  rec["task"] = single ? "detect-symmetry" : "register";
  rec["method"] = cfg.method;
  rec["model"] = cfg.model_path.string();
  if (!single) rec["data"] = cfg.data_path.string();
  rec["normalization"] = {{"offset", to_json<D>(norm.offset)},
                          {"scale", norm.scale}};
  rec["config"] = {{"epsilon", cfg.epsilon},
                   {"trim", cfg.trim},
                   {"w_reflected", cfg.w_reflected},
                   {"seed", cfg.seed}};

  Hypothesis<D> normalized;
  bool has_plane = true;
  std::vector<TraceRecord> trace;

  if (cfg.method == "ransac-sym" && single) {
    RansacConfig rc;
    rc.seed = cfg.seed;
    const auto r = ransac_symmetry(model, rc);
    normalized.plane = r.plane;
    rec["inliers"] = r.inliers;
    rec["inlier_fraction"] = r.inlier_fraction;
    rec["meets_min_fraction"] = r.meets_min_fraction;
    // Energy of the symmetry term alone, re-evaluable from the record.
    const JointObjective<D> obj(model, data, TrimConfig{cfg.trim},
                                Weights{1.0, cfg.w_reflected},
                                Terms::symmetry_only());
    rec["energy"] = obj.energy(normalized);
    rec["terms"] = "symmetry-only";
  } else {
    SolveConfig sc = cfg.solve_config();
    if (single) {
      sc.mode = SolveMode::kSymmetryOnly;
    } else if (cfg.method == "joint") {
      sc.mode = SolveMode::kJoint;
    } else {
      sc.mode = SolveMode::kRegistrationOnly;
    }
    SolveResult<D> r;
    if (cfg.method == "ransac-sym") {
      RansacConfig rc;
      rc.seed = cfg.seed;
      const auto two = register_then_detect(model, data, sc, rc);
      r = two.registration;
      normalized.plane = two.symmetry.plane;
      rec["inlier_fraction"] = two.symmetry.inlier_fraction;
    } else {
      r = solve(model, data, sc);
      if (r.plane) normalized.plane = *r.plane;
    }
    normalized.pose = r.pose;
    has_plane = cfg.method != "register-only";
    rec["energy"] = r.energy;
    rec["lower_bound"] = r.lower_bound;
    rec["tau"] = r.tau;
    rec["certified"] = r.certified;
    rec["stats"] = to_json(r.stats);
    rec["terms"] = to_string(sc.mode);
    trace = std::move(r.trace);
  }

  const Hypothesis<D> original = norm.inverse(normalized);
  rec["normalized"] = to_json(normalized);
  rec["pose"] = to_json(original.pose);
  if (has_plane) {
    rec["plane"] = to_json(original.plane);
  } else {
    rec["plane"] = nullptr;
    rec["normalized"]["plane"] = nullptr;
  }

  if (cfg.truth_path) {
    const Hypothesis<D> truth = load_truth<D>(*cfg.truth_path);
    const std::optional<SymmetryPlane<D>> plane =
        has_plane ? std::optional(original.plane) : std::nullopt;
    rec["errors"] = to_json(experiments::score<D>(original.pose, plane, truth));
  }

  std::filesystem::create_directories(cfg.out_dir);
  if (!single) {
    std::vector<Vec<D>> aligned;
    for (const auto& y : data_raw) aligned.push_back(original.pose.apply(y));
    io::save_points(cfg.out_dir / "data_aligned.xyz",
                    PointSet<D>(std::move(aligned)),
                    "data mapped into the model frame");
  }
  if (has_plane) {
    std::vector<Vec<D>> mirrored;
    for (const auto& x : model_raw) mirrored.push_back(original.plane.reflect(x));
    io::save_points(cfg.out_dir / "model_reflected.xyz",
                    PointSet<D>(std::move(mirrored)),
                    "model reflected across the estimated plane");
  }
  if (cfg.trace) write_trace<D>(cfg.out_dir / "trace.csv", trace);
  return rec;
}

}  // namespace detail

/// Loads, normalizes jointly, solves, and writes result.json plus the aligned
/// clouds into the output directory. Returns the written record.
inline json run(const RunConfig& cfg) {
  cfg.validate();
  int dim = cfg.dim;
  const int file_dim = io::load_points(cfg.model_path).dim;
  if (dim == 0) dim = file_dim;
  json rec = dim == 2 ? detail::run_dim<2>(cfg) : detail::run_dim<3>(cfg);
  write_json(cfg.out_dir / "result.json", rec);
  return rec;
}

}  // namespace symreg::app

#endif  // SYMREG_TOOLS_RUN_HPP
