#include "agr/pipeline.hpp"

#include "agr/error.hpp"
#include "agr/io.hpp"

#include <chrono>
#include <cstdio>
#include <set>

namespace agr {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j) {
  require(j.is_array() && j.size() == 3, "manifest: expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

class StageClock {
 public:
  explicit StageClock(json& timings) : timings_(timings) {}
  template <class F>
  auto operator()(Stage s, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(s, t0);
    } else {
      auto r = f();
      record(s, t0);
      return r;
    }
  }

 private:
  void record(Stage s, std::chrono::steady_clock::time_point t0) {
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    timings_[std::string(to_string(s))] = timings_.value(std::string(to_string(s)), 0.0) + sec;
  }
  json& timings_;
};

struct StageError {
  Stage stage;
  ErrorKind kind;
  std::string message;
};

}  // namespace

std::string_view to_string(AdaptiveMode m) {
  switch (m) {
    case AdaptiveMode::on: return "on";
    case AdaptiveMode::off: return "off";
    case AdaptiveMode::append: return "append";
  }
  return "?";
}

std::string_view to_string(PathChoice p) {
  switch (p) {
    case PathChoice::automatic: return "auto";
    case PathChoice::minimal_norm: return "minnorm";
    case PathChoice::least_squares: return "lsq";
  }
  return "?";
}

AdaptiveMode parse_adaptive_mode(std::string_view s) {
  for (auto m : {AdaptiveMode::on, AdaptiveMode::off, AdaptiveMode::append}) {
    if (to_string(m) == s) return m;
  }
  throw Error(ErrorKind::parse, "adaptive mode must be on, off or append");
}

PathChoice parse_path_choice(std::string_view s) {
  for (auto p : {PathChoice::automatic, PathChoice::minimal_norm, PathChoice::least_squares}) {
    if (to_string(p) == s) return p;
  }
  throw Error(ErrorKind::parse, "path must be auto, minnorm or lsq");
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::read: return "read";
    case Stage::normalize: return "normalize";
    case Stage::widths: return "widths";
    case Stage::velocities: return "velocities";
    case Stage::solve: return "solve";
    case Stage::normals: return "normals";
    case Stage::indicator: return "indicator";
    case Stage::mesh: return "mesh";
    case Stage::metrics: return "metrics";
    case Stage::write: return "write";
  }
  return "?";
}

std::vector<Vec3> parse_velocity_list(std::string_view s) {
  std::vector<Vec3> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t end = s.find(';', start);
    if (end == std::string_view::npos) end = s.size();
    const std::string item(s.substr(start, end - start));
    if (!item.empty()) {
      Vec3 v;
      char tail = 0;
      if (std::sscanf(item.c_str(), " %lf , %lf , %lf %c", &v[0], &v[1], &v[2], &tail) != 3) {
        throw Error(ErrorKind::parse, "bad velocity '" + item + "', expected x,y,z");
      }
      out.push_back(v);
    }
    start = end + 1;
  }
  if (out.empty()) throw Error(ErrorKind::parse, "empty velocity list");
  return out;
}

json to_json(const RunConfig& c) {
  json j;
  j["input"] = c.input.string();
  j["gt"] = c.gt ? json(c.gt->string()) : json(nullptr);
  j["gt_surface"] = c.gt_surface ? json(c.gt_surface->string()) : json(nullptr);
  j["alpha"] = c.solve.alpha;
  j["L"] = c.solve.L;
  j["m"] = c.solve.m;
  j["batch_size"] = c.solve.batch_size;
  j["depth"] = c.solve.depth;
  j["cg_tol"] = c.solve.cg_tol;
  j["cg_max_iter"] = c.solve.cg_max_iter;
  j["jacobi"] = c.solve.jacobi;
  j["memory_budget"] = c.solve.memory_budget;
  j["w_min"] = c.widths.w_min;
  j["k_w"] = c.widths.k_w;
  j["w_max"] = c.widths.w_max ? json(*c.widths.w_max) : json(nullptr);
  j["epsilon"] = c.epsilon;
  j["subsample"] = c.subsample;
  j["adaptive"] = std::string(to_string(c.adaptive));
  if (c.velocities) {
    json v = json::array();
    for (const auto& x : *c.velocities) v.push_back(vec_json(x));
    j["velocities"] = v;
  } else {
    j["velocities"] = nullptr;
  }
  j["path"] = std::string(to_string(c.path));
  j["pgr_compat"] = c.pgr_compat;
  j["noisy"] = c.noisy;
  j["seed"] = c.seed;
  j["dilation"] = c.dilation;
  j["start_depth"] = c.start_depth;
  j["eval_samples"] = c.eval_samples;
  return j;
}

RunConfig config_from_json(const json& j) {
  try {
    RunConfig c;
    c.input = j.at("input").get<std::string>();
    if (!j.at("gt").is_null()) c.gt = j["gt"].get<std::string>();
    if (!j.at("gt_surface").is_null()) c.gt_surface = j["gt_surface"].get<std::string>();
    c.solve.alpha = j.at("alpha").get<double>();
    c.solve.L = j.at("L").get<double>();
    c.solve.m = j.at("m").get<int>();
    c.solve.batch_size = j.at("batch_size").get<int>();
    c.solve.depth = j.at("depth").get<int>();
    c.solve.cg_tol = j.at("cg_tol").get<double>();
    c.solve.cg_max_iter = j.at("cg_max_iter").get<int>();
    c.solve.jacobi = j.at("jacobi").get<bool>();
    c.solve.memory_budget = j.at("memory_budget").get<std::uint64_t>();
    c.widths.w_min = j.at("w_min").get<double>();
    c.widths.k_w = j.at("k_w").get<int>();
    if (!j.at("w_max").is_null()) c.widths.w_max = j["w_max"].get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.subsample = j.at("subsample").get<std::size_t>();
    c.adaptive = parse_adaptive_mode(j.at("adaptive").get<std::string>());
    if (!j.at("velocities").is_null()) {
      std::vector<Vec3> v;
      for (const auto& x : j["velocities"]) v.push_back(vec_from(x));
      c.velocities = v;
    }
    c.path = parse_path_choice(j.at("path").get<std::string>());
    c.pgr_compat = j.at("pgr_compat").get<bool>();
    c.noisy = j.at("noisy").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.dilation = j.at("dilation").get<int>();
    c.start_depth = j.at("start_depth").get<int>();
    c.eval_samples = j.at("eval_samples").get<int>();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("manifest config: ") + e.what());
  }
}

namespace {

bool uses_covariance(const RunConfig& cfg) {
  if (cfg.pgr_compat) return false;
  if (cfg.velocities) return cfg.adaptive == AdaptiveMode::append;
  return cfg.adaptive == AdaptiveMode::append || (cfg.adaptive == AdaptiveMode::on && cfg.solve.m == 3);
}

}  // namespace

VelocitySet resolve_velocities(const RunConfig& cfg, const PointCloud& cloud, EigenFrame* frame_out) {
  if (cfg.pgr_compat) return isotropic_velocities();
  std::vector<Velocity> base;
  Provenance provenance = Provenance::fixed_axes;
  if (cfg.velocities) {
    for (const auto& x : *cfg.velocities) base.emplace_back(x);
    provenance = Provenance::user;
  } else {
    const VelocitySet fixed = fixed_velocities(cfg.solve.L, cfg.solve.m);
    base.assign(fixed.begin(), fixed.end());
  }
  if (!uses_covariance(cfg)) return VelocitySet(std::move(base), provenance);

  const EigenFrame frame = covariance_eigen(cloud, cfg.subsample, cfg.seed);
  if (frame_out) *frame_out = frame;
  VelocitySet adaptive = select_velocities(frame, cfg.solve.L, cfg.epsilon);
  if (cfg.adaptive == AdaptiveMode::on) return adaptive;
  for (const auto& v : adaptive) {
    if (std::find(base.begin(), base.end(), v) == base.end()) base.push_back(v);
  }
  return VelocitySet(std::move(base), Provenance::adaptive);
}

SolvePath resolve_path(const RunConfig& cfg, std::size_t velocity_count) {
  switch (cfg.path) {
    case PathChoice::minimal_norm: return SolvePath::minimal_norm;
    case PathChoice::least_squares: return SolvePath::least_squares;
    case PathChoice::automatic: break;
  }
  return velocity_count <= 3 ? SolvePath::minimal_norm : SolvePath::least_squares;
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::parse: return 2;
    case ErrorKind::resource: return 3;
    case ErrorKind::no_surface: return 5;
    default: return 1;
  }
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json to_json(const MetricReport& r) {
  json j;
  j["pgp90"] = r.pgp90;
  j["nc_points"] = r.nc_points;
  j["chamfer"] = r.chamfer ? json(*r.chamfer) : json(nullptr);
  j["chamfer_x1e5"] = r.chamfer ? json(*r.chamfer_x1e5()) : json(nullptr);
  j["nc_surface"] = r.nc_surface ? json(*r.nc_surface) : json(nullptr);
  return j;
}

namespace {

RunResult run_impl(const RunConfig& cfg, const Points* original, const std::optional<Points>* truth_normals) {
  RunResult res;
  json& man = res.manifest;
  man["schema"] = 1;
  man["config"] = to_json(cfg);
  man["timings"] = json::object();
  StageClock clock(man["timings"]);
  Stage stage = Stage::read;

  try {
    Points positions;
    std::optional<Points> input_normals;
    if (original) {
      positions = *original;
      input_normals = *truth_normals;
      man["input"] = {{"path", nullptr}, {"hash", nullptr}};
    } else {
      const std::string bytes = clock(stage, [&] { return read_file(cfg.input); });
      PointData data = clock(stage, [&] { return read_points(cfg.input); });
      positions = std::move(data.positions);
      input_normals = std::move(data.normals);
      man["input"] = {{"path", cfg.input.string()}, {"hash", content_hash(bytes)}};
    }
    man["input"]["points"] = positions.rows();

    stage = Stage::normalize;
    cfg.solve.validate();
    require(positions.rows() >= 4, "input needs at least 4 points, got " + std::to_string(positions.rows()));
    res.cloud = clock(stage, [&] { return PointCloud::from_original(positions, input_normals); });
    const PointCloud& cloud = *res.cloud;
    man["transform"] = {{"scale", cloud.transform().scale}, {"offset", vec_json(cloud.transform().offset)}};

    stage = Stage::widths;
    const WidthField widths = clock(stage, [&] { return compute_widths(cloud.positions(), cloud, cfg.widths); });

    stage = Stage::velocities;
    EigenFrame frame;
    const bool used_frame = uses_covariance(cfg);
    res.velocities = clock(stage, [&] { return resolve_velocities(cfg, cloud, &frame); });
    {
      json v = json::array();
      for (const auto& c : *res.velocities) v.push_back(vec_json(c.vector()));
      man["velocities"] = {{"vectors", v}, {"provenance", std::string(to_string(res.velocities->provenance()))}};
      if (used_frame) {
        man["velocities"]["eigenvalues"] = json::array({frame.lambdas[0], frame.lambdas[1], frame.lambdas[2]});
      }
    }

    stage = Stage::solve;
    SolveConfig sc = cfg.solve;
    sc.m = static_cast<int>(res.velocities->size());
    const SolvePath path = resolve_path(cfg, res.velocities->size());
    LseSolution sol = clock(stage, [&] {
      return path == SolvePath::minimal_norm ? solve_minimal_norm(*res.velocities, cloud, widths, sc)
                                             : solve_least_squares(*res.velocities, cloud, widths, sc);
    });
    res.mu = std::move(sol.mu);
    res.solve_report = sol.report;
    man["solver"] = {{"path", std::string(to_string(sol.report.path))},
                     {"iterations", sol.report.iterations},
                     {"relative_residual", sol.report.relative_residual},
                     {"converged", sol.report.converged}};
    if (!sol.report.converged) res.exit_code = 4;

    stage = Stage::normals;
    OrientedCloud oriented = clock(stage, [&] { return extract_normals(res.mu, cloud); });
    oriented.positions = cloud.original_positions();
    std::int64_t fallbacks = std::count(oriented.flags.begin(), oriented.flags.end(), NormalFlag::degenerate_fallback);
    man["normals"] = {{"degenerate_fallback", fallbacks}};
    res.oriented = std::move(oriented);

    stage = Stage::indicator;
    const IndicatorEvaluator eval(res.mu, *res.velocities, cloud, cfg.widths, cfg.solve.batch_size);
    res.iso_value = clock(stage, [&] { return eval.isovalue(); });
    BandOptions band;
    band.depth = cfg.solve.depth;
    band.dilation = cfg.dilation;
    band.start_depth = std::min(cfg.start_depth, cfg.solve.depth);
    auto [grid, field] = clock(stage, [&] { return build_surface_band(eval, cloud, res.iso_value, band); });
    man["indicator"] = {{"iso_value", res.iso_value},
                        {"grid_depth", grid.depth},
                        {"grid_corners", grid.corners.rows()},
                        {"grid_cells", grid.cells.size()}};

    stage = Stage::mesh;
    res.mesh = clock(stage, [&] { return marching_cubes(grid, field, cloud.transform()); });
    const MeshTopology topo = mesh_topology(*res.mesh);
    man["mesh"] = {{"vertices", topo.vertices},
                   {"triangles", topo.faces},
                   {"euler", topo.euler()},
                   {"components", topo.components},
                   {"watertight", topo.watertight()}};

    stage = Stage::metrics;
    std::optional<Points> truth_pos, truth_n;
    if (cfg.gt && !original) {
      PointData gt = read_points(*cfg.gt);
      if (!gt.normals) throw Error(ErrorKind::parse, "ground-truth cloud has no normals");
      if (gt.positions.rows() != positions.rows()) {
        throw Error(ErrorKind::precondition, "ground-truth cloud must match the input point count");
      }
      truth_pos = std::move(gt.positions);
      truth_n = normalized_rows(*gt.normals);
    } else if (cloud.has_normals()) {
      truth_pos = positions;
      truth_n = *cloud.gt_normals();
    }
    if (truth_pos) {
      std::optional<OrientedCloud> surface;
      if (cfg.gt_surface) {
        PointData s = read_points(*cfg.gt_surface);
        if (!s.normals) throw Error(ErrorKind::parse, "ground-truth surface samples have no normals");
        surface = OrientedCloud{s.positions, normalized_rows(*s.normals), {}};
      }
      EvalInputs in;
      in.positions = &res.oriented->positions;
      in.normals = &res.oriented->normals;
      in.truth_positions = &*truth_pos;
      in.truth_normals = &*truth_n;
      in.mesh = &*res.mesh;
      in.truth_surface = surface ? &*surface : nullptr;
      in.samples = cfg.eval_samples;
      in.seed = cfg.seed;
      res.metrics = clock(stage, [&] { return evaluate(in); });
      man["metrics"] = to_json(*res.metrics);
    }
  } catch (const Error& e) {
    res.failed_stage = stage;
    res.error_message = e.what();
    res.exit_code = exit_code_for(e.kind());
    man["error"] = {{"stage", std::string(to_string(stage))},
                    {"kind", std::string(to_string(e.kind()))},
                    {"message", e.what()}};
    if (e.kind() == ErrorKind::no_surface) man["error"]["note"] = "no surface crossed";
  } catch (const std::bad_alloc&) {
    res.failed_stage = stage;
    res.error_message = "out of memory";
    res.exit_code = exit_code_for(ErrorKind::resource);
    man["error"] = {{"stage", std::string(to_string(stage))}, {"kind", "resource"}, {"message", "out of memory"}};
  }
  man["exit_code"] = res.exit_code;
  return res;
}

}  // namespace

RunResult run_pipeline(const RunConfig& cfg) { return run_impl(cfg, nullptr, nullptr); }

RunResult run_pipeline(const RunConfig& cfg, const Points& original_positions,
                       const std::optional<Points>& truth_normals) {
  return run_impl(cfg, &original_positions, &truth_normals);
}

std::vector<std::filesystem::path> write_outputs(RunResult& result, const std::filesystem::path& out_dir,
                                                 const std::string& stem) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  json outputs = json::object();
  auto emit = [&](const std::string& key, const std::filesystem::path& p, auto&& write) {
    write(p);
    outputs[key] = p.filename().string();
    written.push_back(p);
  };
  if (result.oriented) {
    emit("oriented", out_dir / (stem + ".oriented.ply"),
         [&](const auto& p) { write_points(p, result.oriented->positions, &result.oriented->normals); });
  }
  if (result.mesh) {
    emit("mesh_obj", out_dir / (stem + ".mesh.obj"), [&](const auto& p) { write_mesh_obj(p, *result.mesh); });
    emit("mesh_ply", out_dir / (stem + ".mesh.ply"), [&](const auto& p) { write_mesh_ply(p, *result.mesh); });
  }
  if (result.metrics) {
    emit("metrics", out_dir / (stem + ".metrics.json"),
         [&](const auto& p) { write_file(p, to_json(*result.metrics).dump(2) + "\n"); });
  }
  const auto manifest_path = out_dir / (stem + ".manifest.json");
  outputs["manifest"] = manifest_path.filename().string();
  result.manifest["outputs"] = outputs;
  write_file(manifest_path, result.manifest.dump(2) + "\n");
  written.push_back(manifest_path);
  return written;
}

}  // namespace agr
