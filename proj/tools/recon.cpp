// recon: oriented normals and a watertight mesh from an unoriented cloud.
//
//   recon <input> [options]            reconstruct
//   recon gen <shape> --out FILE       synthetic shape with exact normals
//   recon eval --pred P --gt G         metrics on existing outputs
//   recon replay <manifest.json>       repeat a recorded run

#include "agr/io.hpp"
#include "agr/pipeline.hpp"
#include "agr/shapes.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace agr;

void print_metrics(const MetricReport& r) {
  std::cout << "pgp90 " << r.pgp90 << "\n";
  std::cout << "nc_points " << r.nc_points << "\n";
  if (r.chamfer) std::cout << "chamfer " << *r.chamfer << "\nchamfer_x1e5 " << *r.chamfer_x1e5() << "\n";
  if (r.nc_surface) std::cout << "nc_surface " << *r.nc_surface << "\n";
}

int report(RunResult& res, const std::filesystem::path& out, const std::string& stem) {
  const auto paths = write_outputs(res, out, stem);
  for (const auto& p : paths) std::cout << "wrote " << p.string() << "\n";
  if (res.failed_stage) {
    std::cerr << "recon: " << to_string(*res.failed_stage) << ": " << res.error_message << "\n";
  } else {
    std::cout << "solver " << to_string(res.solve_report.path) << " iterations " << res.solve_report.iterations
              << " residual " << res.solve_report.relative_residual << "\n";
    std::cout << "iso_value " << res.iso_value << "\n";
    if (res.mesh) std::cout << "mesh " << res.mesh->vertex_count() << " vertices " << res.mesh->triangle_count() << " triangles\n";
    if (res.metrics) print_metrics(*res.metrics);
  }
  if (res.exit_code == 4) std::cerr << "recon: solver stopped before reaching the tolerance\n";
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oriented normals and watertight meshes from unoriented point clouds"};
  app.require_subcommand(0, 1);

  RunConfig cfg;
  std::string input, out_dir = ".", stem, adaptive = "on", path = "auto", velocities;
  std::optional<double> w_max;
  std::string gt, gt_surface;
  app.add_option("input", input, "Point cloud (.xyz or .ply)");
  auto* alpha = app.add_option("--alpha", cfg.solve.alpha, "Regularization scale (>= 1)");
  app.add_option("--L", cfg.solve.L, "Velocity modulus");
  app.add_option("--m", cfg.solve.m, "Velocity count");
  app.add_option("--epsilon", cfg.epsilon, "Thin-structure threshold on the smallest eigenvalue");
  app.add_option("--wmin", cfg.widths.w_min, "Minimum width");
  app.add_option("--kw", cfg.widths.k_w, "Neighbors in the width estimate");
  app.add_option("--wmax", w_max, "Optional maximum width");
  app.add_option("--batch", cfg.solve.batch_size, "Rows per block (N_s)");
  auto* depth = app.add_option("--depth", cfg.solve.depth, "Grid depth D_max");
  app.add_option("--adaptive", adaptive, "on, off or append")->check(CLI::IsMember({"on", "off", "append"}));
  bool adaptive_append = false;
  app.add_flag("--adaptive-append", adaptive_append, "Same as --adaptive append");
  app.add_option("--velocities", velocities, "Explicit velocities x,y,z;x,y,z;...");
  app.add_option("--path", path, "auto, minnorm or lsq")->check(CLI::IsMember({"auto", "minnorm", "lsq"}));
  app.add_flag("--pgr-compat", cfg.pgr_compat, "Isotropic configuration: m=1, c=0");
  app.add_flag("--noisy", cfg.noisy, "Noise preset: alpha 3.5, depth 7");
  app.add_option("--gt", gt, "Ground-truth cloud with normals for metrics");
  app.add_option("--gt-surface", gt_surface, "Dense ground-truth surface samples with normals");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--stem", stem, "Output file stem (default: input stem)");
  app.add_option("--seed", cfg.seed, "Seed for subsampling and metric sampling");
  app.add_option("--cg-tol", cfg.solve.cg_tol, "CG relative residual tolerance");
  app.add_option("--cg-max-iter", cfg.solve.cg_max_iter, "CG iteration limit");
  app.add_flag("--jacobi", cfg.solve.jacobi, "Diagonal preconditioner for CG");
  app.add_option("--dilation", cfg.dilation, "Rings around occupied cells on the coarsest band level");
  app.add_option("--subsample", cfg.subsample, "Points used for the covariance");

  auto* gen = app.add_subcommand("gen", "Write a synthetic shape with exact normals");
  ShapeSpec spec;
  std::string shape, gen_out, surface_out;
  int surface_n = kSurfaceSamples;
  std::uint64_t surface_seed = 7;
  gen->add_option("shape", shape, "sphere, torus, plate or plate_with_hole")->required();
  gen->add_option("--n", spec.n_points, "Point count");
  gen->add_option("--radius", spec.radius, "Sphere radius");
  gen->add_option("--major", spec.major, "Torus major radius");
  gen->add_option("--minor", spec.minor, "Torus minor radius");
  gen->add_option("--length", spec.length, "Plate length");
  gen->add_option("--width", spec.width, "Plate width");
  gen->add_option("--thickness", spec.thickness, "Plate thickness");
  gen->add_option("--hole", spec.hole_radius, "Hole radius");
  gen->add_option("--noise", spec.noise_sigma, "Gaussian sigma as a fraction of the bounding diagonal");
  gen->add_option("--seed", spec.seed, "Seed");
  gen->add_option("--out", gen_out, "Output cloud (.ply or .xyz)")->required();
  gen->add_option("--surface", surface_out, "Also write noise-free dense samples here");
  gen->add_option("--surface-n", surface_n, "Dense sample count");
  gen->add_option("--surface-seed", surface_seed, "Dense sample seed");

  auto* ev = app.add_subcommand("eval", "Metrics for existing outputs");
  std::string pred, ev_gt, pred_mesh, ev_surface, ev_json;
  int samples = kSurfaceSamples;
  std::uint64_t ev_seed = 0;
  ev->add_option("--pred", pred, "Oriented cloud")->required();
  ev->add_option("--gt", ev_gt, "Ground-truth cloud with normals, same order")->required();
  ev->add_option("--pred-mesh", pred_mesh, "Reconstructed mesh (.obj or .ply)");
  ev->add_option("--gt-surface", ev_surface, "Dense ground-truth surface samples with normals");
  ev->add_option("--samples", samples, "Mesh samples");
  ev->add_option("--seed", ev_seed, "Sampling seed");
  ev->add_option("--json", ev_json, "Also write the report as JSON");

  auto* replay = app.add_subcommand("replay", "Repeat the run recorded in a manifest");
  std::string manifest_path;
  replay->add_option("manifest", manifest_path, "Manifest JSON")->required();
  replay->add_option("--out", out_dir, "Output directory");
  replay->add_option("--stem", stem, "Output file stem");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      spec.kind = parse_shape_kind(shape);
      const ShapeSample s = generate(spec);
      write_points(gen_out, s.positions, &s.normals);
      std::cout << "wrote " << gen_out << "\n";
      if (!surface_out.empty()) {
        const ShapeSample d = surface_samples(spec, surface_n, surface_seed);
        write_points(surface_out, d.positions, &d.normals);
        std::cout << "wrote " << surface_out << "\n";
      }
      return 0;
    }
    if (*ev) {
      const PointData p = read_points(pred);
      const PointData g = read_points(ev_gt);
      if (!p.normals || !g.normals) throw Error(ErrorKind::parse, "both clouds need normals");
      const Points pn = normalized_rows(*p.normals), gn = normalized_rows(*g.normals);
      std::optional<TriangleMesh> mesh;
      std::optional<OrientedCloud> surface;
      if (!pred_mesh.empty()) mesh = read_mesh(pred_mesh);
      if (!ev_surface.empty()) {
        const PointData s = read_points(ev_surface);
        if (!s.normals) throw Error(ErrorKind::parse, "surface samples need normals");
        surface = OrientedCloud{s.positions, normalized_rows(*s.normals), {}};
      }
      EvalInputs in;
      in.positions = &p.positions;
      in.normals = &pn;
      in.truth_positions = &g.positions;
      in.truth_normals = &gn;
      in.mesh = mesh ? &*mesh : nullptr;
      in.truth_surface = surface ? &*surface : nullptr;
      in.samples = samples;
      in.seed = ev_seed;
      const MetricReport r = evaluate(in);
      print_metrics(r);
      if (!ev_json.empty()) write_file(ev_json, to_json(r).dump(2) + "\n");
      return 0;
    }
    if (*replay) {
      const auto manifest = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
      if (manifest.is_discarded() || !manifest.contains("config")) {
        throw Error(ErrorKind::parse, "'" + manifest_path + "' is not a run manifest");
      }
      const RunConfig rc = config_from_json(manifest["config"]);
      if (stem.empty()) stem = rc.input.stem().string();
      RunResult res = run_pipeline(rc);
      return report(res, out_dir, stem);
    }

    if (input.empty()) {
      std::cerr << app.help();
      return 2;
    }
    cfg.input = input;
    if (!gt.empty()) cfg.gt = gt;
    if (!gt_surface.empty()) cfg.gt_surface = gt_surface;
    cfg.widths.w_max = w_max;
    cfg.adaptive = adaptive_append ? AdaptiveMode::append : parse_adaptive_mode(adaptive);
    cfg.path = parse_path_choice(path);
    if (!velocities.empty()) cfg.velocities = parse_velocity_list(velocities);
    if (cfg.pgr_compat) cfg.solve.m = 1;
    if (cfg.noisy) {
      if (alpha->count() == 0) cfg.solve.alpha = 3.5;
      if (depth->count() == 0) cfg.solve.depth = 7;
    }
    if (stem.empty()) stem = cfg.input.stem().string();
    RunResult res = run_pipeline(cfg);
    return report(res, out_dir, stem);
  } catch (const Error& e) {
    std::cerr << "recon: " << e.what() << "\n";
    return exit_code_for(e.kind());
  }
}
