#include "agfem/run_config.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "agfem/io.hpp"
#include "json.hpp"

namespace agfem {

namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw ParameterError("descriptor field '" + field + "': " + why);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_field(key, "wrong type");
  }
}

Vec2 get_vec2(const json& j, const std::string& key, Vec2 fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 2) bad_field(key, "expected [x, y]");
  return {a[0].get<double>(), a[1].get<double>()};
}

std::string metadata_line(const RunDescriptor& rd) {
  std::ostringstream os;
  os << "experiment=" << int(rd.experiment) << " geometry=" << rd.geometry.id
     << " benchmark=" << rd.benchmark
     << " space=" << (rd.space == SpaceKind::Aggregated ? "aggregated" : "standard")
     << " eta0=" << rd.eta0 << " beta=" << rd.beta << " mesh_level=" << rd.mesh_level
     << " seed=" << rd.seed;
  return os.str();
}

std::string out_path(const RunDescriptor& rd, const std::string& name) {
  std::filesystem::create_directories(rd.output_dir);
  return (std::filesystem::path(rd.output_dir) / name).string();
}

RemeshCriterion make_criterion(const RunDescriptor& rd) {
  RemeshCriterion c;
  c.kind = rd.criterion;
  return c;
}

std::vector<std::string> run_converge(const RunDescriptor& rd) {
  std::vector<std::string> files;
  const ProblemSetup setup = rd.make_setup();
  AmrOptions opts;
  opts.record_kappa = rd.record_kappa;
  if (rd.write_vtk) {
    opts.on_target = [&](int t, const AmrState& st) {
      const std::string path = out_path(rd, "mesh_target_" + std::to_string(t) + ".vtk");
      write_vtk_mesh(path, st.space.mesh, st.space.classes, st.space.roots,
                     &st.solution, &st.space.dofs);
      files.push_back(path);
    };
  }
  const ConvergenceTable table =
      convergence_test(setup, make_uniform_mesh(rd.domain, rd.mesh_level),
                       make_criterion(rd), rd.gamma_sequence, opts);
  const std::string csv = out_path(rd, "converge.csv");
  write_convergence_csv(csv, metadata_line(rd), table.rows);
  files.push_back(csv);
  return files;
}

std::vector<std::string> run_sweep_cut(const RunDescriptor& rd) {
  const std::string path = out_path(rd, "sweep_cut.csv");
  std::ofstream f(path);
  if (!f) throw ParameterError("cannot open " + path);
  f << std::setprecision(17);
  f << "# " << metadata_line(rd) << '\n';
  f << "step,tx,ty,kappa_A_ag,kappa_M_ag,ritz_min_ag,cg_iters_ag,cg_ok_ag,max_C_ag,"
       "max_dist_ag,kappa_A_std,kappa_M_std,ritz_min_std,cg_iters_std,cg_ok_std\n";

  const ForestMesh mesh = make_uniform_mesh(rd.domain, rd.mesh_level);
  const double h = rd.domain.width() / double(1 << rd.mesh_level);
  const Vec2 dir{M_SQRT1_2, M_SQRT1_2};

  for (int k = 0; k < rd.sweep_steps; ++k) {
    const Vec2 t = dir * (h * double(k) / double(rd.sweep_steps));
    RunDescriptor step = rd;
    step.geometry.translation = rd.geometry.translation + t;

    struct SideResult {
      double kappa_A = 0.0, kappa_M = 0.0, ritz_min = 0.0, max_c = 0.0, max_dist = 0.0;
      int iters = 0;
      bool ok = false;
    };
    auto run_side = [&](SpaceKind kind) {
      RunDescriptor side = step;
      side.space = kind;
      ProblemSetup setup = side.make_setup();
      SideResult r;
      const BuiltSpace space = build_space(setup, mesh);
      WeakFormConfig cfg;
      cfg.tau_policy =
          kind == SpaceKind::Aggregated ? TauPolicy::Aggregated : TauPolicy::Standard;
      cfg.beta = setup.beta;
      const LinearSystem sys = assemble(space.mesh, space.classes, space.cut,
                                        space.dofs, space.cs, cfg, setup.solution);
      const SpectralReport ra = spectral_report(sys.A);
      r.kappa_A = ra.kappa;
      r.ritz_min = ra.lambda_min;
      r.kappa_M = spectral_report(sys.M).kappa;
      r.max_c = space.cs.max_abs_coefficient();
      r.max_dist = space.roots.root.empty() ? 0.0 : space.roots.max_attach_distance();
      try {
        const PcgResult pcg = solve_pcg(sys.A, sys.b, setup.solver_tol, setup.solver_maxit);
        r.iters = pcg.iterations;
        r.ok = pcg.converged;
      } catch (const SolverError&) {
        r.ok = false;
      }
      return r;
    };
    const SideResult ag = run_side(SpaceKind::Aggregated);
    const SideResult sd = run_side(SpaceKind::Standard);
    f << k << ',' << t.x << ',' << t.y << ',' << ag.kappa_A << ',' << ag.kappa_M << ','
      << ag.ritz_min << ',' << ag.iters << ',' << int(ag.ok) << ',' << ag.max_c << ','
      << ag.max_dist << ',' << sd.kappa_A << ',' << sd.kappa_M << ',' << sd.ritz_min
      << ',' << sd.iters << ',' << int(sd.ok) << '\n';
  }
  return {path};
}

std::vector<std::string> run_partition_check(const RunDescriptor& rd) {
  const std::string path = out_path(rd, "partition_check.csv");
  std::ofstream f(path);
  if (!f) throw ParameterError("cannot open " + path);
  f << std::setprecision(17);
  f << "# " << metadata_line(rd) << '\n';
  f << "P,seed,subdomain,n_local,n_true_ghost,n_remote_ghost,constraints_checked,"
       "max_masters\n";

  for (int P : rd.partitions) {
    for (int s = 0; s < rd.seeds; ++s) {
      std::mt19937_64 rng(rd.seed + 1000003ull * s);
      std::uniform_real_distribution<double> unit(0.0, 1.0);

      RunDescriptor variant = rd;
      const double h = rd.domain.width() / double(1 << rd.mesh_level);
      variant.geometry.translation =
          rd.geometry.translation + Vec2{h * unit(rng), h * unit(rng)};
      variant.geometry.rotation = rd.geometry.rotation + 2.0 * M_PI * unit(rng);
      ProblemSetup setup = variant.make_setup();
      setup.space = SpaceKind::Aggregated;

      // A couple of random refinement rounds so hanging DOFs appear.
      ForestMesh mesh = make_uniform_mesh(rd.domain, rd.mesh_level);
      for (int round = 0; round < 2; ++round) {
        std::vector<bool> flags(mesh.n_leaves());
        for (int i = 0; i < mesh.n_leaves(); ++i) flags[i] = unit(rng) < 0.3;
        mesh = refine(mesh, flags).first;
      }

      const BuiltSpace space = build_space(setup, std::move(mesh));
      const GlobalBuild g{space.mesh,  space.classes, space.roots,  space.vefs,
                          space.dofs,  space.dclass,  space.hanging, space.cs};
      PartitionLayout layout = partition_sfc(space.mesh, P);
      build_ghost_layers(layout, g);
      exchange_wellposed_status(layout, g);
      const DistributedCheckReport rep = verify_distributed_constraints(layout, g);
      for (const SubdomainReport& row : rep.subdomains) {
        f << P << ',' << s << ',' << row.subdomain << ',' << row.n_local << ','
          << row.n_true_ghost << ',' << row.n_remote_ghost << ','
          << row.constraints_checked << ',' << row.max_masters << '\n';
      }
    }
  }
  return {path};
}

std::vector<std::string> run_eta0_sweep(const RunDescriptor& rd) {
  const std::string path = out_path(rd, "eta0_sweep.csv");
  std::ofstream f(path);
  if (!f) throw ParameterError("cannot open " + path);
  f << std::setprecision(17);
  f << "# " << metadata_line(rd) << '\n';
  f << "eta0,target,rel_energy_error,n_dofs,n_cells,cg_iters,cg_ok,solver_failed,"
       "kappa_A\n";
  const std::vector<double> eta0s{1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125};
  for (double eta0 : eta0s) {
    RunDescriptor variant = rd;
    variant.eta0 = eta0;
    ProblemSetup setup = variant.make_setup();
    AmrOptions opts;
    opts.record_kappa = rd.record_kappa;
    const ConvergenceTable table =
        convergence_test(setup, make_uniform_mesh(rd.domain, rd.mesh_level),
                         make_criterion(rd), rd.gamma_sequence, opts);
    for (const SolveRecord& r : table.rows) {
      f << eta0 << ',' << r.gamma_target << ',' << r.rel_error << ',' << r.n_dofs
        << ',' << r.n_cells << ',' << r.cg_iterations << ',' << int(r.cg_converged)
        << ',' << int(r.solver_failed) << ',' << r.kappa_A << '\n';
    }
  }
  return {path};
}

}  // namespace

LevelSet GeometryConfig::build() const {
  LevelSet base;
  if (id == "pacman") {
    base = pacman_levelset(wedge_angle, radius);
  } else if (id == "circle") {
    base = circle_levelset(center, radius);
  } else if (id == "annulus") {
    base = annulus_levelset(center, r_inner, radius);
  } else {
    bad_field("geometry.id", "unknown geometry '" + id + "'");
  }
  return base.rotated(rotation).translated(translation);
}

ProblemSetup RunDescriptor::make_setup() const {
  ProblemSetup setup;
  setup.domain = domain;
  setup.levelset = geometry.build();
  if (benchmark == "fichera") {
    setup.solution = fichera_solution();
  } else if (benchmark == "shock2d") {
    setup.solution = shock_solution(default_shock_waves());
  } else if (benchmark == "affine") {
    setup.solution = affine_solution();
  } else {
    bad_field("benchmark", "unknown benchmark '" + benchmark + "'");
  }
  setup.space = space;
  setup.eta0 = eta0;
  setup.beta = space == SpaceKind::Aggregated ? beta : beta_std;
  setup.quad_order = quad_order;
  setup.max_subdiv = max_subdiv;
  return setup;
}

RunDescriptor parse_descriptor(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("descriptor is not valid JSON: ") + e.what());
  }
  RunDescriptor rd;

  const std::string exp = get_or<std::string>(j, "experiment", "converge");
  if (exp == "converge") {
    rd.experiment = Experiment::Converge;
  } else if (exp == "sweep-cut") {
    rd.experiment = Experiment::SweepCut;
  } else if (exp == "partition-check") {
    rd.experiment = Experiment::PartitionCheck;
  } else if (exp == "eta0-sweep") {
    rd.experiment = Experiment::Eta0Sweep;
  } else {
    bad_field("experiment", "must be converge|sweep-cut|partition-check|eta0-sweep");
  }

  if (j.contains("geometry")) {
    const json& g = j.at("geometry");
    rd.geometry.id = get_or<std::string>(g, "id", rd.geometry.id);
    rd.geometry.radius = get_or<double>(g, "radius", rd.geometry.radius);
    rd.geometry.wedge_angle = get_or<double>(g, "wedge_angle", rd.geometry.wedge_angle);
    rd.geometry.r_inner = get_or<double>(g, "r_inner", rd.geometry.r_inner);
    rd.geometry.center = get_vec2(g, "center", rd.geometry.center);
    rd.geometry.translation = get_vec2(g, "translation", rd.geometry.translation);
    rd.geometry.rotation = get_or<double>(g, "rotation", rd.geometry.rotation);
  }
  rd.benchmark = get_or<std::string>(j, "benchmark", rd.benchmark);

  const std::string space = get_or<std::string>(j, "space", "aggregated");
  if (space == "aggregated") {
    rd.space = SpaceKind::Aggregated;
  } else if (space == "standard") {
    rd.space = SpaceKind::Standard;
  } else {
    bad_field("space", "must be aggregated|standard");
  }

  const std::string crit = get_or<std::string>(j, "criterion", "li-bettess");
  if (crit == "uniform") {
    rd.criterion = CriterionKind::Uniform;
  } else if (crit == "li-bettess") {
    rd.criterion = CriterionKind::LiBettess;
  } else if (crit == "onate-bugeda") {
    rd.criterion = CriterionKind::OnateBugeda;
  } else {
    bad_field("criterion", "must be uniform|li-bettess|onate-bugeda");
  }

  rd.eta0 = get_or<double>(j, "eta0", rd.eta0);
  if (!(rd.eta0 > 0.0 && rd.eta0 <= 1.0)) bad_field("eta0", "must be in (0, 1]");
  rd.beta = get_or<double>(j, "beta", rd.beta);
  if (!(rd.beta > 0.0)) bad_field("beta", "must be positive");
  rd.beta_std = get_or<double>(j, "beta_std", rd.beta_std);
  if (!(rd.beta_std > 0.0)) bad_field("beta_std", "must be positive");
  rd.gamma_sequence = get_or<std::vector<double>>(j, "gamma_sequence", {});
  for (std::size_t i = 0; i < rd.gamma_sequence.size(); ++i) {
    if (!(rd.gamma_sequence[i] > 0.0)) bad_field("gamma_sequence", "must be positive");
    if (i > 0 && !(rd.gamma_sequence[i] < rd.gamma_sequence[i - 1])) {
      bad_field("gamma_sequence", "must strictly decrease");
    }
  }
  rd.mesh_level = get_or<int>(j, "mesh_level", rd.mesh_level);
  if (rd.mesh_level < 0 || rd.mesh_level > 30) bad_field("mesh_level", "must be 0..30");
  rd.partitions = get_or<std::vector<int>>(j, "partitions", rd.partitions);
  for (int p : rd.partitions) {
    if (p < 1) bad_field("partitions", "entries must be >= 1");
  }
  rd.seeds = get_or<int>(j, "seeds", rd.seeds);
  if (rd.seeds < 1) bad_field("seeds", "must be >= 1");
  if (j.contains("domain")) {
    const Vec2 lo = get_vec2(j.at("domain"), "lo", rd.domain.lo);
    const Vec2 hi = get_vec2(j.at("domain"), "hi", rd.domain.hi);
    if (!(hi.x > lo.x && hi.y > lo.y)) bad_field("domain", "hi must exceed lo");
    rd.domain = BoxDomain(lo, hi);
  }
  rd.output_dir = get_or<std::string>(j, "output_dir", rd.output_dir);
  rd.seed = get_or<unsigned>(j, "seed", rd.seed);
  rd.quad_order = get_or<int>(j, "quad_order", rd.quad_order);
  if (rd.quad_order < 1 || rd.quad_order > 5) bad_field("quad_order", "must be 1..5");
  rd.max_subdiv = get_or<int>(j, "max_subdiv", rd.max_subdiv);
  if (rd.max_subdiv < 0 || rd.max_subdiv > 8) bad_field("max_subdiv", "must be 0..8");
  rd.sweep_steps = get_or<int>(j, "sweep_steps", rd.sweep_steps);
  if (rd.sweep_steps < 1) bad_field("sweep_steps", "must be >= 1");
  rd.record_kappa = get_or<bool>(j, "record_kappa", rd.record_kappa);
  rd.write_vtk = get_or<bool>(j, "write_vtk", rd.write_vtk);
  rd.debug_dumps = get_or<bool>(j, "debug_dumps", rd.debug_dumps);

  if (rd.experiment == Experiment::Converge || rd.experiment == Experiment::Eta0Sweep) {
    if (rd.gamma_sequence.empty()) bad_field("gamma_sequence", "required and nonempty");
  }
  return rd;
}

RunDescriptor parse_descriptor_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParameterError("cannot read descriptor file: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return parse_descriptor(os.str());
}

std::vector<std::string> run(const RunDescriptor& rd) {
  // Fail early on undefined level sets.
  rd.make_setup().levelset.validate_on(rd.domain.lo, rd.domain.hi);
  switch (rd.experiment) {
    case Experiment::Converge: return run_converge(rd);
    case Experiment::SweepCut: return run_sweep_cut(rd);
    case Experiment::PartitionCheck: return run_partition_check(rd);
    case Experiment::Eta0Sweep: return run_eta0_sweep(rd);
  }
  throw ParameterError("unknown experiment");
}

}  // namespace agfem
