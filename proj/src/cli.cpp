#include "spinedrill/cli.hpp"

#include "spinedrill/ctsdr.hpp"
#include "spinedrill/errors.hpp"
#include "spinedrill/metrics.hpp"
#include "spinedrill/planner.hpp"
#include "spinedrill/serialize.hpp"
#include "spinedrill/svg.hpp"
#include "spinedrill/volume_io.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace spinedrill {

namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<double> tol;
  unsigned threads = 1;

  std::string phantom_spec;
  std::string phantom_name = "phantom";
  std::string volume_path;
  std::string space_path;
  std::optional<double> load_n;
  std::string trajectory_path;
  std::string batch_path;
  std::optional<double> noise_std;
  std::string results_dir;
};

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string(what) + " path is empty");
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " not found: " + path);
}

fs::path prepare_out_dir(const RunConfig& cfg, const fs::path& fallback = ".") {
  const fs::path dir = cfg.out_dir.empty() ? fallback : fs::path(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + dir.string());
  return dir;
}

// ---------------------------------------------------------------- phantom

int cmd_phantom(const RunConfig& cfg, std::ostream& out) {
  PhantomSpec spec = reference_phantom_spec();
  if (!cfg.phantom_spec.empty()) {
    require_file(cfg.phantom_spec, "phantom spec");
    spec = phantom_spec_from_json(load_json(cfg.phantom_spec));
  }
  if (cfg.seed) spec.seed = *cfg.seed;
  spec.validate();
  const fs::path dir = prepare_out_dir(cfg);

  const DensityVolume vol = generate_phantom(spec);
  write_volume(vol, dir / cfg.phantom_name);

  const GridGeometry& g = vol.geometry();
  std::vector<float> sorted(vol.hu().begin(), vol.hu().end());
  std::sort(sorted.begin(), sorted.end());
  std::map<MaterialClass, std::size_t> hist;
  for (float hu : vol.hu()) ++hist[classify(hu)];

  out << "volume " << (dir / cfg.phantom_name).string() << ".f32raw\n";
  out << "dims " << g.dims[0] << " x " << g.dims[1] << " x " << g.dims[2] << ", spacing "
      << format_number(g.spacing.x()) << " " << format_number(g.spacing.y()) << " "
      << format_number(g.spacing.z()) << " mm\n";
  out << "HU deciles:";
  for (int d = 0; d <= 10; ++d) {
    const std::size_t i = std::min(sorted.size() - 1, sorted.size() * d / 10);
    out << " " << fixed(sorted[i], 1);
  }
  out << "\nclasses:";
  for (const auto& [c, n] : hist) out << " " << to_string(c) << "=" << n;
  out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- plan

int cmd_plan(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.space_path, "candidate space");
  if (cfg.volume_path.empty()) throw UsageError("volume path is empty");
  PlanRequest req = plan_request_from_json(load_json(cfg.space_path));
  if (cfg.load_n) {
    if (!(*cfg.load_n > 0.0)) throw UsageError("--load must be > 0");
    req.config.load_n = *cfg.load_n;
  }
  if (cfg.tol) req.config.solver.tolerance = *cfg.tol;
  req.config.solver.threads = cfg.threads;
  const DensityVolume vol = read_volume(cfg.volume_path);
  const fs::path dir = prepare_out_dir(cfg);

  const PlanResult result = plan(vol, req.space, req.config);

  Json doc = plan_result_to_json(result, req.config);
  const GridGeometry& g = vol.geometry();
  doc["volume"] = {{"dims", g.dims},
                   {"spacing_mm", to_json(g.spacing)},
                   {"origin_mm", to_json(g.origin)}};
  save_json(doc, dir / "plan.json");
  save_text(candidates_csv(result), dir / "candidates.csv");
  for (const auto& ev : result.ranked) {
    save_json(fe_summary_to_json(ev), dir / ("fe_" + ev.candidate.id + ".json"));
    save_text(stress_map_svg(ev, 10.0), dir / ("stress_" + ev.candidate.id + ".svg"));
    if (ev.candidate.id == result.winner) {
      Json w;
      w["id"] = ev.candidate.id;
      w["trajectory"] = to_json(ev.candidate.trajectory);
      save_json(w, dir / "winner_trajectory.json");
    }
  }

  for (std::size_t i = 0; i < result.ranked.size(); ++i) {
    const auto& ev = result.ranked[i];
    out << i + 1 << ". " << ev.candidate.id << "  kappa " << format_number(ev.candidate.trajectory.curvature)
        << "/mm  von Mises " << fixed(ev.report.max_von_mises_mpa, 6) << " MPa  strain "
        << fixed(ev.report.max_principal_strain, 8) << "\n";
  }
  for (const auto& ev : result.rejected)
    out << "rejected " << ev.candidate.id << ": "
        << (ev.report.reasons.empty() ? std::string("infeasible") : ev.report.reasons.front()) << "\n";
  out << "winner " << result.winner << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- drill

struct TrialRow {
  int trial;
  int setting;
  int repetition;
  DrillSetting speeds;
  std::uint64_t seed;
  DrillSimResult sim;
  PathErrorReport err;
};

int cmd_drill(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.trajectory_path, "trajectory");
  require_file(cfg.batch_path, "batch");
  const Trajectory planned = trajectory_from_json(load_json(cfg.trajectory_path));
  DrillBatch batch = drill_batch_from_json(load_json(cfg.batch_path));
  if (cfg.seed) batch.seed = *cfg.seed;
  if (cfg.noise_std) {
    if (!(*cfg.noise_std >= 0.0)) throw UsageError("--noise must be >= 0");
    batch.noise_std_mm = *cfg.noise_std;
  }
  if (!(planned.curvature > 0.0))
    throw UsageError("drill needs a curved trajectory (curvature_per_mm > 0)");
  const fs::path dir = prepare_out_dir(cfg);

  TubePair tubes;
  tubes.inner_length = std::max(tubes.inner_length, batch.travel);
  tubes.outer_length = std::max(tubes.outer_length, tubes.inner_length);
  tubes.set_curvature = planned.curvature;
  tubes.springback_ratio = batch.springback_ratio >= 0.0 ? batch.springback_ratio : default_springback_ratio();
  tubes.mouth = planned.point_at(planned.straight_length);
  tubes.direction = planned.tangent_at(planned.straight_length);
  tubes.bend_plane_normal = planned.bend_plane_normal;
  tubes.validate();

  // Reference curve: the plan continued over the whole drilled length.
  Trajectory reference = planned;
  reference.total_length = planned.straight_length + batch.travel;
  const double guide_radius = 1.0 / tubes.achieved_curvature();

  std::vector<TrialRow> rows;
  int trial = 0;
  for (std::size_t si = 0; si < batch.settings.size(); ++si) {
    for (int rep = 0; rep < batch.repetitions; ++rep, ++trial) {
      InsertionProfile prof;
      prof.insertion_speed = batch.settings[si].insertion_speed;
      prof.travel = batch.travel;
      prof.sample_interval = batch.sample_interval;
      const DrillSpec drill = DrillSpec::defaults(batch.tip_kind, batch.settings[si].rpm);
      const std::uint64_t seed = batch.seed + static_cast<std::uint64_t>(trial);
      TrialRow row{trial + 1, static_cast<int>(si) + 1, rep + 1, batch.settings[si], seed,
                   simulate_drill(tubes, prof, drill, batch.noise_std_mm, seed), {}};
      const auto pts = row.sim.points();
      row.err = path_error_report(pts, reference, guide_radius);
      rows.push_back(std::move(row));
    }
  }

  std::ostringstream trials;
  trials << "trial,setting,repetition,insertion_speed_mm_s,rpm,tip_kind,seed,drilling_time_s,hole_width_mm,"
            "fitted_radius_mm,radius_error_vs_planned_pct,radius_error_vs_guide_pct,deviation_std_mm,"
            "deviation_max_mm\n";
  std::ostringstream paths;
  paths << "trial,time_s,x_mm,y_mm,z_mm\n";
  double sum_p = 0, min_p = INFINITY, max_p = -INFINITY, sum_g = 0, min_g = INFINITY, max_g = -INFINITY;
  double max_std = 0, sum_radius = 0;
  int in_band = 0;
  for (const auto& r : rows) {
    trials << r.trial << ',' << r.setting << ',' << r.repetition << ','
           << format_number(r.speeds.insertion_speed) << ',' << format_number(r.speeds.rpm) << ','
           << to_string(batch.tip_kind) << ',' << r.seed << ',' << format_number(r.sim.drilling_time) << ','
           << format_number(r.sim.hole_width) << ',' << format_number(r.err.fitted_radius_mm) << ','
           << format_number(r.err.radius_error_vs_planned_pct) << ','
           << format_number(r.err.radius_error_vs_guide_pct) << ',' << format_number(r.err.deviation_std_mm)
           << ',' << format_number(r.err.deviation_max_mm) << '\n';
    for (const auto& s : r.sim.path)
      paths << r.trial << ',' << format_number(s.time_s) << ',' << format_number(s.position.x()) << ','
            << format_number(s.position.y()) << ',' << format_number(s.position.z()) << '\n';
    sum_p += r.err.radius_error_vs_planned_pct;
    min_p = std::min(min_p, r.err.radius_error_vs_planned_pct);
    max_p = std::max(max_p, r.err.radius_error_vs_planned_pct);
    sum_g += r.err.radius_error_vs_guide_pct;
    min_g = std::min(min_g, r.err.radius_error_vs_guide_pct);
    max_g = std::max(max_g, r.err.radius_error_vs_guide_pct);
    max_std = std::max(max_std, r.err.deviation_std_mm);
    sum_radius += r.err.fitted_radius_mm;
    if (r.err.radius_error_vs_planned_pct >= 1.7 && r.err.radius_error_vs_planned_pct <= 2.2) ++in_band;
  }
  const double n = static_cast<double>(rows.size());

  Json summary;
  summary["trials"] = rows.size();
  summary["seed"] = batch.seed;
  summary["noise_std_mm"] = batch.noise_std_mm;
  summary["tip_kind"] = std::string(to_string(batch.tip_kind));
  summary["planned_radius_mm"] = 1.0 / planned.curvature;
  summary["springback_ratio"] = tubes.springback_ratio;
  summary["guide_radius_mm"] = guide_radius;
  summary["hole_width_mm"] = rows.front().sim.hole_width;
  summary["mean_fitted_radius_mm"] = sum_radius / n;
  summary["radius_error_vs_planned_pct"] = {{"mean", sum_p / n}, {"min", min_p}, {"max", max_p}};
  summary["radius_error_vs_guide_pct"] = {{"mean", sum_g / n}, {"min", min_g}, {"max", max_g}};
  summary["trials_with_planned_error_in_1.7_2.2_pct"] = in_band;
  summary["max_deviation_std_mm"] = max_std;
  summary["batch"] = to_json(batch);
  summary["trajectory"] = to_json(planned);

  save_text(trials.str(), dir / "trials.csv");
  save_text(paths.str(), dir / "paths.csv");
  save_json(summary, dir / "drill_summary.json");

  out << rows.size() << " trials, guide radius " << fixed(guide_radius, 3) << " mm (planned "
      << fixed(1.0 / planned.curvature, 3) << " mm)\n";
  out << "radius error vs planned: mean " << fixed(sum_p / n, 3) << "%, min " << fixed(min_p, 3)
      << "%, max " << fixed(max_p, 3) << "%\n";
  out << "max deviation std " << fixed(max_std, 3) << " mm\n";
  return kExitOk;
}

// ---------------------------------------------------------------- report

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw SpecError("CSV column '" + name + "' missing");
  }
};

Table read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  Table t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  if (!std::getline(in, line)) throw SpecError(path.string() + " is empty");
  t.header = split(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split(line));
  return t;
}

double cell_number(const std::string& s) {
  if (s == "inf") return INFINITY;
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw SpecError("bad number in CSV: '" + s + "'");
  }
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  const fs::path in_dir = cfg.results_dir;
  if (cfg.results_dir.empty() || !fs::is_directory(in_dir))
    throw UsageError("results directory not found: " + cfg.results_dir);
  const bool has_plan = fs::is_regular_file(in_dir / "plan.json");
  const bool has_drill = fs::is_regular_file(in_dir / "drill_summary.json") &&
                         fs::is_regular_file(in_dir / "trials.csv");
  if (!has_plan && !has_drill)
    throw UsageError("no plan.json or drill_summary.json/trials.csv in " + in_dir.string());
  const fs::path dir = prepare_out_dir(cfg, in_dir);

  std::ostringstream md;
  md << "# Trajectory planning and drilling report\n\n";

  if (has_plan) {
    const Json plan = load_json(in_dir / "plan.json");
    md << "## Plan\n\n";
    md << "Winner: **" << plan.value("winner", std::string()) << "**. Load "
       << fixed(plan.value("load_n", 0.0), 1) << " N, solver tolerance "
       << format_number(plan.value("solver_tolerance", 0.0)) << ".\n\n";
    md << "| rank | id | curvature (1/mm) | radius (mm) | max von Mises (MPa) | max principal strain |\n";
    md << "|---|---|---|---|---|---|\n";
    const Json* baseline = nullptr;
    for (const auto& e : plan.at("ranked")) {
      const double k = e.at("trajectory").at("curvature_per_mm").get<double>();
      if (k == 0.0 && !baseline) baseline = &e;
      md << "| " << e.at("rank").get<int>() << " | " << e.at("id").get<std::string>() << " | "
         << fixed(k, 6) << " | " << (k > 0 ? fixed(1.0 / k, 2) : std::string("straight")) << " | "
         << fixed(e.at("report").at("max_von_mises_mpa").get<double>(), 6) << " | "
         << fixed(e.at("report").at("max_principal_strain").get<double>(), 8) << " |\n";
    }
    for (const auto& e : plan.at("rejected"))
      md << "| - | " << e.at("id").get<std::string>() << " | "
         << fixed(e.at("trajectory").at("curvature_per_mm").get<double>(), 6) << " | | rejected | |\n";
    md << "\n";
    if (baseline) {
      const double b_vm = baseline->at("report").at("max_von_mises_mpa").get<double>();
      const double b_eps = baseline->at("report").at("max_principal_strain").get<double>();
      md << "### Improvement over the straight baseline (" << baseline->at("id").get<std::string>()
         << ")\n\n| id | von Mises improvement (%) | strain improvement (%) |\n|---|---|---|\n";
      for (const auto& e : plan.at("ranked")) {
        if (&e == baseline) continue;
        md << "| " << e.at("id").get<std::string>() << " | "
           << fixed(improvement_percent(b_vm, e.at("report").at("max_von_mises_mpa").get<double>()), 4)
           << " | "
           << fixed(improvement_percent(b_eps, e.at("report").at("max_principal_strain").get<double>()), 4)
           << " |\n";
      }
      md << "\n";
    } else {
      md << "No feasible straight candidate, so no improvement table.\n\n";
    }
    md << "Dominance: " << plan.value("dominance_notes", std::string()) << "\n\n";
    for (const auto& e : plan.at("ranked")) {
      const std::string svg = "stress_" + e.at("id").get<std::string>() + ".svg";
      if (fs::is_regular_file(in_dir / svg))
        md << "![" << e.at("id").get<std::string>() << " stress](" << svg << ")\n";
    }
    md << "\n";
  }

  if (has_drill) {
    const Json summary = load_json(in_dir / "drill_summary.json");
    const Table trials = read_csv(in_dir / "trials.csv");
    const int c_trial = trials.column("trial"), c_speed = trials.column("insertion_speed_mm_s"),
              c_rpm = trials.column("rpm"), c_radius = trials.column("fitted_radius_mm"),
              c_ep = trials.column("radius_error_vs_planned_pct"),
              c_eg = trials.column("radius_error_vs_guide_pct"), c_std = trials.column("deviation_std_mm");
    md << "## Drilling trials\n\n";
    md << trials.rows.size() << " trials, noise " << format_number(summary.value("noise_std_mm", 0.0))
       << " mm, guide radius " << fixed(summary.value("guide_radius_mm", 0.0), 3) << " mm, planned radius "
       << fixed(summary.value("planned_radius_mm", 0.0), 3) << " mm, hole width "
       << fixed(summary.value("hole_width_mm", 0.0), 2) << " mm.\n\n";
    const Json& ep = summary.at("radius_error_vs_planned_pct");
    md << "Radius error vs planned: mean " << fixed(ep.at("mean").get<double>(), 3) << "%, min "
       << fixed(ep.at("min").get<double>(), 3) << "%, max " << fixed(ep.at("max").get<double>(), 3)
       << "%. Largest per-trial deviation std " << fixed(summary.value("max_deviation_std_mm", 0.0), 3)
       << " mm.\n\n";
    md << "| trial | speed (mm/s) | rpm | fitted radius (mm) | error vs planned (%) | error vs guide (%) | "
          "deviation std (mm) |\n|---|---|---|---|---|---|---|\n";
    std::vector<double> errors;
    for (const auto& r : trials.rows) {
      if (r.size() < trials.header.size()) throw SpecError("short row in trials.csv");
      errors.push_back(cell_number(r[c_ep]));
      md << "| " << r[c_trial] << " | " << r[c_speed] << " | " << r[c_rpm] << " | "
         << fixed(cell_number(r[c_radius]), 3) << " | " << fixed(cell_number(r[c_ep]), 3) << " | "
         << fixed(cell_number(r[c_eg]), 3) << " | " << fixed(cell_number(r[c_std]), 3) << " |\n";
    }
    md << "\n";
    save_text(histogram_svg(errors, 0.0, 4.0, 40, "Fitted radius error vs planned radius",
                            "radius error (%)", std::make_pair(1.7, 2.2)),
              dir / "error_histogram.svg");
    md << "![radius error histogram](error_histogram.svg)\n";

    if (fs::is_regular_file(in_dir / "paths.csv")) {
      const Table paths = read_csv(in_dir / "paths.csv");
      const int pt = paths.column("trial"), px = paths.column("x_mm"), py = paths.column("y_mm"),
                pz = paths.column("z_mm");
      std::map<int, std::vector<Vec3>> by_trial;
      for (const auto& r : paths.rows)
        by_trial[static_cast<int>(cell_number(r[pt]))].push_back(
            Vec3(cell_number(r[px]), cell_number(r[py]), cell_number(r[pz])));
      std::vector<ArcTrace> traces;
      for (auto& [id, pts] : by_trial) traces.push_back({"trial " + std::to_string(id), std::move(pts)});
      save_text(arc_overlay_svg(traces, "Drilled paths with fitted arcs"), dir / "arcs.svg");
      md << "![fitted arcs](arcs.svg)\n";
    }
    md << "\n";
  }

  save_text(md.str(), dir / "report.md");
  out << "report " << (dir / "report.md").string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Biomechanics-aware curved pedicle screw planning and steerable drilling simulation",
               "spinedrill"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  double tol = 0.0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the seed of the spec/batch file");
  app.add_option("--out-dir", cfg.out_dir, "Directory for artifacts");
  auto* tol_opt = app.add_option("--tol", tol, "FE solver relative residual tolerance");
  app.add_option("--threads", cfg.threads, "Worker threads for the FE operator")->check(CLI::Range(1u, 256u));

  auto* phantom = app.add_subcommand("phantom", "Generate a phantom volume");
  phantom->add_option("spec", cfg.phantom_spec, "Phantom spec JSON (bundled reference when omitted)");
  phantom->add_option("--name", cfg.phantom_name, "Base file name");

  auto* plan_cmd = app.add_subcommand("plan", "Evaluate and rank candidate trajectories");
  plan_cmd->add_option("volume", cfg.volume_path, "Volume (.f32raw or .json sidecar)")->required();
  plan_cmd->add_option("space", cfg.space_path, "Candidate space JSON")->required();
  double load = 0.0;
  auto* load_opt = plan_cmd->add_option("--load", load, "Superior face load (N)");

  auto* drill = app.add_subcommand("drill", "Simulate a drilling trial batch along a trajectory");
  drill->add_option("trajectory", cfg.trajectory_path, "Trajectory JSON (e.g. winner_trajectory.json)")
      ->required();
  drill->add_option("batch", cfg.batch_path, "Trial batch JSON")->required();
  double noise = 0.0;
  auto* noise_opt = drill->add_option("--noise", noise, "Tip noise std (mm)");

  auto* report = app.add_subcommand("report", "Write report.md and plots from a results directory");
  report->add_option("results_dir", cfg.results_dir, "Directory with plan and/or drill artifacts")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }
  if (*seed_opt) cfg.seed = seed;
  if (*tol_opt) cfg.tol = tol;
  if (*load_opt) cfg.load_n = load;
  if (*noise_opt) cfg.noise_std = noise;

  try {
    if (*phantom) return cmd_phantom(cfg, out);
    if (*plan_cmd) return cmd_plan(cfg, out);
    if (*drill) return cmd_drill(cfg, out);
    return cmd_report(cfg, out);
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << " (iterations " << e.iterations() << ", relative residual "
        << e.relative_residual() << ")\n";
    return kExitSolver;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const PlanningError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const SpecError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const UsageError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IndexError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace spinedrill
