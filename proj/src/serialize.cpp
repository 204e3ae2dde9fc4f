#include "spinedrill/serialize.hpp"

#include "spinedrill/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace spinedrill {

namespace {

[[noreturn]] void bad_field(const std::string& key, const std::string& what) {
  throw SpecError("field '" + key + "': " + what);
}

const Json& member(const Json& doc, const std::string& key) {
  if (!doc.is_object()) bad_field(key, "enclosing value is not an object");
  auto it = doc.find(key);
  if (it == doc.end()) bad_field(key, "missing");
  return *it;
}

double as_number(const Json& v, const std::string& key) {
  if (!v.is_number()) bad_field(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad_field(key, "must be finite");
  return x;
}

double number(const Json& doc, const std::string& key) { return as_number(member(doc, key), key); }

double number_or(const Json& doc, const std::string& key, double fallback) {
  return doc.contains(key) ? number(doc, key) : fallback;
}

std::uint64_t unsigned_or(const Json& doc, const std::string& key, std::uint64_t fallback) {
  if (!doc.contains(key)) return fallback;
  const Json& v = doc.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    bad_field(key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

Vec3 as_vec3(const Json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 3) bad_field(key, "expected an array of 3 numbers");
  return Vec3(as_number(v[0], key), as_number(v[1], key), as_number(v[2], key));
}

Vec3 vec3(const Json& doc, const std::string& key) { return as_vec3(member(doc, key), key); }

Vec3 vec3_or(const Json& doc, const std::string& key, const Vec3& fallback) {
  return doc.contains(key) ? vec3(doc, key) : fallback;
}

std::vector<double> number_list_or(const Json& doc, const std::string& key,
                                   std::vector<double> fallback) {
  if (!doc.contains(key)) return fallback;
  const Json& v = doc.at(key);
  if (!v.is_array()) bad_field(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(as_number(x, key));
  return out;
}

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError(path.string() + ": " + e.what());
  }
}

void save_json(const Json& doc, const std::filesystem::path& path) {
  save_text(doc.dump(2) + "\n", path);
}

void save_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SpecError("cannot write " + path.string());
  out << text;
  if (!out) throw SpecError("write failed for " + path.string());
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json to_json(const Trajectory& t) {
  Json j;
  j["entry_mm"] = to_json(t.entry);
  j["direction"] = to_json(t.direction);
  j["bend_plane_normal"] = to_json(t.bend_plane_normal);
  j["straight_length_mm"] = t.straight_length;
  j["curvature_per_mm"] = t.curvature;
  j["total_length_mm"] = t.total_length;
  return j;
}

Trajectory trajectory_from_json(const Json& doc) {
  const Json& body = doc.contains("trajectory") ? doc.at("trajectory") : doc;
  Trajectory t;
  t.entry = vec3(body, "entry_mm");
  t.direction = vec3(body, "direction");
  t.bend_plane_normal = vec3(body, "bend_plane_normal");
  t.straight_length = number(body, "straight_length_mm");
  t.curvature = number(body, "curvature_per_mm");
  t.total_length = number(body, "total_length_mm");
  try {
    t.validate();
  } catch (const DomainError& e) {
    throw SpecError(std::string("trajectory: ") + e.what());
  }
  return t;
}

Json to_json(const PhantomSpec& s) {
  Json j;
  j["size_mm"] = to_json(s.size_mm);
  j["spacing_mm"] = to_json(s.spacing_mm);
  j["cortical_thickness_mm"] = s.cortical_thickness_mm;
  j["cancellous_hu"] = s.cancellous_hu;
  j["cortical_hu"] = s.cortical_hu;
  if (s.low_density) {
    Json e;
    e["center_mm"] = to_json(s.low_density->center_mm);
    e["radii_mm"] = to_json(s.low_density->radii_mm);
    e["hu"] = s.low_density->hu;
    j["low_density"] = e;
  } else {
    j["low_density"] = nullptr;
  }
  j["seed"] = s.seed;
  j["noise_hu"] = s.noise_hu;
  return j;
}

PhantomSpec phantom_spec_from_json(const Json& doc) {
  PhantomSpec s;
  s.size_mm = vec3(doc, "size_mm");
  s.spacing_mm = vec3_or(doc, "spacing_mm", s.spacing_mm);
  s.cortical_thickness_mm = number_or(doc, "cortical_thickness_mm", s.cortical_thickness_mm);
  s.cancellous_hu = number_or(doc, "cancellous_hu", s.cancellous_hu);
  s.cortical_hu = number_or(doc, "cortical_hu", s.cortical_hu);
  if (doc.contains("low_density") && !doc.at("low_density").is_null()) {
    const Json& e = doc.at("low_density");
    LowDensityEllipsoid ell;
    ell.center_mm = vec3(e, "center_mm");
    ell.radii_mm = vec3(e, "radii_mm");
    ell.hu = number_or(e, "hu", ell.hu);
    s.low_density = ell;
  }
  s.seed = unsigned_or(doc, "seed", s.seed);
  s.noise_hu = number_or(doc, "noise_hu", s.noise_hu);
  s.validate();
  return s;
}

Json to_json(const CandidateSpace& space) {
  Json j;
  j["curvatures_per_mm"] = space.curvatures;
  j["straight_lengths_mm"] = space.straight_lengths;
  Json rolls = Json::array();
  for (double r : space.roll_angles) rolls.push_back(r / kDeg);
  j["roll_angles_deg"] = rolls;
  j["screw"] = {{"diameter_mm", space.screw.diameter}, {"length_mm", space.screw.length}};
  j["entry_mm"] = to_json(space.entry);
  j["direction"] = to_json(space.direction);
  j["bend_plane_normal"] = to_json(space.bend_plane_normal);
  return j;
}

PlanRequest plan_request_from_json(const Json& doc) {
  PlanRequest req;
  CandidateSpace& sp = req.space;
  sp.curvatures = number_list_or(doc, "curvatures_per_mm", sp.curvatures);
  sp.straight_lengths = number_list_or(doc, "straight_lengths_mm", sp.straight_lengths);
  sp.roll_angles = number_list_or(doc, "roll_angles_deg", {0.0});
  for (double& r : sp.roll_angles) r *= kDeg;
  if (doc.contains("screw")) {
    const Json& s = doc.at("screw");
    sp.screw.diameter = number_or(s, "diameter_mm", sp.screw.diameter);
    sp.screw.length = number_or(s, "length_mm", sp.screw.length);
  }
  sp.entry = vec3(doc, "entry_mm");
  sp.direction = vec3_or(doc, "direction", sp.direction);
  sp.bend_plane_normal = vec3_or(doc, "bend_plane_normal", sp.bend_plane_normal);
  sp.validate();

  req.config.load_n = number_or(doc, "load_n", req.config.load_n);
  if (req.config.load_n <= 0.0) bad_field("load_n", "must be > 0");
  req.config.robot_max_curvature =
      number_or(doc, "robot_max_curvature_per_mm", req.config.robot_max_curvature);
  if (req.config.robot_max_curvature <= 0.0)
    bad_field("robot_max_curvature_per_mm", "must be > 0");
  req.config.springback_ratio = number_or(doc, "springback_ratio", req.config.springback_ratio);
  if (req.config.springback_ratio < 0.0 || req.config.springback_ratio >= 1.0)
    bad_field("springback_ratio", "must lie in [0, 1)");
  return req;
}

void DrillBatch::validate() const {
  if (settings.empty()) bad_field("settings", "must not be empty");
  for (const auto& s : settings) {
    if (!(s.insertion_speed > 0.0)) bad_field("settings.insertion_speed_mm_s", "must be > 0");
    if (!(s.rpm > 0.0)) bad_field("settings.rpm", "must be > 0");
  }
  if (repetitions < 1) bad_field("repetitions", "must be >= 1");
  if (!(travel > 0.0)) bad_field("travel_mm", "must be > 0");
  if (!(sample_interval > 0.0)) bad_field("sample_interval_s", "must be > 0");
  if (!(noise_std_mm >= 0.0)) bad_field("noise_std_mm", "must be >= 0");
  if (springback_ratio >= 1.0) bad_field("springback_ratio", "must be < 1");
}

Json to_json(const DrillBatch& b) {
  Json j;
  Json settings = Json::array();
  for (const auto& s : b.settings)
    settings.push_back({{"insertion_speed_mm_s", s.insertion_speed}, {"rpm", s.rpm}});
  j["settings"] = settings;
  j["repetitions"] = b.repetitions;
  j["tip_kind"] = std::string(to_string(b.tip_kind));
  j["travel_mm"] = b.travel;
  j["sample_interval_s"] = b.sample_interval;
  j["noise_std_mm"] = b.noise_std_mm;
  if (b.springback_ratio >= 0.0) j["springback_ratio"] = b.springback_ratio;
  j["seed"] = b.seed;
  return j;
}

DrillBatch drill_batch_from_json(const Json& doc) {
  DrillBatch b;
  const Json& settings = member(doc, "settings");
  if (!settings.is_array()) bad_field("settings", "expected an array");
  for (const auto& s : settings)
    b.settings.push_back({number(s, "insertion_speed_mm_s"), number(s, "rpm")});
  const Json& reps = member(doc, "repetitions");
  if (!reps.is_number_integer()) bad_field("repetitions", "expected an integer");
  b.repetitions = reps.get<int>();
  if (doc.contains("tip_kind")) {
    const Json& k = doc.at("tip_kind");
    if (!k.is_string()) bad_field("tip_kind", "expected a string");
    try {
      b.tip_kind = tip_kind_from_string(k.get<std::string>());
    } catch (const std::exception& e) {
      bad_field("tip_kind", e.what());
    }
  }
  b.travel = number_or(doc, "travel_mm", b.travel);
  b.sample_interval = number_or(doc, "sample_interval_s", b.sample_interval);
  b.noise_std_mm = number_or(doc, "noise_std_mm", b.noise_std_mm);
  if (doc.contains("springback_ratio")) {
    b.springback_ratio = number(doc, "springback_ratio");
    if (b.springback_ratio < 0.0) bad_field("springback_ratio", "must be >= 0");
  }
  b.seed = unsigned_or(doc, "seed", b.seed);
  b.validate();
  return b;
}

DrillBatch reference_drill_batch() {
  DrillBatch b;
  b.settings = {{0.5, 8250.0}, {0.85, 6000.0}, {0.85, 8250.0}, {0.85, 10600.0}, {1.25, 8250.0}};
  b.repetitions = 6;
  b.seed = 2024;
  return b;
}

Json to_json(const BiomechanicalReport& r) {
  Json j;
  j["trajectory_id"] = r.trajectory_id;
  j["max_von_mises_mpa"] = r.max_von_mises_mpa;
  j["max_principal_strain"] = r.max_principal_strain;
  j["in_bone"] = r.in_bone;
  j["curvature_achievable"] = r.curvature_achievable;
  j["feasible"] = r.feasible();
  j["reasons"] = r.reasons;
  return j;
}

Json plan_result_to_json(const PlanResult& result, const PlannerConfig& config) {
  Json j;
  j["winner"] = result.winner;
  j["dominance_notes"] = result.dominance_notes;
  j["load_n"] = config.load_n;
  j["solver_tolerance"] = config.solver.tolerance;
  j["robot_max_curvature_per_mm"] = config.robot_max_curvature;
  auto entries = [](const std::vector<CandidateEvaluation>& list, bool ranked) {
    Json arr = Json::array();
    int rank = 1;
    for (const auto& ev : list) {
      Json e;
      e["id"] = ev.candidate.id;
      if (ranked) e["rank"] = rank++;
      e["trajectory"] = to_json(ev.candidate.trajectory);
      e["report"] = to_json(ev.report);
      arr.push_back(e);
    }
    return arr;
  };
  j["ranked"] = entries(result.ranked, true);
  j["rejected"] = entries(result.rejected, false);
  return j;
}

Json fe_summary_to_json(const CandidateEvaluation& ev) {
  if (!ev.fe || !ev.material) throw UsageError("candidate " + ev.candidate.id + " has no FE result");
  const FeResult& fe = *ev.fe;
  const GridGeometry& g = ev.material->geometry();
  const CancellousExtrema ex = cancellous_extrema(fe, *ev.material);
  double max_disp = 0.0;
  for (const auto& u : fe.displacement) max_disp = std::max(max_disp, u.norm());
  auto coord = [&](std::size_t v) {
    const auto c = g.voxel_coord(v);
    return Json::array({c[0], c[1], c[2]});
  };
  Json j;
  j["id"] = ev.candidate.id;
  j["curvature_per_mm"] = ev.candidate.trajectory.curvature;
  j["elements"] = fe.fields.elements.size();
  j["cancellous_elements"] = ev.material->count(MaterialClass::Cancellous);
  j["screw_elements"] = ev.material->count(MaterialClass::Screw);
  j["free_dofs"] = fe.stats.free_dofs;
  j["iterations"] = fe.stats.iterations;
  j["relative_residual"] = fe.stats.relative_residual;
  j["max_displacement_mm"] = max_disp;
  j["max_von_mises_mpa"] = ex.max_von_mises;
  j["max_von_mises_voxel"] = coord(ex.von_mises_voxel);
  j["max_principal_strain"] = ex.max_principal_strain;
  j["max_principal_strain_voxel"] = coord(ex.strain_voxel);
  return j;
}

std::string candidates_csv(const PlanResult& result) {
  std::ostringstream out;
  out << "id,status,rank,curvature_per_mm,radius_mm,straight_length_mm,max_von_mises_mpa,"
         "max_principal_strain,in_bone,curvature_achievable,solver_iterations,relative_residual\n";
  auto row = [&](const CandidateEvaluation& ev, const char* status, int rank) {
    const Trajectory& t = ev.candidate.trajectory;
    const double radius = t.curvature > 0.0 ? 1.0 / t.curvature : INFINITY;
    out << ev.candidate.id << ',' << status << ',' << (rank > 0 ? std::to_string(rank) : "")
        << ',' << format_number(t.curvature) << ',' << format_number(radius) << ','
        << format_number(t.straight_length) << ',';
    if (ev.fe)
      out << format_number(ev.report.max_von_mises_mpa) << ','
          << format_number(ev.report.max_principal_strain);
    else
      out << ',';
    out << ',' << (ev.report.in_bone ? "true" : "false") << ','
        << (ev.report.curvature_achievable ? "true" : "false") << ',';
    if (ev.fe)
      out << ev.fe->stats.iterations << ',' << format_number(ev.fe->stats.relative_residual);
    else
      out << ',';
    out << '\n';
  };
  int rank = 1;
  for (const auto& ev : result.ranked) row(ev, "ranked", rank++);
  for (const auto& ev : result.rejected) row(ev, "rejected", 0);
  return out.str();
}

}  // namespace spinedrill
