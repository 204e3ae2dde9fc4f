#pragma once

#include "spinedrill/ctsdr.hpp"
#include "spinedrill/planner.hpp"
#include "spinedrill/trajectory.hpp"
#include "spinedrill/volume.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace spinedrill {

using Json = nlohmann::ordered_json;

/// Schema problems raise SpecError naming the offending key.
Json load_json(const std::filesystem::path& path);
/// Two-space indented dump with a trailing newline.
void save_json(const Json& doc, const std::filesystem::path& path);
void save_text(const std::string& text, const std::filesystem::path& path);

/// Shortest round-trip text for a double ("inf"/"nan" for non-finite values).
std::string format_number(double value);

Json to_json(const Vec3& v);
Json to_json(const Trajectory& trajectory);
Json to_json(const PhantomSpec& spec);
Json to_json(const CandidateSpace& space);

Trajectory trajectory_from_json(const Json& doc);
PhantomSpec phantom_spec_from_json(const Json& doc);

/// Candidate grid plus optional planner overrides ("load_n", "robot_max_curvature_per_mm").
struct PlanRequest {
  CandidateSpace space;
  PlannerConfig config;
};

PlanRequest plan_request_from_json(const Json& doc);

struct DrillSetting {
  double insertion_speed = 0.85;  ///< mm/s
  double rpm = 8250.0;
};

/// Trial grid: every setting repeated `repetitions` times, trial t seeded seed + t.
struct DrillBatch {
  std::vector<DrillSetting> settings;
  int repetitions = 1;
  TipKind tip_kind = TipKind::OvalHead;
  double travel = 45.0;           ///< mm
  double sample_interval = 0.05;  ///< s
  double noise_std_mm = 0.3;
  double springback_ratio = -1.0;  ///< negative selects default_springback_ratio()
  std::uint64_t seed = 0;

  void validate() const;
};

Json to_json(const DrillBatch& batch);
DrillBatch drill_batch_from_json(const Json& doc);

/// The 30-trial grid of the drilling experiments: five speed/rpm settings, six repetitions.
DrillBatch reference_drill_batch();

Json to_json(const BiomechanicalReport& report);
Json plan_result_to_json(const PlanResult& result, const PlannerConfig& config);
Json fe_summary_to_json(const CandidateEvaluation& evaluation);

/// One row per candidate (ranked first, then rejected), header included.
std::string candidates_csv(const PlanResult& result);

}  // namespace spinedrill
