#pragma once

#include <string>
#include <vector>

#include "ngrasp/calibration.hpp"
#include "ngrasp/config.hpp"

namespace ngrasp::harness {

/// One control-step record of a trial.
struct TraceRow {
  int trial_id = 0;
  double t = 0.0;
  servo::Phase phase = servo::Phase::Home;
  geometry::Point3 tip_ws;      // true tool tip
  geometry::Point3 needle_ws;   // true middle marker
  Eigen::Vector3d error_ws;     // controller's task error
  double d3 = 0.0;
};

struct TrialResult {
  int trial_id = 0;
  uint64_t seed = 0;
  servo::Outcome outcome;
  double task_time_s = 0.0;
  Eigen::Vector3d per_axis_error_mm = Eigen::Vector3d::Zero();  // |dx|,|dy|,|dz| at closure
  std::vector<servo::PhaseTransition> transitions;
  std::vector<TraceRow> trace;
  std::vector<perception::MarkerDetection> detections;
};

struct Quartiles {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Linear-interpolation (type 7) quartiles of a sample.
Quartiles quartiles_of(std::vector<double> values);

struct BatchReport {
  int n_trials = 0;
  int success = 0;
  int miss = 0;
  int fail = 0;
  Quartiles axis_x, axis_y, axis_z;
  double mean_terminal_error_mm = 0.0;
  double mean_task_time_s = 0.0;
  std::vector<TrialResult> trials;
};

/// Runs one seeded trial end to end: calibrate, follow, settle, approach,
/// grasp, classify. Deterministic for a given (config, seed).
TrialResult run_trial(const ScenarioConfig& cfg, uint64_t seed, int trial_id = 0);

/// n independent trials with seeds derived from cfg.seed; aggregates counts,
/// per-axis terminal-error quartiles and means.
BatchReport run_batch(const ScenarioConfig& cfg, int n);

// Versioned, byte-stable writers (fixed column order and float formatting).
std::string trace_csv(std::span<const TrialResult> trials);
std::string detections_csv(std::span<const TrialResult> trials);
std::string batch_report_json(const BatchReport& report);
std::string calibration_report_json(const CalibrationReport& report);

/// Writes atomically (temp file + rename).
void write_file(const std::string& path, const std::string& content);

}  // namespace ngrasp::harness
