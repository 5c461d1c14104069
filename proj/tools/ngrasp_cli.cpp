// Command-line front end: calibration simulation, single trials, batches,
// and the embedded published-benchmark check.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "ngrasp/calibration.hpp"
#include "ngrasp/table1.hpp"
#include "ngrasp/trial.hpp"

namespace {

using namespace ngrasp;
using harness::ScenarioConfig;

int g_verbosity = 1;  // 0 quiet, 1 normal, 2 verbose

void info(const std::string& line) {
  if (g_verbosity >= 1) std::printf("%s\n", line.c_str());
}

void detail(const std::string& line) {
  if (g_verbosity >= 2) std::printf("%s\n", line.c_str());
}

/// Relative output paths land in $NGRASP_OUT_DIR when it is set.
std::string resolve_out(const std::string& path) {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  const char* dir = std::getenv("NGRASP_OUT_DIR");
  if (dir == nullptr || *dir == '\0') return path;
  return (std::filesystem::path(dir) / p).string();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

int cmd_calibrate(const std::string& config_path, uint64_t seed, bool seed_set,
                  const std::string& out_path) {
  ScenarioConfig cfg = ScenarioConfig::load(config_path);
  const uint64_t used_seed = seed_set ? seed : cfg.seed;
  const harness::CalibrationReport report = harness::simulate_calibration(cfg, used_seed);

  const char* plane_names[3] = {"z=0", "x=0", "y=0"};
  for (int i = 0; i < 3; ++i) {
    const auto& p = report.planes[static_cast<size_t>(i)];
    info("plane " + std::string(plane_names[i]) + ": d_mean " + fmt(p.d_mean_mm) +
         " mm, max " + fmt(p.max_abs_mm) + " mm");
  }
  info("registration: translation " + fmt(report.registration.translation_error_mm) +
       " mm, rotation " + fmt(report.registration.rotation_error_rad) + " rad, rms " +
       fmt(report.registration.rms_residual_mm) + " mm");
  info("extrinsics: mapped corner " + fmt(report.extrinsics.mapped_corner_mean_mm) +
       " mm, translation " + fmt(report.extrinsics.translation_error_mm) + " mm");

  if (!out_path.empty()) {
    const std::string resolved = resolve_out(out_path);
    harness::write_file(resolved, harness::calibration_report_json(report));
    info("wrote " + resolved);
  }
  return 0;
}

int cmd_run(const std::string& config_path, uint64_t seed, bool seed_set,
            const std::string& trace_path, const std::string& detections_path) {
  ScenarioConfig cfg = ScenarioConfig::load(config_path);
  const uint64_t used_seed = seed_set ? seed : harness::derive_seed(cfg.seed, 0);
  const harness::TrialResult trial = harness::run_trial(cfg, used_seed, 0);

  info("outcome: " + std::string(servo::outcome_name(trial.outcome.kind)) +
       ", terminal error " + fmt(trial.outcome.final_tip_error_mm) + " mm, task time " +
       fmt(trial.task_time_s) + " s" +
       (trial.outcome.abort_reason.empty() ? "" : ", reason: " + trial.outcome.abort_reason));
  for (const auto& tr : trial.transitions) {
    detail("t=" + fmt(tr.t) + " -> " + servo::phase_name(tr.to));
  }

  const harness::TrialResult trials[] = {trial};
  if (!trace_path.empty()) {
    const std::string resolved = resolve_out(trace_path);
    harness::write_file(resolved, harness::trace_csv(trials));
    info("wrote " + resolved);
  }
  if (!detections_path.empty()) {
    const std::string resolved = resolve_out(detections_path);
    harness::write_file(resolved, harness::detections_csv(trials));
    info("wrote " + resolved);
  }
  return trial.outcome.kind == servo::OutcomeKind::Success ? 0 : 2;
}

int cmd_batch(const std::string& config_path, int n, const std::string& out_path,
              const std::string& trace_path) {
  ScenarioConfig cfg = ScenarioConfig::load(config_path);
  const int trials = n > 0 ? n : cfg.trials;
  const harness::BatchReport report = harness::run_batch(cfg, trials);

  for (const auto& trial : report.trials) {
    detail("trial " + std::to_string(trial.trial_id) + ": " +
           servo::outcome_name(trial.outcome.kind) + ", error " +
           fmt(trial.outcome.final_tip_error_mm) + " mm, time " + fmt(trial.task_time_s) + " s");
  }
  info("trials: " + std::to_string(report.n_trials) + ", success " +
       std::to_string(report.success) + ", miss " + std::to_string(report.miss) + ", fail " +
       std::to_string(report.fail));
  info("mean terminal error " + fmt(report.mean_terminal_error_mm) + " mm, mean task time " +
       fmt(report.mean_task_time_s) + " s");

  if (!out_path.empty()) {
    const std::string resolved = resolve_out(out_path);
    harness::write_file(resolved, harness::batch_report_json(report));
    info("wrote " + resolved);
  }
  if (!trace_path.empty()) {
    const std::string resolved = resolve_out(trace_path);
    harness::write_file(resolved, harness::trace_csv(report.trials));
    info("wrote " + resolved);
  }
  return 0;
}

int cmd_verify_paper() {
  const harness::Table1Report report = harness::verify_table1();
  const auto& rows = harness::table1_rows();
  for (int i = 0; i < harness::kTable1Rows; ++i) {
    const auto& check = report.rows[static_cast<size_t>(i)];
    char line[160];
    std::snprintf(line, sizeof(line),
                  "row %2d: recomputed %6.3f mm, reported %4.1f mm  [%s]", i + 1,
                  check.recomputed_mm, rows[static_cast<size_t>(i)].reported_error_mm,
                  check.pass ? "ok" : "MISMATCH");
    std::printf("%s\n", line);
  }
  std::printf("mean: recomputed %.4f mm, reported %.1f mm, deviation %.4f mm  [%s]\n",
              report.recomputed_mean_mm, harness::kTable1PublishedMean,
              report.mean_deviation_mm, report.pass ? "ok" : "MISMATCH");
  return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo-guided needle grasp simulator"};
  app.require_subcommand(1);

  bool quiet = false;
  bool verbose = false;
  app.add_flag("--quiet", quiet, "Suppress informational output");
  app.add_flag("--verbose", verbose, "Per-trial / per-transition detail");

  std::string config_path;
  uint64_t seed = 0;
  std::string out_path;
  std::string trace_path;
  std::string detections_path;
  int n_trials = 0;

  auto* calibrate = app.add_subcommand("calibrate", "Simulate the calibration procedures");
  calibrate->add_option("--config", config_path, "Scenario config JSON")->required();
  auto* cal_seed = calibrate->add_option("--seed", seed, "Override the scenario seed");
  calibrate->add_option("--out", out_path, "Write the calibration report JSON here");

  auto* run = app.add_subcommand("run", "Run one grasp trial");
  run->add_option("--config", config_path, "Scenario config JSON")->required();
  auto* run_seed = run->add_option("--seed", seed, "Trial seed");
  run->add_option("--trace", trace_path, "Write the control trace CSV here");
  run->add_option("--detections", detections_path, "Write the marker detections CSV here");

  auto* batch = app.add_subcommand("batch", "Run a batch of trials");
  batch->add_option("--config", config_path, "Scenario config JSON")->required();
  batch->add_option("-n,--trials", n_trials, "Trial count (default: config value)")
      ->check(CLI::Range(1, 1000000));
  batch->add_option("--out", out_path, "Write the batch report JSON here");
  batch->add_option("--trace", trace_path, "Write the combined trace CSV here");

  auto* verify =
      app.add_subcommand("verify-paper", "Recheck the embedded published benchmark rows");

  CLI11_PARSE(app, argc, argv);
  g_verbosity = quiet ? 0 : (verbose ? 2 : 1);

  try {
    if (calibrate->parsed()) {
      return cmd_calibrate(config_path, seed, cal_seed->count() > 0, out_path);
    }
    if (run->parsed()) {
      return cmd_run(config_path, seed, run_seed->count() > 0, trace_path, detections_path);
    }
    if (batch->parsed()) {
      return cmd_batch(config_path, n_trials, out_path, trace_path);
    }
    if (verify->parsed()) {
      return cmd_verify_paper();
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
