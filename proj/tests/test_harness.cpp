#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "ngrasp/calibration.hpp"
#include "ngrasp/config.hpp"
#include "ngrasp/table1.hpp"
#include "ngrasp/trial.hpp"

namespace ngrasp::harness {
namespace {

ScenarioConfig zero_noise_config() {
  ScenarioConfig cfg;
  cfg.noise.pixel_sigma = 0.0;
  cfg.noise.dropout_prob = 0.0;
  cfg.noise.tip_sigma_mm = 0.0;
  cfg.noise.corner_sigma_px = 0.0;
  cfg.noise.ee_sigma_t_mm = 0.0;
  cfg.noise.ee_sigma_rot_rad = 0.0;
  cfg.noise.calibration_noise = false;
  cfg.needle.randomize_start = false;
  cfg.needle.motion_type = "stationary";
  cfg.needle.start_center_ws = {0.0, 0.0, 10.0};
  return cfg;
}

TEST(PublishedAccuracyTable, EveryRowRecomputes) {
  Table1Report report = verify_table1();
  EXPECT_TRUE(report.pass);
  for (int i = 0; i < kTable1Rows; ++i) {
    EXPECT_TRUE(report.rows[i].pass) << "row " << i;
    EXPECT_NEAR(report.rows[i].recomputed_mm, report.rows[i].reported_mm, 0.05) << "row " << i;
  }
  EXPECT_NEAR(report.recomputed_mean_mm, kTable1PublishedMean, 0.05);
  EXPECT_LT(report.mean_deviation_mm, 0.05);
}

TEST(PublishedAccuracyTable, RowErrorIsEuclideanNorm) {
  const auto& rows = table1_rows();
  ASSERT_EQ(rows.size(), size_t(kTable1Rows));
  for (const auto& row : rows) {
    double expected = (row.ideal - row.measured).norm();
    EXPECT_NEAR(row.recomputed_error_mm(), expected, 1e-12);
  }
  // hand check on a synthetic row
  Table1Row synthetic{{1.0, 2.0, 3.0}, {1.0, 2.0, 7.0}, 4.0};
  EXPECT_NEAR(synthetic.recomputed_error_mm(), 4.0, 1e-12);
}

TEST(PublishedAccuracyTable, ImpossibleToleranceFails) {
  Table1Report strict = verify_table1(1e-9);
  EXPECT_FALSE(strict.pass);
}

TEST(Quartiles, LinearInterpolationConvention) {
  Quartiles q = quartiles_of({1.0, 2.0, 3.0, 4.0, 5.0});
  EXPECT_EQ(q.min, 1.0);
  EXPECT_EQ(q.q1, 2.0);
  EXPECT_EQ(q.median, 3.0);
  EXPECT_EQ(q.q3, 4.0);
  EXPECT_EQ(q.max, 5.0);

  q = quartiles_of({4.0, 1.0, 3.0, 2.0});  // order must not matter
  EXPECT_NEAR(q.q1, 1.75, 1e-12);
  EXPECT_NEAR(q.median, 2.5, 1e-12);
  EXPECT_NEAR(q.q3, 3.25, 1e-12);

  q = quartiles_of({7.0});
  EXPECT_EQ(q.min, 7.0);
  EXPECT_EQ(q.median, 7.0);
  EXPECT_EQ(q.max, 7.0);
}

TEST(Seeding, DerivedSeedsAreDistinctAndStable) {
  EXPECT_EQ(derive_seed(1, 0), derive_seed(1, 0));
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  // a run of indices stays collision free
  std::set<uint64_t> seen;
  for (uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(ConfigParsing, EmptyObjectYieldsDefaults) {
  ScenarioConfig cfg = ScenarioConfig::from_json_text("{}");
  EXPECT_EQ(cfg.seed, 1u);
  EXPECT_EQ(cfg.trials, 40);
  EXPECT_EQ(cfg.rates.tracker_hz, 8.0);
  EXPECT_EQ(cfg.chain.wrist_length_mm, 9.0);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(ConfigParsing, ReadsNestedValuesAndConvertsDegrees) {
  const char* text = R"({
    "seed": 9,
    "rates": {"tracker_hz": 10.0},
    "chain": {"limits": {"theta4_deg": [-90.0, 90.0]}},
    "servo": {"grip_open_deg": 30.0},
    "needle": {"motion_type": "script",
               "script": [{"t": 0.0, "center": [1.0, 2.0, 3.0], "yaw_deg": 90.0}]}
  })";
  ScenarioConfig cfg = ScenarioConfig::from_json_text(text);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.rates.tracker_hz, 10.0);
  EXPECT_NEAR(cfg.chain.limits.theta4_max, M_PI / 2, 1e-12);
  EXPECT_NEAR(cfg.servo.grip_open, M_PI / 6, 1e-12);
  ASSERT_EQ(cfg.needle.script.size(), 1u);
  EXPECT_EQ(cfg.needle.script[0].center.y(), 2.0);
  EXPECT_EQ(cfg.needle.script[0].yaw_deg, 90.0);
}

TEST(ConfigParsing, RejectsUnknownKeysWithPath) {
  try {
    ScenarioConfig::from_json_text(R"({"bogus": 1})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  try {
    ScenarioConfig::from_json_text(R"({"noise": {"pixel_sgima": 0.5}})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("noise"), std::string::npos);
    EXPECT_NE(msg.find("pixel_sgima"), std::string::npos);
  }
}

TEST(ConfigParsing, RejectsInvalidValues) {
  EXPECT_THROW(ScenarioConfig::from_json_text(R"({"needle": {"motion_type": "warp"}})"),
               ConfigError);
  EXPECT_THROW(ScenarioConfig::from_json_text(R"({"needle": {"motion_type": "script"}})")
                   .validate(),
               ConfigError);  // script motion with no waypoints
  // parsing validates eagerly: a tracker faster than the camera is rejected
  EXPECT_THROW(ScenarioConfig::from_json_text(R"({"rates": {"tracker_hz": 50.0}})"),
               ConfigError);
  EXPECT_THROW(ScenarioConfig::load("/nonexistent/path/config.json"), ConfigError);
  EXPECT_THROW(ScenarioConfig::from_json_text("not json"), ConfigError);
}

TEST(FileIo, WriteFileCreatesDirectoriesAtomically) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "ngrasp_test_io";
  fs::remove_all(dir);
  fs::path target = dir / "nested" / "deep" / "out.txt";
  write_file(target.string(), "payload\n");
  std::ifstream in(target);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(content, "payload\n");
  // no temp litter
  for (const auto& entry : fs::directory_iterator(target.parent_path()))
    EXPECT_EQ(entry.path().extension(), ".txt");
  fs::remove_all(dir);
}

TrialResult make_synthetic_trial() {
  TrialResult r;
  r.trial_id = 3;
  r.seed = 123;
  r.outcome.kind = servo::OutcomeKind::Success;
  r.outcome.final_tip_error_mm = 0.5;
  r.outcome.captured = true;
  r.task_time_s = 2.5;
  r.per_axis_error_mm = {0.1, 0.2, 0.3};
  TraceRow row;
  row.trial_id = 3;
  row.t = 0.01;
  row.phase = servo::Phase::Follow;
  row.tip_ws = {1.0, 2.0, 3.0};
  row.needle_ws = {4.0, 5.0, 6.0};
  row.error_ws = {0.25, 0.0, -0.125};
  row.d3 = 123.456789;
  r.trace.push_back(row);
  TraceRow row2 = row;
  row2.t = 0.02;
  r.trace.push_back(row2);
  perception::MarkerDetection det;
  det.marker_id = 1;
  det.t = 0.0;
  det.left = {100.25, 200.5};
  det.right = {90.125, 200.5};
  r.detections.push_back(det);
  return r;
}

TEST(Writers, TraceCsvLayout) {
  TrialResult r = make_synthetic_trial();
  std::string csv = trace_csv(std::vector<TrialResult>{r});
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# ngrasp-trace-v1");
  std::getline(in, line);
  EXPECT_EQ(line,
            "trial_id,t,phase,tip_x_mm,tip_y_mm,tip_z_mm,needle_x_mm,needle_y_mm,needle_z_mm,"
            "e_x_mm,e_y_mm,e_z_mm,d3_mm,outcome");
  std::getline(in, line);
  // time to 4 decimals, mm to 6; outcome column empty until the final row
  EXPECT_EQ(line,
            "3,0.0100,Follow,1.000000,2.000000,3.000000,4.000000,5.000000,6.000000,"
            "0.250000,0.000000,-0.125000,123.456789,");
  std::getline(in, line);
  EXPECT_NE(line.find("0.0200"), std::string::npos);
  EXPECT_EQ(line.substr(line.size() - 7), "Success");
}

TEST(Writers, DetectionsCsvLayout) {
  TrialResult r = make_synthetic_trial();
  std::string csv = detections_csv(std::vector<TrialResult>{r});
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# ngrasp-detections-v1");
  std::getline(in, line);
  EXPECT_EQ(line, "trial_id,t,marker_id,u_l,v_l,u_r,v_r");
  std::getline(in, line);
  EXPECT_EQ(line, "3,0.0000,1,100.250000,200.500000,90.125000,200.500000");
}

TEST(Writers, BatchReportJsonShape) {
  ScenarioConfig cfg = zero_noise_config();
  cfg.trials = 2;
  BatchReport report = run_batch(cfg, 2);
  std::string text = batch_report_json(report);
  nlohmann::json j = nlohmann::json::parse(text);
  EXPECT_EQ(j.at("schema"), "ngrasp-batch-v1");
  EXPECT_EQ(j.at("n_trials").get<int>(), 2);
  const auto& counts = j.at("counts");
  int total = counts.at("success").get<int>() + counts.at("miss").get<int>() +
              counts.at("fail").get<int>();
  EXPECT_EQ(total, 2);
  ASSERT_TRUE(j.contains("per_axis_error_quartiles_mm"));
  for (const char* axis : {"x", "y", "z"}) {
    const auto& q = j.at("per_axis_error_quartiles_mm").at(axis);
    EXPECT_LE(q.at("q1").get<double>(), q.at("median").get<double>());
    EXPECT_LE(q.at("median").get<double>(), q.at("q3").get<double>());
  }
  ASSERT_EQ(j.at("trials").size(), 2u);
  EXPECT_TRUE(j.at("trials")[0].contains("terminal_error_mm"));
  EXPECT_TRUE(j.at("trials")[0].contains("outcome"));
}

TEST(TrialRuns, ZeroNoiseTrialSucceedsCleanly) {
  ScenarioConfig cfg = zero_noise_config();
  TrialResult res = run_trial(cfg, 7, 0);
  EXPECT_EQ(res.outcome.kind, servo::OutcomeKind::Success);
  EXPECT_TRUE(res.outcome.captured);
  EXPECT_LT(res.outcome.final_tip_error_mm, 0.01);
  EXPECT_GT(res.task_time_s, 1.0);  // at least the settle window
  EXPECT_LT(res.task_time_s, cfg.max_duration_s);
  EXPECT_FALSE(res.trace.empty());
  EXPECT_FALSE(res.detections.empty());
  EXPECT_TRUE(res.outcome.abort_reason.empty());
}

TEST(TrialRuns, ZeroNoiseBatchAllSucceed) {
  ScenarioConfig cfg = zero_noise_config();
  BatchReport report = run_batch(cfg, 3);
  EXPECT_EQ(report.n_trials, 3);
  EXPECT_EQ(report.success, 3);
  EXPECT_EQ(report.miss, 0);
  EXPECT_EQ(report.fail, 0);
  EXPECT_LT(report.mean_terminal_error_mm, 0.01);
}

TEST(TrialRuns, SameSeedIsByteIdentical) {
  ScenarioConfig cfg;  // full default noise profile
  cfg.max_duration_s = 12.0;
  TrialResult a = run_trial(cfg, derive_seed(cfg.seed, 0), 0);
  TrialResult b = run_trial(cfg, derive_seed(cfg.seed, 0), 0);
  EXPECT_EQ(trace_csv(std::vector<TrialResult>{a}), trace_csv(std::vector<TrialResult>{b}));
  EXPECT_EQ(detections_csv(std::vector<TrialResult>{a}),
            detections_csv(std::vector<TrialResult>{b}));
  TrialResult c = run_trial(cfg, derive_seed(cfg.seed, 1), 0);
  EXPECT_NE(trace_csv(std::vector<TrialResult>{a}), trace_csv(std::vector<TrialResult>{c}));
}

TEST(CalibrationSim, ZeroNoiseIsExact) {
  ScenarioConfig cfg = zero_noise_config();
  CalibrationReport report = simulate_calibration(cfg, 7);
  for (const auto& plane : report.planes) {
    EXPECT_LT(plane.d_mean_mm, 1e-9);
    EXPECT_LT(plane.max_abs_mm, 1e-9);
  }
  EXPECT_LT(report.registration.translation_error_mm, 1e-9);
  EXPECT_LT(report.registration.rotation_error_rad, 1e-9);
  EXPECT_LT(report.registration.rms_residual_mm, 1e-9);
  EXPECT_LT(report.registration.mapped_mean_error_mm, 1e-9);
  EXPECT_LT(report.extrinsics.translation_error_mm, 1e-8);
  EXPECT_LT(report.extrinsics.rotation_error_rad, 1e-9);
  EXPECT_LT(report.extrinsics.mapped_corner_mean_mm, 1e-8);
}

TEST(CalibrationSim, CalibratedFramesFollowNoiseSwitch) {
  ScenarioConfig exact_cfg = zero_noise_config();
  std::mt19937_64 rng(11);
  servo::CalibratedFrames frames = calibrate_frames(exact_cfg, rng);
  geometry::RigidTransform true_rc = exact_cfg.chain.build().rc_from_ws;
  EXPECT_LT((frames.rc_from_ws.translation - true_rc.translation).norm(), 1e-12);

  ScenarioConfig noisy_cfg;  // defaults carry the calibrated noise profile
  std::mt19937_64 rng2(11);
  servo::CalibratedFrames noisy = calibrate_frames(noisy_cfg, rng2);
  double t_err = (noisy.rc_from_ws.translation - true_rc.translation).norm();
  EXPECT_GT(t_err, 1e-6);  // estimates, not copies
  EXPECT_LT(t_err, 5.0);   // but still in the calibrated accuracy band
  EXPECT_TRUE(noisy.rc_from_ws.is_rigid(1e-9));
  EXPECT_TRUE(noisy.ee_from_ws.is_rigid(1e-9));
}

}  // namespace
}  // namespace ngrasp::harness
