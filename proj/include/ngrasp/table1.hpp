#pragma once

#include <array>

#include "ngrasp/geometry.hpp"

namespace ngrasp::harness {

/// One published grasp-accuracy acquisition: measured needle position,
/// commanded ideal position, and the reported error norm (all mm).
struct Table1Row {
  geometry::Point3 measured;
  geometry::Point3 ideal;
  double reported_error_mm = 0.0;

  double recomputed_error_mm() const { return (ideal - measured).norm(); }
};

inline constexpr int kTable1Rows = 15;
inline constexpr double kTable1PublishedMean = 3.2;

const std::array<Table1Row, kTable1Rows>& table1_rows();

struct Table1RowCheck {
  double recomputed_mm = 0.0;
  double reported_mm = 0.0;
  bool pass = false;
};

struct Table1Report {
  std::array<Table1RowCheck, kTable1Rows> rows;
  double recomputed_mean_mm = 0.0;
  double mean_deviation_mm = 0.0;
  bool pass = false;
};

/// Recomputes every row error and the mean; a row fails when it deviates from
/// the published value by more than tolerance_mm, the report fails when any
/// row fails or the recomputed mean strays from the published mean.
Table1Report verify_table1(double tolerance_mm = 0.05);

}  // namespace ngrasp::harness
