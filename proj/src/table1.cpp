#include "ngrasp/table1.hpp"

#include <cmath>

namespace ngrasp::harness {

const std::array<Table1Row, kTable1Rows>& table1_rows() {
  static const std::array<Table1Row, kTable1Rows> rows = {{
      {{-10.5, 4.3, -151.5}, {-11.4, 6.2, -150.6}, 2.3},
      {{-8.7, -5.9, -151.4}, {-9.4, -3.1, -152.6}, 3.1},
      {{-10.8, -5.5, -164.0}, {-11.0, -6.1, -163.7}, 0.7},
      {{-10.1, -3.6, -148.8}, {-12.2, -1.8, -153.8}, 5.7},
      {{-107.2, -5.8, -155.4}, {-108.0, -4.4, -156.7}, 2.1},
      {{-2.0, 2.9, -136.2}, {-2.8, 3.0, -142.8}, 6.6},
      {{-6.3, 5.9, -143.0}, {-7.3, 7.4, -142.0}, 2.1},
      {{-9.1, -6.7, -142.4}, {-17.0, -5.9, -143.9}, 8.1},
      {{3.6, 6.3, -143.4}, {2.4, 7.0, -145.9}, 2.9},
      {{0.9, 12.0, -151.0}, {0.1, 13.7, -150.4}, 2.0},
      {{-10.2, -7.7, -144.4}, {-10.5, -8.1, -144.2}, 0.5},
      {{-16.0, 2.0, -143.4}, {-11.6, 4.6, -144.5}, 5.2},
      {{-11.0, -0.9, -148.5}, {-10.0, 0.1, -145.7}, 3.1},
      {{-9.1, 0.3, -145.0}, {-10.5, 0.1, -147.9}, 3.2},
      {{-14.5, -5.5, -152.0}, {-14.4, -6.0, -151.9}, 0.5},
  }};
  return rows;
}

Table1Report verify_table1(double tolerance_mm) {
  Table1Report report;
  const auto& rows = table1_rows();
  double sum = 0.0;
  bool all_rows_pass = true;
  for (int i = 0; i < kTable1Rows; ++i) {
    Table1RowCheck& check = report.rows[static_cast<size_t>(i)];
    check.recomputed_mm = rows[static_cast<size_t>(i)].recomputed_error_mm();
    check.reported_mm = rows[static_cast<size_t>(i)].reported_error_mm;
    check.pass = std::abs(check.recomputed_mm - check.reported_mm) <= tolerance_mm;
    all_rows_pass = all_rows_pass && check.pass;
    sum += check.recomputed_mm;
  }
  report.recomputed_mean_mm = sum / kTable1Rows;
  report.mean_deviation_mm = std::abs(report.recomputed_mean_mm - kTable1PublishedMean);
  report.pass = all_rows_pass && report.mean_deviation_mm <= tolerance_mm;
  return report;
}

}  // namespace ngrasp::harness
