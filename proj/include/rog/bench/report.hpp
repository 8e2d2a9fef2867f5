#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rog/metrics/report_io.hpp"

namespace rog::bench {

inline constexpr const char* kTableColumns[] = {"Clean", "APGD-CE", "APGD-DLR", "FAB-T", "Square"};

struct ReportInputs {
  std::string task_name = "task";
  std::vector<int> eps_grid_255;                   // grid the sweeps must cover
  std::vector<metrics::CaseRow> ensemble_rows;     // per-attack table
  std::vector<metrics::CaseRow> sweep_clean_rows;  // clean-trained model
  std::vector<metrics::CaseRow> sweep_free_rows;   // Free-AT model; may be empty
};

struct ReportBundle {
  std::vector<std::pair<std::string, std::string>> files;  // name, content
};

// Pure function of its inputs. Throws invalid-argument on empty input and a
// coverage error listing every gap when a table misses a required cell.
ReportBundle make_report(const ReportInputs& in);

// Writes every file of the bundle into dir.
void write_bundle(const ReportBundle& b, const std::filesystem::path& dir);

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Minimal line chart.
std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series);

}  // namespace rog::bench
