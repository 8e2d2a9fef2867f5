#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rog/metrics/dice.hpp"

namespace rog::metrics {

// One evaluated (case, attack, grid point). eps is stored as a numerator
// over 255 so that file names and joins never see float drift.
struct CaseRow {
  std::string case_id;
  std::string attack;
  int eps_255 = 0;
  int iterations = 0;
  int queries = 0;
  int seed = 0;
  DiceReport dice;
  bool success = false;
};

std::string format_real(double v);  // fixed 6 decimals

// Columns: case_id, attack, eps, iterations, queries, seed, dice_c1..dice_cK, mean_dice, success
void write_case_rows_csv(std::ostream& os, const std::vector<CaseRow>& rows, int num_classes);
std::vector<CaseRow> read_case_rows_csv(const std::filesystem::path& path);

nlohmann::json summary_to_json(const RobustSummary& s);

}  // namespace rog::metrics
