#include "rog/metrics/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rog/core/error.hpp"

namespace rog::metrics {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_case_rows_csv(std::ostream& os, const std::vector<CaseRow>& rows, int num_classes) {
  os << "case_id,attack,eps,iterations,queries,seed";
  for (int k = 1; k < num_classes; ++k) os << ",dice_c" << k;
  os << ",mean_dice,success\n";
  for (const auto& r : rows) {
    os << r.case_id << ',' << r.attack << ',' << r.eps_255 << "/255," << r.iterations << ',' << r.queries << ','
       << r.seed;
    for (int k = 1; k < num_classes; ++k) {
      const auto it = r.dice.per_class.find(k);
      os << ',' << format_real(it == r.dice.per_class.end() ? 1.0 : it->second);
    }
    os << ',' << format_real(r.dice.mean) << ',' << (r.success ? 1 : 0) << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

std::vector<CaseRow> read_case_rows_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorKind::kNotFound, "cannot open " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(f, line)), ErrorKind::kIo, "empty CSV " + path.string());
  const auto header = split_csv(line);
  require(header.size() >= 9 && header[0] == "case_id", ErrorKind::kIo, "unexpected CSV header in " + path.string());
  const int dice_cols = static_cast<int>(header.size()) - 8;
  std::vector<CaseRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    require(cells.size() == header.size(), ErrorKind::kIo, "ragged CSV row in " + path.string());
    CaseRow r;
    r.case_id = cells[0];
    r.attack = cells[1];
    r.eps_255 = std::stoi(cells[2]);
    r.iterations = std::stoi(cells[3]);
    r.queries = std::stoi(cells[4]);
    r.seed = std::stoi(cells[5]);
    for (int k = 0; k < dice_cols; ++k) r.dice.per_class[k + 1] = std::stod(cells[6 + static_cast<std::size_t>(k)]);
    r.dice.mean = std::stod(cells[6 + static_cast<std::size_t>(dice_cols)]);
    r.success = cells.back() == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::json summary_to_json(const RobustSummary& s) {
  nlohmann::json j;
  j["per_attack_dice"] = s.per_attack_dice;
  j["worst_case_per_case"] = s.worst_case_per_case;
  j["robust_accuracy"] = s.robust_accuracy;
  return j;
}

}  // namespace rog::metrics
