#include "rog/bench/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rog/core/error.hpp"
#include "rog/metrics/dice.hpp"

namespace rog::bench {

using metrics::CaseRow;
using metrics::format_real;

namespace {

// (attack, eps) -> mean Dice over cases.
std::map<std::pair<std::string, int>, double> means_by_attack_eps(const std::vector<CaseRow>& rows) {
  std::map<std::pair<std::string, int>, std::pair<double, int>> acc;
  for (const auto& r : rows) {
    auto& a = acc[{r.attack, r.eps_255}];
    a.first += r.dice.mean;
    a.second += 1;
  }
  std::map<std::pair<std::string, int>, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

std::map<std::string, double> means_by_attack(const std::vector<CaseRow>& rows) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& r : rows) {
    acc[r.attack].first += r.dice.mean;
    acc[r.attack].second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

std::string eps_label(int e) { return std::to_string(e) + "/255"; }

std::vector<std::pair<double, double>> curve(const std::map<std::pair<std::string, int>, double>& m,
                                             const std::string& attack, const std::vector<int>& grid, bool with_clean) {
  std::vector<std::pair<double, double>> pts;
  if (with_clean) pts.emplace_back(0.0, m.at({"Clean", 0}));
  for (int e : grid) pts.emplace_back(e / 255.0, m.at({attack, e}));
  return pts;
}

std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      default: o += c;
    }
  }
  return o;
}

}  // namespace

ReportBundle make_report(const ReportInputs& in) {
  require(!in.ensemble_rows.empty() || !in.sweep_clean_rows.empty() || !in.sweep_free_rows.empty(),
          ErrorKind::kInvalidArgument, "nothing to report: every input table is empty");
  require(!in.eps_grid_255.empty(), ErrorKind::kInvalidArgument, "empty eps grid");

  std::vector<std::string> gaps;
  const auto ens = means_by_attack(in.ensemble_rows);
  const auto clean = means_by_attack_eps(in.sweep_clean_rows);
  const auto free = means_by_attack_eps(in.sweep_free_rows);

  if (in.ensemble_rows.empty()) gaps.push_back("ensemble table missing");
  for (const char* col : kTableColumns)
    if (!in.ensemble_rows.empty() && !ens.count(col)) gaps.push_back(std::string("ensemble table lacks ") + col);

  auto check_sweep = [&](const std::map<std::pair<std::string, int>, double>& m, const std::string& label,
                         const std::vector<std::string>& attacks) {
    if (!m.count({"Clean", 0})) gaps.push_back(label + " sweep lacks the clean row");
    for (const auto& a : attacks)
      for (int e : in.eps_grid_255)
        if (!m.count({a, e})) gaps.push_back(label + " sweep lacks " + a + " at " + eps_label(e));
  };
  if (in.sweep_clean_rows.empty())
    gaps.push_back("clean-model sweep missing");
  else
    check_sweep(clean, "clean-model", {"PGD", "APGD-CE"});
  if (!in.sweep_free_rows.empty()) check_sweep(free, "free-model", {"APGD-CE"});

  if (!gaps.empty()) {
    std::string msg = "report coverage gaps:";
    for (const auto& g : gaps) msg += "\n  - " + g;
    throw Error(ErrorKind::kCoverage, msg);
  }

  ReportBundle b;
  {
    std::ostringstream os;
    os << "task";
    for (const char* col : kTableColumns) os << ',' << col;
    os << '\n' << in.task_name;
    for (const char* col : kTableColumns) os << ',' << format_real(ens.at(col));
    os << '\n';
    b.files.emplace_back("table1.csv", os.str());
  }
  {
    // Worst case and robust accuracy over the ensemble attacks.
    std::map<std::string, double> worst;
    std::map<std::string, bool> broken;
    for (const auto& r : in.ensemble_rows) {
      if (r.attack == "Clean") continue;
      auto it = worst.find(r.case_id);
      worst[r.case_id] = it == worst.end() ? r.dice.mean : std::min(it->second, r.dice.mean);
      broken[r.case_id] = broken[r.case_id] || r.success;
    }
    double wsum = 0.0, robust = 0.0;
    for (const auto& [id, w] : worst) {
      wsum += w;
      robust += broken[id] ? 0.0 : 1.0;
    }
    const double n = static_cast<double>(std::max<std::size_t>(1, worst.size()));
    std::ostringstream os;
    os << "task,cases,worst_case_dice,robust_accuracy\n"
       << in.task_name << ',' << worst.size() << ',' << format_real(wsum / n) << ',' << format_real(robust / n) << '\n';
    b.files.emplace_back("robustness.csv", os.str());
  }

  std::vector<Series> fig3;
  {
    std::ostringstream curves, aucs;
    curves << "attack,eps,mean_dice\n";
    aucs << "attack,auc\n";
    for (const char* a : {"PGD", "APGD-CE"}) {
      const auto pts = curve(clean, a, in.eps_grid_255, false);
      for (std::size_t i = 0; i < pts.size(); ++i)
        curves << a << ',' << eps_label(in.eps_grid_255[i]) << ',' << format_real(pts[i].second) << '\n';
      const double auc = pts.size() >= 2 ? metrics::auc_dice_epsilon(pts) : pts.front().second;
      aucs << a << ',' << format_real(auc) << '\n';
      Series s{a, {}};
      for (std::size_t i = 0; i < pts.size(); ++i) s.points.emplace_back(in.eps_grid_255[i], pts[i].second);
      fig3.push_back(std::move(s));
    }
    b.files.emplace_back("fig3_curves.csv", curves.str());
    b.files.emplace_back("fig3_auc.csv", aucs.str());
  }

  std::vector<Series> fig4;
  {
    std::ostringstream os;
    os << "model,eps,mean_dice\n";
    auto emit = [&](const std::string& model, const std::map<std::pair<std::string, int>, double>& m) {
      Series s{model, {}};
      os << model << ",0," << format_real(m.at({"Clean", 0})) << '\n';
      s.points.emplace_back(0.0, m.at({"Clean", 0}));
      for (int e : in.eps_grid_255) {
        os << model << ',' << eps_label(e) << ',' << format_real(m.at({"APGD-CE", e})) << '\n';
        s.points.emplace_back(e, m.at({"APGD-CE", e}));
      }
      fig4.push_back(std::move(s));
    };
    emit("clean", clean);
    if (!in.sweep_free_rows.empty()) emit("free_at", free);
    b.files.emplace_back("fig4_curves.csv", os.str());
  }

  b.files.emplace_back("fig3.svg", line_plot_svg("PGD vs APGD-CE (" + in.task_name + ")", "eps x 255", "mean Dice", fig3));
  b.files.emplace_back("fig4.svg",
                       line_plot_svg("APGD-CE robustness (" + in.task_name + ")", "eps x 255", "mean Dice", fig4));
  return b;
}

void write_bundle(const ReportBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : b.files) {
    std::ofstream f(dir / name, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::kIo, "cannot write " + (dir / name).string());
    f << content;
  }
}

std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series) {
  static const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  const double w = 480, h = 320, left = 60, right = 20, top = 40, bottom = 50;
  double x0 = 0.0, x1 = 1.0;
  bool first = true;
  for (const auto& s : series)
    for (const auto& [x, _] : s.points) {
      if (first) x0 = x1 = x, first = false;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
    }
  if (x1 <= x0) x1 = x0 + 1.0;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (w - left - right); };
  auto py = [&](double y) { return top + (1.0 - std::clamp(y, 0.0, 1.0)) * (h - top - bottom); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
     << "</text>\n"
     << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\"" << h - bottom
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = i / 4.0;
    os << "<text x=\"" << left - 6 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\" font-size=\"10\">"
       << num(y) << "</text>\n";
  }
  os << "<text x=\"" << left << "\" y=\"" << h - bottom + 14 << "\" font-size=\"10\">" << num(x0) << "</text>\n"
     << "<text x=\"" << w - right << "\" y=\"" << h - bottom + 14 << "\" text-anchor=\"end\" font-size=\"10\">"
     << num(x1) << "</text>\n"
     << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
     << xml_escape(x_label) << "</text>\n"
     << "<text x=\"14\" y=\"" << h / 2 << "\" transform=\"rotate(-90 14 " << h / 2
     << ")\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(y_label) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* colour = kColours[i % 5];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : series[i].points) os << num(px(x)) << ',' << num(py(y)) << ' ';
    os << "\"/>\n"
       << "<text x=\"" << w - right - 4 << "\" y=\"" << top + 14 * (i + 1) << "\" text-anchor=\"end\" fill=\""
       << colour << "\" font-size=\"11\">" << xml_escape(series[i].name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace rog::bench
