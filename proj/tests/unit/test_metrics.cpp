#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "rog/core/error.hpp"
#include "rog/metrics/dice.hpp"
#include "rog/metrics/report_io.hpp"

using namespace rog;
using namespace rog::metrics;
using volumes::LabelMask;
using volumes::TaskSpec;

namespace {

TaskSpec task_with_mu(double mu) {
  TaskSpec t;
  t.class_roles = {volumes::ClassRole::kBackground, volumes::ClassRole::kOrgan};
  t.clean_mean_dice = mu;
  return t;
}

DiceReport rep(double d) {
  DiceReport r;
  r.per_class[1] = d;
  r.mean = d;
  return r;
}

}  // namespace

TEST_CASE("dice examples") {
  LabelMask a({4, 4, 4}, 2), b({4, 4, 4}, 2);
  CHECK(dice(a, b, 1) == 1.0);
  a.labels[0] = 1;
  CHECK(dice(a, a, 1) == 1.0);
  b.labels[5] = 1;
  CHECK(dice(a, b, 1) == 0.0);

  // |pred| = 6, |gt| = 10, overlap 4.
  LabelMask p({4, 4, 4}, 2), g({4, 4, 4}, 2);
  for (int i = 0; i < 6; ++i) p.labels[static_cast<std::size_t>(i)] = 1;
  for (int i = 2; i < 12; ++i) g.labels[static_cast<std::size_t>(i)] = 1;
  CHECK(dice(p, g, 1) == doctest::Approx(0.5));

  LabelMask wrong({4, 4, 3}, 2);
  CHECK_THROWS_AS(dice(p, wrong, 1), Error);
}

TEST_CASE("dice agrees with the set-count oracle on random 3x3x3 pairs and is symmetric") {
  std::mt19937 rng(17);
  for (int t = 0; t < 10000; ++t) {
    LabelMask a({3, 3, 3}, 3), b({3, 3, 3}, 3);
    for (auto& l : a.labels) l = static_cast<std::uint8_t>(rng() % 3);
    for (auto& l : b.labels) l = static_cast<std::uint8_t>(rng() % 3);
    for (int k = 1; k < 3; ++k) {
      CHECK(dice(a, b, k) == oracle::dice(a, b, k));
      CHECK(dice(a, b, k) == dice(b, a, k));
    }
  }
}

TEST_CASE("dice report mean and permutation invariance") {
  std::mt19937 rng(3);
  LabelMask a({5, 5, 5}, 3), b({5, 5, 5}, 3);
  for (auto& l : a.labels) l = static_cast<std::uint8_t>(rng() % 3);
  for (auto& l : b.labels) l = static_cast<std::uint8_t>(rng() % 3);
  const DiceReport r = dice_report(a, b);
  CHECK(r.per_class.size() == 2);
  CHECK(r.mean == doctest::Approx((r.per_class.at(1) + r.per_class.at(2)) / 2));
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  LabelMask pa = a, pb = b;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    pa.labels[i] = a.labels[perm[i]];
    pb.labels[i] = b.labels[perm[i]];
  }
  CHECK(dice_report(pa, pb).mean == r.mean);
}

TEST_CASE("attack success is strict and needs the reference") {
  const TaskSpec t = task_with_mu(0.7375);
  CHECK(attack_success(0.3581, t));
  CHECK_FALSE(attack_success(0.5791, t));
  CHECK_FALSE(attack_success(0.7375 / 2, t));
  TaskSpec none = t;
  none.clean_mean_dice.reset();
  try {
    attack_success(0.1, none);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMissingReference);
  }
}

TEST_CASE("robust aggregation") {
  const TaskSpec t = task_with_mu(0.7375);
  std::vector<std::map<std::string, DiceReport>> one{{{"A", rep(0.6)}}};
  CHECK(aggregate_robust(one, t).worst_case_per_case[0] == 0.6);

  std::vector<std::map<std::string, DiceReport>> r{
      {{"a", rep(0.7)}, {"b", rep(0.1)}, {"c", rep(0.4)}, {"d", rep(0.6)}},
      {{"a", rep(0.7)}, {"b", rep(0.65)}, {"c", rep(0.5)}, {"d", rep(0.6)}},
  };
  const RobustSummary s = aggregate_robust(r, t);
  CHECK(s.worst_case_per_case[0] == 0.1);
  CHECK(s.worst_case_per_case[1] == 0.5);
  CHECK(s.robust_accuracy == 0.5);
  CHECK(s.per_attack_dice.at("b") == doctest::Approx(0.375));

  std::vector<std::map<std::string, DiceReport>> robust{{{"a", rep(0.7)}, {"b", rep(0.5)}}};
  CHECK(aggregate_robust(robust, t).robust_accuracy == 1.0);

  std::vector<std::map<std::string, DiceReport>> ragged{{{"a", rep(0.7)}, {"b", rep(0.5)}}, {{"a", rep(0.7)}}};
  CHECK_THROWS_AS(aggregate_robust(ragged, t), Error);
}

TEST_CASE("auc over eps") {
  CHECK(auc_dice_epsilon({{0.0, 1.0}, {0.5, 1.0}, {1.0, 1.0}}) == doctest::Approx(1.0));
  CHECK(auc_dice_epsilon({{5 / 255.0, 0.8}, {16 / 255.0, 0.0}}) == doctest::Approx(0.4));
  CHECK_THROWS_AS(auc_dice_epsilon({{0.1, 0.5}}), Error);
  CHECK_THROWS_AS(auc_dice_epsilon({{0.1, 0.5}, {0.1, 0.4}}), Error);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::pair<double, double>> lo, hi;
    for (int i = 0; i < 5; ++i) {
      const double a = u(rng);
      lo.emplace_back(i, a);
      hi.emplace_back(i, std::min(1.0, a + u(rng) * 0.2));
    }
    CHECK(auc_dice_epsilon(hi) >= auc_dice_epsilon(lo));
  }
}

TEST_CASE("case rows CSV round trip") {
  CaseRow r;
  r.case_id = "case_001";
  r.attack = "APGD-CE";
  r.eps_255 = 8;
  r.iterations = 5;
  r.dice.per_class = {{1, 0.5}, {2, 0.25}};
  r.dice.mean = 0.375;
  r.success = true;
  std::ostringstream os;
  write_case_rows_csv(os, {r}, 3);
  CHECK(os.str() ==
        "case_id,attack,eps,iterations,queries,seed,dice_c1,dice_c2,mean_dice,success\n"
        "case_001,APGD-CE,8/255,5,0,0,0.500000,0.250000,0.375000,1\n");
  const auto path = std::filesystem::temp_directory_path() / "rog_rows_test.csv";
  {
    std::ofstream f(path);
    f << os.str();
  }
  const auto back = read_case_rows_csv(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].eps_255 == 8);
  CHECK(back[0].dice.per_class.at(2) == 0.25);
  CHECK(back[0].success);
  std::filesystem::remove(path);
}
