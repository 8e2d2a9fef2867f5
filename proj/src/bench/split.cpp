#include "rog/bench/split.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "rog/core/error.hpp"

namespace rog::bench {

Split split_dataset(const std::vector<std::string>& ids, double fraction, std::uint64_t seed) {
  require(ids.size() >= 2, ErrorKind::kInvalidArgument, "at least two cases are needed to split");
  require(fraction > 0.0 && fraction < 1.0, ErrorKind::kInvalidArgument, "fraction must lie in (0, 1)");
  require(std::set<std::string>(ids.begin(), ids.end()).size() == ids.size(), ErrorKind::kInvalidArgument,
          "duplicate case ids");
  std::vector<std::string> order = ids;
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the permutation is identical
  // across standard library implementations.
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }
  const std::size_t n = order.size();
  const std::size_t n_train = std::min(n - 1, static_cast<std::size_t>(std::floor(fraction * n + 1e-9)));
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return s;
}

Split split_dataset(volumes::Manifest& m, double fraction, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& c : m.cases) ids.push_back(c.id);
  Split s = split_dataset(ids, fraction, seed);
  const std::set<std::string> train(s.train.begin(), s.train.end());
  for (auto& c : m.cases) c.split = train.count(c.id) ? "train" : "val";
  return s;
}

}  // namespace rog::bench
