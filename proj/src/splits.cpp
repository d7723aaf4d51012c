#include "stereogate/splits.hpp"

#include <algorithm>
#include <numeric>

#include "stereogate/error.hpp"
#include "stereogate/rng.hpp"

namespace stereogate {

SplitPlan kfold_plan(std::size_t n, std::size_t k, std::size_t repeats, std::uint64_t seed) {
  if (k < 2) throw InputError("k-fold needs k >= 2");
  if (k > n) {
    throw InputError("k-fold with k = " + std::to_string(k) + " exceeds record count " + std::to_string(n));
  }
  if (repeats == 0) throw InputError("k-fold needs at least one repeat");

  SplitPlan plan;
  plan.seed = seed;
  plan.folds.reserve(repeats * k);
  std::vector<std::size_t> order(n);
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, rep));
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t f = 0; f < k; ++f) {
      const std::size_t begin = f * n / k;
      const std::size_t end = (f + 1) * n / k;
      Fold fold;
      fold.repeat = rep;
      fold.test.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                       order.begin() + static_cast<std::ptrdiff_t>(end));
      fold.train.reserve(n - fold.test.size());
      fold.train.insert(fold.train.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(begin));
      fold.train.insert(fold.train.end(), order.begin() + static_cast<std::ptrdiff_t>(end), order.end());
      std::sort(fold.test.begin(), fold.test.end());
      std::sort(fold.train.begin(), fold.train.end());
      plan.folds.push_back(std::move(fold));
    }
  }
  return plan;
}

SplitPlan leave_one_type_out_plan(const Dataset& ds) {
  auto types = ds.reaction_types();
  if (types.size() < 2) {
    throw InputError("leave-one-type-out needs at least 2 reaction types, found " +
                     std::to_string(types.size()));
  }
  SplitPlan plan;
  for (const auto& type : types) {
    Fold fold;
    fold.label = type;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      (ds[i].reaction_type == type ? fold.test : fold.train).push_back(i);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

}  // namespace stereogate
