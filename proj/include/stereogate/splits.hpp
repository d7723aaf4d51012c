#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stereogate/dataset.hpp"

namespace stereogate {

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::size_t repeat = 0;
  // Held-out reaction type for leave-one-type-out plans, empty otherwise.
  std::string label;
};

struct SplitPlan {
  std::vector<Fold> folds;
  std::uint64_t seed = 0;
};

// repeats x k folds. Each repeat shuffles 0..n-1 with an Rng seeded by
// derive_seed(seed, repeat) and cuts the shuffled order into k contiguous
// slices whose sizes differ by at most one. Index lists are sorted.
SplitPlan kfold_plan(std::size_t n, std::size_t k, std::size_t repeats, std::uint64_t seed);

// One fold per distinct reaction type, in order of first appearance.
SplitPlan leave_one_type_out_plan(const Dataset& ds);

}  // namespace stereogate
