#pragma once

// Seeded data generators shared by unit and acceptance tests.

#include <vector>

#include <Eigen/Dense>

#include "stereogate/dataset.hpp"
#include "stereogate/rng.hpp"

namespace gen {

// n rows split evenly over three unit-variance spherical clusters in d >= 2
// dimensions, centered at 0, sep*e1 and sep*e2.
inline Eigen::MatrixXd three_clusters(stereogate::Rng& rng, std::size_t n, std::size_t d, double sep) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto c = static_cast<Eigen::Index>(i % 3);
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
    if (c > 0) x(i, c - 1) += sep;
  }
  return x;
}

// Random symmetric positive-definite d x d matrix with eigenvalues in
// [lo, lo + spread].
inline Eigen::MatrixXd random_spd(stereogate::Rng& rng, std::size_t d, double lo, double spread) {
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd ev(n);
  for (Eigen::Index i = 0; i < n; ++i) ev(i) = lo + spread * rng.uniform();
  Eigen::MatrixXd s = q * ev.asDiagonal() * q.transpose();
  return (s + s.transpose()) / 2.0;
}

// E/Z labelled reactions with one imine, two nucleophile, one catalyst, one
// solvent and one reaction-variable column, all standard normal. When
// separable, Z holds exactly when nu_1 > 0 and nu_1 is pushed at least 0.5
// away from zero, so the classes have a margin. Otherwise labels are fair
// coin flips independent of every feature.
inline stereogate::Dataset ez_dataset(stereogate::Rng& rng, std::size_t n, bool separable) {
  using stereogate::FeatureRole;
  stereogate::FeatureSchema schema({{"im_1", FeatureRole::imine},
                                    {"nu_1", FeatureRole::nucleophile},
                                    {"nu_2", FeatureRole::nucleophile},
                                    {"cat_1", FeatureRole::catalyst},
                                    {"solv_1", FeatureRole::solvent},
                                    {"rv_1", FeatureRole::reaction_variable}});
  std::vector<stereogate::ReactionRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    stereogate::ReactionRecord r;
    r.reaction_id = "ez" + std::to_string(i);
    r.reaction_type = "T" + std::to_string(i % 4);
    for (int j = 0; j < 6; ++j) r.features.push_back(rng.normal());
    bool z;
    if (separable) {
      z = r.features[1] > 0.0;
      r.features[1] += z ? 0.5 : -0.5;
    } else {
      z = rng.below(2) == 1;
    }
    r.transition_state = z ? stereogate::TransitionState::Z : stereogate::TransitionState::E;
    r.ddg = rng.normal();
    records.push_back(std::move(r));
  }
  return stereogate::Dataset(std::move(schema), std::move(records));
}

}  // namespace gen
