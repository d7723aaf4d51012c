#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "stereogate/dataset.hpp"
#include "stereogate/rng.hpp"

namespace testing {

using namespace stereogate;

inline Eigen::MatrixXd random_matrix(Rng& rng, std::size_t n, std::size_t p) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
  return x;
}

inline std::vector<double> row_of(const Eigen::MatrixXd& x, Eigen::Index i) {
  std::vector<double> r(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) r[static_cast<std::size_t>(j)] = x(i, j);
  return r;
}

inline std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Dataset with features named f0, f1, ... all of the given role and one
// reaction type per record unless types is supplied.
inline Dataset make_dataset(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            std::vector<FeatureRole> roles = {}, std::vector<std::string> types = {}) {
  std::vector<FeatureSpec> specs;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const FeatureRole role = roles.empty() ? FeatureRole::nucleophile : roles[static_cast<std::size_t>(j)];
    specs.push_back({"f" + std::to_string(j), role});
  }
  std::vector<ReactionRecord> records;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    ReactionRecord r;
    r.reaction_id = "r" + std::to_string(i);
    r.reaction_type = types.empty() ? "T" : types[static_cast<std::size_t>(i)];
    r.features = row_of(x, i);
    r.ddg = y(i);
    records.push_back(std::move(r));
  }
  return Dataset(FeatureSchema(std::move(specs)), std::move(records));
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("stereogate_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(STEREOGATE_SOURCE_DIR) / rel;
}

}  // namespace testing
