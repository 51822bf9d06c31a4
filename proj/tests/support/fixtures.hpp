#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "errloc/dataset.hpp"
#include "errloc/rng.hpp"
#include "errloc/slicing.hpp"

namespace errloc::fixture {

/// Dataset with z from explicit per-row correctness (1 = correct). Labels are
/// "a"/"b"; a wrong row predicts the other label.
Dataset with_correctness(std::vector<FeatureColumn> features, const std::vector<int>& correct,
                         std::vector<std::string> labels = {});

/// N = 1000 rows, M = 50 errors, one numeric column "id" = row index.
/// Rows 0..36 hold 13 errors (first 13), rows 0..98 hold 21 errors (rows
/// 37..44 are the next 8), the other 29 errors sit at rows 100..128.
Dataset table1_dataset();

/// Rows 0..n-1 with explicit slice memberships. Slice k is the predicate
/// s<k> ∈ {in} on a categorical column built from `members[k]`.
struct SetInstance {
  Dataset data;
  std::vector<Slice> slices;
};
SetInstance set_instance(const std::vector<int>& correct,
                         const std::vector<std::vector<std::size_t>>& members);

struct SyntheticSpec {
  std::size_t rows = 400;
  double base_error = 0.08;
  /// Error probability inside the planted region (age >= 60 or color == red).
  double planted_error = 0.6;
  std::size_t n_labels = 2;
  bool confidence = true;
};

/// Columns: age (numeric, 18..90), income (numeric with ~5% missing),
/// color (categorical, some missing), shape (categorical). Errors are
/// planted in the region age >= 60 or color == red.
Dataset synthetic(std::uint64_t seed, const SyntheticSpec& spec = {});

/// Temporary directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

void write_text(const std::string& path, const std::string& text);

}  // namespace errloc::fixture
