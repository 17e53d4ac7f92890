#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "scq/geometry.hpp"

namespace scq {

struct DatasetSpec {
  std::string path;
  /// Column index, or a header name when has_header is set.
  std::variant<std::size_t, std::string> label_column = std::size_t{0};
  char delimiter = ',';
  bool has_header = true;
  bool normalize = true;
};

struct LoadedDataset {
  PointSet points;
  /// label_names[i - 1] is the raw label mapped to id i.
  std::vector<std::string> label_names;
  std::vector<std::string> kept_columns;
  std::vector<std::string> dropped_columns;
};

/// Reads a labeled CSV. Constant columns are dropped; with `normalize` every
/// remaining feature is shifted and scaled to mean 0 and population standard
/// deviation 1. Labels become 1..L in order of first appearance.
///
/// Throws std::runtime_error naming the line for unparseable rows, and when
/// no non-constant feature remains.
LoadedDataset load(const DatasetSpec& spec);

}  // namespace scq
