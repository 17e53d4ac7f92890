#include "scq/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string_view>

namespace scq {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& v) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v);
}

std::runtime_error line_error(std::size_t line, const std::string& what) {
  return std::runtime_error("line " + std::to_string(line) + ": " + what);
}

}  // namespace

LoadedDataset load(const DatasetSpec& spec) {
  std::ifstream f(spec.path);
  if (!f) throw std::runtime_error("cannot open dataset " + spec.path);

  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  std::vector<std::string> raw_labels;
  std::size_t label_col = 0;
  bool label_resolved = false;
  std::size_t width = 0;

  const auto resolve_label = [&](std::size_t line) {
    if (const auto* idx = std::get_if<std::size_t>(&spec.label_column)) {
      label_col = *idx;
    } else {
      const auto& name = std::get<std::string>(spec.label_column);
      auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) throw line_error(line, "no label column named " + name);
      label_col = static_cast<std::size_t>(it - header.begin());
    }
    if (label_col >= width) throw line_error(line, "label column out of range");
    label_resolved = true;
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, spec.delimiter);
    if (width == 0) {
      width = cells.size();
      if (spec.has_header) {
        for (auto c : cells) header.emplace_back(c);
        resolve_label(lineno);
        continue;
      }
      for (std::size_t c = 0; c < width; ++c) header.push_back("c" + std::to_string(c));
      resolve_label(lineno);
    }
    if (cells.size() != width) {
      throw line_error(lineno, "expected " + std::to_string(width) + " fields, got " +
                                   std::to_string(cells.size()));
    }
    if (columns.empty()) columns.resize(width);
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_col) {
        raw_labels.emplace_back(cells[c]);
        continue;
      }
      double v = 0.0;
      if (!parse_double(cells[c], v)) {
        throw line_error(lineno, "cannot parse '" + std::string(cells[c]) + "' in column " +
                                     header[c]);
      }
      columns[c].push_back(v);
    }
  }
  if (!label_resolved || raw_labels.empty()) throw std::runtime_error("dataset has no rows");

  LoadedDataset out;
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < width; ++c) {
    if (c == label_col) continue;
    const auto& col = columns[c];
    const bool constant =
        std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); });
    if (constant) {
      out.dropped_columns.push_back(header[c]);
    } else {
      out.kept_columns.push_back(header[c]);
      kept.push_back(c);
    }
  }
  if (kept.empty()) throw std::runtime_error("every feature column is constant");

  const std::size_t n = raw_labels.size();
  if (spec.normalize) {
    for (std::size_t c : kept) {
      auto& col = columns[c];
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (double v : col) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(n));
      for (double& v : col) v = (v - mean) / sd;
    }
  }

  std::map<std::string, ClusterId> ids;
  std::vector<ClusterId> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, fresh] = ids.try_emplace(raw_labels[i], static_cast<ClusterId>(ids.size() + 1));
    if (fresh) out.label_names.push_back(raw_labels[i]);
    labels[i] = it->second;
  }

  std::vector<double> coords;
  coords.reserve(n * kept.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c : kept) coords.push_back(columns[c][i]);
  }
  out.points = PointSet(kept.size(), std::move(coords), std::move(labels));
  return out;
}

}  // namespace scq
