// Apache License, Version 2.0, refer to LICENSE.txt

#include "trcrp/panel.hh"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "trcrp/errors.hh"

namespace trcrp {

Panel::Panel(std::vector<std::string> series_names, std::vector<std::string> time_labels,
             std::size_t window, std::vector<double> values, std::vector<bool> observed)
    : names_(std::move(series_names)), labels_(std::move(time_labels)), window_(window) {
  if (names_.empty()) throw DataError("panel has no series");
  if (labels_.size() <= window_) {
    throw DataError("panel needs at least window + 1 rows, got " +
                    std::to_string(labels_.size()));
  }
  rows_ = labels_.size();
  steps_ = static_cast<int>(rows_ - window_);
  if (values.size() != names_.size() * rows_ || observed.size() != values.size()) {
    throw DataError("panel value grid does not match N x (p+T)");
  }
  std::unordered_set<std::string> seen;
  for (const auto& label : labels_) {
    if (!seen.insert(label).second) throw DataError("duplicate time label '" + label + "'");
  }
  values_ = std::move(values);
  observed_.resize(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) {
    observed_[i] = observed[i] ? 1 : 0;
    if (observed[i] && !std::isfinite(values_[i])) {
      throw DataError("non-finite observed value in series '" + names_[i / rows_] + "'");
    }
    if (!observed[i]) values_[i] = std::numeric_limits<double>::quiet_NaN();
  }
  for (std::size_t n = 0; n < names_.size(); ++n) {
    for (std::size_t r = 0; r < window_; ++r) {
      if (!observed_[n * rows_ + r]) {
        throw DataError("missing value in conditioning prefix of series '" + names_[n] +
                        "' at row '" + labels_[r] + "'");
      }
    }
  }
}

std::vector<std::pair<std::size_t, int>> Panel::missing_cells() const {
  std::vector<std::pair<std::size_t, int>> cells;
  for (std::size_t n = 0; n < num_series(); ++n) {
    for (int t = 1; t <= steps_; ++t) {
      if (!observed(n, t)) cells.emplace_back(n, t);
    }
  }
  return cells;
}

bool Panel::fully_observed() const {
  for (auto o : observed_) {
    if (!o) return false;
  }
  return true;
}

std::vector<double> Panel::observed_values(std::size_t n) const {
  std::vector<double> out;
  for (int t = 1; t <= steps_; ++t) {
    if (observed(n, t)) out.push_back(value(n, t));
  }
  return out;
}

Panel Panel::with_missing(const std::vector<std::pair<std::size_t, int>>& cells) const {
  std::vector<bool> observed(observed_.begin(), observed_.end());
  for (auto [n, t] : cells) {
    if (n >= num_series() || t < 1 || t > steps_) {
      throw DataError("cannot hide cell outside the modeled range");
    }
    observed[offset(n, t)] = false;
  }
  return Panel(names_, labels_, window_, values_, std::move(observed));
}

LagVector lag_vector(const Panel& panel, std::size_t n, int t) {
  if (n >= panel.num_series() || t < 1 || t > panel.num_steps()) {
    throw std::out_of_range("lag_vector index out of range");
  }
  const int p = static_cast<int>(panel.window());
  LagVector lv;
  lv.series = n;
  lv.time = t;
  lv.lags.reserve(panel.window());
  lv.lag_observed.reserve(panel.window());
  for (int s = t - p; s < t; ++s) {
    lv.lags.push_back(panel.value(n, s));
    lv.lag_observed.push_back(panel.observed(n, s));
  }
  return lv;
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

Panel read_csv(std::istream& in, std::size_t window) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split_row(line);
    break;
  }
  if (header.size() < 2) throw DataError("CSV header must be `time,<series>...`");
  const std::size_t num_series = header.size() - 1;
  std::vector<std::string> names;
  for (std::size_t i = 1; i < header.size(); ++i) names.push_back(trim(header[i]));

  std::vector<std::string> labels;
  std::vector<std::vector<double>> columns(num_series);
  std::vector<std::vector<bool>> present(num_series);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto cells = split_row(line);
    if (cells.size() != header.size()) {
      throw DataError("CSV row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, expected " + std::to_string(header.size()));
    }
    labels.push_back(trim(cells[0]));
    for (std::size_t n = 0; n < num_series; ++n) {
      const std::string cell = trim(cells[n + 1]);
      if (cell.empty()) {
        columns[n].push_back(0.0);
        present[n].push_back(false);
        continue;
      }
      double x = 0.0;
      const auto* end = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(cell.data(), end, x);
      if (ec != std::errc() || ptr != end || !std::isfinite(x)) {
        throw DataError("non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                        ", column '" + names[n] + "'");
      }
      columns[n].push_back(x);
      present[n].push_back(true);
    }
  }
  std::vector<double> values;
  std::vector<bool> observed;
  for (std::size_t n = 0; n < num_series; ++n) {
    values.insert(values.end(), columns[n].begin(), columns[n].end());
    observed.insert(observed.end(), present[n].begin(), present[n].end());
  }
  return Panel(std::move(names), std::move(labels), window, std::move(values),
               std::move(observed));
}

Panel load_csv(const std::filesystem::path& path, std::size_t window) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path.string() + "'");
  return read_csv(in, window);
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const Panel& panel, std::string_view comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "time";
  for (const auto& name : panel.series_names()) out << ',' << name;
  out << '\n';
  const int p = static_cast<int>(panel.window());
  for (int t = -p + 1; t <= panel.num_steps(); ++t) {
    out << panel.label(t);
    for (std::size_t n = 0; n < panel.num_series(); ++n) {
      out << ',';
      if (panel.observed(n, t)) out << format_double(panel.value(n, t));
    }
    out << '\n';
  }
}

}  // namespace trcrp
