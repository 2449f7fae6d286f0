// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trcrp {

// N aligned time series observed on a common grid. Time indices follow the
// model convention: t = -p+1..0 is the conditioning prefix (always observed)
// and t = 1..T are the modeled steps. Immutable after construction.
class Panel {
 public:
  // `values` and `observed` are row-major N x (p+T); `time_labels` has p+T
  // entries, prefix rows first. Unobserved values are ignored.
  Panel(std::vector<std::string> series_names,
        std::vector<std::string> time_labels, std::size_t window,
        std::vector<double> values, std::vector<bool> observed);

  std::size_t num_series() const { return names_.size(); }
  int num_steps() const { return steps_; }
  std::size_t window() const { return window_; }

  double value(std::size_t n, int t) const { return values_[offset(n, t)]; }
  bool observed(std::size_t n, int t) const { return observed_[offset(n, t)] != 0; }

  const std::vector<std::string>& series_names() const { return names_; }
  // All p+T row labels; label(t) gives the label of step t.
  const std::vector<std::string>& time_labels() const { return labels_; }
  const std::string& label(int t) const {
    return labels_[static_cast<std::size_t>(t + static_cast<int>(window_) - 1)];
  }

  // Unobserved (n, t) cells with 1 <= t <= T, ordered by series then time.
  std::vector<std::pair<std::size_t, int>> missing_cells() const;
  bool fully_observed() const;

  // Observed in-sample values of series n (t = 1..T).
  std::vector<double> observed_values(std::size_t n) const;

  // Copy with some in-sample cells hidden; used by the benchmarking protocols.
  Panel with_missing(const std::vector<std::pair<std::size_t, int>>& cells) const;

 private:
  std::size_t offset(std::size_t n, int t) const {
    return n * rows_ + static_cast<std::size_t>(t + static_cast<int>(window_) - 1);
  }

  std::vector<std::string> names_;
  std::vector<std::string> labels_;
  std::size_t window_;
  int steps_;
  std::size_t rows_;
  std::vector<double> values_;
  std::vector<unsigned char> observed_;
};

// The p values preceding step t, oldest first: lags[i] = x_{t-p+i}.
struct LagVector {
  std::size_t series = 0;
  int time = 0;
  std::vector<double> lags;
  std::vector<bool> lag_observed;

  // x_{t-i} for i = 1..p.
  double lag(std::size_t i) const { return lags[lags.size() - i]; }
  bool lag_is_observed(std::size_t i) const { return lag_observed[lag_observed.size() - i]; }
};

LagVector lag_vector(const Panel& panel, std::size_t n, int t);

// Wide CSV: header `time,<name1>,...,<nameN>`, one row per step, empty cell
// for missing. Lines starting with '#' before the header are skipped. The
// first `window` rows become the conditioning prefix.
Panel read_csv(std::istream& in, std::size_t window);
Panel load_csv(const std::filesystem::path& path, std::size_t window);

// Writes the panel back in the wide format. A non-empty `comment` is emitted
// as a leading `# ` line.
void write_csv(std::ostream& out, const Panel& panel, std::string_view comment = {});

// Shortest representation that parses back to the same double.
std::string format_double(double x);

}  // namespace trcrp
