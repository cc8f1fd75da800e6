#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gflow::cli {

/// Minimal line-plot emitter. Points with nonpositive coordinates on a log
/// axis are dropped.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label, bool log_x, bool log_y);

  void add_series(std::string name, std::vector<double> x, std::vector<double> y, bool dashed = false);
  bool empty() const noexcept { return series_.empty(); }

  void write(std::ostream& out) const;

 private:
  struct Series {
    std::string name;
    std::vector<double> x, y;
    bool dashed;
  };

  std::string title_, x_label_, y_label_;
  bool log_x_, log_y_;
  std::vector<Series> series_;
};

}  // namespace gflow::cli
