#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace motif::svg {

// Minimal standalone line-chart emitter (no display dependencies).
class LinePlot {
 public:
  LinePlot(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

  void add_series(const std::vector<double>& x, const std::vector<double>& y, std::string label,
                  std::string color);
  void write(const std::filesystem::path& path) const;

 private:
  struct Series {
    std::vector<double> x, y;
    std::string label, color;
  };
  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
};

}  // namespace motif::svg
