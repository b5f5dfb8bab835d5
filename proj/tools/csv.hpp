#pragma once

// Minimal CSV for sample and query files: one header row, comma separated
// numeric columns. A column named "y" is the response; every other column is
// a coordinate, in file order.

#include <string>
#include <string_view>
#include <vector>

#include "kerf/types.hpp"

namespace kerf::cli {

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

std::vector<SamplePoint> parse_samples_csv(std::string_view text);
std::vector<Point> parse_points_csv(std::string_view text);
std::string samples_csv(const std::vector<SamplePoint>& samples);

/// "0.1,0.25" -> {0.1, 0.25}.
Point parse_point(std::string_view text);

}  // namespace kerf::cli
