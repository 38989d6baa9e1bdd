#pragma once

#include <string>
#include <vector>

#include "maxconv/tensor.hpp"

namespace maxconv::io {

/// Numeric CSV reader: values separated by commas, whitespace or newlines.
/// With shape_header the first line must hold the space-separated extents;
/// otherwise the values form a rank-1 tensor. Parse failures throw
/// std::runtime_error with a line-numbered message.
Tensor read_tensor_csv(const std::string& path, bool shape_header = false);

/// Time-series reader for single-column or (timestamp, value) two-column
/// files; the last field of each row is taken and a header row is skipped
/// when its value field is not numeric.
std::vector<double> read_series_csv(const std::string& path);

void write_lines(const std::string& path, const std::string& content);

}  // namespace maxconv::io
