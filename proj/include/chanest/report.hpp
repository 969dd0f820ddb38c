// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "chanest/experiment.hpp"

namespace chanest {

// CSV with header `scenario,<keys...>,metric,value,n,stderr`. All rows of one
// scenario share their key columns.
void write_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void write_csv_file(const std::vector<ResultRow>& rows, const std::string& path);
std::string csv_string(const std::vector<ResultRow>& rows);

// Line charts, one panel per metric: x is the first key, one polyline per
// combination of the remaining keys, log-scale value axis whenever all values
// are positive.
void write_svg_file(const std::vector<ResultRow>& rows, const std::string& path);

} // namespace chanest
