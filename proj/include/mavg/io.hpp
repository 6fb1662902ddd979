#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mavg/model_set.hpp"
#include "mavg/synthetic.hpp"

namespace mavg {

/// Shortest representation that reads back to the same double; NaN prints as "NA".
std::string format_double(double v);

/// Splits one CSV record, honoring double quotes.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

/// Headered numeric CSV; the response column is removed from the covariates.
Dataset read_dataset_csv(const std::string& path, const std::string& response);
void write_dataset_csv(const Dataset& data, const std::string& path, const std::string& response = "y");

/// Long format: subject,t,V1,V2,V3,L1,L2,L3,A,C,Y; one row per observed time point.
void write_panel_csv(const LongitudinalPanel& panel, std::ostream& out);
void write_panel_csv(const LongitudinalPanel& panel, const std::string& path);
LongitudinalPanel read_panel_csv(const std::string& path);

}  // namespace mavg
