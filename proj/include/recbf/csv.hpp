#pragma once

#include <string>
#include <vector>

#include "recbf/sim_engine.hpp"

namespace recbf {

// All numeric cells are written with %.17g so a read-back parses to the
// identical double.
void write_trace_csv(const std::string& path, const Trace& trace);
Trace read_trace_csv(const std::string& path);

// Mixed-content table (fit reports and the like); cells are written verbatim.
void write_table_csv(const std::string& path,
                     const std::vector<std::string>& columns,
                     const std::vector<std::vector<std::string>>& rows);

// Road grade profile, header "t_s,grade_rad", strictly increasing t.
void write_road_csv(const std::string& path, const RoadProfile& road);
RoadProfile read_road_csv(const std::string& path);

std::string format_double(double v);  // the %.17g cell encoding

}  // namespace recbf
