#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "jubensha/eval/metrics.hpp"

namespace jubensha::store {

enum class ReportFormat { table, machine };

ReportFormat report_format_from_string(std::string_view s);

// Rows are ordered NoMR, MR, MR+SR, then verifying configurations by attempt count, then
// anything else by label. Throws PreconditionError on an empty list.
std::string render_report(const std::vector<eval::MetricReport>& reports, ReportFormat format);

}  // namespace jubensha::store
