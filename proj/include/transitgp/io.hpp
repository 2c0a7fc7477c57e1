#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include <transitgp/coordinate_descent.hpp>
#include <transitgp/gp.hpp>
#include <transitgp/model.hpp>

namespace transitgp::io {

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

/// Header rows `# side_length,<v>`, `# cell_size,<v>`, `# total_demand,<v>`
/// followed by `xo_idx,yo_idx,xd_idx,yd_idx,density` with 1-based indices.
/// Zero-density entries are omitted.
void write_od_csv(std::ostream& out, const ODMatrix& od);
ODMatrix read_od_csv(std::istream& in);

void write_aggregates_csv(std::ostream& out, const DemandAggregates& agg);

nlohmann::json to_json(const CostBreakdown& c);
CostBreakdown cost_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DesignVariables& d);
DesignVariables design_from_json(const nlohmann::json& j);
nlohmann::json to_json(const gp::GpProblem& p);
nlohmann::json to_json(const gp::SolveReport& r);
nlohmann::json to_json(const cd::CdTrace& t);

/// Throws std::invalid_argument naming the first key of `j` outside `allowed`.
void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                        const std::string& context);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace transitgp::io
