#include <transitgp/io.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace transitgp::io {

using nlohmann::json;

std::string format_double(double x)
{
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

void write_od_csv(std::ostream& out, const ODMatrix& od)
{
    const Grid& g = od.grid();
    out << "# side_length," << format_double(g.side_length) << '\n';
    out << "# cell_size," << format_double(g.cell_size) << '\n';
    out << "# total_demand," << format_double(od.total_demand()) << '\n';
    out << "xo_idx,yo_idx,xd_idx,yd_idx,density\n";
    const int n = g.n_cells;
    for (int xo = 0; xo < n; ++xo)
        for (int yo = 0; yo < n; ++yo)
            for (int xd = 0; xd < n; ++xd)
                for (int yd = 0; yd < n; ++yd) {
                    const double v = od.at(xo, yo, xd, yd);
                    if (v == 0.0) continue;
                    out << xo + 1 << ',' << yo + 1 << ',' << xd + 1 << ',' << yd + 1 << ','
                        << format_double(v) << '\n';
                }
}

namespace {

double parse_number(const std::string& s, int line)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) {
        throw std::runtime_error("line " + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

ODMatrix read_od_csv(std::istream& in)
{
    double side = -1.0, cell = -1.0;
    std::string line;
    int line_no = 0;
    std::vector<std::string> rows;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto fields = split(line.substr(1), ',');
            if (fields.size() != 2) continue;
            std::string key = fields[0];
            key.erase(std::remove(key.begin(), key.end(), ' '), key.end());
            if (key == "side_length") side = parse_number(fields[1], line_no);
            if (key == "cell_size") cell = parse_number(fields[1], line_no);
            continue;
        }
        if (!header_seen) {
            if (line != "xo_idx,yo_idx,xd_idx,yd_idx,density") {
                throw std::runtime_error("OD CSV: unexpected column header '" + line + "'");
            }
            header_seen = true;
            continue;
        }
        rows.push_back(line);
    }
    if (side <= 0.0 || cell <= 0.0) {
        throw std::runtime_error("OD CSV: missing side_length or cell_size header");
    }
    ODMatrix od(build_grid(side, cell));
    const int n = od.grid().n_cells;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto f = split(rows[k], ',');
        if (f.size() != 5) throw std::runtime_error("OD CSV: expected 5 columns: " + rows[k]);
        int idx[4];
        for (int c = 0; c < 4; ++c) {
            const double v = parse_number(f[static_cast<std::size_t>(c)], static_cast<int>(k));
            idx[c] = static_cast<int>(v) - 1;
            if (v != std::floor(v) || idx[c] < 0 || idx[c] >= n) {
                throw std::runtime_error("OD CSV: index out of range: " + rows[k]);
            }
        }
        const double density = parse_number(f[4], static_cast<int>(k));
        if (!(density >= 0.0)) throw std::runtime_error("OD CSV: negative density: " + rows[k]);
        od.at(idx[0], idx[1], idx[2], idx[3]) = density;
    }
    return od;
}

void write_aggregates_csv(std::ostream& out, const DemandAggregates& agg)
{
    out << "direction,x_idx,y_idx,lambda_bo,lambda_al,lambda_fl,lambda_tr\n";
    const int n = agg.grid.n_cells;
    for (Direction d : kDirections) {
        const auto k = DemandAggregates::dir(d);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                const auto c = agg.cell(x, y);
                out << direction_name(d) << ',' << x + 1 << ',' << y + 1 << ','
                    << format_double(agg.boarding[k][c]) << ',' << format_double(agg.alighting[k][c])
                    << ',' << format_double(agg.flux[k][c]) << ','
                    << format_double(agg.transfer[k][c]) << '\n';
            }
    }
}

json to_json(const CostBreakdown& c)
{
    return json{{"Z", c.Z},     {"Z_A", c.Z_A}, {"Z_P", c.Z_P}, {"N_l", c.N_l},
                {"N_s", c.N_s}, {"N_k", c.N_k}, {"N_h", c.N_h}, {"T_a", c.T_a},
                {"T_w", c.T_w}, {"T_r", c.T_r}, {"T_t", c.T_t},
                {"Z_per_passenger", c.Z_per_passenger}};
}

CostBreakdown cost_from_json(const json& j)
{
    CostBreakdown c;
    c.Z = j.at("Z").get<double>();
    c.Z_A = j.at("Z_A").get<double>();
    c.Z_P = j.at("Z_P").get<double>();
    c.N_l = j.at("N_l").get<double>();
    c.N_s = j.at("N_s").get<double>();
    c.N_k = j.at("N_k").get<double>();
    c.N_h = j.at("N_h").get<double>();
    c.T_a = j.at("T_a").get<double>();
    c.T_w = j.at("T_w").get<double>();
    c.T_r = j.at("T_r").get<double>();
    c.T_t = j.at("T_t").get<double>();
    c.Z_per_passenger = j.at("Z_per_passenger").get<double>();
    return c;
}

json to_json(const DesignVariables& d)
{
    return json{{"network", network_name(d.kind)},
                {"delta_ew", d.delta_ew},
                {"delta_ns", d.delta_ns},
                {"h_ew", d.h_ew},
                {"h_ns", d.h_ns}};
}

DesignVariables design_from_json(const json& j)
{
    require_known_keys(j, {"network", "delta_ew", "delta_ns", "h_ew", "h_ns"}, "design");
    DesignVariables d;
    d.kind = parse_network(j.at("network").get<std::string>());
    d.delta_ew = j.at("delta_ew").get<std::vector<double>>();
    d.delta_ns = j.at("delta_ns").get<std::vector<double>>();
    d.h_ew = j.at("h_ew").get<std::vector<double>>();
    d.h_ns = j.at("h_ns").get<std::vector<double>>();
    return d;
}

namespace {

json posynomial_json(const gp::Posynomial& p)
{
    json terms = json::array();
    for (const auto& m : p.terms) {
        terms.push_back({{"log_coefficient", std::log(m.coefficient)}, {"exponents", m.exponents}});
    }
    return terms;
}

}  // namespace

json to_json(const gp::GpProblem& p)
{
    json out;
    out["variables"] = p.variable_names;
    out["objective"] = posynomial_json(p.objective);
    out["inequalities"] = json::array();
    for (const auto& f : p.inequalities) out["inequalities"].push_back(posynomial_json(f));
    out["equalities"] = json::array();
    for (const auto& g : p.equalities) {
        out["equalities"].push_back(
            {{"log_coefficient", std::log(g.coefficient)}, {"exponents", g.exponents}});
    }
    return out;
}

json to_json(const gp::SolveReport& r)
{
    return json{{"status", gp::status_name(r.status)},
                {"objective", r.objective},
                {"outer_iterations", r.outer_iterations},
                {"newton_iterations", r.newton_iterations},
                {"kkt",
                 {{"stationarity", r.kkt.stationarity},
                  {"primal_feasibility", r.kkt.primal_feasibility},
                  {"equality_residual", r.kkt.equality_residual},
                  {"dual_min", r.kkt.dual_min},
                  {"complementary_slackness", r.kkt.complementary_slackness}}},
                {"gap_bound", r.gap_bound},
                {"relative_gap", r.relative_gap},
                {"wall_time_ms", r.wall_time_ms},
                {"barrier_used", r.barrier_used},
                {"duals", r.duals},
                {"message", r.message}};
}

json to_json(const cd::CdTrace& t)
{
    return json{{"z", t.z},
                {"clamp_counts", t.clamp_counts},
                {"converged", t.converged},
                {"final_clamped_ew", t.final_clamped_ew},
                {"final_clamped_ns", t.final_clamped_ns},
                {"final_design", to_json(t.final_design)}};
}

void require_known_keys(const json& j, std::initializer_list<const char*> allowed,
                        const std::string& context)
{
    if (!j.is_object()) throw std::invalid_argument(context + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* a) { return key == a; });
        if (!known) throw std::invalid_argument(context + ": unknown key '" + key + "'");
    }
}

void write_text_file(const std::string& path, const std::string& contents)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << contents;
    if (!f) throw std::runtime_error("failed writing " + path);
}

std::string read_text_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace transitgp::io
