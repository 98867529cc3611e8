#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eetflux/currents.hpp"

namespace eetflux {

/// Time series of one N x N current matrix, the minimal input of the pathway
/// analysis (it can come from CurrentRecord::total or from a currents file).
struct CurrentSeries {
    std::vector<double> times;
    std::vector<RealMatrix> currents;

    static CurrentSeries from_records(const std::vector<CurrentRecord>& records);
};

struct IntegratedCurrents {
    RealMatrix net;    // Delta P_ln, antisymmetric
    RealMatrix gross;  // integral of |j_ln|, symmetric
};

/// Exact integral of the piecewise-linear interpolant of j over
/// [t0, t0 + window] (composite trapezoid with interpolated end points).
/// Throws std::out_of_range when the window leaves the sampled grid.
IntegratedCurrents integrate_currents(const CurrentSeries& series, double t0, double window);

/// Integral of a scalar series over the same kind of window.
double integrate_series(const std::vector<double>& times, const std::vector<double>& values, double t0, double window);

struct PathwayEdge {
    SiteIndex from = 0;
    SiteIndex to = 0;
    double weight = 0.0;

    bool operator==(const PathwayEdge&) const = default;
};

struct PathwayGraph {
    std::vector<std::string> nodes;
    std::vector<PathwayEdge> edges;  // sorted by weight, descending
    double t0 = 0.0;
    double window = 0.0;
    double threshold = 0.0;

    bool operator==(const PathwayGraph&) const = default;
};

/// Emits l -> n with weight Delta P_ln for every Delta P_ln > threshold.
PathwayGraph build_pathway_graph(const RealMatrix& net, const std::vector<std::string>& labels, double threshold,
                                 double t0 = 0.0, double window = 0.0);

/// Signed net transfer across the cut, sum_{l in A, n in B} Delta P_ln, read
/// back from the graph edges.
double cut_flow(const PathwayGraph& graph, const SubComplex& a, const SubComplex& b);

enum class GraphFormat { Dot, Json };

GraphFormat parse_graph_format(std::string_view name);

/// DOT: penwidth = 8 * weight / max weight, clamped to [0.5, 8]; each edge is
/// labelled with its weight. JSON: {nodes, edges:[{from,to,weight}], window, threshold}.
std::string export_graph(const PathwayGraph& graph, GraphFormat format);

nlohmann::json graph_to_json(const PathwayGraph& graph);
PathwayGraph graph_from_json(const nlohmann::json& doc);

}  // namespace eetflux
