#include "eetflux/pathways.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace eetflux {

using nlohmann::json;

CurrentSeries CurrentSeries::from_records(const std::vector<CurrentRecord>& records) {
    CurrentSeries series;
    series.times.reserve(records.size());
    series.currents.reserve(records.size());
    for (const auto& r : records) {
        series.times.push_back(r.time);
        series.currents.push_back(r.total);
    }
    return series;
}

namespace {

constexpr double kGridSlack = 1e-12;

// Visits the pieces of the piecewise-linear integrand inside [a, b]: calls
// fn(k, w0, w1, width) where the piece lies in [t_k, t_{k+1}] and the values
// at its ends are (1-w0) y_k + w0 y_{k+1} and (1-w1) y_k + w1 y_{k+1}.
template <typename Fn>
void for_each_piece(const std::vector<double>& times, double a, double b, Fn&& fn) {
    if (times.empty()) throw std::out_of_range("integration window: no samples");
    const double lo = times.front();
    const double hi = times.back();
    const double slack = kGridSlack * std::max(1.0, std::abs(hi));
    if (a < lo - slack || b > hi + slack || b < a)
        throw std::out_of_range(fmt::format("integration window [{}, {}] outside sampled range [{}, {}]", a, b, lo, hi));
    a = std::clamp(a, lo, hi);
    b = std::clamp(b, lo, hi);
    if (b <= a) return;
    auto k = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), a) - times.begin());
    k = k == 0 ? 0 : k - 1;
    for (; k + 1 < times.size() && times[k] < b; ++k) {
        const double t0 = times[k];
        const double t1 = times[k + 1];
        const double left = std::max(a, t0);
        const double right = std::min(b, t1);
        if (right <= left) continue;
        const double span = t1 - t0;
        fn(k, (left - t0) / span, (right - t0) / span, right - left);
    }
}

}  // namespace

IntegratedCurrents integrate_currents(const CurrentSeries& series, double t0, double window) {
    if (series.times.size() != series.currents.size())
        throw std::invalid_argument("integrate_currents: times/currents length mismatch");
    if (series.currents.empty()) throw std::out_of_range("integrate_currents: empty series");
    if (window < 0.0) throw std::invalid_argument("integrate_currents: negative window");
    const auto n = series.currents.front().rows();
    IntegratedCurrents out{RealMatrix::Zero(n, n), RealMatrix::Zero(n, n)};
    for_each_piece(series.times, t0, t0 + window, [&](std::size_t k, double w0, double w1, double width) {
        const auto& y0 = series.currents[k];
        const auto& y1 = series.currents[k + 1];
        const RealMatrix left = (1.0 - w0) * y0 + w0 * y1;
        const RealMatrix right = (1.0 - w1) * y0 + w1 * y1;
        out.net += (0.5 * width) * (left + right);
        // |j| of a linear piece, splitting at the sign change.
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                const double p = left(i, j);
                const double q = right(i, j);
                if ((p >= 0.0) == (q >= 0.0)) {
                    out.gross(i, j) += 0.5 * width * std::abs(p + q);
                } else {
                    out.gross(i, j) += 0.5 * width * (p * p + q * q) / (std::abs(p) + std::abs(q));
                }
            }
    });
    return out;
}

double integrate_series(const std::vector<double>& times, const std::vector<double>& values, double t0, double window) {
    if (times.size() != values.size()) throw std::invalid_argument("integrate_series: length mismatch");
    if (window < 0.0) throw std::invalid_argument("integrate_series: negative window");
    double sum = 0.0;
    for_each_piece(times, t0, t0 + window, [&](std::size_t k, double w0, double w1, double width) {
        const double left = (1.0 - w0) * values[k] + w0 * values[k + 1];
        const double right = (1.0 - w1) * values[k] + w1 * values[k + 1];
        sum += 0.5 * width * (left + right);
    });
    return sum;
}

PathwayGraph build_pathway_graph(const RealMatrix& net, const std::vector<std::string>& labels, double threshold,
                                 double t0, double window) {
    if (threshold < 0.0) throw std::invalid_argument("build_pathway_graph: threshold must be >= 0");
    if (static_cast<Eigen::Index>(labels.size()) != net.rows())
        throw std::invalid_argument("build_pathway_graph: one label per site required");
    PathwayGraph graph;
    graph.nodes = labels;
    graph.t0 = t0;
    graph.window = window;
    graph.threshold = threshold;
    const auto n = net.rows();
    for (Eigen::Index l = 0; l < n; ++l)
        for (Eigen::Index m = 0; m < n; ++m)
            if (l != m && net(l, m) > threshold && net(l, m) > 0.0)
                graph.edges.push_back({static_cast<SiteIndex>(l), static_cast<SiteIndex>(m), net(l, m)});
    std::stable_sort(graph.edges.begin(), graph.edges.end(),
                     [](const PathwayEdge& a, const PathwayEdge& b) { return a.weight > b.weight; });
    return graph;
}

double cut_flow(const PathwayGraph& graph, const SubComplex& a, const SubComplex& b) {
    const std::set<SiteIndex> sa(a.sites.begin(), a.sites.end());
    const std::set<SiteIndex> sb(b.sites.begin(), b.sites.end());
    for (auto s : sb)
        if (sa.count(s)) throw std::invalid_argument("cut_flow: sub-complexes overlap");
    double flow = 0.0;
    for (const auto& e : graph.edges) {
        if (sa.count(e.from) && sb.count(e.to)) flow += e.weight;
        else if (sb.count(e.from) && sa.count(e.to)) flow -= e.weight;
    }
    return flow;
}

GraphFormat parse_graph_format(std::string_view name) {
    if (name == "dot") return GraphFormat::Dot;
    if (name == "json") return GraphFormat::Json;
    throw std::invalid_argument(fmt::format("unknown graph format '{}' (expected dot or json)", name));
}

namespace {

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string export_dot(const PathwayGraph& graph) {
    std::string out = "digraph pathways {\n";
    out += fmt::format("  graph [label=\"net transfer, t0={:.6g}, window={:.6g}, threshold={:.6g}\"];\n", graph.t0,
                       graph.window, graph.threshold);
    out += "  node [shape=circle];\n";
    for (std::size_t i = 0; i < graph.nodes.size(); ++i)
        out += fmt::format("  n{} [label=\"{}\"];\n", i, dot_escape(graph.nodes[i]));
    double max_weight = 0.0;
    for (const auto& e : graph.edges) max_weight = std::max(max_weight, e.weight);
    for (const auto& e : graph.edges) {
        const double width = std::clamp(8.0 * e.weight / max_weight, 0.5, 8.0);
        out += fmt::format("  n{} -> n{} [penwidth={:.3f}, label=\"{:.4g}\", delta_p=\"{:.17g}\"];\n", e.from, e.to, width,
                           e.weight, e.weight);
    }
    out += "}\n";
    return out;
}

}  // namespace

json graph_to_json(const PathwayGraph& graph) {
    json edges = json::array();
    for (const auto& e : graph.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
    return {{"nodes", graph.nodes},
            {"edges", std::move(edges)},
            {"window", {{"t0", graph.t0}, {"length", graph.window}}},
            {"threshold", graph.threshold}};
}

PathwayGraph graph_from_json(const json& doc) {
    PathwayGraph graph;
    try {
        graph.nodes = doc.at("nodes").get<std::vector<std::string>>();
        for (const auto& e : doc.at("edges"))
            graph.edges.push_back({e.at("from").get<SiteIndex>(), e.at("to").get<SiteIndex>(), e.at("weight").get<double>()});
        graph.t0 = doc.at("window").at("t0").get<double>();
        graph.window = doc.at("window").at("length").get<double>();
        graph.threshold = doc.at("threshold").get<double>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed graph document: ") + e.what());
    }
    for (const auto& e : graph.edges)
        if (e.from >= graph.nodes.size() || e.to >= graph.nodes.size())
            throw std::invalid_argument("malformed graph document: edge endpoint out of range");
    return graph;
}

std::string export_graph(const PathwayGraph& graph, GraphFormat format) {
    switch (format) {
        case GraphFormat::Dot: return export_dot(graph);
        case GraphFormat::Json: return graph_to_json(graph).dump(2) + "\n";
    }
    throw std::invalid_argument("export_graph: unknown format");
}

}  // namespace eetflux
