#include "cspath/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "cspath/errors.hpp"

namespace cspath {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

Json complex_json(Complex z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

Json to_json(const PropagatorResult& r) {
    return Json{{"amplitude", complex_json(r.amplitude)},
                {"error_estimate", r.error_estimate},
                {"method", to_string(r.method)},
                {"route", to_string(r.route)},
                {"N", r.N},
                {"T", r.T},
                {"epsilon", r.epsilon}};
}

Json to_json(const ConvergenceStudy& study) {
    Json rows = Json::array();
    for (const auto& row : study.rows)
        rows.push_back(Json{{"N", row.N},
                            {"epsilon", row.epsilon},
                            {"amplitude", complex_json(row.amplitude)},
                            {"error", row.error}});
    return Json{{"rows", rows},
                {"reference", complex_json(study.reference)},
                {"slope", study.slope},
                {"richardson", complex_json(study.richardson)},
                {"richardson_error", study.richardson_error}};
}

Json to_json(const EquivalenceReport& report) {
    Json routes = Json::object();
    for (const auto& r : report.routes) {
        Json j{{"amplitude", complex_json(r.amplitude)},
               {"error_estimate", r.error_estimate},
               {"normalized", r.normalized},
               {"ok", r.ok}};
        if (!r.ok) j["error"] = r.error;
        routes[r.name] = j;
    }
    Json deviations = Json::array();
    for (const auto& d : report.deviations) deviations.push_back(Json{{"a", d.a}, {"b", d.b}, {"value", d.value}});
    Json ladder = Json::array();
    for (const auto& row : report.ladder)
        ladder.push_back(Json{{"nu", row.nu},
                              {"amplitude", complex_json(row.amplitude)},
                              {"distance_to_reduced_oracle", row.distance}});
    return Json{{"routes", routes},
                {"deviations", deviations},
                {"nu_ladder", ladder},
                {"core_max_deviation", report.core_max_deviation},
                {"core_agree", report.core_agree},
                {"ladder_monotone", report.ladder_monotone},
                {"ladder_within_error", report.ladder_within_error},
                {"flags",
                 Json{{"constrained_sector_terms", report.constrained_sector_terms},
                      {"gauge_breaking", report.gauge_breaking},
                      {"bare_constrained_position", report.bare_constrained_position}}}};
}

std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size(), 0);
    auto widen = [&](const std::vector<std::string>& r) {
        if (r.size() != header.size()) throw ContractError("rows", "every row needs one cell per column");
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    };
    widen(header);
    for (const auto& r : rows) widen(r);
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c > 0) out << "  ";
            const std::string pad(width[c] - r[c].size(), ' ');
            out << (c == 0 ? r[c] + pad : pad + r[c]);
        }
        out << '\n';
    };
    line(header);
    std::size_t total = 0;
    for (std::size_t w : width) total += w;
    out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    for (const auto& r : rows) line(r);
    return out.str();
}

std::string render_table(const EquivalenceReport& report) {
    auto sci = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3e", x);
        return std::string(buf);
    };
    auto fixed = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10f", x);
        return std::string(buf);
    };
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : report.routes) {
        if (r.ok)
            rows.push_back({r.name, fixed(r.amplitude.real()), fixed(r.amplitude.imag()), sci(r.error_estimate), "ok"});
        else
            rows.push_back({r.name, "-", "-", "-", "failed: " + r.error});
    }
    std::string out = render_table({"route", "re", "im", "error", "status"}, rows);
    rows.clear();
    for (const auto& d : report.deviations) rows.push_back({d.a + " / " + d.b, sci(d.value)});
    out += '\n' + render_table({"pair", "deviation"}, rows);
    if (!report.ladder.empty()) {
        rows.clear();
        for (const auto& l : report.ladder) rows.push_back({format_number(l.nu), sci(l.distance)});
        out += '\n' + render_table({"nu", "distance"}, rows);
    }
    return out;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    auto line = [&](const std::vector<std::string>& r) {
        if (r.size() != header.size()) throw ContractError("rows", "every row needs one cell per column");
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (r[c].find_first_of(",\n\r") != std::string::npos)
                throw ContractError("rows", "CSV cells must not contain commas or line breaks");
            if (c > 0) out << ',';
            out << r[c];
        }
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
}

}  // namespace cspath
