#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "cspath/errors.hpp"
#include "cspath/operator_parser.hpp"
#include "cspath/oracle.hpp"
#include "cspath/symbols.hpp"
#include "cspath/wiener.hpp"

#ifndef CSPATH_VERSION
#define CSPATH_VERSION "0.0.0"
#endif

namespace cspath::cli {

namespace {

// Reads keys from one JSON object and rejects the ones nobody asked for.
class Section {
public:
    Section(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ParseError(where("") + "expected an object", 0);
    }

    const Json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& v) {
        if (const Json* j = find(key)) {
            if (!j->is_number()) throw ParseError(where(key) + "expected a number", 0);
            v = j->get<double>();
        }
    }

    template <class U>
    void unsigned_int(const std::string& key, U& v) {
        if (const Json* j = find(key)) v = as_unsigned<U>(*j, key);
    }

    void text(const std::string& key, std::string& v) {
        if (const Json* j = find(key)) {
            if (!j->is_string()) throw ParseError(where(key) + "expected a string", 0);
            v = j->get<std::string>();
        }
    }

    void numbers(const std::string& key, std::vector<double>& v) {
        if (const Json* j = find(key)) {
            if (!j->is_array()) throw ParseError(where(key) + "expected an array of numbers", 0);
            v.clear();
            for (const auto& e : *j) {
                if (!e.is_number()) throw ParseError(where(key) + "expected an array of numbers", 0);
                v.push_back(e.get<double>());
            }
        }
    }

    template <class U>
    void unsigned_list(const std::string& key, std::vector<U>& v) {
        if (const Json* j = find(key)) {
            if (!j->is_array()) throw ParseError(where(key) + "expected an array of non-negative integers", 0);
            v.clear();
            for (const auto& e : *j) v.push_back(as_unsigned<U>(e, key));
        }
    }

    void label(const std::string& key, std::vector<PhasePoint>& v) {
        if (const Json* j = find(key)) v = parse_label(*j, where(key));
    }

    void finish() const {
        for (const auto& [k, _] : obj_.items())
            if (!seen_.count(k)) throw ParseError(where(k) + "unknown key", 0);
    }

    std::string where(const std::string& key) const {
        const std::string full = path_.empty() ? key : (key.empty() ? path_ : path_ + "." + key);
        return full.empty() ? std::string() : full + ": ";
    }

    static std::vector<PhasePoint> parse_label(const Json& j, const std::string& where) {
        if (!j.is_array()) throw ParseError(where + "expected a list of [p, q] pairs", 0);
        std::vector<PhasePoint> pts;
        for (const auto& e : j) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw ParseError(where + "expected a list of [p, q] pairs", 0);
            pts.push_back({e[0].get<double>(), e[1].get<double>()});
        }
        return pts;
    }

private:
    const Json& obj_;
    std::string path_;
    std::set<std::string> seen_;

    template <class U>
    U as_unsigned(const Json& j, const std::string& key) const {
        if (!j.is_number_unsigned())
            throw ParseError(where(key) + "expected a non-negative integer", 0);
        return static_cast<U>(j.get<unsigned long long>());
    }
};

Json label_json(const std::vector<PhasePoint>& pts) {
    Json a = Json::array();
    for (const auto& p : pts) a.push_back(Json::array({p.p, p.q}));
    return a;
}

Json points_json(const Label& l) { return label_json(l.modes()); }

std::string iso_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Json versions() {
    return Json{{"cspath", CSPATH_VERSION},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"cli11", CLI11_VERSION}};
}

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", x);
    return buf;
}

std::string fixed(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12f", x);
    return buf;
}

Json reference_json(const std::optional<OracleResult>& ref, const std::string& note) {
    if (!ref) return Json{{"available", false}, {"reason", note}};
    return Json{{"available", true},
                {"amplitude", complex_json(ref->amplitude)},
                {"error_estimate", ref->error_estimate},
                {"n_trunc", ref->n_trunc}};
}

struct Reference {
    std::optional<OracleResult> value;
    std::string note;
};

Reference try_oracle(const ModeSpace& space, const PolynomialOperator& op, const Label& a, const Label& b, double T,
                     std::size_t n_trunc) {
    Reference r;
    try {
        FockTruncation trunc;
        trunc.n_trunc = n_trunc;
        r.value = fock_propagator(space, op, a, b, T, trunc);
    } catch (const RefusalError& e) {
        r.note = e.what();
    }
    return r;
}

RunOutput run_overlap(const ExperimentConfig& cfg, const ModeSpace& space, const Label& a, const Label& b) {
    RunOutput out;
    const Complex ov = overlap(space, b, a);
    const Complex lo = log_overlap(space, b, a);
    out.result = Json{{"amplitude", complex_json(ov)}, {"log_overlap", complex_json(lo)}, {"modulus", std::abs(ov)}};
    out.summary = render_table({"quantity", "re", "im"}, {{"<final|initial>", fixed(ov.real()), fixed(ov.imag())},
                                                        {"log", fixed(lo.real()), fixed(lo.imag())}});
    (void)cfg;
    return out;
}

RunOutput run_symbols(const ExperimentConfig& cfg, const ModeSpace& space, const PolynomialOperator& op) {
    RunOutput out;
    const SymbolFn upper = upper_symbol(op);
    const SymbolFn lower = lower_symbol(op);
    const QuadratureAxis offsets = QuadratureAxis::standard();
    std::vector<std::vector<PhasePoint>> points = cfg.points;
    if (points.empty()) points.push_back(cfg.initial);

    std::vector<std::string> header{"point"};
    for (std::size_t j = 0; j < space.modes(); ++j) {
        header.push_back("p" + std::to_string(j));
        header.push_back("q" + std::to_string(j));
    }
    for (const char* c : {"upper_re", "upper_im", "lower_re", "lower_im", "gap_re", "gap_im", "upper_from_lower_re",
                          "upper_from_lower_im", "boundary_mass"})
        header.push_back(c);

    Json rows = Json::array();
    std::vector<std::vector<std::string>> csv_rows;
    std::vector<std::vector<std::string>> table;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Label l(points[i]);
        validate_label(space, l, "points");
        const Complex u = upper.evaluate(space, l);
        const Complex h = lower.evaluate(space, l);
        const QuadratureValue ufl = upper_from_lower(lower, space, l, offsets);
        rows.push_back(Json{{"label", points_json(l)},
                            {"upper", complex_json(u)},
                            {"lower", complex_json(h)},
                            {"gap", complex_json(u - h)},
                            {"upper_from_lower", complex_json(ufl.value)},
                            {"upper_from_lower_residual", std::abs(ufl.value - u)},
                            {"boundary_mass", ufl.boundary_mass},
                            {"grid_covers_support", ufl.grid_covers_support}});
        std::vector<std::string> r{std::to_string(i)};
        for (const auto& pt : l.modes()) {
            r.push_back(format_number(pt.p));
            r.push_back(format_number(pt.q));
        }
        for (double x : {u.real(), u.imag(), h.real(), h.imag(), (u - h).real(), (u - h).imag(), ufl.value.real(),
                         ufl.value.imag(), ufl.boundary_mass})
            r.push_back(format_number(x));
        csv_rows.push_back(r);
        table.push_back({std::to_string(i), fixed(u.real()), fixed(h.real()), fixed((u - h).real()),
                         sci(std::abs(ufl.value - u))});
    }
    out.result = Json{{"points", rows}};
    out.summary = render_table({"point", "upper", "lower", "gap", "|ufl - upper|"}, table);
    std::ostringstream csv;
    write_csv(csv, header, csv_rows);
    out.csv.emplace_back("symbols.csv", csv.str());
    return out;
}

LatticeGrid grid_of(const ExperimentConfig& cfg) {
    LatticeGrid g;
    g.axis = QuadratureAxis::span_nodes(cfg.grid.lo, cfg.grid.hi, cfg.grid.nodes);
    g.threads = cfg.threads;
    return g;
}

RunOutput run_lattice(const ExperimentConfig& cfg, const ModeSpace& space, const PolynomialOperator& op,
                      const Label& a, const Label& b) {
    RunOutput out;
    const LatticeConfig lc{cfg.N, cfg.T, cfg.route};
    const LatticeGrid grid = grid_of(cfg);
    PropagatorResult r;
    if (cfg.method == "auto")
        r = propagator(space, op, a, b, lc, grid);
    else if (cfg.method == "gaussian_chain")
        r = propagator_gaussian_chain(space, op, a, b, lc);
    else if (cfg.method == "quadrature")
        r = propagator_quadrature(space, op, a, b, lc, grid);
    const Reference ref = try_oracle(space, op, a, b, cfg.T, cfg.fock_n_trunc);
    out.result = Json{{"propagator", to_json(r)}, {"reference", reference_json(ref.value, ref.note)}};
    std::vector<std::vector<std::string>> table{
        {"lattice", fixed(r.amplitude.real()), fixed(r.amplitude.imag()), sci(r.error_estimate)}};
    if (ref.value) {
        const double d = std::abs(r.amplitude - ref.value->amplitude);
        out.result["error_vs_reference"] = d;
        table.push_back({"fock oracle", fixed(ref.value->amplitude.real()), fixed(ref.value->amplitude.imag()),
                         sci(ref.value->error_estimate)});
        table.push_back({"|difference|", sci(d), "", ""});
    }
    out.summary = render_table({"", "re", "im", "error"}, table);
    return out;
}

MetricSpec metric_of(const ExperimentConfig& cfg, const ModeSpace& space) {
    if (cfg.metric.empty()) return MetricSpec::flat(2 * space.modes());
    return MetricSpec{cfg.metric};
}

RunOutput run_wiener(const ExperimentConfig& cfg, const ModeSpace& space, const PolynomialOperator& op,
                     const Label& a, const Label& b) {
    RunOutput out;
    WienerConfig w;
    w.nu = cfg.nu;
    w.lattice = LatticeConfig{cfg.N, cfg.T, SymbolRoute::lower};
    w.metric = metric_of(cfg, space);
    w.seed = cfg.seed;
    w.n_samples = cfg.n_samples;
    w.threads = cfg.threads;
    w.validate();
    const SymbolFn h = lower_symbol(op);
    const WienerEstimate e = cfg.estimator == "mc" ? regularized_propagator_mc(space, h, a, b, w)
                                                   : regularized_propagator_gaussian(space, h, a, b, w);
    const Reference ref = try_oracle(space, op, a, b, cfg.T, cfg.fock_n_trunc);
    out.result = Json{{"estimator", cfg.estimator},
                      {"ratio", complex_json(e.ratio)},
                      {"standard_error", e.standard_error},
                      {"mean_signal", complex_json(e.mean_signal)},
                      {"signal_standard_error", e.signal_standard_error},
                      {"mean_anchor", complex_json(e.mean_anchor)},
                      {"anchor_magnitude", e.anchor_magnitude},
                      {"reference", reference_json(ref.value, ref.note)}};
    std::vector<std::vector<std::string>> table{
        {"wiener " + cfg.estimator, fixed(e.ratio.real()), fixed(e.ratio.imag()), sci(e.standard_error)}};
    if (ref.value) {
        out.result["distance_to_reference"] = std::abs(e.ratio - ref.value->amplitude);
        table.push_back({"fock oracle", fixed(ref.value->amplitude.real()), fixed(ref.value->amplitude.imag()),
                         sci(ref.value->error_estimate)});
    }
    out.summary = render_table({"", "re", "im", "error"}, table);
    if (cfg.bridge_samples > 0) {
        std::vector<BridgePath> paths;
        const auto sa = label_axes(a);
        const auto sb = label_axes(b);
        for (std::size_t i = 0; i < cfg.bridge_samples; ++i) paths.push_back(sample_pinned_bridge(sa, sb, w, i));
        std::ostringstream csv;
        write_bridge_csv(csv, paths);
        out.csv.emplace_back("bridges.csv", csv.str());
    }
    return out;
}

RunOutput run_equivalence(const ExperimentConfig& cfg, const ModeSpace& space, const PolynomialOperator& op,
                          const Label& a, const Label& b) {
    RunOutput out;
    EquivalenceConfig ec;
    ec.T = cfg.T;
    ec.projected_N = cfg.projected_N;
    ec.projected_quadrature_N = cfg.projected_quadrature_N;
    ec.grid = grid_of(cfg);
    ec.nu_ladder = cfg.nu_ladder;
    ec.wiener_N = cfg.wiener_N;
    if (!cfg.metric.empty())
        ec.reduced_metric.assign(cfg.metric.begin() + static_cast<std::ptrdiff_t>(2 * space.n_constrained()),
                                 cfg.metric.end());
    ec.lambda_common = cfg.lambda_common;
    ec.dirac.box.length = cfg.box_length;
    ec.dirac.box.J = cfg.box_J;
    ec.dirac.n_trunc = cfg.dirac_n_trunc;
    ec.oracle.n_trunc = cfg.fock_n_trunc;
    ec.tolerance = cfg.tolerance;
    const EquivalenceReport rep =
        cfg.reduced.is_null() ? equivalence_report(space, op, a, b, ec)
                              : equivalence_report(space, op, build_operator(cfg.reduced, space.reduced_space()), a, b, ec);
    out.result = to_json(rep);
    out.summary = render_table(rep);

    std::vector<std::vector<std::string>> rows;
    for (const auto& d : rep.deviations) rows.push_back({d.a, d.b, format_number(d.value)});
    std::ostringstream dev;
    write_csv(dev, {"route_a", "route_b", "deviation"}, rows);
    out.csv.emplace_back("deviations.csv", dev.str());
    rows.clear();
    for (const auto& l : rep.ladder)
        rows.push_back({format_number(l.nu), format_number(l.amplitude.real()), format_number(l.amplitude.imag()),
                        format_number(l.distance)});
    std::ostringstream lad;
    write_csv(lad, {"nu", "amplitude_re", "amplitude_im", "distance_to_reduced_oracle"}, rows);
    out.csv.emplace_back("nu_ladder.csv", lad.str());
    return out;
}

RunOutput run_convergence(const ExperimentConfig& cfg, const ModeSpace& space, const PolynomialOperator& op,
                          const Label& a, const Label& b) {
    RunOutput out;
    FockTruncation trunc;
    trunc.n_trunc = cfg.fock_n_trunc;
    const OracleResult ref = fock_propagator(space, op, a, b, cfg.T, trunc);
    const ConvergenceStudy study =
        convergence_study(space, op, a, b, cfg.T, cfg.N_list, cfg.route, ref.amplitude, grid_of(cfg));
    out.result = to_json(study);
    out.result["reference_error_estimate"] = ref.error_estimate;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::vector<std::string>> table;
    for (const auto& r : study.rows) {
        rows.push_back({std::to_string(r.N), format_number(r.epsilon), format_number(r.amplitude.real()),
                        format_number(r.amplitude.imag()), format_number(r.error)});
        table.push_back({std::to_string(r.N), fixed(r.epsilon), fixed(r.amplitude.real()), fixed(r.amplitude.imag()),
                         sci(r.error)});
    }
    std::ostringstream csv;
    write_csv(csv, {"N", "epsilon", "amplitude_re", "amplitude_im", "error"}, rows);
    out.csv.emplace_back("convergence.csv", csv.str());
    out.summary = render_table({"N", "epsilon", "re", "im", "error"}, table) + "slope " + fixed(study.slope) + "\n";
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f) throw std::runtime_error("cannot write " + path.string());
}

Json error_doc(const std::string& kind, const std::string& message, const std::string& computation) {
    return Json{{"error", Json{{"kind", kind}, {"message", message}}},
                {"computation", computation},
                {"generated_at", iso_now()}};
}

}  // namespace

PolynomialOperator build_operator(const Json& spec, const ModeSpace& space) {
    if (spec.is_string()) return parse_operator(spec.get<std::string>(), space);
    if (!spec.is_array()) throw ParseError("system.operator: expected a grammar string or a list of terms", 0);
    PolynomialOperator op(space);
    for (const auto& t : spec) {
        Section s(t, "system.operator[]");
        Complex c(0.0);
        if (const Json* j = s.find("coefficient")) {
            if (j->is_number())
                c = j->get<double>();
            else if (j->is_array() && j->size() == 2 && (*j)[0].is_number() && (*j)[1].is_number())
                c = Complex((*j)[0].get<double>(), (*j)[1].get<double>());
            else
                throw ParseError(s.where("coefficient") + "expected a number or [re, im]", 0);
        } else {
            throw ParseError(s.where("coefficient") + "missing", 0);
        }
        unsigned hbar_order = 0;
        s.unsigned_int("hbar_order", hbar_order);
        Monomial m{hbar_order, std::vector<LadderPowers>(space.modes())};
        if (const Json* j = s.find("powers")) {
            if (!j->is_array() || j->size() != space.modes())
                throw ParseError(s.where("powers") + "expected one [raise, lower] pair per mode", 0);
            for (std::size_t k = 0; k < space.modes(); ++k) {
                const Json& e = (*j)[k];
                if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned())
                    throw ParseError(s.where("powers") + "expected [raise, lower] pairs of non-negative integers", 0);
                m.modes[k] = {e[0].get<unsigned>(), e[1].get<unsigned>()};
            }
        }
        s.finish();
        op.add_term(m, c);
    }
    return op;
}

ExperimentConfig parse_config(const Json& doc, const std::string& computation) {
    ExperimentConfig cfg;
    cfg.computation = computation;
    Section top(doc, "");
    if (const Json* j = top.find("computation")) {
        if (!j->is_string()) throw ParseError("computation: expected a string", 0);
        if (j->get<std::string>() != computation)
            throw ParseError("computation: config names '" + j->get<std::string>() + "' but the command is '" +
                                 computation + "'",
                             0);
    }
    if (const Json* sys = top.find("system")) {
        Section s(*sys, "system");
        s.unsigned_int("n_constrained", cfg.n_constrained);
        s.unsigned_int("n_reduced", cfg.n_reduced);
        s.number("hbar", cfg.hbar);
        s.numbers("widths", cfg.widths);
        if (const Json* j = s.find("operator")) cfg.op = *j;
        if (const Json* j = s.find("reduced_operator")) cfg.reduced = *j;
        s.finish();
    }
    if (cfg.op.is_null()) throw ParseError("system.operator: missing", 0);
    top.label("initial", cfg.initial);
    top.label("final", cfg.final);
    if (const Json* j = top.find("points")) {
        if (!j->is_array()) throw ParseError("points: expected a list of labels", 0);
        for (const auto& e : *j) cfg.points.push_back(Section::parse_label(e, "points: "));
    }
    top.number("T", cfg.T);
    top.unsigned_int("N", cfg.N);
    top.unsigned_list("N_list", cfg.N_list);
    std::string route = to_string(cfg.route);
    top.text("route", route);
    try {
        cfg.route = parse_symbol_route(route);
    } catch (const ContractError& e) {
        throw ParseError(std::string("route: ") + e.what(), 0);
    }
    top.text("method", cfg.method);
    if (const Json* g = top.find("grid")) {
        Section s(*g, "grid");
        s.number("lo", cfg.grid.lo);
        s.number("hi", cfg.grid.hi);
        s.unsigned_int("nodes", cfg.grid.nodes);
        s.finish();
    }
    top.unsigned_int("threads", cfg.threads);
    top.unsigned_int("fock_n_trunc", cfg.fock_n_trunc);
    top.number("nu", cfg.nu);
    top.numbers("metric", cfg.metric);
    top.text("estimator", cfg.estimator);
    top.unsigned_int("seed", cfg.seed);
    top.unsigned_int("n_samples", cfg.n_samples);
    top.unsigned_int("bridge_samples", cfg.bridge_samples);
    top.numbers("nu_ladder", cfg.nu_ladder);
    top.unsigned_int("projected_N", cfg.projected_N);
    top.unsigned_int("projected_quadrature_N", cfg.projected_quadrature_N);
    top.unsigned_int("wiener_N", cfg.wiener_N);
    top.number("box_length", cfg.box_length);
    top.unsigned_int("box_J", cfg.box_J);
    top.unsigned_int("dirac_n_trunc", cfg.dirac_n_trunc);
    top.number("tolerance", cfg.tolerance);
    top.number("lambda_common", cfg.lambda_common);
    top.finish();

    const std::size_t modes = cfg.n_constrained + cfg.n_reduced;
    if (cfg.widths.empty()) cfg.widths.assign(modes, 1.0);
    if (cfg.initial.empty()) cfg.initial.assign(modes, PhasePoint{});
    if (cfg.final.empty()) cfg.final = cfg.initial;
    return cfg;
}

Json config_json(const ExperimentConfig& cfg) {
    Json points = Json::array();
    for (const auto& p : cfg.points) points.push_back(label_json(p));
    return Json{{"computation", cfg.computation},
                {"system",
                 Json{{"n_constrained", cfg.n_constrained},
                      {"n_reduced", cfg.n_reduced},
                      {"hbar", cfg.hbar},
                      {"widths", cfg.widths},
                      {"operator", cfg.op},
                      {"reduced_operator", cfg.reduced}}},
                {"initial", label_json(cfg.initial)},
                {"final", label_json(cfg.final)},
                {"points", points},
                {"T", cfg.T},
                {"N", cfg.N},
                {"N_list", cfg.N_list},
                {"route", to_string(cfg.route)},
                {"method", cfg.method},
                {"grid", Json{{"lo", cfg.grid.lo}, {"hi", cfg.grid.hi}, {"nodes", cfg.grid.nodes}}},
                {"threads", cfg.threads},
                {"fock_n_trunc", cfg.fock_n_trunc},
                {"nu", cfg.nu},
                {"metric", cfg.metric},
                {"estimator", cfg.estimator},
                {"seed", cfg.seed},
                {"n_samples", cfg.n_samples},
                {"bridge_samples", cfg.bridge_samples},
                {"nu_ladder", cfg.nu_ladder},
                {"projected_N", cfg.projected_N},
                {"projected_quadrature_N", cfg.projected_quadrature_N},
                {"wiener_N", cfg.wiener_N},
                {"box_length", cfg.box_length},
                {"box_J", cfg.box_J},
                {"dirac_n_trunc", cfg.dirac_n_trunc},
                {"tolerance", cfg.tolerance},
                {"lambda_common", cfg.lambda_common}};
}

ModeSpace build_space(const ExperimentConfig& cfg) {
    return ModeSpace(cfg.n_constrained, cfg.n_reduced, cfg.hbar, cfg.widths);
}

void validate(const ExperimentConfig& cfg) {
    const ModeSpace space = build_space(cfg);
    const PolynomialOperator op = build_operator(cfg.op, space);
    validate_label(space, Label(cfg.initial), "initial");
    validate_label(space, Label(cfg.final), "final");
    for (const auto& p : cfg.points) validate_label(space, Label(p), "points");
    if (!std::isfinite(cfg.T)) throw ContractError("T", "must be finite");
    if (cfg.fock_n_trunc < 4) throw ContractError("fock_n_trunc", "must be at least 4");
    if (cfg.grid.nodes < 2 || !(cfg.grid.hi > cfg.grid.lo)) throw ContractError("grid", "needs hi > lo and nodes >= 2");
    const std::string& c = cfg.computation;
    if (c == "lattice") {
        LatticeConfig{cfg.N, cfg.T, cfg.route}.validate();
        if (cfg.method != "auto" && cfg.method != "gaussian_chain" && cfg.method != "quadrature")
            throw ContractError("method", "expected auto, gaussian_chain or quadrature");
    }
    if (c == "convergence") {
        if (cfg.N_list.size() < 2) throw ContractError("N_list", "at least two lattice sizes are required");
        for (std::size_t N : cfg.N_list) LatticeConfig{N, cfg.T, cfg.route}.validate();
    }
    if (c == "wiener") {
        if (cfg.estimator != "mc" && cfg.estimator != "exact") throw ContractError("estimator", "expected mc or exact");
        WienerConfig w;
        w.nu = cfg.nu;
        w.lattice = LatticeConfig{cfg.N, cfg.T, SymbolRoute::lower};
        w.metric = cfg.metric.empty() ? MetricSpec::flat(2 * space.modes()) : MetricSpec{cfg.metric};
        w.n_samples = cfg.n_samples;
        w.validate();
        if (w.metric.axes() != 2 * space.modes())
            throw ContractError("metric", "expected " + std::to_string(2 * space.modes()) + " weights");
    }
    if (c == "constraint-equivalence") {
        if (space.n_constrained() < 1) throw ContractError("n_constrained", "at least one constraint is required");
        require_constraint_surface(space, Label(cfg.initial), "initial");
        require_constraint_surface(space, Label(cfg.final), "final");
        if (!(cfg.T > 0.0)) throw ContractError("T", "must be positive");
        if (!(cfg.box_length > 0.0) || !std::isfinite(cfg.box_length))
            throw ContractError("box_length", "must be positive");
        if (cfg.nu_ladder.size() < 2) throw ContractError("nu_ladder", "at least two values are required");
        for (std::size_t i = 0; i < cfg.nu_ladder.size(); ++i) {
            if (!(cfg.nu_ladder[i] > 0.0)) throw ContractError("nu_ladder", "values must be positive");
            if (i > 0 && !(cfg.nu_ladder[i] > cfg.nu_ladder[i - 1]))
                throw ContractError("nu_ladder", "values must increase strictly");
        }
        if (cfg.projected_N < 1 || cfg.projected_quadrature_N < 1 || cfg.wiener_N < 1)
            throw ContractError("projected_N", "lattice sizes must be at least 1");
        if (!cfg.metric.empty() && cfg.metric.size() != 2 * space.modes())
            throw ContractError("metric", "expected " + std::to_string(2 * space.modes()) + " weights");
        if (!(cfg.tolerance > 0.0)) throw ContractError("tolerance", "must be positive");
        if (!cfg.reduced.is_null()) build_operator(cfg.reduced, space.reduced_space());
    }
}

RunOutput run(const ExperimentConfig& cfg) {
    validate(cfg);
    const ModeSpace space = build_space(cfg);
    const PolynomialOperator op = build_operator(cfg.op, space);
    const Label a(cfg.initial);
    const Label b(cfg.final);
    const std::string& c = cfg.computation;
    if (c == "overlap") return run_overlap(cfg, space, a, b);
    if (c == "symbols") return run_symbols(cfg, space, op);
    if (c == "lattice") return run_lattice(cfg, space, op, a, b);
    if (c == "wiener") return run_wiener(cfg, space, op, a, b);
    if (c == "constraint-equivalence") return run_equivalence(cfg, space, op, a, b);
    if (c == "convergence") return run_convergence(cfg, space, op, a, b);
    throw ParseError("unknown computation '" + c + "'", 0);
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Coherent-state path-integral propagators with constraints", "cspath"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    for (const auto& name : kComputations) {
        CLI::App* sub = app.add_subcommand(name, "Run the " + name + " computation");
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--out", out_dir, "Output directory (default: $CSPATH_OUT_DIR or ./cspath-out)");
        sub->add_option("--seed", seed, "Override the config seed");
        sub->add_flag("--quiet", quiet, "Do not print the summary table");
    }

    std::string computation;
    auto fail = [&](int code, const std::string& kind, const std::string& message, Json extra) {
        Json doc = error_doc(kind, message, computation);
        for (auto& [k, v] : extra.items()) doc["error"][k] = v;
        err << doc.dump(2) << '\n';
        if (!out_dir.empty()) {
            try {
                std::filesystem::create_directories(out_dir);
                write_file(std::filesystem::path(out_dir) / "error.json", doc.dump(2) + "\n");
            } catch (const std::exception&) {
            }
        }
        return code;
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        return fail(exit_parse, "parse", e.what(), Json::object());
    }
    for (const auto* sub : app.get_subcommands()) computation = sub->get_name();
    if (out_dir.empty()) {
        const char* env = std::getenv("CSPATH_OUT_DIR");
        out_dir = (env && *env) ? env : "cspath-out";
    }

    try {
        std::ifstream f(config_path, std::ios::binary);
        if (!f) throw ContractError("config", "cannot read '" + config_path + "'");
        std::stringstream buf;
        buf << f.rdbuf();
        Json doc;
        try {
            doc = Json::parse(buf.str());
        } catch (const Json::parse_error& e) {
            throw ParseError("config: " + std::string(e.what()) + " (byte " + std::to_string(e.byte) + ")", e.byte);
        }
        ExperimentConfig cfg = parse_config(doc, computation);
        if (seed) cfg.seed = *seed;
        RunOutput res = run(cfg);

        Json result{{"computation", computation},
                    {"config", config_json(cfg)},
                    {"seed", cfg.seed},
                    {"versions", versions()},
                    {"result", res.result},
                    {"generated_at", iso_now()}};
        std::filesystem::create_directories(out_dir);
        write_file(std::filesystem::path(out_dir) / "result.json", result.dump(2) + "\n");
        for (const auto& [name, text] : res.csv) write_file(std::filesystem::path(out_dir) / name, text);
        if (!quiet) out << res.summary;
        return exit_ok;
    } catch (const ParseError& e) {
        return fail(exit_parse, "parse", e.what(), Json{{"column", e.column()}});
    } catch (const ContractError& e) {
        return fail(exit_precondition, "precondition", e.what(), Json{{"parameter", e.parameter()}});
    } catch (const RefusalError& e) {
        return fail(exit_refusal, "refusal", e.what(), Json::object());
    } catch (const std::exception& e) {
        return fail(exit_other, "internal", e.what(), Json::object());
    }
}

}  // namespace cspath::cli
