#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "cspath/report.hpp"
#include "doctest.h"

using namespace cspath;

TEST_CASE("numbers round trip through their text") {
    for (double x : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, -1e-300}) {
        const std::string text = format_number(x);
        CHECK(std::strtod(text.c_str(), nullptr) == x);
    }
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(-2.5) == "-2.5");
}

TEST_CASE("complex values serialize as re and im") {
    const Json j = complex_json(Complex(1.5, -0.25));
    CHECK(j["re"].get<double>() == 1.5);
    CHECK(j["im"].get<double>() == -0.25);
}

TEST_CASE("propagator results serialize with method and route") {
    PropagatorResult r;
    r.amplitude = Complex(0.5, 0.5);
    r.method = Method::quadrature;
    r.route = SymbolRoute::lower;
    r.N = 4;
    r.T = 0.2;
    r.epsilon = 0.04;
    const Json j = to_json(r);
    CHECK(j["method"] == "quadrature");
    CHECK(j["route"] == "lower");
    CHECK(j["N"] == 4);
    CHECK(j["amplitude"]["re"].get<double>() == 0.5);
}

TEST_CASE("equivalence report serializes every route") {
    EquivalenceReport rep;
    rep.routes.push_back({"projected", true, Complex(1.0, 0.0), 1e-6, true, ""});
    rep.routes.push_back({"extended", false, Complex(0.0), 0.0, false, "refused"});
    rep.deviations.push_back({"projected", "dirac", 2e-6});
    rep.ladder.push_back({5.0, Complex(0.9, 0.1), 0.1});
    rep.core_max_deviation = 2e-6;
    rep.core_agree = true;
    const Json j = to_json(rep);
    CHECK(j["routes"]["projected"]["ok"] == true);
    CHECK(j["routes"]["extended"]["error"] == "refused");
    CHECK(j["deviations"].size() == 1);
    CHECK(j["deviations"][0]["value"].get<double>() == 2e-6);
    CHECK(j["nu_ladder"].size() == 1);
    CHECK(j["core_agree"] == true);
    CHECK(j.contains("flags"));
    const std::string table = render_table(rep);
    CHECK(table.find("projected") != std::string::npos);
    CHECK(table.find("refused") != std::string::npos);
}

TEST_CASE("tables align columns") {
    const std::string t = render_table({"name", "value"}, {{"a", "1"}, {"long", "22"}});
    std::istringstream in(t);
    std::string l1, rule, l2, l3;
    std::getline(in, l1);
    std::getline(in, rule);
    std::getline(in, l2);
    std::getline(in, l3);
    CHECK(l1.find("value") != std::string::npos);
    CHECK(rule.find_first_not_of('-') == std::string::npos);
    CHECK(rule.size() == l1.size());
    CHECK(l2.size() == l3.size());
    CHECK(l2.back() == '1');
    CHECK(l3.back() == '2');
}

TEST_CASE("CSV writer") {
    std::ostringstream os;
    write_csv(os, {"a", "b"}, {{"1", "2"}, {"3", "4"}});
    CHECK(os.str() == "a,b\n1,2\n3,4\n");
    std::ostringstream bad;
    CHECK_THROWS(write_csv(bad, {"a"}, {{"x,y"}}));
}
