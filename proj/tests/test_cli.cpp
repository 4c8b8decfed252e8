#include "qpfkam/error.hpp"
#include "qpfkam/io.hpp"
#include "qpfkam/runner.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

using namespace qpfkam;

namespace {

Errc code_of(const Json& j) {
    try {
        (void)parse_config(j);
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::invalid_argument;
}

}  // namespace

TEST_CASE("config schema rejects unknown runs and keys") {
    CHECK(code_of(Json{{"run", "no-such-run"}}) == Errc::config_invalid);
    CHECK(code_of(Json{{"run", "cf"}, {"colour", 1}}) == Errc::config_invalid);
    CHECK(code_of(Json{{"run", "cf"}, {"mode", "fast"}}) == Errc::config_invalid);
    CHECK(code_of(Json{{"params", Json::object()}}) == Errc::config_invalid);
    CHECK(std::find(run_names().begin(), run_names().end(), "kam-audit") != run_names().end());
}

TEST_CASE("cf run on a rational frequency") {
    const ExperimentConfig cfg =
        parse_config(Json{{"run", "cf"}, {"frequency", {{"kind", "rational"}, {"num", 3}, {"den", 7}}}});
    const RunOutcome out = run_experiment(cfg);
    REQUIRE(out.exit_status == 0);
    CHECK(out.result["rational_input"] == true);
    CHECK(out.result["q"].back() == "7");
    REQUIRE(out.tables.size() == 1);
    CHECK(out.tables[0].first == "convergents.csv");
}

TEST_CASE("runs are deterministic") {
    const Json j = Json{{"run", "norm"},
                        {"params", {{"function", Json::array({Json{{"sin", {1, 1, 0}}, {"amp", 1e-3}}})},
                                    {"s", 0.5},
                                    {"r", 0.5}}}};
    const RunOutcome a = run_experiment(parse_config(j));
    const RunOutcome b = run_experiment(parse_config(j));
    CHECK(a.exit_status == 0);
    CHECK(a.result.dump() == b.result.dump());
}

TEST_CASE("library errors come back as status 2") {
    const Json j{{"run", "kam-audit"}, {"frequency", {{"kind", "rational"}, {"num", 1}, {"den", 3}}}};
    const RunOutcome out = run_experiment(parse_config(j));
    CHECK(out.exit_status == 2);
    CHECK(out.result.contains("error"));
}

TEST_CASE("series json round trip") {
    const TorusFunction f = sine_mode({1, 2, -1}, 1e-3) + cosine_mode({0, 1, 1}, 0.25);
    const TorusFunction g = torus_from_json(to_json(f));
    CHECK(majorant(f - g, 0.0, 0.0) == 0.0);
    const TorusFunction h = torus_from_json(Json::array({Json{{"const", 0.5}}}));
    CHECK(h.coeff({}).real() == 0.5);
}

TEST_CASE("chain json round trip") {
    ConjugationChain chain;
    ChainElement a;
    a.h = cosine_mode({0, 1, 0}, 0.05);
    ChainElement b;
    b.kind = ChainElement::Kind::near_identity;
    b.h = sine_mode({1, 0, 1}, 1e-2);
    chain.append(a);
    chain.append(b);
    const ConjugationChain back = chain_from_json(to_json(chain));
    REQUIRE(back.elements().size() == 2);
    CHECK(back.elements()[1].kind == ChainElement::Kind::near_identity);
    CHECK(back.evaluate(0.3, 0.1, 0.2) == chain.evaluate(0.3, 0.1, 0.2));
}

TEST_CASE("frequency json round trip") {
    const FrequencySpec s = frequency_from_json("silver");
    const Frequency a = expand_continued_fraction(s, 20);
    const Frequency b = expand_continued_fraction(frequency_from_json(to_json(s)), 20);
    CHECK(a.q == b.q);
}

TEST_CASE("csv number formatting is shortest round trip") {
    CHECK(fmt(0.5) == "0.5");
    CHECK(std::stod(fmt(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("artifacts are written") {
    const auto dir = std::filesystem::temp_directory_path() / "qpfkam_cli_test";
    std::filesystem::remove_all(dir);
    ExperimentConfig cfg = parse_config(Json{{"run", "cf"}});
    cfg.output = dir.string();
    write_artifacts(cfg, run_experiment(cfg));
    for (const char* f : {"manifest.json", "result.json", "timing.json", "convergents.csv"})
        CHECK(std::filesystem::exists(dir / f));
    const Json m = read_json_file(dir / "manifest.json");
    CHECK(m["status"] == 0);
    std::filesystem::remove_all(dir);
}
