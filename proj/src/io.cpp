#include "qpfkam/io.hpp"

#include "qpfkam/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace qpfkam {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error("cli", Errc::config_invalid, what); }

Mode mode_of(const Json& j) {
    if (!j.is_array() || j.size() != 3) bad("a mode must be [l, k1, k2]");
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

BigInt big_of(const Json& j) {
    if (j.is_string()) {
        try {
            return BigInt(j.get<std::string>());
        } catch (const std::exception&) {
            bad("not an integer: " + j.get<std::string>());
        }
    }
    if (j.is_number_integer()) return BigInt(j.get<long long>());
    bad("expected an integer");
}

void add_entry(TorusFunction& f, const Json& e) {
    if (e.is_array()) {
        if (e.size() != 4 && e.size() != 5) bad("a mode entry is [l, k1, k2, re] or [l, k1, k2, re, im]");
        const Mode m{e[0].get<int>(), e[1].get<int>(), e[2].get<int>()};
        f.add(m, Complex(e[3].get<double>(), e.size() == 5 ? e[4].get<double>() : 0.0));
        return;
    }
    if (!e.is_object()) bad("unrecognised mode entry");
    if (e.contains("sin")) {
        f += sine_mode(mode_of(e["sin"]), e.value("amp", 1.0));
    } else if (e.contains("cos")) {
        f += cosine_mode(mode_of(e["cos"]), e.value("amp", 1.0));
    } else if (e.contains("const")) {
        f.add({}, e["const"].get<double>());
    } else {
        bad("mode entry object needs sin, cos or const");
    }
}

}  // namespace

std::string fmt(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

Json to_json(const TorusFunction& f) {
    Json modes = Json::array();
    for (const auto& [m, c] : f.modes) modes.push_back(Json::array({m.l, m.k1, m.k2, c.real(), c.imag()}));
    return Json{{"s", f.s}, {"r", f.r}, {"modes", modes}};
}

TorusFunction torus_from_json(const Json& j) {
    TorusFunction f;
    try {
        const Json* list = &j;
        if (j.is_object()) {
            f.s = j.value("s", 0.0);
            f.r = j.value("r", 0.0);
            if (!j.contains("modes")) bad("series object needs a modes list");
            list = &j["modes"];
        }
        if (!list->is_array()) bad("series must be a list of mode entries");
        for (const auto& e : *list) add_entry(f, e);
    } catch (const nlohmann::json::exception& e) {
        bad(std::string("malformed series: ") + e.what());
    }
    f.prune();
    return f;
}

Json to_json(const ConjugationChain& chain) {
    Json out = Json::array();
    for (const auto& e : chain.elements()) {
        out.push_back(Json{{"kind", e.kind == ChainElement::Kind::fiber_translation ? "fiber-translation"
                                                                                      : "near-identity"},
                           {"step", e.step},
                           {"norm", e.norm},
                           {"dnorm", e.dnorm},
                           {"h", to_json(e.h)}});
    }
    return out;
}

ConjugationChain chain_from_json(const Json& j) {
    if (!j.is_array()) bad("a chain is a list of elements");
    ConjugationChain chain;
    try {
        for (const auto& e : j) {
            ChainElement el;
            const std::string kind = e.at("kind").get<std::string>();
            if (kind == "fiber-translation")
                el.kind = ChainElement::Kind::fiber_translation;
            else if (kind == "near-identity")
                el.kind = ChainElement::Kind::near_identity;
            else
                bad("unknown chain element kind " + kind);
            el.step = e.value("step", 0);
            el.norm = e.value("norm", 0.0);
            el.dnorm = e.value("dnorm", 0.0);
            el.h = torus_from_json(e.at("h"));
            chain.append(std::move(el));
        }
    } catch (const nlohmann::json::exception& e) {
        bad(std::string("malformed chain: ") + e.what());
    }
    return chain;
}

FrequencySpec frequency_from_json(const Json& j) {
    try {
        if (j.is_string()) {
            const auto name = j.get<std::string>();
            if (name == "golden") return FrequencySpec::golden();
            if (name == "silver") return FrequencySpec::silver();
            bad("unknown frequency name " + name);
        }
        if (!j.is_object()) bad("frequency must be a name or an object");
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "golden") return FrequencySpec::golden();
        if (kind == "silver") return FrequencySpec::silver();
        if (kind == "quadratic")
            return FrequencySpec::quadratic_surd(big_of(j.at("a")), big_of(j.at("b")), big_of(j.at("c")),
                                                 big_of(j.at("d")));
        if (kind == "quotients") {
            std::vector<BigInt> q;
            for (const auto& x : j.at("quotients")) q.push_back(big_of(x));
            if (q.empty()) bad("quotient list is empty");
            return FrequencySpec::from_quotients(std::move(q));
        }
        if (kind == "decimal")
            return FrequencySpec::from_decimal(j.at("value").get<std::string>(), j.value("uncertainty", "0"));
        if (kind == "rational") return FrequencySpec::from_rational(big_of(j.at("num")), big_of(j.at("den")));
        bad("unknown frequency kind " + kind);
    } catch (const nlohmann::json::exception& e) {
        bad(std::string("malformed frequency: ") + e.what());
    }
}

Json to_json(const FrequencySpec& s) {
    using K = FrequencySpec::Kind;
    switch (s.kind) {
    case K::quadratic:
        return Json{{"kind", "quadratic"}, {"a", s.a.str()}, {"b", s.b.str()}, {"c", s.c.str()}, {"d", s.d.str()}};
    case K::quotients: {
        Json q = Json::array();
        for (const auto& x : s.quotients) q.push_back(x.str());
        return Json{{"kind", "quotients"}, {"quotients", q}};
    }
    case K::decimal:
        return Json{{"kind", "decimal"}, {"value", s.value}, {"uncertainty", s.uncertainty}};
    case K::rational:
        return Json{{"kind", "rational"}, {"num", s.num.str()}, {"den", s.den.str()}};
    }
    return {};
}

Json to_json(const CdSequence& cd) {
    Json terms = Json::array();
    auto term = [](const CdTerm& t) {
        return Json{{"n", t.n}, {"Q", t.Q.str()}, {"Qbar", t.Qbar.str()}, {"jump", t.jump}, {"log2_Q", t.log2_Q}};
    };
    for (const auto& t : cd.terms) terms.push_back(term(t));
    Json out{{"bridge_param", cd.bridge_param}, {"terms", terms}, {"validated", cd.validated}};
    out["lookahead"] = cd.lookahead ? term(*cd.lookahead) : Json(nullptr);
    return out;
}

Json to_json(const ScheduleAudit& a) {
    Json rows = Json::array();
    for (const auto& r : a.rows)
        rows.push_back(Json{{"n", r.n},
                            {"log2_Q", r.log2_Q},
                            {"Delta", to_decimal(r.Delta, 20)},
                            {"s", to_decimal(r.s, 20)},
                            {"r", to_decimal(r.r, 20)},
                            {"s_bar", to_decimal(r.s_bar, 20)},
                            {"r_bar", to_decimal(r.r_bar, 20)},
                            {"ln_eps", to_decimal(r.ln_eps, 25)},
                            {"ln_eps_tilde", to_decimal(r.ln_eps_tilde, 25)},
                            {"ln_K", to_decimal(r.ln_K, 25)},
                            {"inner_N", to_decimal(r.inner_N, 25)}});
    Json items = Json::array();
    for (const auto& i : a.items)
        items.push_back(Json{{"group", i.group}, {"name", i.name}, {"n", i.n}, {"nu", i.nu}, {"lhs", i.lhs},
                             {"rhs", i.rhs}, {"holds", i.holds}});
    return Json{{"all_hold", a.all_hold},
                {"u_tilde", a.u_tilde},
                {"U", a.U},
                {"c", a.c},
                {"c1", a.c1},
                {"ln_Qstar", to_decimal(a.ln_Qstar, 25)},
                {"ln_eps0", to_decimal(a.ln_eps0, 25)},
                {"ln_eps0_bound", to_decimal(a.ln_eps0_bound, 25)},
                {"eps0", a.eps0_decimal},
                {"eps0_bound", a.eps0_bound_decimal},
                {"notes", a.notes},
                {"rows", rows},
                {"items", items}};
}

Json to_json(const StepReport& s) {
    Json inner = Json::array();
    for (const auto& p : s.inner)
        inner.push_back(Json{{"nu", p.nu},
                             {"K", p.K},
                             {"K_shrinks", p.K_shrinks},
                             {"sigma", p.sigma},
                             {"delta", p.delta},
                             {"eta_g", p.eta_g},
                             {"eta_in", p.eta_in},
                             {"eta_out", p.eta_out},
                             {"dominance_margin", p.dominance_margin},
                             {"C_max", p.C_max},
                             {"residual", p.residual},
                             {"h_norm", p.h_norm},
                             {"h_bound", p.h_bound},
                             {"P_norm", p.P_norm},
                             {"P_bound", p.P_bound},
                             {"bounds_certified", p.bounds_certified}});
    return Json{{"n", s.n},
                {"kind", s.kind},
                {"log2_Q", s.log2_Q},
                {"s", s.s},
                {"r", s.r},
                {"g_norm", s.g_norm},
                {"g0", s.g0},
                {"f_norm_in", s.f_norm_in},
                {"f_norm_out", s.f_norm_out},
                {"contraction_ratio", s.contraction_ratio},
                {"a_h_norm", s.a_h_norm},
                {"a_h_bound", s.a_h_bound},
                {"a_imag_bound", s.a_imag_bound},
                {"a_tail_norm", s.a_tail_norm},
                {"htilde_norm", s.htilde_norm},
                {"dhtilde_norm", s.dhtilde_norm},
                {"inner", inner}};
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cli", Errc::io_error, "cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("cli", Errc::config_invalid, path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cli", Errc::io_error, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_csv(const std::filesystem::path& path, const CsvTable& t) {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    std::ofstream out(path);
    if (!out) throw Error("cli", Errc::io_error, "cannot write " + path.string());
    out << os.str();
}

}  // namespace qpfkam
