#include "qpfkam/runner.hpp"

#include "qpfkam/dynamics.hpp"
#include "qpfkam/error.hpp"
#include "qpfkam/homological.hpp"
#include "qpfkam/schedule.hpp"

#include <Eigen/Core>
#include <fftw3.h>
#include <gmp.h>
#include <mpfr.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>

#ifndef QPFKAM_VERSION
#define QPFKAM_VERSION "0.1.0"
#endif

namespace qpfkam {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

[[noreturn]] void bad(const std::string& what) { throw Error("cli", Errc::config_invalid, what); }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Typed view of a JSON object with defaults; type mismatches are config errors.
class Params {
public:
    Params(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) bad(where_ + " must be an object");
    }

    [[nodiscard]] bool has(const char* key) const { return j_.contains(key) && !j_[key].is_null(); }

    [[nodiscard]] const Json& at(const char* key) const {
        if (!has(key)) bad(where_ + "." + key + " is required");
        return j_[key];
    }

    [[nodiscard]] double num(const char* key, double def) const {
        if (!has(key)) return def;
        if (!j_[key].is_number()) bad(where_ + "." + key + " must be a number");
        return j_[key].get<double>();
    }

    [[nodiscard]] double num(const char* key) const {
        if (!at(key).is_number()) bad(where_ + "." + key + " must be a number");
        return j_[key].get<double>();
    }

    [[nodiscard]] int integer(const char* key, int def) const {
        if (!has(key)) return def;
        if (!j_[key].is_number_integer()) bad(where_ + "." + key + " must be an integer");
        return j_[key].get<int>();
    }

    [[nodiscard]] bool flag(const char* key, bool def) const {
        if (!has(key)) return def;
        if (!j_[key].is_boolean()) bad(where_ + "." + key + " must be true or false");
        return j_[key].get<bool>();
    }

    [[nodiscard]] std::string str(const char* key, const std::string& def) const {
        if (!has(key)) return def;
        if (!j_[key].is_string()) bad(where_ + "." + key + " must be a string");
        return j_[key].get<std::string>();
    }

    [[nodiscard]] TorusFunction series(const char* key) const { return torus_from_json(at(key)); }

private:
    const Json& j_;
    std::string where_;
};

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [k, v] : j.items())
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) == allowed.end())
            bad("unknown key " + where + "." + k);
}

/// Replaces every {"file": path} object by the parsed file content.
void resolve_files(Json& j, const fs::path& base) {
    if (j.is_object()) {
        if (j.size() == 1 && j.contains("file") && j["file"].is_string()) {
            const fs::path p = fs::path(j["file"].get<std::string>());
            j = read_json_file(p.is_absolute() ? p : base / p);
            return;
        }
        for (auto& [k, v] : j.items()) resolve_files(v, base);
    } else if (j.is_array()) {
        for (auto& v : j) resolve_files(v, base);
    }
}

// ---------------------------------------------------------------------------
// shared loaders

struct Context {
    const ExperimentConfig& cfg;
    RunOutcome& out;
    Params sys;
    Params sched;
    Params par;

    explicit Context(const ExperimentConfig& c, RunOutcome& o)
        : cfg(c), out(o), sys(c.system, "system"), sched(c.schedule, "schedule"), par(c.params, "params") {}

    [[nodiscard]] Frequency frequency(std::size_t depth = 60) const {
        return expand_continued_fraction(frequency_from_json(cfg.frequency), depth);
    }

    [[nodiscard]] CdSequence cd(const Frequency& fr, std::size_t terms) const {
        CdOptions o;
        o.terms = terms;
        o.bridge_param = static_cast<unsigned>(sched.integer("bridge_param", 8));
        return select_cd_sequence(fr, o);
    }

    [[nodiscard]] static Omega omega(const Frequency& fr) { return {1.0, fr.alpha()}; }

    [[nodiscard]] QpfSystem system(const Omega& om) const {
        const double s = sys.num("s", 0.5), r = sys.num("r", 0.5);
        if (!(s > 0.0 && r > 0.0)) bad("system strips s and r must be positive");
        const PhiFunction g = sys.has("g") ? sys.series("g") : PhiFunction{};
        const TorusFunction f = sys.has("f") ? sys.series("f") : TorusFunction{};
        return make_system(sys.num("rho_tilde"), g, f, om, s, r);
    }

    [[nodiscard]] EngineeringOptions engineering() const {
        EngineeringOptions o;
        o.gamma = sched.num("gamma", o.gamma);
        o.tau = sched.num("tau", o.tau);
        o.degree_cap = cfg.max_degree;
        o.inner_passes = sched.integer("inner_passes", o.inner_passes);
        o.min_degree = sched.integer("min_degree", o.min_degree);
        o.prune_rel = sched.num("prune_rel", o.prune_rel);
        o.threads = cfg.threads;
        if (o.degree_cap < o.min_degree) bad("max_degree is below the minimum truncation degree");
        if (o.inner_passes < 1) bad("schedule.inner_passes must be at least 1");
        return o;
    }

    [[nodiscard]] RotationOptions rotation(const char* prefix_dt = "rho_dt", const char* prefix_starts = "rho_starts") const {
        RotationOptions o;
        o.dt = par.num(prefix_dt, 1e-2);
        o.starts = par.integer(prefix_starts, 5);
        o.seed = cfg.seed;
        return o;
    }

    /// Estimates rho_f by weighted Birkhoff averaging and audits its Diophantine condition.
    Json reference_rotation(QpfSystem& s, const Frequency& fr, const EngineeringOptions& eo) const {
        Json rep;
        if (par.has("rho_f")) {
            set_reference_rotation(s, par.num("rho_f"), par.num("rho_f_error", 0.0));
            rep["source"] = "config";
        } else {
            const RotationEstimate e = rotation_number(flow_of(s), par.num("rho_T", 1000.0), rotation());
            set_reference_rotation(s, e.rho, e.error);
            rep["source"] = "weighted-birkhoff";
            rep["spread"] = e.spread;
            rep["consistent"] = e.consistent;
        }
        rep["rho_f"] = s.rho_f;
        rep["error"] = s.rho_f_error;
        const int L = par.integer("dc_L", 200);
        const DiophantineReport dc = audit_diophantine(s.rho_f, fr, eo.gamma, eo.tau, L);
        rep["diophantine"] = Json{{"gamma", dc.gamma},  {"tau", dc.tau},       {"L", dc.scan_bound},
                                  {"margin", dc.min_margin}, {"witness", Json::array({dc.l, dc.k1, dc.k2})},
                                  {"pass", dc.pass}};
        return rep;
    }
};

ScheduleParams schedule_params(const Params& p) {
    ScheduleParams sp;
    sp.gamma = p.num("gamma", sp.gamma);
    sp.tau = p.num("tau", sp.tau);
    sp.s0 = p.num("s0", sp.s0);
    sp.r0 = p.num("r0", sp.r0);
    if (p.has("c")) sp.c = p.num("c");
    sp.bridge_param = static_cast<unsigned>(p.integer("bridge_param", 8));
    sp.n_max = p.integer("n_max", sp.n_max);
    sp.derivative_orders = p.integer("derivative_orders", sp.derivative_orders);
    sp.full_scan_limit = p.integer("full_scan_limit", static_cast<int>(sp.full_scan_limit));
    if (p.has("eps0")) {
        const Json& e = p.at("eps0");
        BigFloat v;
        if (e.is_string()) {
            const BigRational q = parse_decimal(e.get<std::string>());
            v = BigFloat(boost::multiprecision::numerator(q)) / BigFloat(boost::multiprecision::denominator(q));
        } else if (e.is_number()) {
            v = BigFloat(e.get<double>());
        } else {
            bad("schedule.eps0 must be a decimal string or a number");
        }
        if (!(v > 0)) bad("schedule.eps0 must be positive");
        sp.ln_eps0 = log(v);
    }
    if (p.has("ln_eps0")) {
        const Json& e = p.at("ln_eps0");
        if (!e.is_string()) bad("schedule.ln_eps0 must be a decimal string");
        sp.ln_eps0 = BigFloat(e.get<std::string>());
    }
    if (sp.n_max < 1 || sp.n_max > 12) bad("schedule.n_max must lie in 1..12");
    return sp;
}

Json estimate_json(const RotationEstimate& e) {
    return Json{{"rho", e.rho}, {"error", e.error}, {"spread", e.spread}, {"consistent", e.consistent},
                {"per_start", e.per_start}};
}

// ---------------------------------------------------------------------------
// runs

void run_cf(Context& c) {
    const auto depth = static_cast<std::size_t>(c.par.integer("depth", 40));
    const Frequency fr = c.frequency(depth);
    Json& r = c.out.result;
    r["alpha"] = fr.alpha();
    r["alpha_decimal"] = to_decimal(fr.alpha_big(), 40);
    r["rational_input"] = fr.rational_input;
    std::vector<std::string> a, p, q;
    CsvTable t{{"n", "a_n", "p_n", "q_n"}, {}};
    for (std::size_t n = 0; n < fr.q.size(); ++n) {
        p.push_back(fr.p[n].str());
        q.push_back(fr.q[n].str());
        t.add({std::to_string(n), n < fr.partial_quotients.size() ? fr.partial_quotients[n].str() : "", p.back(),
               q.back()});
    }
    for (const auto& x : fr.partial_quotients) a.push_back(x.str());
    r["partial_quotients"] = a;
    r["p"] = p;
    r["q"] = q;
    if (!fr.rational_input) {
        try {
            const CdSequence cd = c.cd(fr, static_cast<std::size_t>(c.par.integer("cd_terms", 5)));
            const LiouvilleReport lv = compute_liouville_exponents(fr, &cd, cd.bridge_param);
            r["cd"] = to_json(cd);
            r["liouville"] = Json{{"u_tilde", lv.u_tilde}, {"U", lv.u},          {"attaining_n", lv.attaining_n},
                                  {"lower_bound_only", lv.lower_bound_only},   {"cd_growth_ok", lv.cd_growth_ok},
                                  {"cd_sup_ok", lv.cd_sup_ok},                 {"cd_sup", lv.cd_sup}};
        } catch (const Error& e) {
            r["cd_error"] = e.qualified_name();
        }
    }
    c.out.tables.emplace_back("convergents.csv", std::move(t));
}

void run_norm(Context& c) {
    const TorusFunction f = c.par.series("function");
    const double s = c.par.num("s", f.s), r = c.par.num("r", f.r);
    Json& o = c.out.result;
    o["modes"] = f.size();
    o["s"] = s;
    o["r"] = r;
    o["majorant"] = majorant(f, s, r);
    o["sup_bound"] = majorant(f, 0.0, 0.0);
    o["hermitian_defect"] = hermitian_defect(f);
    o["max_degree"] = f.max_degree();
    if (c.par.has("tail_degree")) o["tail"] = majorant_tail(f, s, r, c.par.integer("tail_degree", 0));
}

void run_kam_audit(Context& c) {
    const ScheduleParams sp = schedule_params(c.sched);
    const Frequency fr = c.frequency(c.par.integer("depth", 50));
    const CdSequence cd = c.cd(fr, static_cast<std::size_t>(sp.n_max + 1));
    const auto t0 = Clock::now();
    const ScheduleAudit a = audit_schedule(fr, cd, sp);
    c.out.timing["audit_seconds"] = seconds_since(t0);
    c.out.result = to_json(a);
    c.out.result["cd"] = to_json(cd);
    CsvTable rows{{"n", "log2_Q", "Delta", "s", "r", "s_bar", "r_bar", "ln_eps", "ln_eps_tilde", "ln_K", "inner_N"}, {}};
    for (const auto& row : a.rows)
        rows.add({std::to_string(row.n), fmt(row.log2_Q), to_decimal(row.Delta, 20), to_decimal(row.s, 20),
                  to_decimal(row.r, 20), to_decimal(row.s_bar, 20), to_decimal(row.r_bar, 20),
                  to_decimal(row.ln_eps, 25), to_decimal(row.ln_eps_tilde, 25), to_decimal(row.ln_K, 25),
                  to_decimal(row.inner_N, 25)});
    CsvTable items{{"group", "name", "n", "nu", "lhs", "rhs", "holds"}, {}};
    for (const auto& i : a.items)
        items.add({i.group, i.name, std::to_string(i.n), std::to_string(i.nu), i.lhs, i.rhs, i.holds ? "1" : "0"});
    c.out.tables.emplace_back("schedule.csv", std::move(rows));
    c.out.tables.emplace_back("audit_items.csv", std::move(items));
    if (!a.all_hold) {
        c.out.exit_status = 1;
        const bool smallness = std::any_of(a.items.begin(), a.items.end(),
                                           [](const AuditItem& i) { return i.group == "smallness" && !i.holds; });
        if (smallness) c.out.error = Error("kamflow", Errc::schedule_infeasible, "").qualified_name();
    }
}

}  // namespace

namespace {

struct KamOutput {
    QpfSystem initial;
    KamResult run;
};

/// Engineering KAM run shared by kam-run and verify-conjugacy; fills the
/// step tables and the contract checks.
KamOutput kam_engineering(Context& c) {
    const int steps = c.par.integer("steps", 3);
    if (steps < 1 || steps > 8) bad("params.steps must lie in 1..8");
    const std::string variant = c.par.str("variant", "rotations");
    if (variant != "rotations" && variant != "almost") bad("params.variant must be rotations or almost");
    const Frequency fr = c.frequency();
    const CdSequence cd = c.cd(fr, static_cast<std::size_t>(std::max(steps, 2)));
    const EngineeringOptions eo = c.engineering();
    KamOutput k{c.system(Context::omega(fr)), {}};
    auto t0 = Clock::now();
    Json& r = c.out.result;
    r["reference_rotation"] = c.reference_rotation(k.initial, fr, eo);
    r["load_shift"] = k.initial.load_shift;
    c.out.timing["rho_seconds"] = seconds_since(t0);
    t0 = Clock::now();
    k.run = variant == "rotations" ? run_rotations_reducibility(k.initial, cd, steps, eo)
                                   : run_almost_reducibility(k.initial, cd, steps, eo);
    c.out.timing["kam_seconds"] = seconds_since(t0);

    const double C = c.par.num("contraction_constant", 10.0);
    const double p = c.par.num("contraction_exponent", 1.4);
    const double min_decay = c.par.num("min_decay", 100.0);
    bool ok = r["reference_rotation"]["diophantine"]["pass"].get<bool>();
    CsvTable st{{"n", "kind", "log2_Q", "s", "r", "g_norm", "g0", "f_norm_in", "f_norm_out", "decay",
                 "contraction_ratio", "contraction_slack", "a_h_norm", "a_h_bound", "a_imag_bound", "a_tail_norm",
                 "htilde_norm", "dhtilde_norm"},
                {}};
    CsvTable in{{"n", "nu", "K", "K_shrinks", "sigma", "delta", "eta_g", "eta_in", "eta_out", "dominance_margin",
                 "C_max", "residual", "h_norm", "h_bound", "P_norm", "P_bound", "bounds_certified"},
                {}};
    Json steps_json = Json::array(), secs = Json::array();
    for (const auto& s : k.run.steps) {
        const double decay = s.f_norm_out > 0.0 ? s.f_norm_in / s.f_norm_out : HUGE_VAL;
        const double slack = C * std::pow(s.f_norm_in, p) - s.f_norm_out;
        const bool step_ok = slack >= 0.0 && decay >= min_decay;
        ok = ok && step_ok;
        Json sj = to_json(s);
        sj["decay"] = decay;
        sj["contract_met"] = step_ok;
        steps_json.push_back(sj);
        secs.push_back(s.seconds);
        st.add({std::to_string(s.n), s.kind, fmt(s.log2_Q), fmt(s.s), fmt(s.r), fmt(s.g_norm), fmt(s.g0),
                fmt(s.f_norm_in), fmt(s.f_norm_out), fmt(decay), fmt(s.contraction_ratio), fmt(slack),
                fmt(s.a_h_norm), fmt(s.a_h_bound), fmt(s.a_imag_bound), fmt(s.a_tail_norm), fmt(s.htilde_norm),
                fmt(s.dhtilde_norm)});
        for (const auto& q : s.inner)
            in.add({std::to_string(s.n), std::to_string(q.nu), std::to_string(q.K), std::to_string(q.K_shrinks),
                    fmt(q.sigma), fmt(q.delta), fmt(q.eta_g), fmt(q.eta_in), fmt(q.eta_out), fmt(q.dominance_margin),
                    fmt(q.C_max), fmt(q.residual), fmt(q.h_norm), fmt(q.h_bound), fmt(q.P_norm), fmt(q.P_bound),
                    q.bounds_certified ? "1" : "0"});
    }
    c.out.timing["step_seconds"] = secs;
    r["variant"] = variant;
    r["contract"] = Json{{"contraction_constant", C}, {"contraction_exponent", p}, {"min_decay", min_decay}};
    r["steps"] = steps_json;
    r["chain"] = Json{{"elements", k.run.chain.elements().size()},
                      {"cumulative_norm", k.run.chain.cumulative_norm()},
                      {"derivative_product_bound", k.run.chain.derivative_product_bound()}};
    r["final_system"] = Json{{"rho_f", k.run.system.rho_f}, {"rho_tilde", k.run.system.rho_tilde()},
                             {"g", to_json(k.run.system.g)}, {"f_norm", majorant(k.run.system.f, k.run.system.s, k.run.system.r)}};
    r["cd"] = to_json(cd);
    c.out.tables.emplace_back("steps.csv", std::move(st));
    c.out.tables.emplace_back("inner.csv", std::move(in));
    c.out.documents.emplace_back("chain.json", to_json(k.run.chain));
    if (!ok) c.out.exit_status = 1;
    return k;
}

void run_kam(Context& c) {
    if (c.cfg.mode == RunMode::paper) {
        // the admissible eps_0 is far below double precision: audit only
        run_kam_audit(c);
        c.out.result["numerics"] = "not run in paper-audit mode";
        return;
    }
    (void)kam_engineering(c);
}

ConjugacyOptions conjugacy_options(const Params& p, std::uint64_t seed, int samples, double rho_T) {
    ConjugacyOptions o;
    o.samples = p.integer("samples", samples);
    o.T = p.num("T", o.T);
    o.dt = p.num("dt", o.dt);
    o.check_interval = p.num("check_interval", o.check_interval);
    o.rho_T = p.num("rho_compare_T", rho_T);
    o.rho_dt = p.num("rho_dt", o.rho_dt);
    o.seed = seed;
    return o;
}

Json conjugacy_json(const ConjugacyReport& r) {
    Json j{{"max_defect", r.max_defect}, {"mean_defect", r.mean_defect}, {"samples", r.samples}};
    if (!r.rho_a.per_start.empty()) {
        j["rho_before"] = estimate_json(r.rho_a);
        j["rho_after"] = estimate_json(r.rho_b);
        j["rho_difference"] = r.rho_difference;
        j["rho_within_error"] = r.rho_within_error;
    }
    return j;
}

void run_verify_conjugacy(Context& c) {
    if (c.cfg.mode == RunMode::paper) bad("verify-conjugacy has no paper-audit mode");
    const KamOutput k = kam_engineering(c);
    const int status = c.out.exit_status;
    const auto t0 = Clock::now();
    const ConjugacyReport rep = verify_conjugacy(k.run.chain, flow_of(k.initial), flow_of(k.run.system),
                                                 conjugacy_options(c.par, c.cfg.seed, 100, 1e4));
    c.out.timing["conjugacy_seconds"] = seconds_since(t0);
    const double tol = c.par.num("tolerance", 1e-5);
    c.out.result["conjugacy"] = conjugacy_json(rep);
    c.out.result["conjugacy"]["tolerance"] = tol;
    const bool ok = rep.max_defect <= tol && (rep.rho_a.per_start.empty() || rep.rho_within_error);
    c.out.exit_status = status == 0 && ok ? 0 : 1;
}

RotationEstimator estimator_of(const std::string& name) {
    if (name == "weighted-birkhoff") return RotationEstimator::weighted_birkhoff;
    if (name == "plain") return RotationEstimator::plain;
    bad("params.estimator must be weighted-birkhoff or plain");
}

void run_rotnum(Context& c) {
    const Frequency fr = c.frequency();
    const QpfSystem s = c.system(Context::omega(fr));
    RotationOptions o = c.rotation("dt", "starts");
    o.estimator = estimator_of(c.par.str("estimator", "weighted-birkhoff"));
    o.strict = c.par.flag("strict", false);
    const RotationEstimate e = rotation_number(flow_of(s), c.par.num("T", 1000.0), o);
    c.out.result = estimate_json(e);
    CsvTable t{{"start", "rho"}, {}};
    for (std::size_t i = 0; i < e.per_start.size(); ++i) t.add({std::to_string(i), fmt(e.per_start[i])});
    c.out.tables.emplace_back("starts.csv", std::move(t));
    if (!e.consistent) c.out.exit_status = 1;
}

void run_solve_homological(Context& c) {
    const Frequency fr = c.frequency();
    HomologicalParams hp;
    hp.omega = Context::omega(fr);
    hp.rho = c.par.num("rho");
    hp.K = c.par.integer("K", 8);
    hp.s = c.par.num("s", 0.5);
    hp.r = c.par.num("r", 0.5);
    hp.delta = c.par.num("delta", hp.s / 4.0);
    hp.sigma = c.par.num("sigma", hp.r / 4.0);
    hp.gamma = c.par.num("gamma", 0.05);
    hp.tau = c.par.num("tau", 3.0);
    hp.waive_degree_condition = c.par.flag("waive_degree_condition", c.cfg.mode == RunMode::engineering);
    hp.threads = c.cfg.threads;
    const TorusFunction f = c.par.series("f");
    const PhiFunction g = c.par.has("g") ? c.par.series("g") : PhiFunction{};
    const HomologicalSolution sol = solve_homological(f, g, hp);
    const PreconditionAudit& a = sol.audit;
    Json& r = c.out.result;
    r["h"] = to_json(sol.h);
    r["P"] = to_json(sol.P);
    r["audit"] = Json{{"K", a.K},
                      {"K_formula", a.K_formula},
                      {"degree_rhs", a.degree_rhs},
                      {"degree_ok", a.degree_ok},
                      {"dominance_margin", a.dominance_margin},
                      {"dominance_ok", a.dominance_ok},
                      {"dc_margin", a.dc_margin},
                      {"dc_ok", a.dc_ok}};
    r["h_norm"] = sol.h_norm;
    r["h_bound"] = sol.h_bound;
    r["P_norm"] = sol.P_norm;
    r["P_bound"] = sol.P_bound;
    r["residual"] = sol.residual;
    r["bounds_certified"] = sol.bounds_certified;
    CsvTable t{{"l", "lattice_size", "min_margin", "C", "g_tilde_norm", "g_tilde_bound", "iterations", "h_norm"}, {}};
    for (const auto& m : sol.modes)
        t.add({std::to_string(m.l), std::to_string(m.lattice_size), fmt(m.min_margin), fmt(m.C), fmt(m.g_tilde_norm),
               fmt(m.g_tilde_bound), std::to_string(m.iterations), fmt(m.h_norm)});
    c.out.tables.emplace_back("modes.csv", std::move(t));
    if (!sol.bounds_certified) c.out.exit_status = 1;
}

Json modelocked_json(const ModeLockedApproximant& m) {
    return Json{{"k", Json::array({m.k1, m.k2})}, {"resonance", m.resonance}, {"epsilon", m.epsilon},
                {"distance", m.distance},           {"field", to_json(m.field)}};
}

void run_approximate_modelocked(Context& c) {
    const Frequency fr = c.frequency();
    const double eps = c.par.num("epsilon", 0.2);
    const ModeLockedApproximant m =
        mode_locked_approximant(c.par.num("rho"), Context::omega(fr), eps, c.par.integer("k_cap", 100000));
    c.out.result = modelocked_json(m);
    if (!(m.distance < eps / 2.0)) c.out.exit_status = 1;
}

void run_mode_lock_scan(Context& c) {
    const Frequency fr = c.frequency();
    const Omega om = Context::omega(fr);
    CircleFlow flow;
    if (c.par.has("rho")) {
        const ModeLockedApproximant m =
            mode_locked_approximant(c.par.num("rho"), om, c.par.num("epsilon", 0.2), c.par.integer("k_cap", 100000));
        c.out.result["approximant"] = modelocked_json(m);
        flow = {m.field, om};
    } else {
        flow = flow_of(c.system(om));
    }
    RotationOptions o = c.rotation("dt", "starts");
    o.starts = c.par.integer("starts", 3);
    const ModeLockScan sc = mode_lock_scan(flow, c.par.num("lo", -0.03), c.par.num("hi", 0.03),
                                           c.par.integer("n_points", 31), c.par.num("T", 1e4),
                                           c.par.num("tolerance", 1e-3), o);
    const double need = c.par.num("min_half_width", 0.0);
    Json& r = c.out.result;
    r["rho0"] = sc.rho0;
    r["plateau"] = Json::array({sc.plateau_lo, sc.plateau_hi});
    r["half_width"] = sc.half_width;
    r["min_half_width"] = need;
    CsvTable t{{"delta", "rho", "error"}, {}};
    for (std::size_t i = 0; i < sc.delta.size(); ++i) t.add({fmt(sc.delta[i]), fmt(sc.rho[i]), fmt(sc.error[i])});
    c.out.tables.emplace_back("scan.csv", std::move(t));
    if (!(sc.half_width >= need && sc.half_width > 0.0)) c.out.exit_status = 1;
}

void run_approximate_linearizable(Context& c) {
    if (c.cfg.mode == RunMode::paper) bad("approximate-linearizable has no paper-audit mode");
    const Frequency fr = c.frequency();
    const int max_steps = c.par.integer("max_steps", 4);
    if (max_steps < 1 || max_steps > 8) bad("params.max_steps must lie in 1..8");
    const CdSequence cd = c.cd(fr, static_cast<std::size_t>(max_steps + 1));
    const EngineeringOptions eo = c.engineering();
    QpfSystem s = c.system(Context::omega(fr));
    Json& r = c.out.result;
    r["reference_rotation"] = c.reference_rotation(s, fr, eo);
    const double eps = c.par.num("epsilon", 1e-4);
    auto t0 = Clock::now();
    const LinearizableApproximant la = linearizable_approximant(s, cd, eps, eo, max_steps);
    c.out.timing["approximant_seconds"] = seconds_since(t0);
    r["epsilon"] = eps;
    r["distance"] = la.distance;
    r["rho_bar"] = la.rho_bar;
    r["steps_used"] = la.steps_used;
    r["reference_residual"] = la.reference_residual;
    r["alias_residual"] = la.alias_residual;
    r["field"] = to_json(la.field);
    c.out.documents.emplace_back("chain.json", to_json(la.chain));
    c.out.documents.emplace_back("linearization.json", to_json(la.h_lin));
    bool ok = la.distance < eps;
    if (c.par.flag("verify", true)) {
        const Omega om = Context::omega(fr);
        const PointEvaluator hl(la.h_lin);
        auto map = [&](double th, double p1, double p2) {
            p1 -= std::floor(p1);
            p2 -= std::floor(p2);
            return la.chain.evaluate(th + hl.value(0.0, p1, p2), p1, p2);
        };
        t0 = Clock::now();
        const ConjugacyReport rep =
            verify_conjugacy(map, CircleFlow{la.field, om}, CircleFlow{constant(la.rho_bar), om},
                             conjugacy_options(c.par, c.cfg.seed, 20, 0.0));
        c.out.timing["conjugacy_seconds"] = seconds_since(t0);
        const double tol = c.par.num("tolerance", 1e-6);
        r["conjugacy"] = conjugacy_json(rep);
        r["conjugacy"]["tolerance"] = tol;
        ok = ok && rep.max_defect <= tol;
    }
    if (!ok) c.out.exit_status = 1;
}

Sl2Flow matrix_of(const Params& p, const Omega& om) {
    const Json& m = p.at("matrix");
    if (!m.is_array() || m.size() != 2 || !m[0].is_array() || !m[1].is_array() || m[0].size() != 2 ||
        m[1].size() != 2)
        bad("params.matrix must be [[m11, m12], [m21, m22]]");
    Sl2Flow M;
    M.omega = om;
    for (int i = 0; i < 4; ++i) {
        const Json& e = m[i / 2][i % 2];
        if (e.is_number()) {
            if (e.get<double>() != 0.0) M.m[i] = constant(e.get<double>());
        } else {
            M.m[i] = torus_from_json(e);
            if (!M.m[i].phi_only()) bad("matrix entries must depend on phi only");
        }
    }
    return M;
}

void run_lyapunov(Context& c) {
    const Frequency fr = c.frequency();
    const Sl2Flow M = matrix_of(c.par, Context::omega(fr));
    if (M.trace_defect() > 1e-12) bad("params.matrix must be trace free");
    const LyapunovEstimate ly = lyapunov_exponent(M, c.par.num("T", 1e4), c.par.num("dt", 1e-2),
                                                  c.par.integer("frames", 3), c.cfg.seed);
    Json& r = c.out.result;
    r["lambda"] = ly.lambda;
    r["error"] = ly.error;
    r["per_frame"] = ly.per_frame;
    if (c.par.flag("rotation", false)) {
        const ProjectiveFlow pf = projective_flow(M);
        r["projective_validation_error"] = pf.validation_error;
        r["rotation"] = estimate_json(rotation_number(pf.flow, c.par.num("rho_T", 1000.0), c.rotation()));
    }
    if (c.par.has("expect")) {
        const double tol = c.par.num("expect_tolerance", 1e-3);
        r["expect"] = c.par.num("expect");
        r["expect_tolerance"] = tol;
        if (!(std::abs(ly.lambda - c.par.num("expect")) <= tol)) c.out.exit_status = 1;
    }
}

using Handler = void (*)(Context&);

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h{
        {"kam-run", run_kam},
        {"kam-audit", run_kam_audit},
        {"rotnum", run_rotnum},
        {"solve-homological", run_solve_homological},
        {"verify-conjugacy", run_verify_conjugacy},
        {"mode-lock-scan", run_mode_lock_scan},
        {"approximate-linearizable", run_approximate_linearizable},
        {"approximate-modelocked", run_approximate_modelocked},
        {"cf", run_cf},
        {"norm", run_norm},
        {"lyapunov", run_lyapunov},
    };
    return h;
}

}  // namespace

const std::vector<std::string>& run_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, _] : handlers()) v.push_back(k);
        return v;
    }();
    return names;
}

ExperimentConfig parse_config(const Json& j, const std::string& base_dir) {
    if (!j.is_object()) bad("configuration must be a JSON object");
    check_keys(j, {"run", "mode", "seed", "output", "max_degree", "threads", "frequency", "system", "schedule", "params"},
               "config");
    ExperimentConfig c;
    const Params p(j, "config");
    c.run = p.str("run", "");
    if (!handlers().contains(c.run)) bad("unknown run '" + c.run + "'");
    const std::string mode = p.str("mode", "engineering");
    if (mode == "paper")
        c.mode = RunMode::paper;
    else if (mode != "engineering")
        bad("mode must be paper or engineering");
    if (p.has("seed")) {
        if (!j["seed"].is_number_unsigned()) bad("seed must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    c.output = p.str("output", "");
    c.max_degree = p.integer("max_degree", c.max_degree);
    c.threads = p.integer("threads", c.threads);
    if (c.max_degree < 1 || c.max_degree > 512) bad("max_degree must lie in 1..512");
    if (c.threads < 1) bad("threads must be at least 1");
    if (p.has("frequency")) c.frequency = j["frequency"];
    (void)frequency_from_json(c.frequency);
    for (auto [key, dst] : {std::pair{"system", &c.system}, {"schedule", &c.schedule}, {"params", &c.params}}) {
        if (!p.has(key)) continue;
        if (!j[key].is_object()) bad(std::string(key) + " must be an object");
        *dst = j[key];
    }
    check_keys(c.system, {"rho_tilde", "g", "f", "s", "r"}, "system");
    check_keys(c.schedule, {"gamma", "tau", "c", "eps0", "ln_eps0", "s0", "r0", "n_max", "bridge_param",
                            "derivative_orders", "full_scan_limit", "inner_passes", "min_degree", "prune_rel"},
               "schedule");
    resolve_files(c.system, base_dir);
    resolve_files(c.params, base_dir);
    return c;
}

Json to_json(const ExperimentConfig& c) {
    return Json{{"run", c.run},
                {"mode", c.mode == RunMode::paper ? "paper" : "engineering"},
                {"seed", c.seed},
                {"output", c.output},
                {"max_degree", c.max_degree},
                {"threads", c.threads},
                {"frequency", c.frequency},
                {"system", c.system},
                {"schedule", c.schedule},
                {"params", c.params}};
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
    RunOutcome out;
    out.result = Json::object();
    out.timing = Json::object();
    const auto t0 = Clock::now();
    try {
        Context ctx(cfg, out);
        handlers().at(cfg.run)(ctx);
    } catch (const Error& e) {
        out.exit_status = 2;
        out.error = e.qualified_name();
        out.result["error"] = Json{{"name", e.qualified_name()}, {"detail", e.what()}};
    }
    out.timing["total_seconds"] = seconds_since(t0);
    if (!out.error.empty() && !out.result.contains("error")) out.result["error"] = Json{{"name", out.error}};
    out.result["status"] = out.exit_status;
    return out;
}

void write_artifacts(const ExperimentConfig& cfg, const RunOutcome& out) {
    const fs::path dir(cfg.output);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cli", Errc::io_error, "cannot create " + dir.string() + ": " + ec.message());
    Json files = Json::array({"result.json", "timing.json"});
    for (const auto& [name, _] : out.documents) files.push_back(name);
    for (const auto& [name, _] : out.tables) files.push_back(name);
    Json versions;
    versions["qpfkam"] = QPFKAM_VERSION;
    versions["gmp"] = std::string(gmp_version);
    versions["mpfr"] = std::string(mpfr_get_version());
    versions["fftw"] = std::string(fftw_version);
    versions["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION);
    versions["json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                       "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    write_json_file(dir / "manifest.json", Json{{"config", to_json(cfg)},
                                                {"versions", versions},
                                                {"status", out.exit_status},
                                                {"error", out.error},
                                                {"files", files}});
    write_json_file(dir / "result.json", out.result);
    write_json_file(dir / "timing.json", out.timing);
    for (const auto& [name, doc] : out.documents) write_json_file(dir / name, doc);
    for (const auto& [name, table] : out.tables) write_csv(dir / name, table);
}

}  // namespace qpfkam
