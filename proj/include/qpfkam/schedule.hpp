#pragma once

#include "qpfkam/arithmetic.hpp"
#include "qpfkam/bignum.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qpfkam {

struct ScheduleParams {
    double gamma = 0.1;
    double tau = 3.0;
    double s0 = 1.0;
    double r0 = 1.0;
    /// Defaults to 1.01 * 10 (tau+3) / tau.
    std::optional<double> c;
    unsigned bridge_param = 8;
    int n_max = 6;
    /// ln(eps_0); defaults to ln of half the admissible bound.
    std::optional<BigFloat> ln_eps0;
    /// Derivative orders |j| for the smoothness criterion.
    int derivative_orders = 3;
    /// Inner-loop indices checked one by one; beyond this only the
    /// monotonicity certificate and the endpoint are evaluated.
    long long full_scan_limit = 2000;
};

/// One certified (or refuted) inequality lhs < rhs (or <=), both as decimal strings.
struct AuditItem {
    std::string group;
    std::string name;
    int n = 0;
    long long nu = 0;
    std::string lhs;
    std::string rhs;
    bool holds = false;
};

struct ScheduleRow {
    int n = 0;
    double log2_Q = 0.0;
    BigFloat Delta, r, s, r_bar, s_bar;
    BigFloat ln_eps;        ///< ln eps_n
    BigFloat ln_eps_tilde;  ///< ln of sum_{m<n} eps_m (n >= 1)
    BigFloat ln_K;          ///< ln K^(n) (before the floor)
    BigFloat inner_N;       ///< inner-loop length for step n (n >= 1)
};

struct ScheduleAudit {
    double u_tilde = 0.0;
    double U = 0.0;
    double c = 0.0;
    double c1 = 0.0;
    double ctauU = 0.0;
    BigFloat ln_Qstar;
    BigFloat ln_eps0;
    BigFloat ln_eps0_bound;       ///< ln of the admissible upper bound on eps_0
    std::string eps0_decimal;
    std::string eps0_bound_decimal;
    std::vector<ScheduleRow> rows;
    std::vector<AuditItem> items;
    bool all_hold = false;
    std::vector<std::string> notes;
};

/// Smallest Q beyond which ln Q < Q^(1/4) a holds for every larger Q.
[[nodiscard]] BigInt q_star(const BigFloat& a);

/// Evaluates the small-parameter conditions, the schedule sequences, and the
/// per-step inequalities in big-float arithmetic for n = 1 .. n_max.
[[nodiscard]] ScheduleAudit audit_schedule(const Frequency& freq, const CdSequence& cd, const ScheduleParams& p);

}  // namespace qpfkam
