#pragma once

#include "qpfkam/bignum.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qpfkam {

/// How a frequency alpha in (0,1) is specified.
struct FrequencySpec {
    enum class Kind { quadratic, quotients, decimal, rational };
    Kind kind = Kind::quadratic;
    // quadratic: alpha = (a + b*sqrt(d)) / c
    BigInt a = 0, b = 1, c = 1, d = 5;
    // quotients: a_1, a_2, ...
    std::vector<BigInt> quotients;
    // decimal: value +- uncertainty
    std::string value;
    std::string uncertainty = "0";
    // rational: num / den
    BigInt num = 0, den = 1;

    [[nodiscard]] static FrequencySpec golden();
    [[nodiscard]] static FrequencySpec silver();
    [[nodiscard]] static FrequencySpec quadratic_surd(BigInt a, BigInt b, BigInt c, BigInt d);
    [[nodiscard]] static FrequencySpec from_quotients(std::vector<BigInt> q);
    [[nodiscard]] static FrequencySpec from_decimal(std::string value, std::string uncertainty);
    [[nodiscard]] static FrequencySpec from_rational(BigInt num, BigInt den);
};

/// Parses a plain decimal literal such as "0.618034" or "-1.5e-3" exactly.
[[nodiscard]] BigRational parse_decimal(const std::string& text);

/// One selected term of the CD subsequence: Q = q_n, Qbar = q_{n+1}.
struct CdTerm {
    std::size_t n = 0;
    BigInt Q;
    BigInt Qbar;
    bool jump = false;  ///< Qbar >= Q^A holds; otherwise the term rests on two bridges
    double log2_Q = 0.0;
    double log2_Qbar = 0.0;
};

struct CdSequence {
    unsigned bridge_param = 8;
    std::vector<CdTerm> terms;
    /// Next term found by the search; certifies the clause of the last term.
    std::optional<CdTerm> lookahead;
    std::size_t nodes_visited = 0;
    bool validated = false;
};

/// Exact data for alpha. Surds are exact to any depth; everything else is
/// known to lie in the closed rational interval [lo, hi].
struct AlphaModel {
    bool surd = false;
    // surd: alpha = (P + sqrt(D)) / Q with D not a perfect square
    BigInt P, D, Q;
    BigRational lo, hi;
    // periodic structure of the quotients (surd only)
    std::vector<BigInt> pre_period;
    std::vector<BigInt> period;
};

struct Frequency {
    FrequencySpec spec;
    AlphaModel model;
    std::vector<BigInt> partial_quotients;  ///< a_1 .. a_depth
    std::vector<BigInt> p;                  ///< p_0 .. p_{depth-1}
    std::vector<BigInt> q;                  ///< q_0 .. q_{depth-1}
    bool rational_input = false;
    std::optional<CdSequence> cd_sequence;
    unsigned bridge_param = 8;
    double u_tilde = 0.0;
    double u = 0.0;

    [[nodiscard]] double alpha() const;
    [[nodiscard]] BigFloat alpha_big() const;
    [[nodiscard]] std::size_t depth() const { return q.size(); }
};

/// Expands alpha to `depth` quotients; convergents n = 0 .. depth-1.
/// Rational inputs terminate early with rational_input set.
/// Throws arithmetic.precision-exhausted when a decimal spec cannot certify
/// the requested depth.
[[nodiscard]] Frequency expand_continued_fraction(const FrequencySpec& spec, std::size_t depth);

/// Number of quotients a decimal (or rational) spec certifies.
[[nodiscard]] std::size_t certified_depth(const FrequencySpec& spec);

/// Exact sign of u + v*alpha. Throws arithmetic.depth-insufficient when the
/// model interval straddles the root.
[[nodiscard]] int sign_linear(const AlphaModel& m, const BigInt& u, const BigInt& v);

struct BestApproxReport {
    bool pass = false;
    std::size_t n = 0;
    std::uint64_t scanned = 0;
    double min_ratio = 0.0;     ///< min over k < q_n of ||k alpha|| / ||q_{n-1} alpha||
    double lower_slack = 0.0;   ///< ||q_n alpha|| - 1/(q_n+q_{n+1})
    double upper_slack = 0.0;   ///< 1/q_{n+1} - ||q_n alpha||
};

/// Checks the best-approximation property and the two-sided bound on
/// ||q_n alpha|| exactly. Needs convergents through n+1.
[[nodiscard]] BestApproxReport verify_best_approx(const Frequency& freq, std::size_t n,
                                                  std::uint64_t max_scan = 50'000'000);

/// Random access to q_n, also far beyond the stored convergents for surds.
class ConvergentOracle {
public:
    explicit ConvergentOracle(const Frequency& freq);

    /// q_n; throws arithmetic.depth-insufficient beyond the known range.
    [[nodiscard]] BigInt q(std::size_t n);
    /// Largest usable index, or SIZE_MAX for periodic sources.
    [[nodiscard]] std::size_t limit() const { return limit_; }
    /// True if q_{i+1} <= q_i^A for all l <= i < n.
    [[nodiscard]] bool no_big_jump(std::size_t l, std::size_t n, unsigned A);
    /// First i >= from with q_{i+1} >= q_i^A and q_i <= base^e, if any.
    [[nodiscard]] std::optional<std::size_t> next_big_jump(std::size_t from, unsigned A,
                                                           const BigInt& base, unsigned long e);
    /// Smallest m >= from with q_m >= x.
    [[nodiscard]] std::size_t first_at_least(std::size_t from, const BigInt& x);

private:
    void extend_cache(std::size_t n);
    [[nodiscard]] const BigInt& quotient(std::size_t k) const;  // a_k, k >= 1
    [[nodiscard]] std::pair<BigInt, BigInt> q_pair(std::size_t n);  // (q_n, q_{n-1})
    [[nodiscard]] std::size_t stable_index(unsigned A);

    bool periodic_ = false;
    std::size_t limit_ = 0;
    std::vector<BigInt> pre_;
    std::vector<BigInt> per_;
    std::vector<BigInt> cache_;  // q_0 ..
    BigInt amax_ = 1;
    double growth_ = 0.0;  // log2 q per index asymptotically
};

struct CdOptions {
    unsigned bridge_param = 8;
    std::size_t terms = 5;
    std::size_t node_budget = 20000;
};

/// Selects a CD subsequence by depth-first search over candidate indices and
/// re-validates it. Errors: arithmetic.depth-insufficient,
/// arithmetic.construction-failed.
[[nodiscard]] CdSequence select_cd_sequence(const Frequency& freq, const CdOptions& opt = {});

struct CdValidation {
    bool ok = false;
    std::string failure;
};

/// Independent check of a CD subsequence against the subsequence conditions.
[[nodiscard]] CdValidation validate_cd_sequence(const Frequency& freq, const CdSequence& seq);

struct LiouvilleReport {
    double u_tilde = 0.0;
    double u = 0.0;
    std::size_t attaining_n = 0;
    bool lower_bound_only = false;  ///< sup may not be stable on the computed range
    bool cd_growth_ok = true;       ///< Q_k >= Q_{k-1}^A on the selected sequence
    bool cd_sup_ok = true;          ///< ln ln Q_{k+1} / ln Q_k <= U on the selected sequence
    double cd_sup = 0.0;
};

/// sup of ln ln q_{n+1} / ln q_n over admissible n (q_n >= 2, q_{n+1} >= 3).
[[nodiscard]] LiouvilleReport compute_liouville_exponents(const Frequency& freq,
                                                          const CdSequence* seq = nullptr,
                                                          unsigned bridge_param = 8);

struct DiophantineReport {
    double gamma = 0.0;
    double tau = 0.0;
    int scan_bound = 0;
    double min_margin = 0.0;
    int k1 = 0, k2 = 0, l = 0;  ///< witness
    bool pass = false;
};

/// Exhaustive scan of |k1 + k2*alpha + l*rho| * (|k1|+|k2|+|l|)^tau over
/// 0 < |k1|+|k2|+|l| <= L, l != 0.
[[nodiscard]] DiophantineReport audit_diophantine(const BigFloat& rho, const Frequency& freq,
                                                  double gamma, double tau, int L);
[[nodiscard]] DiophantineReport audit_diophantine(double rho, const Frequency& freq, double gamma,
                                                  double tau, int L);

}  // namespace qpfkam
