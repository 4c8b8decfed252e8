#include "qpfkam/arithmetic.hpp"

#include "qpfkam/error.hpp"

#include <gmp.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qpfkam {

namespace {

constexpr const char* kModule = "arithmetic";
constexpr std::size_t kCacheCap = 4096;

struct Mat2 {
    BigInt a = 1, b = 0, c = 0, d = 1;
};

Mat2 mul(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c,
            x.c * y.b + x.d * y.d};
}

Mat2 mat_pow(Mat2 m, std::size_t e) {
    Mat2 r;
    while (e > 0) {
        if (e & 1U) r = mul(r, m);
        e >>= 1U;
        if (e > 0) m = mul(m, m);
    }
    return r;
}

Mat2 quotient_product(const std::vector<BigInt>& qs, std::size_t count) {
    Mat2 r;
    for (std::size_t i = 0; i < count; ++i) r = mul(r, Mat2{qs[i], 1, 1, 0});
    return r;
}

BigInt ipow(const BigInt& x, unsigned long e) {
    BigInt r;
    mpz_pow_ui(r.backend().data(), x.backend().data(), e);
    return r;
}

}  // namespace

ConvergentOracle::ConvergentOracle(const Frequency& freq) {
    if (freq.model.surd) {
        periodic_ = true;
        limit_ = std::numeric_limits<std::size_t>::max();
        pre_ = freq.model.pre_period;
        per_ = freq.model.period;
        for (const auto& a : pre_) amax_ = std::max(amax_, a);
        for (const auto& a : per_) amax_ = std::max(amax_, a);
        const Mat2 P = quotient_product(per_, per_.size());
        const double T = (P.a + P.d).convert_to<double>();
        const double det = (per_.size() % 2 == 0) ? 1.0 : -1.0;
        const double lambda = 0.5 * (T + std::sqrt(T * T - 4.0 * det));
        growth_ = std::log2(lambda) / static_cast<double>(per_.size());
        cache_ = freq.q;
        if (cache_.size() > kCacheCap) cache_.resize(kCacheCap);
        if (cache_.empty()) cache_.push_back(1);
    } else {
        // Everything the spec determines, not only the requested depth.
        const auto& qs = freq.spec.kind == FrequencySpec::Kind::quotients ? freq.spec.quotients
                                                                          : freq.partial_quotients;
        per_.clear();
        pre_ = qs;
        cache_.push_back(1);
        if (!qs.empty()) cache_.push_back(qs[0]);
        for (std::size_t k = 2; k <= qs.size(); ++k) cache_.push_back(qs[k - 1] * cache_[k - 1] + cache_[k - 2]);
        limit_ = cache_.size() - 1;
        for (const auto& a : qs) amax_ = std::max(amax_, a);
    }
}

const BigInt& ConvergentOracle::quotient(std::size_t k) const {
    if (k <= pre_.size()) return pre_[k - 1];
    return per_[(k - 1 - pre_.size()) % per_.size()];
}

void ConvergentOracle::extend_cache(std::size_t n) {
    while (cache_.size() <= n) {
        const std::size_t k = cache_.size();
        if (k == 1)
            cache_.push_back(quotient(1));
        else
            cache_.push_back(quotient(k) * cache_[k - 1] + cache_[k - 2]);
    }
}

std::pair<BigInt, BigInt> ConvergentOracle::q_pair(std::size_t n) {
    if (n == 0) return {BigInt(1), BigInt(0)};
    if (n > limit_) throw Error(kModule, Errc::depth_insufficient, "q_" + std::to_string(n) + " is beyond the known quotients");
    if (n < kCacheCap || !periodic_) {
        extend_cache(n);
        return {cache_[n], cache_[n - 1]};
    }
    // Row vector (q_n, q_{n-1}) = (1, 0) * A_1 * ... * A_n
    Mat2 m = quotient_product(pre_, pre_.size());
    const std::size_t rest = n - pre_.size();
    const std::size_t j = rest / per_.size();
    const std::size_t r = rest % per_.size();
    m = mul(m, mat_pow(quotient_product(per_, per_.size()), j));
    m = mul(m, quotient_product(per_, r));
    return {m.a, m.b};
}

BigInt ConvergentOracle::q(std::size_t n) { return q_pair(n).first; }

std::size_t ConvergentOracle::stable_index(unsigned A) {
    // For i past this index q_{i+1} <= (amax+1) q_i <= q_i^A.
    if (!periodic_) return std::numeric_limits<std::size_t>::max();
    const BigInt bound = amax_ + 1;
    for (std::size_t i = 1;; ++i) {
        extend_cache(i);
        if (cache_[i] >= 2 && compare_pow(cache_[i], A - 1, bound) >= 0) return i;
    }
}

bool ConvergentOracle::no_big_jump(std::size_t l, std::size_t n, unsigned A) {
    const std::size_t stable = stable_index(A);
    for (std::size_t i = l; i < n; ++i) {
        if (i >= stable) return true;
        if (compare_pow(q(i), A, q(i + 1)) < 0) return false;
    }
    return true;
}

std::optional<std::size_t> ConvergentOracle::next_big_jump(std::size_t from, unsigned A,
                                                           const BigInt& base, unsigned long e) {
    const std::size_t stable = stable_index(A);
    for (std::size_t i = from; i < stable && i < limit_; ++i) {
        const BigInt qi = q(i);
        if (compare_pow(base, e, qi) < 0) return std::nullopt;
        if (compare_pow(qi, A, q(i + 1)) <= 0) return i;
    }
    return std::nullopt;
}

std::size_t ConvergentOracle::first_at_least(std::size_t from, const BigInt& x) {
    const std::size_t head = std::min<std::size_t>(periodic_ ? kCacheCap - 1 : limit_, limit_);
    for (std::size_t m = from; m <= head; ++m)
        if (q(m) >= x) return m;
    if (!periodic_)
        throw Error(kModule, Errc::depth_insufficient, "no known convergent reaches the requested size");
    const std::size_t base = std::max(from, head);
    const double target = log2_of(x);
    const double start = log2_of(q(base));
    const double steps = (target - start) / growth_;
    std::size_t n = base;
    if (steps > 0) n = base + static_cast<std::size_t>(std::max(0.0, std::floor(steps) - 2.0 * per_.size() - 2.0));
    auto qp = q_pair(n);
    while (n > base && qp.first >= x) {
        n = base + (n - base) / 2;
        qp = q_pair(n);
    }
    BigInt cur = qp.first, prev = qp.second;
    while (cur < x) {
        ++n;
        BigInt next = quotient(n) * cur + prev;
        prev = std::move(cur);
        cur = std::move(next);
    }
    return std::max(n, from);
}

namespace {

class CdSearch {
public:
    CdSearch(const Frequency& freq, const CdOptions& opt) : oracle_(freq), opt_(opt) {
        A_ = opt.bridge_param;
        A3_ = static_cast<unsigned long>(A_) * A_ * A_;
        A4_ = A3_ * A_;
    }

    CdSequence run() {
        const std::size_t target = opt_.terms + 1;
        std::size_t n0 = 0;
        if (oracle_.q(1) == 1) n0 = 1;
        idx_.push_back(n0);
        if (!dfs(false, target)) {
            if (depth_error_)
                throw Error(kModule, Errc::depth_insufficient,
                            "cannot certify the next CD term with the known quotients");
            throw Error(kModule, Errc::construction_failed,
                        nodes_ > opt_.node_budget ? "search budget exhausted"
                                                  : "no subsequence satisfies the bridge conditions");
        }
        CdSequence seq;
        seq.bridge_param = A_;
        seq.nodes_visited = nodes_;
        for (std::size_t k = 0; k < idx_.size(); ++k) {
            CdTerm t;
            t.n = idx_[k];
            t.Q = oracle_.q(t.n);
            t.Qbar = oracle_.q(t.n + 1);
            t.jump = compare_pow(t.Q, A_, t.Qbar) <= 0;
            t.log2_Q = log2_of(t.Q);
            t.log2_Qbar = log2_of(t.Qbar);
            if (k + 1 < idx_.size())
                seq.terms.push_back(std::move(t));
            else
                seq.lookahead = std::move(t);
        }
        return seq;
    }

private:
    bool bridge(std::size_t l, std::size_t n) {
        if (l >= n) return false;
        const BigInt ql = oracle_.q(l), qn = oracle_.q(n);
        return compare_pow(ql, A_, qn) <= 0 && compare_pow(ql, A3_, qn) >= 0 && oracle_.no_big_jump(l, n, A_);
    }

    std::vector<std::size_t> candidates(std::size_t n, const BigInt& Qk, const BigInt& Qbar) {
        std::vector<std::size_t> out;
        auto push = [&](std::size_t m) {
            if (m > n && std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
        };
        auto attempt = [&](auto&& fn) {
            try {
                fn();
            } catch (const Error& e) {
                if (e.code() != Errc::depth_insufficient) throw;
                depth_error_ = true;
            }
        };
        attempt([&] {
            if (auto m = oracle_.next_big_jump(n + 1, A_, Qbar, A4_)) push(*m);
        });
        attempt([&] {
            const std::size_t m = oracle_.first_at_least(n + 1, ipow(Qbar, A_));
            push(m);
            push(m + 1);
        });
        attempt([&] { push(oracle_.first_at_least(n + 1, ipow(Qk, A_))); });
        push(n + 1);
        return out;
    }

    bool dfs(bool needs_bridge, std::size_t target) {
        if (idx_.size() == target) return true;
        if (++nodes_ > opt_.node_budget) return false;
        const std::size_t n = idx_.back();
        BigInt Qk, Qbar;
        try {
            Qk = oracle_.q(n);
            Qbar = oracle_.q(n + 1);
        } catch (const Error& e) {
            if (e.code() != Errc::depth_insufficient) throw;
            depth_error_ = true;
            return false;
        }
        for (std::size_t m : candidates(n, Qk, Qbar)) {
            bool next_needs = false;
            try {
                const BigInt Qm = oracle_.q(m);
                if (compare_pow(Qbar, A4_, Qm) < 0) continue;
                if (needs_bridge && !bridge(n, m)) continue;
                const bool jump = compare_pow(Qm, A_, oracle_.q(m + 1)) <= 0;
                if (!jump) {
                    if (!bridge(n + 1, m)) continue;
                    next_needs = true;
                }
            } catch (const Error& e) {
                if (e.code() != Errc::depth_insufficient) throw;
                depth_error_ = true;
                continue;
            }
            idx_.push_back(m);
            if (dfs(next_needs, target)) return true;
            idx_.pop_back();
            if (nodes_ > opt_.node_budget) return false;
        }
        return false;
    }

    ConvergentOracle oracle_;
    CdOptions opt_;
    unsigned A_ = 8;
    unsigned long A3_ = 512, A4_ = 4096;
    std::vector<std::size_t> idx_;
    std::size_t nodes_ = 0;
    bool depth_error_ = false;
};

}  // namespace

CdSequence select_cd_sequence(const Frequency& freq, const CdOptions& opt) {
    if (opt.bridge_param < 2) throw Error(kModule, Errc::invalid_argument, "bridge parameter must be >= 2");
    if (opt.terms < 1) throw Error(kModule, Errc::invalid_argument, "at least one CD term required");
    if (freq.rational_input) throw Error(kModule, Errc::rational_input, "CD selection needs an irrational frequency");
    CdSearch search(freq, opt);
    CdSequence seq = search.run();
    const CdValidation v = validate_cd_sequence(freq, seq);
    if (!v.ok) throw Error(kModule, Errc::construction_failed, "post-validation failed: " + v.failure);
    seq.validated = true;
    return seq;
}

CdValidation validate_cd_sequence(const Frequency& freq, const CdSequence& seq) {
    CdValidation out;
    ConvergentOracle oracle(freq);
    const unsigned A = seq.bridge_param;
    const unsigned long A3 = static_cast<unsigned long>(A) * A * A, A4 = A3 * A;
    std::vector<CdTerm> all = seq.terms;
    if (seq.lookahead) all.push_back(*seq.lookahead);
    auto failed = [&](std::string why) {
        out.ok = false;
        out.failure = std::move(why);
        return out;
    };
    if (all.empty()) return failed("empty sequence");
    if (all[0].Q != 1) return failed("Q_0 != 1");
    auto is_bridge = [&](std::size_t l, std::size_t n) {
        if (l >= n) return false;
        const BigInt ql = oracle.q(l), qn = oracle.q(n);
        return compare_pow(ql, A, qn) <= 0 && compare_pow(ql, A3, qn) >= 0 && oracle.no_big_jump(l, n, A);
    };
    for (std::size_t k = 0; k < all.size(); ++k) {
        const auto& t = all[k];
        if (oracle.q(t.n) != t.Q || oracle.q(t.n + 1) != t.Qbar)
            return failed("term " + std::to_string(k) + " does not match the convergents");
        if (k > 0 && t.n <= all[k - 1].n) return failed("indices not increasing at " + std::to_string(k));
        if (k > 0 && compare_pow(all[k - 1].Qbar, A4, t.Q) < 0)
            return failed("Q_" + std::to_string(k) + " exceeds Qbar_" + std::to_string(k - 1) + "^(A^4)");
    }
    for (std::size_t k = 0; k < seq.terms.size(); ++k) {
        const auto& t = all[k];
        if (compare_pow(t.Q, A, t.Qbar) <= 0) continue;
        const bool back = k > 0 && is_bridge(all[k - 1].n + 1, t.n);
        const bool fwd = k + 1 < all.size() && is_bridge(t.n, all[k + 1].n);
        if (!(back && fwd)) return failed("neither the jump nor the bridge clause holds at k = " + std::to_string(k));
    }
    out.ok = true;
    return out;
}

}  // namespace qpfkam
