#pragma once

// Hierarchical weighted fuzzy trust scoring: credential admission, fuzzy
// measure validation, min-max normalized behavior metrics, AHP criterion
// weights and the trust indicator / rank / activity chain.

#include "gossipguard/error.hpp"
#include "gossipguard/format.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace gossipguard::trust {

// ---------------------------------------------------------------------------
// Admission

using Bytes = std::vector<std::uint8_t>;

struct Credential {
    std::string node_id;
    Bytes mac_address;
    Bytes public_key;
    std::string issuer_id;

    bool well_formed() const {
        return !node_id.empty() && !mac_address.empty() && !public_key.empty() && !issuer_id.empty();
    }
};

class CspRegistry {
public:
    explicit CspRegistry(std::set<std::string> trusted_issuers = {}) : trusted_(std::move(trusted_issuers)) {}

    void trust_issuer(std::string issuer) { trusted_.insert(std::move(issuer)); }

    void issue(Credential credential) {
        if (!credential.well_formed()) throw InputError("CspRegistry: credential has empty fields");
        if (!trusted_.contains(credential.issuer_id))
            throw InputError("CspRegistry: issuer '" + credential.issuer_id + "' is not trusted");
        auto id = credential.node_id;
        issued_.insert_or_assign(std::move(id), std::move(credential));
    }

    bool trusts(const std::string& issuer) const { return trusted_.contains(issuer); }

    const Credential* find(const std::string& node_id) const {
        auto it = issued_.find(node_id);
        return it == issued_.end() ? nullptr : &it->second;
    }

private:
    std::set<std::string> trusted_;
    std::map<std::string, Credential> issued_;
};

// 1 iff the issuer is trusted and the registry copy matches byte-for-byte.
inline int authenticate(const Credential& credential, const CspRegistry& registry) {
    if (!credential.well_formed() || !registry.trusts(credential.issuer_id)) return 0;
    const Credential* stored = registry.find(credential.node_id);
    if (stored == nullptr) return 0;
    return stored->issuer_id == credential.issuer_id && stored->mac_address == credential.mac_address &&
                   stored->public_key == credential.public_key
               ? 1
               : 0;
}

// ---------------------------------------------------------------------------
// Fuzzy measures over a ground set of at most 8 labels. Subsets are bitmasks.

using Subset = std::uint32_t;
inline constexpr std::size_t kMaxGroundSet = 8;

struct FuzzyMeasure {
    std::vector<std::string> ground_set;
    std::map<Subset, double> values;

    Subset full() const { return Subset((1u << ground_set.size()) - 1u); }
};

struct FuzzyViolation {
    enum class Kind { Range, EmptySet, FullSet, Monotonicity };
    Kind kind;
    Subset smaller = 0;  // P
    Subset larger = 0;   // Q, P subset of Q
};

struct FuzzyValidation {
    bool valid = true;
    std::vector<FuzzyViolation> violations;

    explicit operator bool() const noexcept { return valid; }
};

inline FuzzyValidation validate_fuzzy_measure(const FuzzyMeasure& measure, double tol = 1e-12) {
    const std::size_t n = measure.ground_set.size();
    if (n > kMaxGroundSet) throw InputError("validate_fuzzy_measure: ground set larger than 8");
    const Subset count = Subset(1u << n);
    std::vector<double> v(count);
    for (Subset s = 0; s < count; ++s) {
        auto it = measure.values.find(s);
        if (it == measure.values.end()) throw InputError("validate_fuzzy_measure: missing subset " + std::to_string(s));
        v[s] = it->second;
    }

    FuzzyValidation out;
    auto flag = [&](FuzzyViolation::Kind k, Subset p, Subset q) {
        out.valid = false;
        out.violations.push_back({k, p, q});
    };
    for (Subset s = 0; s < count; ++s)
        if (!(v[s] >= -tol && v[s] <= 1.0 + tol)) flag(FuzzyViolation::Kind::Range, s, s);
    if (std::abs(v[0]) > tol) flag(FuzzyViolation::Kind::EmptySet, 0, 0);
    if (std::abs(v[count - 1] - 1.0) > tol) flag(FuzzyViolation::Kind::FullSet, count - 1, count - 1);
    // every proper-subset pair P < Q
    for (Subset q = 0; q < count; ++q)
        for (Subset p = (q - 1) & q;; p = (p - 1) & q) {
            if (v[p] > v[q] + tol) flag(FuzzyViolation::Kind::Monotonicity, p, q);
            if (p == 0) break;
        }
    return out;
}

// v(P) = sum of per-label weights; weights must be non-negative and sum to 1.
inline FuzzyMeasure additive_measure(std::vector<std::string> labels, std::span<const double> weights) {
    if (labels.size() != weights.size() || labels.size() > kMaxGroundSet)
        throw InputError("additive_measure: label/weight size mismatch");
    FuzzyMeasure m{std::move(labels), {}};
    const Subset count = Subset(1u << weights.size());
    for (Subset s = 0; s < count; ++s) {
        double total = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k)
            if (s & (1u << k)) total += weights[k];
        m.values[s] = s == count - 1 ? 1.0 : total;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Normalized behavior metrics

struct MetricSnapshot {
    double response_time = 0.0;  // S_r, seconds
    double throughput = 0.0;     // G_r in [0, 1]
    double failures = 0.0;       // U_0
    double fulfilled = 0.0;      // T_0
    double rt_min = 0.0, rt_max = 0.0;
    double tp_min = 0.0, tp_max = 0.0;
    double fail_min = 0.0, fail_max = 0.0;
    double req_min = 0.0, req_max = 0.0;
};

namespace detail {

// (x - lo)/(hi - lo) with x clamped to [lo, hi]; 0 when the range is degenerate.
inline double normalized_fraction(double x, double lo, double hi) {
    if (lo > hi) throw InputError("metric extrema out of order (min > max)");
    if (hi - lo <= 0.0) return 0.0;
    return (std::clamp(x, lo, hi) - lo) / (hi - lo);
}

}  // namespace detail

// Higher means more suspicious.
inline double response_time_score(const MetricSnapshot& s) {
    return detail::normalized_fraction(s.response_time, s.rt_min, s.rt_max);
}

inline double throughput_score(const MetricSnapshot& s) {
    return detail::normalized_fraction(s.throughput, s.tp_min, s.tp_max);
}

inline double availability_score(const MetricSnapshot& s) {
    return 1.0 - detail::normalized_fraction(s.failures, s.fail_min, s.fail_max);
}

inline double success_rate_score(const MetricSnapshot& s) {
    return 1.0 - detail::normalized_fraction(s.fulfilled, s.req_min, s.req_max);
}

using Scores = std::array<double, 4>;  // (s_rt, s_tp, s_av, s_sr)

inline Scores metric_scores(const MetricSnapshot& s) {
    return {response_time_score(s), throughput_score(s), availability_score(s), success_rate_score(s)};
}

// ---------------------------------------------------------------------------
// AHP weights

class ComparisonMatrix {
public:
    explicit ComparisonMatrix(std::vector<std::vector<double>> entries, double tol = 1e-9)
        : entries_(std::move(entries)) {
        const std::size_t k = entries_.size();
        if (k == 0) throw InputError("ComparisonMatrix: empty");
        for (std::size_t i = 0; i < k; ++i) {
            if (entries_[i].size() != k) throw InputError("ComparisonMatrix: not square");
            for (std::size_t j = 0; j < k; ++j)
                if (!(entries_[i][j] > 0.0) || !std::isfinite(entries_[i][j]))
                    throw InputError("ComparisonMatrix: entries must be positive and finite");
        }
        for (std::size_t i = 0; i < k; ++i) {
            if (std::abs(entries_[i][i] - 1.0) > tol) throw InputError("ComparisonMatrix: diagonal must be 1");
            for (std::size_t j = i + 1; j < k; ++j)
                if (std::abs(entries_[j][i] * entries_[i][j] - 1.0) > tol)
                    throw InputError("ComparisonMatrix: not reciprocal at (" + std::to_string(i) + "," +
                                     std::to_string(j) + ")");
        }
    }

    static ComparisonMatrix uniform(std::size_t k) {
        return ComparisonMatrix(std::vector<std::vector<double>>(k, std::vector<double>(k, 1.0)));
    }

    std::size_t size() const noexcept { return entries_.size(); }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i][j]; }
    const std::vector<std::vector<double>>& entries() const noexcept { return entries_; }

private:
    std::vector<std::vector<double>> entries_;
};

// Normalized principal (Perron) eigenvector by power iteration.
inline std::vector<double> ahp_weights(const ComparisonMatrix& cm, double tol = 1e-10, std::size_t max_iter = 100000) {
    const std::size_t k = cm.size();
    std::vector<double> w(k, 1.0 / double(k)), next(k);
    for (std::size_t it = 0; it < max_iter; ++it) {
        for (std::size_t i = 0; i < k; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < k; ++j) acc += cm(i, j) * w[j];
            next[i] = acc;
        }
        const double total = std::accumulate(next.begin(), next.end(), 0.0);
        double delta = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            next[i] /= total;
            delta = std::max(delta, std::abs(next[i] - w[i]));
        }
        w.swap(next);
        if (delta < tol) break;
    }
    return w;
}

// ---------------------------------------------------------------------------
// Indicator, rank, activity

// Orient every score "higher = more trustworthy": response time is flipped.
inline Scores trust_oriented(const Scores& s) { return {1.0 - s[0], s[1], s[2], s[3]}; }

inline double trust_aggregate(const Scores& scores, std::span<const double> weights) {
    if (weights.size() != scores.size()) throw InputError("trust_indicator: need 4 weights");
    const Scores adjusted = trust_oriented(scores);
    double total = 0.0;
    for (std::size_t k = 0; k < adjusted.size(); ++k) total += weights[k] * adjusted[k];
    return total;
}

inline int trust_indicator(const Scores& scores, std::span<const double> weights, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw InputError("trust_indicator: tau must lie in [0, 1]");
    return trust_aggregate(scores, weights) >= tau ? 1 : 0;
}

inline double node_rank(std::span<const int> indicator_history) {
    return double(std::accumulate(indicator_history.begin(), indicator_history.end(), 0));
}

inline double activity_level(double rank, double rank_min, double rank_max) {
    return detail::normalized_fraction(rank, rank_min, rank_max);
}

// Sliding window of indicator values; rank is the window sum.
class IndicatorWindow {
public:
    explicit IndicatorWindow(std::size_t width = 50) : width_(width) {
        if (width_ == 0) throw InputError("IndicatorWindow: width must be positive");
    }

    void push(int indicator) {
        history_.push_back(indicator);
        if (history_.size() > width_) history_.pop_front();
    }

    double rank() const { return double(std::accumulate(history_.begin(), history_.end(), 0)); }
    std::size_t size() const noexcept { return history_.size(); }

private:
    std::size_t width_;
    std::deque<int> history_;
};

struct TrustProfile {
    NodeId node = 0;
    Scores scores{};
    std::vector<double> weights;
    int indicator = 0;
    double rank = 0.0;
    double activity = 0.0;
};

// CSV columns: node,s_rt,s_tp,s_av,s_sr,indicator,rank,activity
inline void write_trust_csv(std::ostream& out, std::span<const TrustProfile> profiles) {
    out << "node,s_rt,s_tp,s_av,s_sr,indicator,rank,activity\n";
    for (const auto& p : profiles) {
        out << p.node;
        for (double s : p.scores) out << ',' << format_real(s);
        out << ',' << p.indicator << ',' << format_real(p.rank) << ',' << format_real(p.activity) << '\n';
    }
}

}  // namespace gossipguard::trust
