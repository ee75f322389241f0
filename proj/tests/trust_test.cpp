#include "gossipguard/random.hpp"
#include "gossipguard/trust.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace gossipguard;
using namespace gossipguard::trust;

namespace {

Credential sample_credential() {
    return {"node-7", {0x02, 0x42, 0xac, 0x11, 0x00, 0x07}, {0x30, 0x59, 0x30, 0x13, 0x06, 0x07, 0x2a}, "csp-a"};
}

CspRegistry registry_with(const Credential& c) {
    CspRegistry r({"csp-a", "csp-b"});
    r.issue(c);
    return r;
}

MetricSnapshot random_snapshot(Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto range = [&](double scale) {
        double a = u(rng) * scale, b = u(rng) * scale;
        if (u(rng) < 0.05) b = a;  // degenerate neighborhoods now and then
        return std::pair{std::min(a, b), std::max(a, b)};
    };
    MetricSnapshot s;
    std::tie(s.rt_min, s.rt_max) = range(5.0);
    std::tie(s.tp_min, s.tp_max) = range(1.0);
    std::tie(s.fail_min, s.fail_max) = range(100.0);
    std::tie(s.req_min, s.req_max) = range(1000.0);
    // raw values may fall outside the neighborhood range; they are clamped
    s.response_time = u(rng) * 6.0 - 0.5;
    s.throughput = u(rng);
    s.failures = std::floor(u(rng) * 110.0);
    s.fulfilled = std::floor(u(rng) * 1100.0);
    return s;
}

// consistent matrix a_ij = w_i / w_j
ComparisonMatrix consistent(const std::vector<double>& w) {
    std::vector<std::vector<double>> a(w.size(), std::vector<double>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = 0; j < w.size(); ++j) a[i][j] = i == j ? 1.0 : w[i] / w[j];
    return ComparisonMatrix(a);
}

std::vector<double> normalized_column(const ComparisonMatrix& cm, std::size_t col) {
    std::vector<double> v(cm.size());
    double total = 0.0;
    for (std::size_t i = 0; i < cm.size(); ++i) total += (v[i] = cm(i, col));
    for (auto& x : v) x /= total;
    return v;
}

}  // namespace

TEST(Authenticate, Examples) {
    const auto c = sample_credential();
    const auto registry = registry_with(c);
    EXPECT_EQ(authenticate(c, registry), 1);

    auto untrusted = c;
    untrusted.issuer_id = "csp-z";
    EXPECT_EQ(authenticate(untrusted, registry), 0);

    auto wrong_mac = c;
    wrong_mac.mac_address.back() ^= 0x01;
    EXPECT_EQ(authenticate(wrong_mac, registry), 0);

    auto unknown = c;
    unknown.node_id = "node-8";
    EXPECT_EQ(authenticate(unknown, registry), 0);

    auto empty = c;
    empty.public_key.clear();
    EXPECT_EQ(authenticate(empty, registry), 0);
}

TEST(Authenticate, EverySingleBytePerturbationRejected) {
    const auto c = sample_credential();
    const auto registry = registry_with(c);
    for (int field = 0; field < 2; ++field) {
        const std::size_t n = field == 0 ? c.mac_address.size() : c.public_key.size();
        for (std::size_t k = 0; k < n; ++k)
            for (int delta = 1; delta < 256; ++delta) {
                auto forged = c;
                auto& bytes = field == 0 ? forged.mac_address : forged.public_key;
                bytes[k] = std::uint8_t(bytes[k] + delta);
                ASSERT_EQ(authenticate(forged, registry), 0) << field << " byte " << k << " +" << delta;
            }
    }
}

TEST(CspRegistry, RejectsUntrustedIssue) {
    CspRegistry r({"csp-a"});
    auto c = sample_credential();
    c.issuer_id = "csp-b";
    EXPECT_THROW(r.issue(c), InputError);
    c.issuer_id = "csp-a";
    c.mac_address.clear();
    EXPECT_THROW(r.issue(c), InputError);
}

TEST(FuzzyMeasure, Examples) {
    const std::vector<double> uniform(3, 1.0 / 3.0);
    EXPECT_TRUE(validate_fuzzy_measure(additive_measure({"rt", "tp", "av"}, uniform)));

    auto m = additive_measure({"a", "b"}, std::vector<double>{0.5, 0.5});
    m.values[0] = 0.1;
    auto r = validate_fuzzy_measure(m);
    EXPECT_FALSE(r);
    bool saw_boundary = false;
    for (const auto& v : r.violations) saw_boundary |= v.kind == FuzzyViolation::Kind::EmptySet;
    EXPECT_TRUE(saw_boundary);

    m = additive_measure({"a", "b", "c"}, std::vector<double>{0.3, 0.3, 0.4});
    m.values[0b001] = 0.9;
    m.values[0b011] = 0.4;
    r = validate_fuzzy_measure(m);
    EXPECT_FALSE(r);
    bool saw_pair = false;
    for (const auto& v : r.violations)
        saw_pair |= v.kind == FuzzyViolation::Kind::Monotonicity && v.smaller == 0b001 && v.larger == 0b011;
    EXPECT_TRUE(saw_pair);

    m.values.erase(0b101);
    EXPECT_THROW(validate_fuzzy_measure(m), InputError);
}

TEST(FuzzyMeasure, AdditiveAcceptedPlantedViolationsRejected) {
    Rng rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> size(1, 5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = size(rng);
        std::vector<double> w(n);
        double total = 0.0;
        for (auto& x : w) total += (x = u(rng) + 1e-3);
        for (auto& x : w) x /= total;
        std::vector<std::string> labels;
        for (std::size_t k = 0; k < n; ++k) labels.push_back("c" + std::to_string(k));
        auto m = additive_measure(labels, w);
        ASSERT_TRUE(validate_fuzzy_measure(m)) << trial;

        // plant v(P) > v(Q) for some P = Q minus one element; needs |Y| >= 2
        if (n == 1) m = additive_measure({"c0", "c1"}, std::vector<double>{0.5, 0.5});
        std::uniform_int_distribution<Subset> pick_q(1, m.full());
        Subset q = 0;
        do q = pick_q(rng);
        while (std::popcount(q) < 2);
        // P = q with one bit cleared
        const Subset p = q & (q - 1);
        m.values[p] = std::min(1.0, m.values[q] + 0.05 + 0.5 * u(rng));
        if (m.values[p] <= m.values[q]) m.values[q] = m.values[p] - 0.01;
        const auto r = validate_fuzzy_measure(m);
        EXPECT_FALSE(r) << trial;
        bool found = false;
        for (const auto& v : r.violations) found |= v.smaller == p && v.larger == q;
        EXPECT_TRUE(found) << trial;
    }
}

TEST(MetricScores, Examples) {
    MetricSnapshot s;
    s.rt_min = 1.0;
    s.rt_max = 3.0;
    s.response_time = 1.0;
    EXPECT_EQ(response_time_score(s), 0.0);
    s.response_time = 3.0;
    EXPECT_EQ(response_time_score(s), 1.0);
    s.response_time = 2.0;
    EXPECT_EQ(response_time_score(s), 0.5);

    s.tp_min = 0.2;
    s.tp_max = 0.6;
    s.throughput = 0.6;
    EXPECT_EQ(throughput_score(s), 1.0);
    s.throughput = 0.2;
    EXPECT_EQ(throughput_score(s), 0.0);
    s.tp_max = s.tp_min;
    EXPECT_EQ(throughput_score(s), 0.0);

    s.fail_min = 2;
    s.fail_max = 10;
    s.failures = 2;
    EXPECT_EQ(availability_score(s), 1.0);
    s.failures = 10;
    EXPECT_EQ(availability_score(s), 0.0);
    s.failures = 6;
    EXPECT_EQ(availability_score(s), 0.5);
    s.fail_max = s.fail_min;
    EXPECT_EQ(availability_score(s), 1.0);

    s.req_min = 100;
    s.req_max = 300;
    s.fulfilled = 100;
    EXPECT_EQ(success_rate_score(s), 1.0);
    s.fulfilled = 300;
    EXPECT_EQ(success_rate_score(s), 0.0);
    s.fulfilled = 200;
    EXPECT_EQ(success_rate_score(s), 0.5);

    s.rt_min = 4.0;
    EXPECT_THROW(response_time_score(s), InputError);
}

TEST(MetricScores, BoundedAndMonotone) {
    Rng rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10000; ++trial) {
        const auto s = random_snapshot(rng);
        const auto scores = metric_scores(s);
        for (double x : scores) ASSERT_TRUE(x >= 0.0 && x <= 1.0);

        auto bumped = s;
        bumped.response_time += u(rng);
        bumped.throughput += u(rng) * 0.1;
        bumped.failures += std::floor(u(rng) * 5.0);
        bumped.fulfilled += std::floor(u(rng) * 50.0);
        ASSERT_GE(response_time_score(bumped), scores[0]);
        ASSERT_GE(throughput_score(bumped), scores[1]);
        ASSERT_LE(availability_score(bumped), scores[2]);
        ASSERT_LE(success_rate_score(bumped), scores[3]);
    }
}

TEST(AhpWeights, Examples) {
    const auto flat = ahp_weights(ComparisonMatrix::uniform(4));
    for (double w : flat) EXPECT_NEAR(w, 0.25, 1e-12);

    const auto two = ahp_weights(ComparisonMatrix({{1.0, 3.0}, {1.0 / 3.0, 1.0}}));
    EXPECT_NEAR(two[0], 0.75, 1e-10);
    EXPECT_NEAR(two[1], 0.25, 1e-10);

    EXPECT_THROW(ComparisonMatrix({{1.0, 3.0}, {0.5, 1.0}}), InputError);
    EXPECT_THROW(ComparisonMatrix({{1.0, -1.0}, {-1.0, 1.0}}), InputError);
    EXPECT_THROW(ComparisonMatrix({{2.0, 1.0}, {1.0, 1.0}}), InputError);
}

TEST(AhpWeights, ConsistentMatricesMatchNormalizedColumn) {
    Rng rng(5);
    std::uniform_real_distribution<double> u(0.1, 9.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> w(2 + std::size_t(trial % 7));
        for (auto& x : w) x = u(rng);
        const auto cm = consistent(w);
        const auto got = ahp_weights(cm);
        double total = 0.0;
        for (double x : got) {
            EXPECT_GT(x, 0.0);
            total += x;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        for (std::size_t col = 0; col < cm.size(); ++col) {
            const auto ref = normalized_column(cm, col);
            for (std::size_t i = 0; i < w.size(); ++i) ASSERT_NEAR(got[i], ref[i], 1e-8);
        }
    }
}

TEST(AhpWeights, InconsistentMatricesStillNormalized) {
    Rng rng(6);
    std::uniform_real_distribution<double> u(1.0 / 9.0, 9.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 3 + std::size_t(trial % 4);
        std::vector<std::vector<double>> a(k, std::vector<double>(k, 1.0));
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j) {
                a[i][j] = u(rng);
                a[j][i] = 1.0 / a[i][j];
            }
        const ComparisonMatrix cm(a);
        const auto w = ahp_weights(cm);
        double total = 0.0;
        for (double x : w) {
            EXPECT_GT(x, 0.0);
            total += x;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        // fixed point of the normalized map: A w is parallel to w
        std::vector<double> aw(k, 0.0);
        double aw_total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) aw[i] += a[i][j] * w[j];
            aw_total += aw[i];
        }
        for (std::size_t i = 0; i < k; ++i) EXPECT_NEAR(aw[i] / aw_total, w[i], 1e-8);
    }
}

TEST(AhpWeights, RowRescalingOnConsistentMatrices) {
    // scaling row r by c and repairing the reciprocal entries scales w_r by c;
    // the order of the other criteria is untouched
    Rng rng(8);
    std::uniform_real_distribution<double> u(0.1, 9.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 3;
        std::vector<double> w(k);
        for (auto& x : w) x = u(rng);
        const auto cm = consistent(w);
        const std::size_t r = std::size_t(trial) % k;
        const double c = u(rng);
        auto a = cm.entries();
        for (std::size_t j = 0; j < k; ++j)
            if (j != r) {
                a[r][j] *= c;
                a[j][r] = 1.0 / a[r][j];
            }
        const auto rescaled = ahp_weights(ComparisonMatrix(a));
        auto w2 = w;
        w2[r] *= c;
        const double total = std::accumulate(w2.begin(), w2.end(), 0.0);
        for (std::size_t i = 0; i < k; ++i) EXPECT_NEAR(rescaled[i], w2[i] / total, 1e-8);

        const auto before = ahp_weights(cm);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                if (i != r && j != r && i != j) EXPECT_EQ(before[i] < before[j], rescaled[i] < rescaled[j]);
    }
}

TEST(TrustIndicator, Examples) {
    const std::vector<double> uniform(4, 0.25);
    const std::vector<double> skewed{0.1, 0.2, 0.3, 0.4};
    // adjusted (1,1,1,1) means s_rt = 0
    EXPECT_EQ(trust_indicator({0.0, 1.0, 1.0, 1.0}, skewed, 0.9), 1);
    EXPECT_EQ(trust_indicator({1.0, 0.0, 0.0, 0.0}, uniform, 0.1), 0);
    EXPECT_EQ(trust_indicator({0.0, 1.0, 0.0, 0.0}, uniform, 0.5), 1);
    EXPECT_THROW(trust_indicator({0.0, 0.0, 0.0, 0.0}, uniform, 1.5), InputError);
    EXPECT_THROW(trust_indicator({0.0, 0.0, 0.0, 0.0}, uniform, -0.1), InputError);
    EXPECT_THROW(trust_indicator({0.0, 0.0, 0.0, 0.0}, std::vector<double>{1.0}, 0.5), InputError);
}

TEST(TrustIndicator, MonotoneInAdjustedComponents) {
    Rng rng(44);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10000; ++trial) {
        Scores s{u(rng), u(rng), u(rng), u(rng)};
        std::vector<double> w(4);
        double total = 0.0;
        for (auto& x : w) total += (x = u(rng));
        for (auto& x : w) x /= total;
        const double tau = u(rng);
        const int before = trust_indicator(s, w, tau);
        const std::size_t k = std::size_t(trial % 4);
        // raising the adjusted component means lowering s_rt for k = 0
        if (k == 0) s[0] = s[0] * u(rng);
        else s[k] = s[k] + (1.0 - s[k]) * u(rng);
        if (before == 1) ASSERT_EQ(trust_indicator(s, w, tau), 1);
    }
}

TEST(Rank, Examples) {
    EXPECT_EQ(node_rank(std::vector<int>(10, 1)), 10.0);
    EXPECT_EQ(node_rank(std::vector<int>(7, 0)), 0.0);
    EXPECT_EQ(node_rank(std::vector<int>{1, 0, 1, 0, 1, 0}), 3.0);

    IndicatorWindow window(6);
    for (int k = 0; k < 20; ++k) window.push(k % 2 == 0 ? 1 : 0);
    EXPECT_EQ(window.size(), 6u);
    EXPECT_EQ(window.rank(), 3.0);
    EXPECT_THROW(IndicatorWindow(0), InputError);
}

TEST(Activity, Examples) {
    EXPECT_EQ(activity_level(10.0, 2.0, 10.0), 1.0);
    EXPECT_EQ(activity_level(2.0, 2.0, 10.0), 0.0);
    EXPECT_EQ(activity_level(6.0, 2.0, 10.0), 0.5);
    EXPECT_EQ(activity_level(4.0, 4.0, 4.0), 0.0);
}

TEST(TrustCsv, Layout) {
    TrustProfile p;
    p.node = 3;
    p.scores = {0.5, 0.25, 1.0, 0.0};
    p.weights = {0.25, 0.25, 0.25, 0.25};
    p.indicator = 1;
    p.rank = 12;
    p.activity = 0.75;
    std::ostringstream out;
    write_trust_csv(out, std::span<const TrustProfile>(&p, 1));
    EXPECT_EQ(out.str(), "node,s_rt,s_tp,s_av,s_sr,indicator,rank,activity\n3,0.5,0.25,1,0,1,12,0.75\n");
}
