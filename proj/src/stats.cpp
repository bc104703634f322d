#include "cohmark/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

#include "cohmark/errors.hpp"

namespace cohmark::stats {

namespace {

// Midranks of the pooled sample (1-based).
std::vector<double> midranks(const std::vector<double>& pooled_sorted) {
    const std::size_t n = pooled_sorted.size();
    std::vector<double> rank_of_sorted(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled_sorted[j + 1] == pooled_sorted[i]) ++j;
        double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) rank_of_sorted[k] = r;
        i = j + 1;
    }
    return rank_of_sorted;
}

double rank_sum_u(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<std::size_t> order(pooled.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });
    std::vector<double> sorted(pooled.size());
    for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = pooled[order[i]];
    std::vector<double> ranks_sorted = midranks(sorted);
    double r1 = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (order[i] < a.size()) r1 += ranks_sorted[i];
    }
    double n1 = static_cast<double>(a.size());
    return r1 - n1 * (n1 + 1.0) / 2.0;
}

// Walks every way of assigning n1 of the pooled observations to group one and
// counts splits at least as far from the null mean as the observed U.
double exact_two_sided_p(const std::vector<double>& pooled_ranks, int n1, double u_obs) {
    const int n = static_cast<int>(pooled_ranks.size());
    const double mu = static_cast<double>(n1) * (n - n1) / 2.0;
    const double dev_obs = std::fabs(u_obs - mu) - 1e-12;

    std::vector<int> comb(n1);
    for (int i = 0; i < n1; ++i) comb[i] = i;
    std::uint64_t total = 0;
    std::uint64_t extreme = 0;
    while (true) {
        double r1 = 0.0;
        for (int i = 0; i < n1; ++i) r1 += pooled_ranks[comb[i]];
        double u = r1 - static_cast<double>(n1) * (n1 + 1.0) / 2.0;
        ++total;
        if (std::fabs(u - mu) >= dev_obs) ++extreme;

        int i = n1 - 1;
        while (i >= 0 && comb[i] == n - n1 + i) --i;
        if (i < 0) break;
        ++comb[i];
        for (int j = i + 1; j < n1; ++j) comb[j] = comb[j - 1] + 1;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

double normal_approx_p(const std::vector<double>& a, const std::vector<double>& b, double u) {
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    const double n = n1 + n2;
    const double mu = n1 * n2 / 2.0;

    // tie correction over pooled value multiplicities
    std::map<double, double> counts;
    for (double x : a) counts[x] += 1.0;
    for (double x : b) counts[x] += 1.0;
    double tie_term = 0.0;
    for (const auto& [value, t] : counts) {
        (void)value;
        tie_term += t * t * t - t;
    }
    double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var <= 0.0) return 1.0;

    double diff = u - mu;
    double cc = diff > 0 ? -0.5 : (diff < 0 ? 0.5 : 0.0);  // continuity, toward the mean
    double z = (diff + cc) / std::sqrt(var);
    return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

bool all_identical(const std::vector<double>& a, const std::vector<double>& b) {
    double v = a.empty() ? b.front() : a.front();
    for (double x : a)
        if (x != v) return false;
    for (double x : b)
        if (x != v) return false;
    return true;
}

}  // namespace

TestResult mann_whitney(std::span<const double> sa, std::span<const double> sb, MwMode mode) {
    if (sa.empty() || sb.empty()) throw DataError("mann_whitney: empty sample");
    std::vector<double> a(sa.begin(), sa.end());
    std::vector<double> b(sb.begin(), sb.end());

    TestResult res;
    res.n1 = static_cast<int>(a.size());
    res.n2 = static_cast<int>(b.size());
    res.statistic = rank_sum_u(a, b);

    if (all_identical(a, b)) {
        res.p_value = 1.0;
        res.degenerate = true;
        res.method = "mann_whitney/degenerate";
        return res;
    }

    const int n = res.n1 + res.n2;
    bool exact = mode == MwMode::exact || (mode == MwMode::auto_mode && n <= 16);
    if (mode == MwMode::exact && n > 26)
        throw ConfigError("mann_whitney exact mode is infeasible for n1+n2 = " +
                          std::to_string(n) + "; use normal_approx");
    if (exact) {
        std::vector<double> pooled(a.begin(), a.end());
        pooled.insert(pooled.end(), b.begin(), b.end());
        std::sort(pooled.begin(), pooled.end());
        res.p_value = exact_two_sided_p(midranks(pooled), res.n1, res.statistic);
        res.method = "mann_whitney/exact";
    } else {
        res.p_value = normal_approx_p(a, b, res.statistic);
        res.method = "mann_whitney/normal";
    }
    res.p_value = std::min(1.0, res.p_value);
    return res;
}

TestResult t_test(std::span<const double> sa, std::span<const double> sb) {
    if (sa.size() < 2 || sb.size() < 2) throw DataError("t_test: each sample needs >= 2 values");
    Descriptive da = describe(sa);
    Descriptive db = describe(sb);

    TestResult res;
    res.n1 = da.n;
    res.n2 = db.n;
    res.method = "welch_t";

    double va = da.stddev * da.stddev / da.n;
    double vb = db.stddev * db.stddev / db.n;
    double se2 = va + vb;
    if (se2 == 0.0) {
        res.degenerate = true;
        if (da.mean == db.mean) {
            res.statistic = 0.0;
            res.p_value = 1.0;
        } else {
            res.statistic = da.mean > db.mean ? HUGE_VAL : -HUGE_VAL;
            res.p_value = 0.0;
        }
        return res;
    }
    res.statistic = (da.mean - db.mean) / std::sqrt(se2);
    double df = se2 * se2 /
                (va * va / (da.n - 1) + vb * vb / (db.n - 1));
    res.p_value = student_t_two_sided_p(res.statistic, df);
    return res;
}

Descriptive describe(std::span<const double> values, bool sample_std) {
    if (values.empty()) throw DataError("describe: empty sample");
    Descriptive d;
    d.n = static_cast<int>(values.size());
    double sum = 0.0;
    for (double x : values) sum += x;
    d.mean = sum / d.n;
    if (d.n == 1) {
        d.stddev = 0.0;
        d.degenerate = true;
        return d;
    }
    double ss = 0.0;
    for (double x : values) {
        double dx = x - d.mean;
        ss += dx * dx;
    }
    d.stddev = std::sqrt(ss / (sample_std ? d.n - 1 : d.n));
    return d;
}

namespace {

// Regularized incomplete beta via Lentz continued fraction.
double betacf(double a, double b, double x) {
    const int max_iter = 200;
    const double eps = 3e-14;
    const double fpmin = 1e-300;
    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

double inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                   b * std::log(1.0 - x);
    double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_two_sided_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    double x = df / (df + t * t);
    return inc_beta(df / 2.0, 0.5, x);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace cohmark::stats
