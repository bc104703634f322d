#pragma once

#include <span>
#include <string>
#include <vector>

namespace cohmark::stats {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::string method;
    int n1 = 0;
    int n2 = 0;
    bool degenerate = false;  // all values identical, or zero variance
};

enum class MwMode { exact, normal_approx, auto_mode };

// Two-sided Mann-Whitney U with midrank ties. Exact mode enumerates every
// assignment of the pooled sample to the two groups (feasible for
// n1 + n2 <= 16); auto picks exact for small samples.
TestResult mann_whitney(std::span<const double> a, std::span<const double> b,
                        MwMode mode = MwMode::auto_mode);

// Welch two-sample t-test (unequal variances), two-sided p.
TestResult t_test(std::span<const double> a, std::span<const double> b);

struct Descriptive {
    double mean = 0.0;
    double stddev = 0.0;
    int n = 0;
    bool degenerate = false;  // n == 1, stddev reported as 0
};

// sample_std=true uses the n-1 denominator, false the population form.
Descriptive describe(std::span<const double> values, bool sample_std = true);

// Student-t two-sided tail probability, exposed for reuse in tests.
double student_t_two_sided_p(double t, double df);

// Standard normal CDF.
double normal_cdf(double z);

}  // namespace cohmark::stats
