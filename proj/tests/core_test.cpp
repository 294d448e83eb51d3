#include "bayescreen/core.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace bayescreen;

namespace {

constexpr double kRel = 1e-12;

// Frozen from exact rational arithmetic (a = 4/5, b = 17/20).
constexpr double kPpvFig2AtTenth = 16.0 / 43.0;            // 0.372093...
constexpr double kNpvFig2AtHalf = 17.0 / 21.0;             // 0.809523...
constexpr double kTwoPositivesFig2 = 256.0 / 337.0;        // 0.759643...
constexpr double kPositiveThenNegativeFig2 = 0.12237093690248566;

void expect_rel(double actual, double expected, double rel = kRel) {
    EXPECT_NEAR(actual, expected, rel * std::max(std::abs(expected), 1e-300)) << "expected " << expected;
}

template <class F>
void expect_kind(F&& f, ErrorKind kind) {
    try {
        f();
        ADD_FAILURE() << "expected " << to_string(kind);
    } catch (const DomainError& e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
    }
}

} // namespace

TEST(Oracles, FrozenValuesAgreeWithEnumeration) {
    expect_rel(oracle::all_positive_posterior(0.8, 0.85, 0.1, 1), kPpvFig2AtTenth, 1e-14);
    expect_rel(oracle::all_positive_posterior(0.8, 0.85, 0.1, 2), kTwoPositivesFig2, 1e-14);
    expect_rel(oracle::joint_posterior(0.8, 0.85, 0.1, {true, false}), kPositiveThenNegativeFig2, 1e-14);
    expect_rel(1.0 - oracle::joint_posterior(0.8, 0.85, 0.5, {false}), kNpvFig2AtHalf, 1e-14);
}

TEST(TestProfile, RejectsOutOfRangeProbabilities) {
    expect_kind([] { TestProfile(1.01, 0.5); }, ErrorKind::InvalidProbability);
    expect_kind([] { TestProfile(0.5, -0.1); }, ErrorKind::InvalidProbability);
    expect_kind([] { TestProfile(std::nan(""), 0.5); }, ErrorKind::InvalidProbability);
    expect_kind([] { Prior(1.5); }, ErrorKind::InvalidProbability);
    EXPECT_NO_THROW(TestProfile(0.0, 1.0));
    EXPECT_NO_THROW(Prior(0.0));
}

TEST(Epsilon, SumsSensitivityAndSpecificity) {
    EXPECT_DOUBLE_EQ(epsilon(TestProfile(0.98, 0.97)), 1.95);
    EXPECT_EQ(epsilon(TestProfile(0.0, 0.0)), 0.0);
    EXPECT_DOUBLE_EQ(epsilon(TestProfile(0.80, 0.85)), 1.65);
}

TEST(PositiveLikelihoodRatio, Examples) {
    expect_rel(positive_likelihood_ratio(TestProfile(0.98, 0.97)), 98.0 / 3.0, 1e-13);
    EXPECT_EQ(positive_likelihood_ratio(TestProfile(0.5, 0.5)), 1.0);
    expect_kind([] { positive_likelihood_ratio(TestProfile(0.5, 1.0)); }, ErrorKind::SpecificityOne);
}

TEST(Ppv, Examples) {
    EXPECT_DOUBLE_EQ(ppv(TestProfile(0.5, 0.5), Prior(0.3)).value, 0.3);
    EXPECT_EQ(ppv(TestProfile(0.3, 0.2), Prior(1.0)).value, 1.0);
    EXPECT_EQ(ppv(TestProfile(0.98, 0.97), Prior(1.0)).value, 1.0);
    expect_rel(ppv(TestProfile(0.80, 0.85), Prior(0.10)).value, kPpvFig2AtTenth);
    EXPECT_EQ(ppv(TestProfile(0.80, 0.85), Prior(0.10)).kind, PredictiveKind::Positive);
}

TEST(Ppv, DegenerateWhenNoPositiveCanOccur) {
    expect_kind([] { ppv(TestProfile(0.0, 1.0), Prior(0.4)); }, ErrorKind::DegenerateTest);
    expect_kind([] { ppv(TestProfile(0.0, 0.3), Prior(1.0)); }, ErrorKind::DegenerateTest);
    expect_kind([] { ppv(TestProfile(0.7, 1.0), Prior(0.0)); }, ErrorKind::DegenerateTest);
}

TEST(Npv, Examples) {
    EXPECT_DOUBLE_EQ(npv(TestProfile(0.5, 0.5), Prior(0.3)).value, 0.7);
    EXPECT_EQ(npv(TestProfile(0.9, 0.2), Prior(0.0)).value, 1.0);
    expect_rel(npv(TestProfile(0.80, 0.85), Prior(0.5)).value, kNpvFig2AtHalf);
    EXPECT_EQ(npv(TestProfile(0.80, 0.85), Prior(0.5)).kind, PredictiveKind::Negative);
    expect_kind([] { npv(TestProfile(1.0, 0.0), Prior(0.5)); }, ErrorKind::DegenerateTest);
    expect_kind([] { npv(TestProfile(1.0, 0.5), Prior(1.0)); }, ErrorKind::DegenerateTest);
}

TEST(PrevalenceThreshold, Examples) {
    EXPECT_NEAR(prevalence_threshold(TestProfile(0.98, 0.97)), 0.1489, 0.0005);
    EXPECT_EQ(prevalence_threshold(TestProfile(1.0, 1.0)), 0.0);
    EXPECT_NEAR(prevalence_threshold(TestProfile(0.80, 0.85)), 0.30217, 1e-5);
    expect_kind([] { prevalence_threshold(TestProfile(0.5, 0.5)); }, ErrorKind::EpsilonOne);
    expect_kind([] { prevalence_threshold(TestProfile(0.25, 0.75)); }, ErrorKind::EpsilonOne);
}

TEST(PrevalenceThreshold, LocatesMaximumCurvature) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 0.999);
    int checked = 0;
    while (checked < 40) {
        const double a = u(rng), b = u(rng);
        if (a + b <= 1.05) continue;
        const double threshold = prevalence_threshold(TestProfile(a, b));
        ASSERT_GT(threshold, 0.0);
        ASSERT_LT(threshold, 1.0);
        EXPECT_NEAR(threshold, oracle::max_curvature_prior(a, b), 1e-6) << "a=" << a << " b=" << b;
        ++checked;
    }
    EXPECT_NEAR(prevalence_threshold(TestProfile(0.80, 0.85)), oracle::max_curvature_prior(0.80, 0.85), 1e-6);
}

TEST(SequentialPpv, Examples) {
    const TestProfile fig2(0.80, 0.85);
    EXPECT_EQ(sequential_ppv(fig2, Prior(0.10), 1).value, ppv(fig2, Prior(0.10)).value);
    expect_rel(sequential_ppv(fig2, Prior(0.10), 2).value, kTwoPositivesFig2);
    EXPECT_DOUBLE_EQ(sequential_ppv(TestProfile(0.5, 0.5), Prior(0.3), 10).value, 0.3);
    EXPECT_EQ(sequential_ppv(fig2, Prior(0.10), 0).value, 0.10);

    // LR+ = e at prior 0.1 crosses 0.99 between 6 and 7 positives.
    const auto lr_e = TestProfile::from_log_likelihood_ratio(1.0);
    EXPECT_LT(sequential_ppv(lr_e, Prior(0.10), 6).value, 0.99);
    EXPECT_GE(sequential_ppv(lr_e, Prior(0.10), 7).value, 0.99);
}

TEST(SequentialPpv, ErrorsAndUnderflow) {
    expect_kind([] { sequential_ppv(TestProfile(0.9, 1.0), Prior(0.2), 3); }, ErrorKind::SpecificityOne);
    expect_kind([] { sequential_ppv(TestProfile(0.0, 0.5), Prior(1.0), 3); }, ErrorKind::DegenerateTest);
    // Both terms underflow a double; the odds route still answers.
    EXPECT_NEAR(sequential_ppv(TestProfile(0.2, 0.9), Prior(0.5), 1000).value, 1.0, 1e-12);
    EXPECT_NEAR(sequential_ppv(TestProfile(0.1, 0.8), Prior(0.5), 1000).value, 0.0, 1e-12);
    EXPECT_EQ(sequential_ppv(TestProfile(0.0, 0.5), Prior(0.4), 3).value, 0.0);
}

TEST(SequentialPpv, MatchesJointEnumeration) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int trial = 0; trial < 200; ++trial) {
        const double a = u(rng), b = u(rng), phi = u(rng);
        const std::size_t n = 1 + trial % 10;
        expect_rel(sequential_ppv(TestProfile(a, b), Prior(phi), n).value,
                   oracle::all_positive_posterior(a, b, phi, n), 1e-11);
    }
}

TEST(PosteriorUpdate, Examples) {
    const TestProfile fig2(0.80, 0.85);
    expect_rel(posterior_update(Prior(0.10), fig2, TestResult::Positive).phi(), kPpvFig2AtTenth);
    EXPECT_DOUBLE_EQ(posterior_update(Prior(0.3), TestProfile(0.5, 0.5), TestResult::Positive).phi(), 0.3);
    EXPECT_DOUBLE_EQ(posterior_update(Prior(0.3), TestProfile(0.5, 0.5), TestResult::Negative).phi(), 0.3);

    const Prior once = posterior_update(Prior(0.10), fig2, TestResult::Positive);
    expect_rel(posterior_update(once, fig2, TestResult::Positive).phi(), sequential_ppv(fig2, Prior(0.10), 2).value);
    expect_rel(posterior_update(once, fig2, TestResult::Negative).phi(), kPositiveThenNegativeFig2);
}

TEST(PosteriorUpdate, NegativeBranchIsComplementOfNpv) {
    const TestProfile t(0.7, 0.9);
    for (double phi : {0.01, 0.2, 0.5, 0.93}) {
        expect_rel(posterior_update(Prior(phi), t, TestResult::Negative).phi(), 1.0 - npv(t, Prior(phi)).value, 1e-12);
    }
    expect_kind([] { posterior_update(Prior(1.0), TestProfile(1.0, 0.5), TestResult::Negative); },
                ErrorKind::DegenerateTest);
}

TEST(PosteriorUpdate, MixedSequencesMatchJointEnumeration) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 100; ++trial) {
        const TestProfile t(u(rng), u(rng));
        const double phi = u(rng);
        std::vector<bool> observed(1 + trial % 8);
        Prior p(phi);
        for (std::size_t k = 0; k < observed.size(); ++k) {
            observed[k] = coin(rng);
            p = posterior_update(p, t, observed[k] ? TestResult::Positive : TestResult::Negative);
        }
        expect_rel(p.phi(), oracle::joint_posterior(t.sensitivity(), t.specificity(), phi, observed), 1e-11);
    }
}

TEST(ConvergenceClass, Trichotomy) {
    EXPECT_EQ(convergence_class(TestProfile(0.98, 0.97)), ConvergenceClass::ConvergesToOne);
    EXPECT_EQ(convergence_class(TestProfile(0.5, 0.5)), ConvergenceClass::StaysAtPrior);
    EXPECT_EQ(convergence_class(TestProfile(0.3, 0.6)), ConvergenceClass::ConvergesToZero);
    expect_kind([] { convergence_class(TestProfile(0.3, 1.0)); }, ErrorKind::SpecificityOne);
    // Sensitivity above one half is not what decides it.
    EXPECT_EQ(convergence_class(TestProfile(0.4, 0.9)), ConvergenceClass::ConvergesToOne);
    EXPECT_EQ(convergence_class(TestProfile(0.6, 0.2)), ConvergenceClass::ConvergesToZero);
}

TEST(ConvergenceClass, SequentialPpvApproachesTheLimit) {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int trial = 0; trial < 300; ++trial) {
        const TestProfile t(u(rng), u(rng));
        const Prior prior(u(rng));
        const double far = sequential_ppv(t, prior, 200).value;
        const double ratio = t.sensitivity() / (1.0 - t.specificity());
        if (std::abs(std::log(ratio)) < 0.15) continue;  // too slow to settle by n = 200
        switch (convergence_class(t)) {
        case ConvergenceClass::ConvergesToOne: EXPECT_NEAR(far, 1.0, 1e-6); break;
        case ConvergenceClass::ConvergesToZero: EXPECT_NEAR(far, 0.0, 1e-6); break;
        case ConvergenceClass::StaysAtPrior: EXPECT_DOUBLE_EQ(far, prior.phi()); break;
        }
    }
}

TEST(IterationsNeeded, PrintedTableCells) {
    const auto lr1 = TestProfile::from_log_likelihood_ratio(1.0);
    auto plan = iterations_needed(lr1, Prior(0.10), 0.99);
    EXPECT_EQ(plan.status, PlanStatus::Planned);
    EXPECT_NEAR(*plan.raw_n, 6.79, 0.005);
    EXPECT_EQ(*plan.n_i, 7);

    plan = iterations_needed(TestProfile::from_log_likelihood_ratio(2.0), Prior(0.02), 0.95);
    EXPECT_NEAR(*plan.raw_n, 3.42, 0.005);
    EXPECT_EQ(*plan.n_i, 4);

    plan = iterations_needed(TestProfile::from_log_likelihood_ratio(0.5), Prior(0.2), 0.50);
    EXPECT_NEAR(*plan.raw_n, 2.77, 0.005);
    EXPECT_EQ(*plan.n_i, 3);
}

TEST(IterationsNeeded, LogLikelihoodRatioRouteAgrees) {
    for (double log_lr : oracle::kPrintedLogLr) {
        for (double phi : oracle::kPrintedPhi) {
            for (double target : oracle::kPrintedTargets) {
                const auto by_lr = iterations_needed(LogLikelihoodRatio{log_lr}, Prior(phi), target);
                const auto by_test =
                    iterations_needed(TestProfile::from_log_likelihood_ratio(log_lr), Prior(phi), target);
                EXPECT_EQ(by_lr.status, by_test.status);
                EXPECT_EQ(by_lr.n_i, by_test.n_i);
                EXPECT_NEAR(*by_lr.raw_n, *by_test.raw_n, 1e-12);
            }
        }
    }
}

TEST(IterationsNeeded, StatusRules) {
    auto plan = iterations_needed(TestProfile(0.9, 0.8), Prior(0.3), 0.30);
    EXPECT_EQ(plan.status, PlanStatus::AlreadyMet);
    EXPECT_EQ(plan.n_i, 0);

    plan = iterations_needed(TestProfile(0.4, 0.5), Prior(0.1), 0.9);
    EXPECT_EQ(plan.status, PlanStatus::NonInformativeTest);
    EXPECT_FALSE(plan.n_i);
    EXPECT_FALSE(plan.raw_n);

    plan = iterations_needed(TestProfile(0.5, 0.5), Prior(0.1), 0.9);
    EXPECT_EQ(plan.status, PlanStatus::NonInformativeTest);

    plan = iterations_needed(TestProfile(0.9, 0.8), Prior(0.0), 0.9);
    EXPECT_EQ(plan.status, PlanStatus::InfeasibleTarget);
    EXPECT_FALSE(plan.n_i);

    plan = iterations_needed(TestProfile(0.9, 0.8), Prior(1.0), 1.0);
    EXPECT_EQ(plan.status, PlanStatus::AlreadyMet);
    EXPECT_EQ(plan.n_i, 0);

    // A perfect-specificity test still reports the singular formula.
    expect_kind([] { iterations_needed(TestProfile(0.9, 1.0), Prior(0.1), 0.9); }, ErrorKind::SpecificityOne);
    expect_kind([] { iterations_needed(TestProfile(0.9, 0.8), Prior(0.4), 1.0); }, ErrorKind::InfeasibleTarget);
    expect_kind([] { iterations_needed(TestProfile(0.9, 0.8), Prior(0.4), 0.0); }, ErrorKind::InvalidTarget);
    expect_kind([] { iterations_needed(TestProfile(0.9, 0.8), Prior(0.4), 1.2); }, ErrorKind::InvalidTarget);
    expect_kind([] { iterations_needed(TestProfile(0.9, 0.8), Prior(0.4), std::nan("")); },
                ErrorKind::InvalidTarget);
}

TEST(IterationsNeeded, ExactIntegerRawIsNotBumped) {
    // LR+ = 3, prior odds 1/9, target odds 3: exactly 3 positives.
    const TestProfile t(0.6, 0.8);
    const auto plan = iterations_needed(t, Prior(0.1), 0.75);
    EXPECT_NEAR(*plan.raw_n, 3.0, 1e-12);
    EXPECT_EQ(*plan.n_i, 3);
    EXPECT_GE(sequential_ppv(t, Prior(0.1), 3).value, 0.75 - 1e-15);
}

TEST(IterationsNeeded, PlanIsTightAndMatchesLinearSearch) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.001, 0.999);
    int planned = 0;
    while (planned < 2000) {
        const double a = u(rng), b = u(rng), phi = u(rng), target = u(rng);
        if (a <= 1.0 - b || target <= phi) continue;
        const TestProfile t(a, b);
        const auto plan = iterations_needed(t, Prior(phi), target);
        ASSERT_EQ(plan.status, PlanStatus::Planned);
        const auto n = *plan.n_i;
        ASSERT_GE(n, 1);
        EXPECT_GE(sequential_ppv(t, Prior(phi), n).value, target);
        if (n >= 2) {
            EXPECT_LT(sequential_ppv(t, Prior(phi), n - 1).value, target);
        }
        EXPECT_LE(std::abs(static_cast<double>(n) - std::ceil(*plan.raw_n)), 1.0);
        if (n < 5000) {
            EXPECT_NEAR(static_cast<double>(n),
                        static_cast<double>(oracle::brute_force_iterations(a, b, phi, target)), 1.0);
        }
        ++planned;
    }
}

TEST(IterationsNeeded, NonIncreasingInLogLikelihoodRatio) {
    for (double phi : {0.01, 0.1, 0.4}) {
        for (double target : {0.5, 0.9, 0.999}) {
            if (target <= phi) continue;
            std::int64_t previous = INT64_MAX;
            for (double log_lr = 0.05; log_lr < 8.0; log_lr += 0.05) {
                const auto n = *iterations_needed(LogLikelihoodRatio{log_lr}, Prior(phi), target).n_i;
                EXPECT_LE(n, previous);
                previous = n;
            }
        }
    }
}

TEST(Curves, Examples) {
    const double endpoints[] = {0.0, 1.0};
    auto pts = ppv_curve(TestProfile(0.98, 0.97), endpoints);
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_EQ(pts[0].value, 0.0);
    EXPECT_EQ(pts[1].value, 1.0);

    const double two[] = {0.2, 0.7};
    pts = ppv_curve(TestProfile(0.5, 0.5), two);
    EXPECT_DOUBLE_EQ(pts[0].value, 0.2);
    EXPECT_DOUBLE_EQ(pts[1].value, 0.7);
    EXPECT_EQ(pts[1].phi, 0.7);

    const double tenth[] = {0.10};
    expect_rel(ppv_curve(TestProfile(0.80, 0.85), tenth)[0].value, kPpvFig2AtTenth);

    pts = npv_curve(TestProfile(0.9, 0.6), endpoints);
    EXPECT_EQ(pts[0].value, 1.0);
    EXPECT_EQ(pts[1].value, 0.0);
    const double point3[] = {0.3};
    EXPECT_DOUBLE_EQ(npv_curve(TestProfile(0.5, 0.5), point3)[0].value, 0.7);
    const double half[] = {0.5};
    expect_rel(npv_curve(TestProfile(0.80, 0.85), half)[0].value, kNpvFig2AtHalf);
}

TEST(Curves, ErrorsPropagate) {
    const double bad[] = {0.2, 1.2};
    expect_kind([&] { ppv_curve(TestProfile(0.9, 0.9), bad); }, ErrorKind::InvalidProbability);
    const double zero[] = {0.0};
    expect_kind([&] { ppv_curve(TestProfile(0.9, 1.0), zero); }, ErrorKind::DegenerateTest);
}

TEST(Curves, MonotoneWhenInformative) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = u(rng), b = u(rng);
        if (a <= 1.0 - b) continue;
        std::vector<double> grid(50);
        for (auto& g : grid) g = u(rng);
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        const auto p = ppv_curve(TestProfile(a, b), grid);
        const auto q = npv_curve(TestProfile(a, b), grid);
        for (std::size_t i = 1; i < grid.size(); ++i) {
            EXPECT_GT(p[i].value, p[i - 1].value);
            EXPECT_LT(q[i].value, q[i - 1].value);
        }
    }
}

TEST(Curves, UninformativeTestIsIdentity) {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const double b = u(rng);
        const double phi = u(rng);
        const TestProfile t(1.0 - b, b);
        if (t.sensitivity() == 0.0 && phi == 1.0) continue;
        EXPECT_NEAR(ppv(t, Prior(phi)).value, phi, 1e-15);
    }
}

TEST(Chaining, FoldEqualsClosedForm) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.001, 0.999);
    for (int trial = 0; trial < 300; ++trial) {
        const TestProfile t(u(rng), u(rng));
        const Prior start(u(rng));
        Prior p = start;
        for (std::uint64_t n = 1; n <= 20; ++n) {
            p = posterior_update(p, t, TestResult::Positive);
            expect_rel(p.phi(), sequential_ppv(t, start, n).value);
        }
    }
}
