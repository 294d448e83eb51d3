#pragma once
// Closed-form screening quantities: predictive values, the prevalence
// threshold, repeated-positive Bayesian updating and the iteration planner.
//
// Notation used in comments: a = sensitivity, b = specificity,
// phi = prior (prevalence / pre-test probability), rho = PPV target.
//
// Every function is pure. Probabilities are validated when the value types
// are constructed, so operations only check their own singularities.

#include "bayescreen/error.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bayescreen {

namespace detail {

inline double checked_probability(double value, const char* what) {
    if (!(value >= 0.0 && value <= 1.0)) {
        throw DomainError(ErrorKind::InvalidProbability,
                          std::string(what) + " must lie in [0, 1], got " + std::to_string(value));
    }
    return value;
}

} // namespace detail

class TestProfile {
public:
    TestProfile(double sensitivity, double specificity)
        : sensitivity_(detail::checked_probability(sensitivity, "sensitivity")),
          specificity_(detail::checked_probability(specificity, "specificity")) {}

    // A profile whose LR+ is exp(log_lr), holding sensitivity fixed.
    static TestProfile from_log_likelihood_ratio(double log_lr, double sensitivity = 0.95) {
        if (!std::isfinite(log_lr)) {
            throw DomainError(ErrorKind::InvalidAxis, "ln LR+ must be finite");
        }
        return TestProfile(sensitivity, 1.0 - sensitivity / std::exp(log_lr));
    }

    double sensitivity() const noexcept { return sensitivity_; }
    double specificity() const noexcept { return specificity_; }

    // LR+ exists iff specificity < 1.
    bool has_likelihood_ratio() const noexcept { return specificity_ < 1.0; }

    friend bool operator==(const TestProfile&, const TestProfile&) = default;

private:
    double sensitivity_;
    double specificity_;
};

class Prior {
public:
    explicit Prior(double phi) : phi_(detail::checked_probability(phi, "prior")) {}

    double phi() const noexcept { return phi_; }

    friend bool operator==(const Prior&, const Prior&) = default;

private:
    double phi_;
};

enum class PredictiveKind { Positive, Negative };

struct PredictiveValue {
    double value;
    PredictiveKind kind;
};

enum class TestResult { Positive, Negative };

enum class ConvergenceClass { ConvergesToOne, StaysAtPrior, ConvergesToZero };

enum class PlanStatus { AlreadyMet, Planned, InfeasibleTarget, NonInformativeTest };

struct IterationPlan {
    double target_rho = 0.0;
    std::optional<double> raw_n;          // real-valued solution before ceiling
    std::optional<std::int64_t> n_i;      // whole number of positive tests
    PlanStatus status = PlanStatus::Planned;
};

// ln LR+ as a scalar, for callers that parameterize a test by its
// likelihood ratio rather than by (a, b).
struct LogLikelihoodRatio {
    double value;
};

struct CurvePoint {
    double phi;
    double value;
};

constexpr const char* to_string(ConvergenceClass c) noexcept {
    switch (c) {
    case ConvergenceClass::ConvergesToOne: return "ConvergesToOne";
    case ConvergenceClass::StaysAtPrior: return "StaysAtPrior";
    case ConvergenceClass::ConvergesToZero: return "ConvergesToZero";
    }
    return "Unknown";
}

constexpr const char* to_string(PlanStatus s) noexcept {
    switch (s) {
    case PlanStatus::AlreadyMet: return "AlreadyMet";
    case PlanStatus::Planned: return "Planned";
    case PlanStatus::InfeasibleTarget: return "InfeasibleTarget";
    case PlanStatus::NonInformativeTest: return "NonInformativeTest";
    }
    return "Unknown";
}

inline double epsilon(const TestProfile& test) noexcept {
    return test.sensitivity() + test.specificity();
}

inline double positive_likelihood_ratio(const TestProfile& test) {
    if (!test.has_likelihood_ratio()) {
        throw DomainError(ErrorKind::SpecificityOne, "LR+ is undefined when specificity = 1");
    }
    return test.sensitivity() / (1.0 - test.specificity());
}

inline PredictiveValue ppv(const TestProfile& test, const Prior& prior) {
    const double a = test.sensitivity();
    const double b = test.specificity();
    const double phi = prior.phi();
    const double true_pos = a * phi;
    const double denom = true_pos + (1.0 - b) * (1.0 - phi);
    if (!(denom > 0.0)) {
        throw DomainError(ErrorKind::DegenerateTest, "a positive result has probability zero");
    }
    return {true_pos / denom, PredictiveKind::Positive};
}

inline PredictiveValue npv(const TestProfile& test, const Prior& prior) {
    const double a = test.sensitivity();
    const double b = test.specificity();
    const double phi = prior.phi();
    const double true_neg = b * (1.0 - phi);
    const double denom = (1.0 - a) * phi + true_neg;
    if (!(denom > 0.0)) {
        throw DomainError(ErrorKind::DegenerateTest, "a negative result has probability zero");
    }
    return {true_neg / denom, PredictiveKind::Negative};
}

// Prevalence at the point of maximum curvature of the PPV curve.
inline double prevalence_threshold(const TestProfile& test) {
    const double a = test.sensitivity();
    const double b = test.specificity();
    const double excess = a + b - 1.0;
    if (excess == 0.0) {
        throw DomainError(ErrorKind::EpsilonOne, "prevalence threshold is undefined when a + b = 1");
    }
    return (std::sqrt(a * (1.0 - b)) + b - 1.0) / excess;
}

// PPV after n consecutive, conditionally independent positive results.
// n = 0 returns the prior unchanged.
inline PredictiveValue sequential_ppv(const TestProfile& test, const Prior& prior, std::uint64_t n) {
    if (!test.has_likelihood_ratio()) {
        throw DomainError(ErrorKind::SpecificityOne,
                          "sequential testing is singular when specificity = 1");
    }
    const double phi = prior.phi();
    if (n == 0) return {phi, PredictiveKind::Positive};
    if (n == 1) return ppv(test, prior);

    const double a = test.sensitivity();
    const double false_pos_rate = 1.0 - test.specificity();
    const double exponent = static_cast<double>(n);

    const double true_pos = std::pow(a, exponent) * phi;
    const double false_pos = std::pow(false_pos_rate, exponent) * (1.0 - phi);
    const double denom = true_pos + false_pos;
    if (denom > 0.0) return {true_pos / denom, PredictiveKind::Positive};

    // Exact zero only when a = 0 and phi = 1; otherwise both terms underflowed.
    if (a == 0.0 || phi == 0.0) {
        if (phi == 1.0) {
            throw DomainError(ErrorKind::DegenerateTest, "a positive result has probability zero");
        }
        return {0.0, PredictiveKind::Positive};
    }
    if (phi == 1.0) return {1.0, PredictiveKind::Positive};
    const double log_odds_against = exponent * (std::log(false_pos_rate) - std::log(a))
                                    + std::log1p(-phi) - std::log(phi);
    return {1.0 / (1.0 + std::exp(log_odds_against)), PredictiveKind::Positive};
}

// One Bayesian update: the posterior after observing `result` becomes the
// next prior.
inline Prior posterior_update(const Prior& prior, const TestProfile& test, TestResult result) {
    if (result == TestResult::Positive) return Prior(ppv(test, prior).value);

    const double a = test.sensitivity();
    const double b = test.specificity();
    const double phi = prior.phi();
    const double false_neg = (1.0 - a) * phi;
    const double denom = false_neg + b * (1.0 - phi);
    if (!(denom > 0.0)) {
        throw DomainError(ErrorKind::DegenerateTest, "a negative result has probability zero");
    }
    return Prior(false_neg / denom);
}

// Limit of sequential_ppv as n grows. Compares a against 1 - b, i.e.
// P(T|D) against P(T|not D).
inline ConvergenceClass convergence_class(const TestProfile& test) {
    if (!test.has_likelihood_ratio()) {
        throw DomainError(ErrorKind::SpecificityOne, "convergence is undefined when specificity = 1");
    }
    const double a = test.sensitivity();
    const double false_pos_rate = 1.0 - test.specificity();
    if (a > false_pos_rate) return ConvergenceClass::ConvergesToOne;
    if (a < false_pos_rate) return ConvergenceClass::ConvergesToZero;
    return ConvergenceClass::StaysAtPrior;
}

// Real-valued number of positive tests that moves phi to target:
// ln[ target (phi - 1) / (phi (target - 1)) ] / ln LR+.
// No domain checks; the tables and the planner share this exact expression.
inline double raw_iterations(double target, double log_lr, double phi) noexcept {
    return std::log(target * (phi - 1.0) / (phi * (target - 1.0))) / log_lr;
}

namespace detail {

// reaches(n) must report whether n positives attain the target. It is used
// to correct ceil(raw_n) by one step where rounding in raw_n lands on the
// wrong side of an integer.
template <class Reaches>
IterationPlan plan_iterations(double log_lr, double phi, double target, Reaches reaches) {
    IterationPlan plan;
    plan.target_rho = target;

    if (target == 1.0) {
        if (phi == 1.0) {
            plan.status = PlanStatus::AlreadyMet;
            plan.n_i = 0;
            return plan;
        }
        throw DomainError(ErrorKind::InfeasibleTarget,
                          "a PPV of exactly 1 cannot be reached from a prior below 1");
    }
    if (!(log_lr > 0.0)) {
        plan.status = PlanStatus::NonInformativeTest;
        return plan;
    }
    if (phi >= target) {
        plan.status = PlanStatus::AlreadyMet;
        plan.n_i = 0;
        if (phi < 1.0) plan.raw_n = raw_iterations(target, log_lr, phi);
        return plan;
    }
    if (phi == 0.0) {
        plan.status = PlanStatus::InfeasibleTarget;
        return plan;
    }

    const double raw = raw_iterations(target, log_lr, phi);
    auto n = static_cast<std::int64_t>(std::ceil(raw));
    if (n < 1) n = 1;
    while (!reaches(n)) ++n;
    while (n > 1 && reaches(n - 1)) --n;

    plan.status = PlanStatus::Planned;
    plan.raw_n = raw;
    plan.n_i = n;
    return plan;
}

inline void check_target(double target) {
    if (!(target > 0.0 && target <= 1.0)) {
        throw DomainError(ErrorKind::InvalidTarget,
                          "target PPV must lie in (0, 1), got " + std::to_string(target));
    }
}

} // namespace detail

inline IterationPlan iterations_needed(const TestProfile& test, const Prior& prior, double target_rho) {
    detail::check_target(target_rho);
    const double log_lr = std::log(positive_likelihood_ratio(test));
    return detail::plan_iterations(log_lr, prior.phi(), target_rho, [&](std::int64_t n) {
        return sequential_ppv(test, prior, static_cast<std::uint64_t>(n)).value >= target_rho;
    });
}

// Same planner keyed by ln LR+ directly. The posterior after n positives is
// evaluated on the odds scale: odds_n = odds_0 * LR+^n.
inline IterationPlan iterations_needed(LogLikelihoodRatio log_lr, const Prior& prior, double target_rho) {
    detail::check_target(target_rho);
    if (std::isnan(log_lr.value)) {
        throw DomainError(ErrorKind::InvalidAxis, "ln LR+ must not be NaN");
    }
    const double phi = prior.phi();
    const double prior_log_odds = std::log(phi) - std::log1p(-phi);
    const double target_log_odds = std::log(target_rho) - std::log1p(-target_rho);
    return detail::plan_iterations(log_lr.value, phi, target_rho, [&](std::int64_t n) {
        return prior_log_odds + static_cast<double>(n) * log_lr.value >= target_log_odds;
    });
}

inline std::vector<CurvePoint> ppv_curve(const TestProfile& test, std::span<const double> grid) {
    std::vector<CurvePoint> out;
    out.reserve(grid.size());
    for (double phi : grid) out.push_back({phi, ppv(test, Prior(phi)).value});
    return out;
}

inline std::vector<CurvePoint> npv_curve(const TestProfile& test, std::span<const double> grid) {
    std::vector<CurvePoint> out;
    out.reserve(grid.size());
    for (double phi : grid) out.push_back({phi, npv(test, Prior(phi)).value});
    return out;
}

} // namespace bayescreen
