#pragma once
// Monte Carlo check of the closed forms. Each simulated subject draws a
// disease status from the prior and then serial_depth test results that are
// conditionally independent given that status.
//
// Random streams: subjects are grouped into fixed blocks of kSubjectsPerBlock.
// Block k owns a std::mt19937_64 seeded with seed_seq{seed, k}, so results do
// not depend on the thread count or scheduling. Counters are exact integers
// summed after all blocks finish.

#include "bayescreen/core.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace bayescreen {

inline constexpr std::uint64_t kSubjectsPerBlock = 8192;

struct SimulationConfig {
    TestProfile test;
    Prior prior;
    std::uint64_t trials = 1'000'000;
    std::uint64_t seed = 0;
    std::uint32_t serial_depth = 1;
    unsigned threads = 0;  // 0 = hardware concurrency; never affects the result
};

// A proportion over a conditioning set of size m. Estimate and standard
// error are absent when m = 0.
struct ProportionEstimate {
    std::uint64_t conditioning_count = 0;
    std::uint64_t hits = 0;
    std::optional<double> estimate;
    std::optional<double> standard_error;
};

struct DepthEstimate {
    std::uint32_t n = 0;
    ProportionEstimate ppv;  // conditioning set: first n results all positive
};

struct SimulationReport {
    std::vector<DepthEstimate> empirical_ppv_by_n;
    ProportionEstimate empirical_npv;  // conditioning set: first result negative
    std::uint64_t trials_used = 0;
};

inline ProportionEstimate make_proportion(std::uint64_t hits, std::uint64_t count) {
    ProportionEstimate out;
    out.conditioning_count = count;
    out.hits = hits;
    if (count > 0) {
        const double p = static_cast<double>(hits) / static_cast<double>(count);
        out.estimate = p;
        out.standard_error = std::sqrt(p * (1.0 - p) / static_cast<double>(count));
    }
    return out;
}

namespace detail {

struct BlockCounts {
    std::vector<std::uint64_t> all_positive;           // index n-1
    std::vector<std::uint64_t> diseased_all_positive;  // index n-1
    std::uint64_t first_negative = 0;
    std::uint64_t healthy_first_negative = 0;
};

// 53 high bits of the engine output mapped to [0, 1). Spelled out rather
// than using std::uniform_real_distribution, whose output is not specified
// identically across standard libraries.
inline double unit_uniform(std::mt19937_64& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

inline std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
    return std::mt19937_64(seq);
}

inline BlockCounts simulate_block(const SimulationConfig& config, std::uint64_t block) {
    const std::uint64_t first = block * kSubjectsPerBlock;
    const std::uint64_t last = std::min(config.trials, first + kSubjectsPerBlock);
    const double phi = config.prior.phi();
    const double sens = config.test.sensitivity();
    const double false_pos_rate = 1.0 - config.test.specificity();
    const std::uint32_t depth = config.serial_depth;

    BlockCounts counts;
    counts.all_positive.assign(depth, 0);
    counts.diseased_all_positive.assign(depth, 0);

    auto engine = block_engine(config.seed, block);
    for (std::uint64_t subject = first; subject < last; ++subject) {
        const bool diseased = unit_uniform(engine) < phi;
        const double p_positive = diseased ? sens : false_pos_rate;
        bool still_all_positive = true;
        for (std::uint32_t k = 0; k < depth; ++k) {
            const bool positive = unit_uniform(engine) < p_positive;
            if (k == 0 && !positive) {
                ++counts.first_negative;
                if (!diseased) ++counts.healthy_first_negative;
            }
            still_all_positive = still_all_positive && positive;
            if (still_all_positive) {
                ++counts.all_positive[k];
                if (diseased) ++counts.diseased_all_positive[k];
            }
        }
    }
    return counts;
}

} // namespace detail

inline SimulationReport simulate(const SimulationConfig& config) {
    if (config.trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (config.serial_depth < 1) throw std::invalid_argument("serial_depth must be at least 1");

    const std::uint64_t blocks = (config.trials + kSubjectsPerBlock - 1) / kSubjectsPerBlock;
    std::vector<detail::BlockCounts> per_block(blocks);

    unsigned workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, blocks));

    std::atomic<std::uint64_t> next{0};
    auto work = [&] {
        for (std::uint64_t b = next++; b < blocks; b = next++) per_block[b] = detail::simulate_block(config, b);
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 1; i < workers; ++i) pool.emplace_back(work);
        work();
    }

    const std::uint32_t depth = config.serial_depth;
    std::vector<std::uint64_t> all_positive(depth, 0);
    std::vector<std::uint64_t> diseased_all_positive(depth, 0);
    std::uint64_t first_negative = 0;
    std::uint64_t healthy_first_negative = 0;
    for (const auto& c : per_block) {
        for (std::uint32_t k = 0; k < depth; ++k) {
            all_positive[k] += c.all_positive[k];
            diseased_all_positive[k] += c.diseased_all_positive[k];
        }
        first_negative += c.first_negative;
        healthy_first_negative += c.healthy_first_negative;
    }

    SimulationReport report;
    report.trials_used = config.trials;
    for (std::uint32_t k = 0; k < depth; ++k) {
        report.empirical_ppv_by_n.push_back({k + 1, make_proportion(diseased_all_positive[k], all_positive[k])});
    }
    report.empirical_npv = make_proportion(healthy_first_negative, first_negative);
    return report;
}

struct DepthVerdict {
    std::uint32_t n = 0;
    double closed_form = 0.0;
    std::optional<double> estimate;
    std::optional<double> standard_error;
    std::optional<double> delta;  // estimate - closed_form
    bool pass = true;             // vacuously true when no subject qualified
};

struct Verdict {
    bool pass = true;
    double tolerance_sigmas = 3.0;
    std::vector<DepthVerdict> per_n;
};

// Compares a report against sequential_ppv evaluated with `closed_form_test`.
// Passing a different test than the one simulated is how the negative
// control is built. Where the empirical standard error is zero (estimate
// exactly 0 or 1) the binomial error at the closed-form value is used.
inline Verdict verify_report(const SimulationReport& report, const TestProfile& closed_form_test,
                             const Prior& prior, double tolerance_sigmas) {
    Verdict verdict;
    verdict.tolerance_sigmas = tolerance_sigmas;
    for (const auto& depth : report.empirical_ppv_by_n) {
        DepthVerdict v;
        v.n = depth.n;
        v.closed_form = sequential_ppv(closed_form_test, prior, depth.n).value;
        v.estimate = depth.ppv.estimate;
        v.standard_error = depth.ppv.standard_error;
        if (v.estimate) {
            v.delta = *v.estimate - v.closed_form;
            double se = *v.standard_error;
            if (se == 0.0) {
                se = std::sqrt(v.closed_form * (1.0 - v.closed_form)
                               / static_cast<double>(depth.ppv.conditioning_count));
            }
            v.pass = std::abs(*v.delta) <= tolerance_sigmas * se;
        }
        verdict.pass = verdict.pass && v.pass;
        verdict.per_n.push_back(v);
    }
    return verdict;
}

inline Verdict verify_closed_form(const SimulationConfig& config, double tolerance_sigmas = 3.0) {
    return verify_report(simulate(config), config.test, config.prior, tolerance_sigmas);
}

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json proportion_json(const ProportionEstimate& p) {
    return {{"conditioning_count", p.conditioning_count},
            {"hits", p.hits},
            {"estimate", optional_json(p.estimate)},
            {"standard_error", optional_json(p.standard_error)}};
}

} // namespace detail

inline nlohmann::json report_to_json(const SimulationConfig& config, const SimulationReport& report) {
    nlohmann::json by_n = nlohmann::json::array();
    for (const auto& d : report.empirical_ppv_by_n) {
        auto row = detail::proportion_json(d.ppv);
        row["n"] = d.n;
        by_n.push_back(row);
    }
    return {{"sensitivity", config.test.sensitivity()},
            {"specificity", config.test.specificity()},
            {"prior", config.prior.phi()},
            {"seed", config.seed},
            {"serial_depth", config.serial_depth},
            {"trials_used", report.trials_used},
            {"empirical_ppv_by_n", by_n},
            {"empirical_npv", detail::proportion_json(report.empirical_npv)}};
}

inline nlohmann::json verdict_to_json(const Verdict& verdict) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& v : verdict.per_n) {
        rows.push_back({{"n", v.n},
                        {"closed_form", v.closed_form},
                        {"estimate", detail::optional_json(v.estimate)},
                        {"standard_error", detail::optional_json(v.standard_error)},
                        {"delta", detail::optional_json(v.delta)},
                        {"pass", v.pass}});
    }
    return {{"pass", verdict.pass}, {"tolerance_sigmas", verdict.tolerance_sigmas}, {"per_n", rows}};
}

} // namespace bayescreen
