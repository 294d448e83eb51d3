#pragma once
// Command-line front end. run_cli() is the whole program minus main(), so
// tests can drive it with captured streams.
//
// Exit status: 0 success, 1 domain error (typed name on stderr) or failed
// Monte Carlo verification, 2 usage error.

#include "bayescreen/core.hpp"
#include "bayescreen/emit.hpp"
#include "bayescreen/mc_oracle.hpp"
#include "bayescreen/service.hpp"
#include "bayescreen/tables.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace bayescreen {

namespace cli_detail {

// Plain output prints four decimals; JSON prints full precision.
using Field = std::pair<std::string, nlohmann::json>;

inline std::string plain_value(const nlohmann::json& v) {
    if (v.is_number_float()) return fixed(v.get<double>(), 4);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return "-";
    return v.dump();
}

inline std::string csv_value(const nlohmann::json& v) {
    if (v.is_string()) return csv_field(v.get<std::string>());
    if (v.is_null()) return "";
    return v.dump();
}

inline void render_record(std::ostream& out, OutputFormat format, const std::vector<Field>& fields) {
    switch (format) {
    case OutputFormat::Json: {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [k, v] : fields) j[k] = v;
        out << j.dump(2) << '\n';
        break;
    }
    case OutputFormat::Csv: {
        std::string header, row;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) { header += ','; row += ','; }
            header += csv_field(fields[i].first);
            row += csv_value(fields[i].second);
        }
        out << header << '\n' << row << '\n';
        break;
    }
    case OutputFormat::Markdown:
        out << "| field | value |\n| --- | ---: |\n";
        for (const auto& [k, v] : fields) out << "| " << k << " | " << plain_value(v) << " |\n";
        break;
    case OutputFormat::Plain:
        for (const auto& [k, v] : fields) out << k << ' ' << plain_value(v) << '\n';
        break;
    }
}

// Single-number commands print just the number in plain mode.
inline void render_value(std::ostream& out, OutputFormat format, const std::vector<Field>& inputs,
                         const std::string& name, double value) {
    if (format == OutputFormat::Plain) {
        out << fixed(value, 4) << '\n';
        return;
    }
    auto fields = inputs;
    fields.emplace_back(name, value);
    render_record(out, format, fields);
}

struct TestArgs {
    double sens = 0.0;
    double spec = 0.0;
};

inline void add_test_options(CLI::App* cmd, TestArgs& args, bool required = true) {
    auto* s = cmd->add_option("--sens", args.sens, "sensitivity a in [0,1]");
    auto* p = cmd->add_option("--spec", args.spec, "specificity b in [0,1]");
    if (required) {
        s->required();
        p->required();
    }
}

inline std::vector<Field> test_fields(const TestArgs& t) {
    return {{"sensitivity", t.sens}, {"specificity", t.spec}};
}

} // namespace cli_detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    using namespace cli_detail;

    CLI::App app{"Bayesian screening calculator: predictive values, prevalence threshold, "
                 "repeated-testing planner, reference tables and Monte Carlo checks"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string format_name;
    if (const char* env = std::getenv("BAYESCREEN_FORMAT")) format_name = env;
    app.add_option("--format", format_name, "plain | json | csv | markdown (env BAYESCREEN_FORMAT)")
        ->check(CLI::IsMember({"plain", "json", "csv", "markdown", "md"}));

    TestArgs test_args;
    double prev = 0.0;
    double target = 0.0;

    auto* ppv_cmd = app.add_subcommand("ppv", "positive predictive value");
    add_test_options(ppv_cmd, test_args);
    ppv_cmd->add_option("--prev", prev, "prior / prevalence")->required();

    auto* npv_cmd = app.add_subcommand("npv", "negative predictive value");
    add_test_options(npv_cmd, test_args);
    npv_cmd->add_option("--prev", prev, "prior / prevalence")->required();

    auto* threshold_cmd = app.add_subcommand("threshold", "prevalence threshold and epsilon = a + b");
    add_test_options(threshold_cmd, test_args);

    std::optional<double> log_lr;
    auto* iter_cmd = app.add_subcommand("iterations", "positive tests needed to reach a target PPV");
    add_test_options(iter_cmd, test_args, false);
    iter_cmd->add_option("--log-lr", log_lr, "ln LR+ instead of --sens/--spec");
    iter_cmd->add_option("--prev", prev, "prior / prevalence")->required();
    iter_cmd->add_option("--target", target, "target PPV")->required();

    std::uint64_t n = 1;
    auto* seq_cmd = app.add_subcommand("sequential-ppv", "PPV after n consecutive positive results");
    add_test_options(seq_cmd, test_args);
    seq_cmd->add_option("--prev", prev, "prior / prevalence")->required();
    seq_cmd->add_option("--n", n, "number of positive results")->required();

    std::string axes = "paper";
    std::vector<double> lr_axis, phi_axis;
    auto* table_cmd = app.add_subcommand("table", "reference table of raw iteration counts");
    table_cmd->add_option("--target", target, "target PPV")->required();
    table_cmd->add_option("--axes", axes, "paper | custom")->check(CLI::IsMember({"paper", "custom"}));
    table_cmd->add_option("--log-lr-axis", lr_axis, "custom ln LR+ rows, comma separated")->delimiter(',');
    table_cmd->add_option("--phi-axis", phi_axis, "custom prior columns, comma separated")->delimiter(',');

    AxisRange lr_range{0.5, 5.0, 0.25};
    AxisRange phi_range{0.01, 0.2, 0.01};
    auto* surface_cmd = app.add_subcommand("surface", "dense (ln LR+, prior, raw n) grid");
    surface_cmd->add_option("--target", target, "target PPV")->required();
    surface_cmd->add_option("--lnlr-min", lr_range.lo)->capture_default_str();
    surface_cmd->add_option("--lnlr-max", lr_range.hi)->capture_default_str();
    surface_cmd->add_option("--lnlr-step", lr_range.step)->capture_default_str();
    surface_cmd->add_option("--phi-min", phi_range.lo)->capture_default_str();
    surface_cmd->add_option("--phi-max", phi_range.hi)->capture_default_str();
    surface_cmd->add_option("--phi-step", phi_range.step)->capture_default_str();

    std::string kind = "ppv";
    std::size_t points = 101;
    auto* curve_cmd = app.add_subcommand("curve", "PPV or NPV as a function of the prior");
    add_test_options(curve_cmd, test_args);
    curve_cmd->add_option("--kind", kind, "ppv | npv")->check(CLI::IsMember({"ppv", "npv"}));
    curve_cmd->add_option("--points", points, "evenly spaced priors on [0,1]")->capture_default_str()
        ->check(CLI::Range(std::size_t{2}, std::size_t{1'000'000}));

    std::uint64_t trials = 1'000'000;
    std::uint64_t seed = 0;
    std::uint32_t depth = 3;
    unsigned threads = 0;
    bool verify = false;
    double sigmas = 3.0;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo estimate of serial-testing PPV");
    add_test_options(sim_cmd, test_args);
    sim_cmd->add_option("--prev", prev, "prior / prevalence")->required();
    sim_cmd->add_option("--trials", trials)->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", seed)->capture_default_str();
    sim_cmd->add_option("--depth", depth, "consecutive tests per subject")->capture_default_str()
        ->check(CLI::PositiveNumber);
    sim_cmd->add_option("--threads", threads, "0 = all cores")->capture_default_str();
    sim_cmd->add_flag("--verify", verify, "compare against the closed form; exit 1 on failure");
    sim_cmd->add_option("--sigmas", sigmas, "verification tolerance in standard errors")->capture_default_str();

    std::string config_path;
    std::optional<int> port;
    auto* serve_cmd = app.add_subcommand("serve", "start the HTTP JSON service");
    serve_cmd->add_option("--port", port, "listen port (env BAYESCREEN_PORT, default 8080)");
    serve_cmd->add_option("--config", config_path, "JSON config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    const bool grid_command = table_cmd->parsed() || surface_cmd->parsed() || curve_cmd->parsed();
    OutputFormat format = grid_command ? OutputFormat::Csv : OutputFormat::Plain;
    if (!format_name.empty()) format = *parse_format(format_name);

    try {
        if (ppv_cmd->parsed() || npv_cmd->parsed()) {
            const TestProfile test(test_args.sens, test_args.spec);
            const Prior prior(prev);
            const bool positive = ppv_cmd->parsed();
            const double v = positive ? ppv(test, prior).value : npv(test, prior).value;
            auto inputs = test_fields(test_args);
            inputs.emplace_back("prior", prev);
            render_value(out, format, inputs, positive ? "ppv" : "npv", v);
        } else if (threshold_cmd->parsed()) {
            const TestProfile test(test_args.sens, test_args.spec);
            auto fields = test_fields(test_args);
            fields.emplace_back("threshold", prevalence_threshold(test));
            fields.emplace_back("epsilon", epsilon(test));
            render_record(out, format, fields);
        } else if (iter_cmd->parsed()) {
            const bool by_test = iter_cmd->count("--sens") > 0 || iter_cmd->count("--spec") > 0;
            if (by_test == log_lr.has_value() ||
                (by_test && (iter_cmd->count("--sens") == 0 || iter_cmd->count("--spec") == 0))) {
                err << "iterations: give either --sens and --spec, or --log-lr\n";
                return 2;
            }
            const Prior prior(prev);
            std::vector<Field> fields;
            IterationPlan plan;
            if (log_lr) {
                fields.emplace_back("log_lr", *log_lr);
                plan = iterations_needed(LogLikelihoodRatio{*log_lr}, prior, target);
            } else {
                const TestProfile test(test_args.sens, test_args.spec);
                fields = test_fields(test_args);
                plan = iterations_needed(test, prior, target);
            }
            fields.emplace_back("prior", prev);
            fields.emplace_back("target", target);
            fields.emplace_back("status", to_string(plan.status));
            fields.emplace_back("raw_n", plan.raw_n ? nlohmann::json(*plan.raw_n) : nlohmann::json(nullptr));
            fields.emplace_back("n_i", plan.n_i ? nlohmann::json(*plan.n_i) : nlohmann::json(nullptr));
            render_record(out, format, fields);
        } else if (seq_cmd->parsed()) {
            const TestProfile test(test_args.sens, test_args.spec);
            auto inputs = test_fields(test_args);
            inputs.emplace_back("prior", prev);
            inputs.emplace_back("n", n);
            render_value(out, format, inputs, "sequential_ppv", sequential_ppv(test, Prior(prev), n).value);
        } else if (table_cmd->parsed()) {
            ReferenceTableSpec spec = paper_table_spec(target);
            if (axes == "custom") {
                if (lr_axis.empty() || phi_axis.empty()) {
                    err << "table: --axes custom needs --log-lr-axis and --phi-axis\n";
                    return 2;
                }
                spec.log_lr_values = lr_axis;
                spec.phi_values = phi_axis;
            }
            const auto table = generate_reference_table(spec);
            switch (format) {
            case OutputFormat::Json: out << table_to_json(table).dump(2) << '\n'; break;
            case OutputFormat::Markdown: out << table_to_markdown(table); break;
            case OutputFormat::Csv:
            case OutputFormat::Plain: out << table_to_csv(table); break;
            }
        } else if (surface_cmd->parsed()) {
            const auto grid = surface_grid(target, lr_range, phi_range);
            switch (format) {
            case OutputFormat::Json: out << surface_to_json(target, grid).dump(2) << '\n'; break;
            case OutputFormat::Markdown: out << surface_to_markdown(grid); break;
            case OutputFormat::Csv:
            case OutputFormat::Plain: out << surface_to_csv(grid); break;
            }
        } else if (curve_cmd->parsed()) {
            const TestProfile test(test_args.sens, test_args.spec);
            const auto grid = evenly_spaced(0.0, 1.0, points);
            const auto pts = kind == "ppv" ? ppv_curve(test, grid) : npv_curve(test, grid);
            switch (format) {
            case OutputFormat::Json: out << curve_to_json(kind, pts).dump(2) << '\n'; break;
            case OutputFormat::Markdown: out << curve_to_markdown(kind, pts); break;
            case OutputFormat::Csv:
            case OutputFormat::Plain: out << curve_to_csv(kind, pts); break;
            }
        } else if (sim_cmd->parsed()) {
            const SimulationConfig config{TestProfile(test_args.sens, test_args.spec), Prior(prev), trials, seed,
                                          depth, threads};
            const auto report = simulate(config);
            std::optional<Verdict> verdict;
            if (verify) verdict = verify_report(report, config.test, config.prior, sigmas);
            if (format == OutputFormat::Json) {
                auto j = report_to_json(config, report);
                if (verdict) j["verification"] = verdict_to_json(*verdict);
                out << j.dump(2) << '\n';
            } else {
                out << "trials " << report.trials_used << "\n";
                for (const auto& d : report.empirical_ppv_by_n) {
                    out << "n " << d.n << " m " << d.ppv.conditioning_count << " ppv "
                        << (d.ppv.estimate ? fixed(*d.ppv.estimate, 4) : "-") << " se "
                        << (d.ppv.standard_error ? fixed(*d.ppv.standard_error, 4) : "-");
                    if (verdict) {
                        const auto& v = verdict->per_n[d.n - 1];
                        out << " closed_form " << fixed(v.closed_form, 4) << (v.pass ? " pass" : " FAIL");
                    }
                    out << '\n';
                }
                const auto& npv_est = report.empirical_npv;
                out << "npv m " << npv_est.conditioning_count << " estimate "
                    << (npv_est.estimate ? fixed(*npv_est.estimate, 4) : "-") << '\n';
                if (verdict) out << "verification " << (verdict->pass ? "pass" : "FAIL") << '\n';
            }
            if (verdict && !verdict->pass) {
                err << "error: VerificationFailed: empirical PPV outside " << sigmas << " standard errors\n";
                return 1;
            }
        } else if (serve_cmd->parsed()) {
            auto config = load_service_config(config_path);
            if (port) config.port = *port;
            Server server(config);
            err << "listening on " << config.host << ':' << config.port << '\n';
            if (!server.listen()) {
                err << "error: could not listen on port " << config.port << '\n';
                return 1;
            }
        }
    } catch (const DomainError& e) {
        err << "error: " << e.name() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

} // namespace bayescreen
