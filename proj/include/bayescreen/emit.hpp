#pragma once
// Text encodings for tables, surfaces and curves: CSV, GitHub Markdown and
// JSON. CSV and Markdown print two decimals; JSON keeps full precision.
// Output is byte-for-byte deterministic for a given input and
// kFormatVersion.

#include "bayescreen/core.hpp"
#include "bayescreen/tables.hpp"

#include "json.hpp"

#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bayescreen {

inline constexpr int kFormatVersion = 1;

enum class OutputFormat { Plain, Json, Csv, Markdown };

inline std::optional<OutputFormat> parse_format(std::string_view name) {
    if (name == "plain") return OutputFormat::Plain;
    if (name == "json") return OutputFormat::Json;
    if (name == "csv") return OutputFormat::Csv;
    if (name == "markdown" || name == "md") return OutputFormat::Markdown;
    return std::nullopt;
}

inline std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

// Shortest %g rendering, used for axis labels such as 0.1 or 0.15.
inline std::string label(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

// RFC 4180: quote fields containing a comma, quote, CR or LF; double quotes.
inline std::string csv_field(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

namespace detail {

inline std::string csv_row(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += csv_field(fields[i]);
    }
    line += "\n";
    return line;
}

inline std::string md_row(const std::vector<std::string>& fields) {
    std::string line = "|";
    for (const auto& f : fields) line += " " + f + " |";
    line += "\n";
    return line;
}

inline std::string md_rule(std::size_t columns) {
    std::string line = "|";
    for (std::size_t i = 0; i < columns; ++i) line += i == 0 ? " --- |" : " ---: |";
    line += "\n";
    return line;
}

} // namespace detail

// Columns: ln_lr, one raw column per prior, then one ceil_ column per prior.
inline std::string table_to_csv(const ReferenceTable& table) {
    const auto ceiled = ceiled_cells(table);
    std::vector<std::string> header{"ln_lr"};
    for (double phi : table.spec.phi_values) header.push_back(label(phi));
    for (double phi : table.spec.phi_values) header.push_back("ceil_" + label(phi));
    std::string out = detail::csv_row(header);
    for (std::size_t r = 0; r < table.cells.size(); ++r) {
        std::vector<std::string> fields{fixed(table.spec.log_lr_values[r], 2)};
        for (double raw : table.cells[r]) fields.push_back(fixed(raw, 2));
        for (auto n : ceiled[r]) fields.push_back(std::to_string(n));
        out += detail::csv_row(fields);
    }
    return out;
}

inline std::string table_to_markdown(const ReferenceTable& table) {
    const auto ceiled = ceiled_cells(table);
    std::vector<std::string> header{"ln LR+"};
    for (double phi : table.spec.phi_values) header.push_back(label(phi));

    std::string out = "Iterations to reach PPV " + label(table.spec.target_rho) + " (raw n)\n\n";
    out += detail::md_row(header);
    out += detail::md_rule(header.size());
    for (std::size_t r = 0; r < table.cells.size(); ++r) {
        std::vector<std::string> fields{fixed(table.spec.log_lr_values[r], 2)};
        for (double raw : table.cells[r]) fields.push_back(fixed(raw, 2));
        out += detail::md_row(fields);
    }
    out += "\nWhole tests (ceiling)\n\n";
    out += detail::md_row(header);
    out += detail::md_rule(header.size());
    for (std::size_t r = 0; r < ceiled.size(); ++r) {
        std::vector<std::string> fields{fixed(table.spec.log_lr_values[r], 2)};
        for (auto n : ceiled[r]) fields.push_back(std::to_string(n));
        out += detail::md_row(fields);
    }
    return out;
}

inline nlohmann::json table_to_json(const ReferenceTable& table) {
    return {
        {"format_version", kFormatVersion},
        {"target_rho", table.spec.target_rho},
        {"log_lr_values", table.spec.log_lr_values},
        {"phi_values", table.spec.phi_values},
        {"raw_n", table.cells},
        {"n_i", ceiled_cells(table)},
    };
}

inline std::string surface_to_csv(std::span<const SurfacePoint> points) {
    std::string out = detail::csv_row({"ln_lr", "phi", "raw_n", "n_i"});
    for (const auto& p : points) {
        out += detail::csv_row({fixed(p.log_lr, 2), fixed(p.phi, 4), fixed(p.raw_n, 2),
                                std::to_string(ceiled_iterations(p.raw_n))});
    }
    return out;
}

inline std::string surface_to_markdown(std::span<const SurfacePoint> points) {
    std::string out = detail::md_row({"ln LR+", "phi", "raw n", "n_i"});
    out += detail::md_rule(4);
    for (const auto& p : points) {
        out += detail::md_row({fixed(p.log_lr, 2), fixed(p.phi, 4), fixed(p.raw_n, 2),
                               std::to_string(ceiled_iterations(p.raw_n))});
    }
    return out;
}

inline nlohmann::json surface_to_json(double target_rho, std::span<const SurfacePoint> points) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& p : points) {
        rows.push_back({{"log_lr", p.log_lr}, {"phi", p.phi}, {"raw_n", p.raw_n},
                        {"n_i", ceiled_iterations(p.raw_n)}});
    }
    return {{"format_version", kFormatVersion}, {"target_rho", target_rho}, {"points", rows}};
}

// Curves print four decimals in CSV and Markdown; these are plot data.
inline std::string curve_to_csv(std::string_view value_name, std::span<const CurvePoint> points) {
    std::string out = detail::csv_row({"phi", std::string(value_name)});
    for (const auto& p : points) out += detail::csv_row({fixed(p.phi, 4), fixed(p.value, 4)});
    return out;
}

inline std::string curve_to_markdown(std::string_view value_name, std::span<const CurvePoint> points) {
    std::string out = detail::md_row({"phi", std::string(value_name)});
    out += detail::md_rule(2);
    for (const auto& p : points) out += detail::md_row({fixed(p.phi, 4), fixed(p.value, 4)});
    return out;
}

inline nlohmann::json curve_to_json(std::string_view kind, std::span<const CurvePoint> points) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& p : points) rows.push_back({{"phi", p.phi}, {"value", p.value}});
    return {{"kind", kind}, {"points", rows}};
}

inline nlohmann::json plan_to_json(const IterationPlan& plan) {
    nlohmann::json out = {{"target_rho", plan.target_rho}, {"status", to_string(plan.status)}};
    out["raw_n"] = plan.raw_n ? nlohmann::json(*plan.raw_n) : nlohmann::json(nullptr);
    out["n_i"] = plan.n_i ? nlohmann::json(*plan.n_i) : nlohmann::json(nullptr);
    return out;
}

} // namespace bayescreen
