#pragma once
// Reference tables of repeated-positive iteration counts over an
// (ln LR+, prior) lattice, plus the dense surface grid used for plotting.

#include "bayescreen/core.hpp"
#include "bayescreen/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace bayescreen {

struct ReferenceTableSpec {
    double target_rho = 0.0;
    std::vector<double> log_lr_values;  // rows
    std::vector<double> phi_values;     // columns
};

struct ReferenceTable {
    ReferenceTableSpec spec;
    std::vector<std::vector<double>> cells;  // raw_n, [row][column]

    double at(std::size_t row, std::size_t column) const { return cells.at(row).at(column); }
};

// Whole-test view of a raw cell: AlreadyMet cells become 0, everything else
// ceil(raw_n) clamped to at least 1.
inline std::int64_t ceiled_iterations(double raw_n) {
    if (raw_n <= 0.0) return 0;
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(raw_n)));
}

inline std::vector<std::vector<std::int64_t>> ceiled_cells(const ReferenceTable& table) {
    std::vector<std::vector<std::int64_t>> out;
    out.reserve(table.cells.size());
    for (const auto& row : table.cells) {
        std::vector<std::int64_t> ceiled;
        ceiled.reserve(row.size());
        for (double raw : row) ceiled.push_back(ceiled_iterations(raw));
        out.push_back(std::move(ceiled));
    }
    return out;
}

namespace detail {

inline void check_target_open(double target) {
    if (!(target > 0.0 && target < 1.0)) {
        throw DomainError(ErrorKind::InvalidTarget,
                          "table target must lie in (0, 1), got " + std::to_string(target));
    }
}

inline void check_log_lr(double log_lr) {
    if (!(log_lr > 0.0) || !std::isfinite(log_lr)) {
        throw DomainError(ErrorKind::InvalidAxis,
                          "ln LR+ axis values must be positive and finite, got " + std::to_string(log_lr));
    }
}

inline void check_phi(double phi) {
    if (!(phi > 0.0 && phi < 1.0)) {
        throw DomainError(ErrorKind::InvalidAxis,
                          "prior axis values must lie in (0, 1), got " + std::to_string(phi));
    }
}

inline void check_axis(const std::vector<double>& axis, const char* name) {
    if (axis.empty()) {
        throw DomainError(ErrorKind::InvalidAxis, std::string(name) + " axis is empty");
    }
    for (std::size_t i = 1; i < axis.size(); ++i) {
        if (!(axis[i] > axis[i - 1])) {
            throw DomainError(ErrorKind::InvalidAxis, std::string(name) + " axis must be strictly increasing");
        }
    }
}

} // namespace detail

inline ReferenceTable generate_reference_table(const ReferenceTableSpec& spec) {
    detail::check_target_open(spec.target_rho);
    detail::check_axis(spec.log_lr_values, "ln LR+");
    detail::check_axis(spec.phi_values, "prior");
    for (double v : spec.log_lr_values) detail::check_log_lr(v);
    for (double v : spec.phi_values) detail::check_phi(v);

    ReferenceTable table{spec, {}};
    table.cells.reserve(spec.log_lr_values.size());
    for (double log_lr : spec.log_lr_values) {
        std::vector<double> row;
        row.reserve(spec.phi_values.size());
        for (double phi : spec.phi_values) row.push_back(raw_iterations(spec.target_rho, log_lr, phi));
        table.cells.push_back(std::move(row));
    }
    return table;
}

// The printed axes: ln LR+ from 0.5 to 5.0 in steps of 0.5, and six priors.
inline std::vector<double> paper_log_lr_axis() {
    return {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
}

inline std::vector<double> paper_phi_axis() { return {0.02, 0.05, 0.07, 0.1, 0.15, 0.2}; }

inline std::vector<double> paper_targets() { return {0.99, 0.95, 0.75, 0.50}; }

inline ReferenceTableSpec paper_table_spec(double target_rho) {
    return {target_rho, paper_log_lr_axis(), paper_phi_axis()};
}

// Closed interval [lo, hi] sampled at lo + k * step. The last point is
// included when it lies within half a step of hi's rounding noise.
struct AxisRange {
    double lo = 0.0;
    double hi = 0.0;
    double step = 1.0;

    std::vector<double> points() const {
        if (!(hi >= lo) || !(step > 0.0) || !std::isfinite(lo) || !std::isfinite(hi)) {
            throw DomainError(ErrorKind::InvalidAxis, "axis range must satisfy lo <= hi and step > 0");
        }
        const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
        std::vector<double> out;
        out.reserve(count);
        for (std::size_t k = 0; k < count; ++k) out.push_back(lo + static_cast<double>(k) * step);
        return out;
    }
};

struct SurfacePoint {
    double log_lr;
    double phi;
    double raw_n;
};

// Row-major over ln LR+ (outer) and prior (inner).
inline std::vector<SurfacePoint> surface_grid(double target_rho, const AxisRange& log_lr_range,
                                              const AxisRange& phi_range) {
    detail::check_target_open(target_rho);
    const auto log_lrs = log_lr_range.points();
    const auto phis = phi_range.points();
    for (double v : log_lrs) detail::check_log_lr(v);
    for (double v : phis) detail::check_phi(v);

    std::vector<SurfacePoint> out;
    out.reserve(log_lrs.size() * phis.size());
    for (double log_lr : log_lrs) {
        for (double phi : phis) out.push_back({log_lr, phi, raw_iterations(target_rho, log_lr, phi)});
    }
    return out;
}

// count >= 2 evenly spaced points on [lo, hi], endpoints exact.
inline std::vector<double> evenly_spaced(double lo, double hi, std::size_t count) {
    if (count < 2 || !(hi > lo)) {
        throw DomainError(ErrorKind::InvalidAxis, "need at least two points on a non-empty interval");
    }
    std::vector<double> out(count);
    const double span = hi - lo;
    const auto last = static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) out[k] = lo + span * (static_cast<double>(k) / last);
    out.back() = hi;
    return out;
}

} // namespace bayescreen
