#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qpfkam {

enum class Errc {
    precision_exhausted,
    rational_input,
    depth_insufficient,
    construction_failed,
    insufficient_grid,
    strip_overflow,
    zero_divisor,
    bound_violation,
    dominance_violated,
    neumann_diverged,
    bound_violated,
    singular_matrix,
    contraction_failed,
    schedule_infeasible,
    target_unreachable,
    search_budget_exceeded,
    step_control_failure,
    inconsistent_starts,
    validation_failed,
    config_invalid,
    io_error,
    invalid_argument,
};

[[nodiscard]] const char* to_string(Errc code) noexcept;

/// Library error carrying the module that raised it and a stable error name,
/// e.g. "homological.dominance-violated".
class Error : public std::runtime_error {
public:
    Error(std::string_view module, Errc code, const std::string& detail);

    [[nodiscard]] Errc code() const noexcept { return code_; }
    [[nodiscard]] const std::string& module() const noexcept { return module_; }
    [[nodiscard]] std::string qualified_name() const;

private:
    std::string module_;
    Errc code_;
};

}  // namespace qpfkam
