#include "qpfkam/error.hpp"

namespace qpfkam {

const char* to_string(Errc code) noexcept {
    switch (code) {
        case Errc::precision_exhausted: return "precision-exhausted";
        case Errc::rational_input: return "rational-input";
        case Errc::depth_insufficient: return "depth-insufficient";
        case Errc::construction_failed: return "construction-failed";
        case Errc::insufficient_grid: return "insufficient-grid";
        case Errc::strip_overflow: return "strip-overflow";
        case Errc::zero_divisor: return "zero-divisor";
        case Errc::bound_violation: return "bound-violation";
        case Errc::dominance_violated: return "dominance-violated";
        case Errc::neumann_diverged: return "neumann-diverged";
        case Errc::bound_violated: return "bound-violated";
        case Errc::singular_matrix: return "singular-matrix";
        case Errc::contraction_failed: return "contraction-failed";
        case Errc::schedule_infeasible: return "schedule-infeasible";
        case Errc::target_unreachable: return "target-unreachable";
        case Errc::search_budget_exceeded: return "search-budget-exceeded";
        case Errc::step_control_failure: return "step-control-failure";
        case Errc::inconsistent_starts: return "inconsistent-starts";
        case Errc::validation_failed: return "validation-failed";
        case Errc::config_invalid: return "config-invalid";
        case Errc::io_error: return "io-error";
        case Errc::invalid_argument: return "invalid-argument";
    }
    return "unknown";
}

Error::Error(std::string_view module, Errc code, const std::string& detail)
    : std::runtime_error(std::string(module) + "." + to_string(code) + ": " + detail),
      module_(module),
      code_(code) {}

std::string Error::qualified_name() const { return module_ + "." + to_string(code_); }

}  // namespace qpfkam
