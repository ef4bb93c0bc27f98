#pragma once

#include <stdexcept>
#include <string>

namespace k3lg {

enum class errc {
    degenerate_form,
    invalid_input,
    not_representable,
    search_exhausted,
    rank_deficient,
    dimension_mismatch,
    signature_error,
    degenerate_split,
    out_of_range,
    missing_place,
    parse_error,
    invariant_violation,
    budget_exceeded,
    factor_bound_exceeded,
};

inline const char* errc_name(errc c) {
    switch (c) {
    case errc::degenerate_form: return "DegenerateForm";
    case errc::invalid_input: return "InvalidInput";
    case errc::not_representable: return "NotRepresentable";
    case errc::search_exhausted: return "SearchExhausted";
    case errc::rank_deficient: return "RankDeficient";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::signature_error: return "SignatureError";
    case errc::degenerate_split: return "DegenerateSplit";
    case errc::out_of_range: return "OutOfRange";
    case errc::missing_place: return "MissingPlace";
    case errc::parse_error: return "ParseError";
    case errc::invariant_violation: return "InvariantViolation";
    case errc::budget_exceeded: return "BudgetExceeded";
    case errc::factor_bound_exceeded: return "FactorBoundExceeded";
    }
    return "Error";
}

/// Typed error carrying one of the domain error codes above.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

inline void require(bool ok, errc code, const std::string& what) {
    if (!ok) fail(code, what);
}

} // namespace k3lg
