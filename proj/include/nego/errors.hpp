#pragma once

#include <stdexcept>
#include <string>

namespace nego {

/// Input violates an operation's domain (bad shares, off-range points, ...).
/// The CLI maps this to exit code 1 together with config parse failures.
class domain_error : public std::invalid_argument {
public:
    explicit domain_error(const std::string& what) : std::invalid_argument(what) {}
};

/// A utility response contradicts previously recorded samples (monotonicity
/// or envelope violation). Carries the offending WM id. CLI exit code 2.
class consistency_error : public std::runtime_error {
public:
    consistency_error(std::string wm_id, const std::string& what)
        : std::runtime_error("wm '" + wm_id + "': " + what), wm_id_(std::move(wm_id)) {}

    const std::string& wm_id() const noexcept { return wm_id_; }

private:
    std::string wm_id_;
};

/// Saturation points sum to less than the full resource: every WM can be
/// saturated simultaneously and there is nothing to negotiate. CLI exit code 3.
class trivial_instance_error : public std::runtime_error {
public:
    explicit trivial_instance_error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed config / instance / trace file. CLI exit code 1.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace nego
