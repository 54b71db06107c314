#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kpo {

/// Base of every exception thrown by the library. `kind()` is a stable,
/// machine-readable tag used by the CLI when it reports errors as JSON.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "error"; }
};

#define KPO_DEFINE_ERROR(Name, tag)                                        \
    class Name : public Error {                                            \
    public:                                                                \
        using Error::Error;                                                \
        const char* kind() const noexcept override { return tag; }        \
    };

KPO_DEFINE_ERROR(InvalidParameter, "invalid_parameter")
KPO_DEFINE_ERROR(TruncationError, "truncation")
KPO_DEFINE_ERROR(ConvergenceError, "convergence")
KPO_DEFINE_ERROR(RangeError, "range")
KPO_DEFINE_ERROR(StatisticsError, "statistics")
KPO_DEFINE_ERROR(IntegrationError, "integration")
KPO_DEFINE_ERROR(EigenError, "eigensolver")
KPO_DEFINE_ERROR(FormatError, "format")
KPO_DEFINE_ERROR(VersionError, "version")
KPO_DEFINE_ERROR(CoverageError, "coverage")
KPO_DEFINE_ERROR(RootTrackingError, "root_tracking")
KPO_DEFINE_ERROR(StabilityError, "stability")
KPO_DEFINE_ERROR(FluxConfigurationError, "flux_configuration")

#undef KPO_DEFINE_ERROR

/// Configuration failure carrying every offending key at once.
class ConfigError : public Error {
public:
    ConfigError(std::string what, std::vector<std::string> keys)
        : Error(std::move(what)), keys_(std::move(keys)) {}
    const char* kind() const noexcept override { return "config"; }
    const std::vector<std::string>& keys() const noexcept { return keys_; }

private:
    std::vector<std::string> keys_;
};

}  // namespace kpo
