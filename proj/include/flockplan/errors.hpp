#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace flockplan {

/// Root of every error thrown by the library. Each concrete failure mode has
/// its own type so callers (and tests) can tell them apart.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define FLOCKPLAN_ERROR(Name)                                                  \
    class Name : public Error {                                                \
    public:                                                                    \
        using Error::Error;                                                    \
        const char* kind() const noexcept override { return #Name; }          \
    }

// domain
FLOCKPLAN_ERROR(NegativeFlock);
FLOCKPLAN_ERROR(DivisionDomain);
FLOCKPLAN_ERROR(DegenerateBound);
FLOCKPLAN_ERROR(OutOfRange);
FLOCKPLAN_ERROR(InvalidPlan);

// surrogate
FLOCKPLAN_ERROR(DimensionMismatch);
FLOCKPLAN_ERROR(Diverged);
FLOCKPLAN_ERROR(ZeroVariance);
FLOCKPLAN_ERROR(ModelFormatError);

// dataset
FLOCKPLAN_ERROR(ConfigDomain);
FLOCKPLAN_ERROR(ShapeError);
FLOCKPLAN_ERROR(InsufficientData);
FLOCKPLAN_ERROR(SchemaVersionError);
FLOCKPLAN_ERROR(InsufficientHistory);

// evolve / planner
FLOCKPLAN_ERROR(EmptyPopulation);
FLOCKPLAN_ERROR(BudgetExceeded);

// protocol
FLOCKPLAN_ERROR(CrcMismatch);
FLOCKPLAN_ERROR(Truncated);
FLOCKPLAN_ERROR(Oversize);
FLOCKPLAN_ERROR(Timeout);
FLOCKPLAN_ERROR(ProtocolViolation);
FLOCKPLAN_ERROR(TransportError);

// condosim / supervisor
FLOCKPLAN_ERROR(FlockComplete);
FLOCKPLAN_ERROR(AddressCollision);
FLOCKPLAN_ERROR(NoActiveFlock);
FLOCKPLAN_ERROR(StaleDay);
FLOCKPLAN_ERROR(StorageError);
FLOCKPLAN_ERROR(NotFound);
FLOCKPLAN_ERROR(JobNotReady);

#undef FLOCKPLAN_ERROR

/// Thrown when a loaded document fails validation. Carries the 1-based line
/// (0 when unknown) and the offending field name.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::string field)
        : Error(what), line_(line), field_(std::move(field)) {}
    const char* kind() const noexcept override { return "ParseError"; }
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

/// A fitness function returned NaN or infinity; the genome is kept for
/// diagnosis.
class FitnessNonFinite : public Error {
public:
    FitnessNonFinite(const std::string& what, std::vector<double> genome)
        : Error(what), genome_(std::move(genome)) {}
    const char* kind() const noexcept override { return "FitnessNonFinite"; }
    const std::vector<double>& genome() const noexcept { return genome_; }

private:
    std::vector<double> genome_;
};

class SlaveException : public Error {
public:
    SlaveException(const std::string& what, int code) : Error(what), code_(code) {}
    const char* kind() const noexcept override { return "SlaveException"; }
    int code() const noexcept { return code_; }

private:
    int code_;
};

} // namespace flockplan
