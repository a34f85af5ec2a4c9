#pragma once

#include <stdexcept>
#include <string>

namespace scmbench {

// Base class for all scmbench errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed configuration document.
struct SyntaxError : Error {
    using Error::Error;
};

// A configuration invariant was violated; message carries the field path.
struct ValidationError : Error {
    using Error::Error;
};

// Mutually exclusive configuration flags set together.
struct ConflictError : Error {
    using Error::Error;
};

// Arithmetic outside a function's domain (log of non-positive, division by zero).
struct DomainError : Error {
    using Error::Error;
};

// An operation parameter is out of range.
struct ParamError : Error {
    using Error::Error;
};

// A table/grid/path enumeration exceeds its configured budget.
struct BudgetError : Error {
    using Error::Error;
};

// A referenced node does not exist in the graph.
struct NodeNotFoundError : Error {
    using Error::Error;
};

// The requested construction is not supported for this configuration.
struct InfeasibleError : Error {
    using Error::Error;
};

// Estimator subprocess protocol violations (missing/malformed files).
struct ProtocolError : Error {
    using Error::Error;
};

// Closed integer interval [lo, hi].
struct Interval {
    long lo = 0;
    long hi = 0;

    bool contains(long x) const { return x >= lo && x <= hi; }
    bool operator==(const Interval&) const = default;
};

// Exogenous noise distribution: Uniform{a=lo, b=hi} or Normal{a=mean, b=std}.
struct NoiseSpec {
    enum class Kind { Uniform, Normal };
    Kind kind = Kind::Uniform;
    double a = -1.0;
    double b = 1.0;

    bool bounded() const { return kind == Kind::Uniform; }
    bool operator==(const NoiseSpec&) const = default;
};

enum class MechanismFamily { Linear, Neural, Tabular };
enum class VariableType { Continuous, Discrete };
enum class DiscreteSampling { SampleRejection, Exhaustive, UnbiasedRandom };
enum class NoiseMode { Additive, Multiplicative };
enum class KernelKind { Gaussian, Epsilon };
enum class QueryKind { Ate, Cate, CtfTe };

// Bit-exact double <-> text (hex-float form), used by all serializers.
std::string hex_double(double v);
double parse_hex_double(const std::string& s);

std::string to_string(MechanismFamily f);
std::string to_string(VariableType t);
std::string to_string(DiscreteSampling s);
std::string to_string(NoiseMode m);
std::string to_string(KernelKind k);
std::string to_string(QueryKind q);

}  // namespace scmbench
