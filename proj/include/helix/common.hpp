#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace helix {

// Error taxonomy. The CLI maps these onto exit codes: usage errors are
// raised by the argument parser itself, NumericError and children map to
// exit code 2, IoError to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

// Expression text could not be parsed. Carries the byte offset of the
// offending token.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// Evaluation left the domain of an operation (division by zero, power with
// non-positive base, ...) or produced a non-finite value.
class DomainError : public NumericError {
public:
    using NumericError::NumericError;
};

// Orbit iteration failed (non-finite or descending step). Carries the
// 1-based index of the offending term.
class OrbitError : public NumericError {
public:
    OrbitError(const std::string& msg, std::int64_t index)
        : NumericError(msg + " at index " + std::to_string(index)),
          index_(index) {}
    std::int64_t index() const { return index_; }

private:
    std::int64_t index_;
};

// A search (boundary bisection, mu inversion) could not satisfy its
// contract: bad bracket, unreachable target, exhausted budget.
class SearchError : public NumericError {
public:
    using NumericError::NumericError;
};

// Detection preconditions not met (series too short, not in regime,
// insufficient steady points).
class DetectError : public NumericError {
public:
    using NumericError::NumericError;
};

// The parameter point is not in the pseudo-helix regime at all (stable
// helix, or no periodic stride pattern); a longer horizon will not help.
class NotInRegime : public DetectError {
public:
    using DetectError::DetectError;
};

// Too little data at this horizon; retrying with a longer one can succeed.
class InsufficientData : public DetectError {
public:
    using DetectError::DetectError;
};

class IoError : public Error {
public:
    using Error::Error;
};

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Integer/fractional split: int_part = floor(v), frac_part = v - floor(v).
// The reconstruction int_part + frac_part == v is exact in doubles.
struct Decomposed {
    std::int64_t int_part;
    double frac_part;
};

inline Decomposed decompose(double value) {
    const double f = std::floor(value);
    return {static_cast<std::int64_t>(f), value - f};
}

inline double frac(double value) { return value - std::floor(value); }

// Distance between two points of the unit circle [0,1).
inline double circular_distance(double a, double b) {
    const double d = std::fabs(a - b);
    return std::min(d, 1.0 - d);
}

// Nearest-integer stride of one orbit step. Within a helix (or a
// pseudo-helix window) the steps stay close to an integer pattern, so the
// rounded stride is the robust carrier of "integer-part periodicity":
// floor-part jumps flip by one whenever a fractional part drifts across an
// integer, strides do not.
inline std::int64_t stride(double delta) {
    return static_cast<std::int64_t>(std::llround(delta));
}

// splitmix64: small deterministic generator used for seeded sampling.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1).
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

// FNV-1a 64-bit, used for fixture provenance checksums.
inline std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace helix
