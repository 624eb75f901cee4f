#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wsvdpu {

// Broad failure classes; the CLI maps them to exit codes.
enum class ErrorCategory { Usage, Data, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

#define WSVDPU_DEFINE_ERROR(Name, Category)                                   \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what)                                \
            : Error(ErrorCategory::Category, #Name ": " + what) {}            \
    };

WSVDPU_DEFINE_ERROR(InvalidArgument, Usage)
WSVDPU_DEFINE_ERROR(DuplicatePoints, Data)
WSVDPU_DEFINE_ERROR(EmptyFile, Data)
WSVDPU_DEFINE_ERROR(InvalidSplit, Data)
WSVDPU_DEFINE_ERROR(CoverageGap, Data)
WSVDPU_DEFINE_ERROR(NoPatch, Data)
WSVDPU_DEFINE_ERROR(LengthMismatch, Data)
WSVDPU_DEFINE_ERROR(ZeroRhs, Numerical)
WSVDPU_DEFINE_ERROR(SvdFailure, Numerical)
WSVDPU_DEFINE_ERROR(RankCollapse, Numerical)
WSVDPU_DEFINE_ERROR(SingularLocalSystem, Numerical)
WSVDPU_DEFINE_ERROR(AllNonFinite, Numerical)

#undef WSVDPU_DEFINE_ERROR

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(ErrorCategory::Data, "ParseError: line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ZeroTruthValue : public Error {
public:
    explicit ZeroTruthValue(std::size_t index)
        : Error(ErrorCategory::Data, "ZeroTruthValue: truth value at index " + std::to_string(index) + " is zero"),
          index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

}  // namespace wsvdpu
