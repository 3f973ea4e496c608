#ifndef FLOWLAB_ERRORS_HPP
#define FLOWLAB_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace flowlab {

/// Base of every error raised by the library. The CLI maps these to exit 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-level CSV error; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class VersionError : public Error { using Error::Error; };
class LengthError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };

class TruncationError : public Error {
public:
    TruncationError(std::uint64_t offset, const std::string& what)
        : Error("byte offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class OrderError : public Error {
public:
    OrderError(std::size_t index, const std::string& what)
        : Error("record " + std::to_string(index) + ": " + what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class SpecError : public Error { using Error::Error; };
class EmptyError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class NameError : public Error { using Error::Error; };
class InitError : public Error { using Error::Error; };
class TailError : public Error { using Error::Error; };

} // namespace flowlab

#endif // FLOWLAB_ERRORS_HPP
