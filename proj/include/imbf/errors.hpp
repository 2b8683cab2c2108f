#pragma once

#include <stdexcept>
#include <string>

namespace imbf {

// Base class for everything thrown by this library. The CLI maps subclasses
// onto exit codes: input/config problems -> 2, runtime training problems -> 3.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- input / schema problems -------------------------------------------------

class SchemaError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t row, std::size_t col)
        : Error(msg + " (row " + std::to_string(row) + ", col " + std::to_string(col) + ")"),
          row_(row), col_(col) {}
    std::size_t row() const { return row_; }
    std::size_t col() const { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

class LabelError : public Error {
public:
    using Error::Error;
};

class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// --- runtime / numeric problems ----------------------------------------------

class InsufficientMinorityError : public Error {
public:
    using Error::Error;
};

class NeighborCountError : public Error {
public:
    using Error::Error;
};

class SmoteUnderflowError : public Error {
public:
    using Error::Error;
};

class ClusterCountError : public Error {
public:
    using Error::Error;
};

class DegenerateLabelsError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class UndefinedAucError : public Error {
public:
    using Error::Error;
};

}  // namespace imbf
