#pragma once

#include <stdexcept>
#include <string>

namespace nlctg {

// Base for all domain errors raised by the library. CLI maps these to exit 1.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct GrammarError : Error {
    using Error::Error;
};

struct SchemaError : Error {
    using Error::Error;
};

struct GenerationError : Error {
    using Error::Error;
};

struct CorpusError : Error {
    using Error::Error;
};

struct DecodeError : Error {
    using Error::Error;
};

struct ModelError : Error {
    using Error::Error;
};

struct MetricError : Error {
    using Error::Error;
};

}  // namespace nlctg
