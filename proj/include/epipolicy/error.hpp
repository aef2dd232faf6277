#pragma once

#include <stdexcept>
#include <string>

namespace epipolicy {

// Base for every error raised by the library. Callers that only care about
// "something in the toolkit failed" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParameterError : public Error { using Error::Error; };
class SeedingError : public Error { using Error::Error; };
class DegenerateDesignError : public Error { using Error::Error; };
class OverlapError : public Error { using Error::Error; };
class CollinearityError : public Error { using Error::Error; };
class InfeasibleError : public Error { using Error::Error; };
class SchemaError : public Error { using Error::Error; };
class GapError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

}  // namespace epipolicy
