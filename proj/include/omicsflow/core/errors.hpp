#ifndef OMICSFLOW_CORE_ERRORS_HPP
#define OMICSFLOW_CORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace omicsflow {

/**
 * @brief Malformed or inconsistent input data (files, matrices, clinical tables).
 */
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * @brief Invalid configuration or hyperparameters, detected before any work is done.
 */
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * @brief A numerical procedure failed to reach its target (e.g. bandwidth search).
 */
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}

#endif
