#pragma once

#include <stdexcept>
#include <string>

namespace peeroff {

enum class ErrorKind {
    domain,      // argument outside the mathematical domain
    contract,    // caller broke a precondition (scheduler bug)
    config,      // invalid scenario / station configuration
    infeasible,  // no solution exists for the requested problem
    invariant,   // runtime invariant violated during a simulation
    io,          // file or parse failure
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

class ContractError : public Error {
public:
    explicit ContractError(const std::string& what) : Error(ErrorKind::contract, what) {}
};

class InfeasibleError : public Error {
public:
    explicit InfeasibleError(const std::string& what) : Error(ErrorKind::infeasible, what) {}
};

class InvariantError : public Error {
public:
    explicit InvariantError(const std::string& what) : Error(ErrorKind::invariant, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

/// Configuration error carrying the offending key path, e.g. `stations[2].e_budget_j`.
class ConfigError : public Error {
public:
    ConfigError(std::string key_path, const std::string& message)
        : Error(ErrorKind::config, key_path.empty() ? message : key_path + ": " + message),
          key_path_(std::move(key_path)) {}
    const std::string& key_path() const noexcept { return key_path_; }

private:
    std::string key_path_;
};

}  // namespace peeroff
