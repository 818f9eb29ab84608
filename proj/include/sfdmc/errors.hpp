#pragma once

#include <stdexcept>
#include <string>

namespace sfdmc {

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TapeError : std::runtime_error {
    explicit TapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MiningError : std::runtime_error {
    explicit MiningError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CheckpointError : std::runtime_error {
    enum class Kind { VersionMismatch, Corrupt, Missing };
    CheckpointError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
    Kind kind;
};

// Raised by the trainer when a loss term or the gradient norm stops being finite.
struct NonFiniteLossError : std::runtime_error {
    NonFiniteLossError(long step_, double l_disc_, double l_mfc_, double total_,
                       const std::string& msg)
        : std::runtime_error(msg), step(step_), l_disc(l_disc_), l_mfc(l_mfc_), total(total_) {}
    long step;
    double l_disc;
    double l_mfc;
    double total;
};

}  // namespace sfdmc
