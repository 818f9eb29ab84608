#pragma once

#include <string>

#include "sfdmc/trainer.hpp"

namespace sfdmc {

struct CheckpointData {
    Model model;
    long epoch = 0;
    std::string rng_state;
};

// Binary layout, little-endian throughout:
//   "SFDMCKPT" | u32 version | u32 len + canonical config JSON
//   | u32 len + RNG state | u64 epoch | u32 array count
//   | per array: u32 name len, name, u32 dim count, u64 dims, f64 values
//   | u32 CRC32 of everything before it
// Saving writes to <path>.tmp and renames, so a crash never leaves a
// half-written file under the real name. load_checkpoint verifies the CRC
// before parsing anything and rebuilds the model from the embedded config,
// so the three failure kinds are distinguishable: Missing (no such file),
// VersionMismatch (good CRC, different format version), Corrupt (bad CRC,
// bad magic, or inconsistent contents).
void save_checkpoint(const Model& model, long epoch, const std::string& rng_state,
                     const std::string& path);
CheckpointData load_checkpoint(const std::string& path);

}  // namespace sfdmc
