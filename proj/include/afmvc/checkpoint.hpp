#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afmvc/network.hpp"

namespace afmvc {

// Versioned text container for a set of networks plus their Adam states.
// Values are printed at 17 significant digits so a load reproduces
// parameters bit-exactly. `config_hash` ties a checkpoint to the config
// that produced it.
struct Checkpoint {
  static constexpr const char* kMagic = "AFMVC-CKPT";
  static constexpr int kVersion = 1;

  std::uint64_t config_hash = 0;
  std::vector<DenseNetwork> networks;
  std::vector<AdamState> adam_states;  // parallel to networks

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

// FNV-1a over a string; used to hash config serializations.
std::uint64_t fnv1a_hash(const std::string& s);

}  // namespace afmvc
