#pragma once

#include <string>

#include "fdsc/autoencoder.hpp"

namespace fdsc {

// Binary weight container: magic "FDCK", version byte, serialized
// ModelConfig, then named parameter blobs (names are module paths, values
// stored as float64 big-endian).

template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path);

ModelConfig peek_checkpoint_config(const std::string& path);

template <typename T>
Model<T> load_checkpoint(const std::string& path);

}  // namespace fdsc
