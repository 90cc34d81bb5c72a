#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rcm/tensor.hpp"

namespace rcm {

// Container format "RCM-CKPT-1": a text header (meta lines, tensor directory)
// followed by a little-endian float64 blob.
struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  bool has_meta(const std::string& key) const;
  const std::string& meta_value(const std::string& key) const;
  long long meta_int(const std::string& key) const;
  double meta_double(const std::string& key) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace rcm
