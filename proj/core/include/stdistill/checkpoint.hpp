#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stdistill/tensor.hpp"

namespace stdistill {

// Self-describing container: named float64 tensors with shapes, plus a JSON
// metadata blob (config echo, normalizer stats, epoch, RNG state).
struct Checkpoint {
  std::vector<std::pair<std::string, Tensor>> tensors;
  nlohmann::json meta;

  const Tensor& find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace stdistill
