// Copyright 2026 gxlstm authors. Apache 2.0 License.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gxl/config.hpp"
#include "gxl/model.hpp"
#include "gxl/optim.hpp"

namespace gxl {

// GXCK checkpoint file (little-endian):
//   magic "GXCK", version u16 = 1,
//   config text (u64 length + bytes, canonical RunConfig serialization),
//   train seed u64, best epoch u32, shift probability p0 f64,
//   named f64 parameter blobs (name, shape, data),
//   optional optimizer state: step count + first/second moments per
//   parameter in the same order.
struct Checkpoint {
  RunConfig config;
  uint64_t train_seed = 0;
  uint32_t epoch = 0;
  double p0 = 0.5;
  std::vector<std::pair<std::string, Tensor>> parameters;
  bool has_optimizer = false;
  int64_t adam_step = 0;
  std::vector<Tensor> adam_m;
  std::vector<Tensor> adam_v;
};

Checkpoint make_checkpoint(const RunConfig& config, uint64_t train_seed, uint32_t epoch, double p0,
                           const ParamStore& params, const Adam* optimizer = nullptr);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds the model from the checkpoint's config snapshot and assigns the
// stored parameter values; shapes and names must match exactly.
std::unique_ptr<GatedXlstmModel> restore_model(const Checkpoint& checkpoint);
// Copies stored values into an existing compatible parameter store.
void assign_parameters(const Checkpoint& checkpoint, ParamStore& params);

}  // namespace gxl
