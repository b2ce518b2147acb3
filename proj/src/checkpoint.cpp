// Copyright 2026 gxlstm authors. Apache 2.0 License.

#include "gxl/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "gxl/error.hpp"

namespace gxl {

namespace {

constexpr char kMagic[4] = {'G', 'X', 'C', 'K'};
constexpr uint16_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw DataError("checkpoint truncated");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_le<uint32_t>(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  const uint32_t n = read_le<uint32_t>(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw DataError("checkpoint truncated");
  return s;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  write_le<uint32_t>(os, static_cast<uint32_t>(t.shape().size()));
  for (int64_t d : t.shape()) write_le<uint64_t>(os, static_cast<uint64_t>(d));
  for (int64_t i = 0; i < t.size(); ++i) write_le<double>(os, t[i]);
}

Tensor read_tensor(std::istream& is) {
  const uint32_t rank = read_le<uint32_t>(is);
  Shape shape;
  for (uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int64_t>(read_le<uint64_t>(is)));
  Tensor t(shape);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = read_le<double>(is);
  return t;
}

}  // namespace

Checkpoint make_checkpoint(const RunConfig& config, uint64_t train_seed, uint32_t epoch, double p0,
                           const ParamStore& params, const Adam* optimizer) {
  Checkpoint c;
  c.config = config;
  c.train_seed = train_seed;
  c.epoch = epoch;
  c.p0 = p0;
  for (const Parameter* p : params.all()) c.parameters.emplace_back(p->name, p->value);
  if (optimizer) {
    c.has_optimizer = true;
    c.adam_step = optimizer->step_count();
    c.adam_m = optimizer->first_moments();
    c.adam_v = optimizer->second_moments();
  }
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path + " for writing");
  os.write(kMagic, 4);
  write_le<uint16_t>(os, kVersion);
  const std::string config_text = checkpoint.config.serialize();
  write_le<uint64_t>(os, config_text.size());
  os.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
  write_le<uint64_t>(os, checkpoint.train_seed);
  write_le<uint32_t>(os, checkpoint.epoch);
  write_le<double>(os, checkpoint.p0);
  write_le<uint64_t>(os, checkpoint.parameters.size());
  for (const auto& [name, tensor] : checkpoint.parameters) {
    write_string(os, name);
    write_tensor(os, tensor);
  }
  write_le<uint8_t>(os, checkpoint.has_optimizer ? 1 : 0);
  if (checkpoint.has_optimizer) {
    write_le<uint64_t>(os, static_cast<uint64_t>(checkpoint.adam_step));
    for (const Tensor& t : checkpoint.adam_m) write_tensor(os, t);
    for (const Tensor& t : checkpoint.adam_v) write_tensor(os, t);
  }
  if (!os) throw DataError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(path + ": not a GXCK checkpoint (bad magic)");
  }
  const uint16_t version = read_le<uint16_t>(is);
  if (version != kVersion) {
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  const uint64_t config_len = read_le<uint64_t>(is);
  std::string config_text(config_len, '\0');
  is.read(config_text.data(), static_cast<std::streamsize>(config_len));
  if (!is) throw DataError(path + ": truncated config block");
  c.config = parse_config_text(config_text);
  c.train_seed = read_le<uint64_t>(is);
  c.epoch = read_le<uint32_t>(is);
  c.p0 = read_le<double>(is);
  const uint64_t n_params = read_le<uint64_t>(is);
  for (uint64_t i = 0; i < n_params; ++i) {
    std::string name = read_string(is);
    Tensor t = read_tensor(is);
    c.parameters.emplace_back(std::move(name), std::move(t));
  }
  c.has_optimizer = read_le<uint8_t>(is) != 0;
  if (c.has_optimizer) {
    c.adam_step = static_cast<int64_t>(read_le<uint64_t>(is));
    for (uint64_t i = 0; i < n_params; ++i) c.adam_m.push_back(read_tensor(is));
    for (uint64_t i = 0; i < n_params; ++i) c.adam_v.push_back(read_tensor(is));
  }
  return c;
}

void assign_parameters(const Checkpoint& checkpoint, ParamStore& params) {
  if (checkpoint.parameters.size() != params.size()) {
    throw DataError("checkpoint has " + std::to_string(checkpoint.parameters.size()) +
                    " parameters, model expects " + std::to_string(params.size()));
  }
  for (const auto& [name, tensor] : checkpoint.parameters) {
    Parameter* p = params.find(name);
    if (!p) throw DataError("checkpoint parameter " + name + " unknown to the model");
    if (!p->value.same_shape(tensor)) {
      throw DataError("checkpoint parameter " + name + " has shape " +
                      shape_to_string(tensor.shape()) + ", model expects " +
                      shape_to_string(p->value.shape()));
    }
    p->value = tensor;
  }
}

std::unique_ptr<GatedXlstmModel> restore_model(const Checkpoint& checkpoint) {
  auto model = std::make_unique<GatedXlstmModel>(checkpoint.config.model_config(),
                                                 checkpoint.train_seed);
  assign_parameters(checkpoint, model->params());
  return model;
}

}  // namespace gxl
