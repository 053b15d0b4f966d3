// Copyright 2026 The CRA Authors
// SPDX-License-Identifier: Apache-2.0

#include "cra/checkpoint.h"

#include <fstream>
#include <sstream>

#include "cra/binary_io.h"
#include "cra/config.h"

namespace cra {

std::string checkpoint_bytes(const model::Model& m) {
  std::ostringstream out(std::ios::binary);
  io::write_magic(out, "CRAM");
  io::write_u32(out, kCheckpointVersion);
  const std::string config = model_config_to_json(m.config);
  io::write_u32(out, static_cast<std::uint32_t>(config.size()));
  out.write(config.data(), static_cast<std::streamsize>(config.size()));
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const std::string& name = m.params.name(i);
    const ad::Matrix& v = m.params.value(i);
    io::write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    io::write_u64(out, v.rows());
    io::write_u64(out, v.cols());
    for (double x : v.values()) io::write_f64(out, x);
  }
  return out.str();
}

model::Model checkpoint_from_bytes(const std::string& bytes, const std::string& origin) {
  std::istringstream in(bytes, std::ios::binary);
  model::Model m;
  try {
    io::expect_magic(in, "CRAM", origin);
    const std::uint32_t version = io::read_u32(in);
    if (version != kCheckpointVersion) {
      throw CheckpointError(origin + ": unsupported version " + std::to_string(version));
    }
    const std::uint32_t config_len = io::read_u32(in);
    if (config_len > bytes.size()) throw CheckpointError(origin + ": config length out of range");
    std::string config(config_len, '\0');
    io::read_exact(in, config.data(), config_len);
    m.config = model_config_from_json(config);
    m.config.validate();
    for (const auto& shape : model::param_layout(m.config)) {
      const std::uint32_t name_len = io::read_u32(in);
      if (name_len > 4096) throw CheckpointError(origin + ": tensor name length out of range");
      std::string name(name_len, '\0');
      io::read_exact(in, name.data(), name_len);
      if (name != shape.name) {
        throw CheckpointError(origin + ": tensor '" + name + "' where '" + shape.name +
                              "' was expected");
      }
      const std::uint64_t rows = io::read_u64(in);
      const std::uint64_t cols = io::read_u64(in);
      if (rows != shape.rows || cols != shape.cols) {
        throw CheckpointError(origin + ": tensor '" + name + "' has shape " +
                              ad::shape_string(rows, cols) + ", config implies " +
                              ad::shape_string(shape.rows, shape.cols));
      }
      ad::Matrix v(rows, cols);
      for (double& x : v.values()) x = io::read_f64(in);
      m.params.add(name, std::move(v));
    }
    if (in.peek() != std::char_traits<char>::eof()) {
      throw CheckpointError(origin + ": trailing bytes after the last tensor");
    }
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(origin + ": " + e.what());
  }
  return m;
}

void save_checkpoint(const std::string& path, const model::Model& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write '" + path + "'");
  const std::string bytes = checkpoint_bytes(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write failed for '" + path + "'");
}

model::Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_bytes(ss.str(), path);
}

}  // namespace cra
