#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "qtnn/activation.hpp"
#include "qtnn/bnn.hpp"
#include "qtnn/esn.hpp"
#include "qtnn/fnn.hpp"
#include "qtnn/rnn.hpp"

namespace qtnn {

enum class Architecture : std::uint32_t { fnn = 1, rnn = 2, bnn = 3, esn = 4 };

/// Flat little-endian container:
///   "QTNNCKPT", u32 version, u32 architecture, u32 activation tag, u32 qt mode,
///   f64 v0, a, m, hbar, ampl, u32 tensor count, (u64 rows, u64 cols) per
///   tensor, then every tensor's row-major f64 payload.
struct Checkpoint {
  Architecture arch = Architecture::fnn;
  ActivationKind act;
  std::vector<Matrix> tensors;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws FormatError on a bad magic, version, tag or truncated payload.
Checkpoint read_checkpoint(const std::filesystem::path& path);

void save_model(const std::filesystem::path& path, const FnnModel& model);
void save_model(const std::filesystem::path& path, const RnnModel& model);
void save_model(const std::filesystem::path& path, const BnnModel& model);
void save_model(const std::filesystem::path& path, const EsnModel& model);

FnnModel load_fnn(const std::filesystem::path& path);
RnnModel load_rnn(const std::filesystem::path& path);
BnnModel load_bnn(const std::filesystem::path& path);
EsnModel load_esn(const std::filesystem::path& path);

}  // namespace qtnn
