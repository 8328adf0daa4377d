#pragma once

#include <filesystem>
#include <iosfwd>

#include "llm3dti/fusion_net.hpp"

namespace llm3dti {

// Parameter checkpoint, all integers little-endian:
//
//   8 bytes   magic "L3DTCKPT"
//   u32       format version (kCheckpointVersion)
//   u32 × 4   dims: drug_struct, protein_struct, text, hidden
//   u32       tensor count
//   per tensor, in ModelParams::tensors() order:
//     u32     name length, then the name bytes (no terminator)
//     EMB1 block: "EMB1", u32 rows, u32 cols, rows×cols f64 row-major
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(std::ostream& out, const ModelParams& p);
ModelParams load_checkpoint(std::istream& in);
void save_checkpoint(const ModelParams& p, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace llm3dti
