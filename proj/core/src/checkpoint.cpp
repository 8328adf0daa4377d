#include "llm3dti/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "llm3dti/data_io.hpp"
#include "llm3dti/error.hpp"

namespace llm3dti {

namespace {

constexpr std::array<char, 8> kMagic{'L', '3', 'D', 'T', 'C', 'K', 'P', 'T'};

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw InputError("checkpoint: truncated header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint32_t narrow(std::size_t v) {
  if (v > 0xffffffffu) throw ParameterError("checkpoint: dimension too large");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void save_checkpoint(std::ostream& out, const ModelParams& p) {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kCheckpointVersion);
  put_u32(out, narrow(p.dims.drug_struct));
  put_u32(out, narrow(p.dims.protein_struct));
  put_u32(out, narrow(p.dims.text));
  put_u32(out, narrow(p.dims.hidden));
  const auto tensors = p.tensors();
  put_u32(out, narrow(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(out, narrow(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_emb1(out, *t.value);
  }
  if (!out) throw Error("checkpoint: write failed");
}

ModelParams load_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw InputError("checkpoint: bad magic");
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) {
    throw InputError("checkpoint: unsupported version " + std::to_string(version));
  }
  ModelDims dims;
  dims.drug_struct = get_u32(in);
  dims.protein_struct = get_u32(in);
  dims.text = get_u32(in);
  dims.hidden = get_u32(in);

  // Shapes come from a freshly initialized model of the recorded dims.
  RandomStream scratch(0);
  ModelParams p = init_params(scratch, dims);
  auto tensors = p.tensors();
  const std::uint32_t count = get_u32(in);
  if (count != tensors.size()) {
    throw InputError("checkpoint: expected " + std::to_string(tensors.size()) + " tensors, found " +
                     std::to_string(count));
  }
  for (auto& t : tensors) {
    const std::uint32_t len = get_u32(in);
    if (len > 4096) throw InputError("checkpoint: implausible tensor name length");
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw InputError("checkpoint: truncated tensor name");
    if (name != t.name) {
      throw InputError("checkpoint: expected tensor '" + t.name + "', found '" + name + "'");
    }
    Matrix m = read_emb1(in);
    if (m.rows() != t.value->rows() || m.cols() != t.value->cols()) {
      throw InputError("checkpoint: tensor '" + name + "' has shape " + m.shape_string() +
                       ", expected " + t.value->shape_string());
    }
    *t.value = std::move(m);
  }
  return p;
}

void save_checkpoint(const ModelParams& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  save_checkpoint(out, p);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return load_checkpoint(in);
}

}  // namespace llm3dti
