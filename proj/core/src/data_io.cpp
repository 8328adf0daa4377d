#include "llm3dti/data_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "llm3dti/error.hpp"

namespace llm3dti {

namespace {

constexpr char kEmbMagic[4] = {'E', 'M', 'B', '1'};

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool parse_double(std::string_view text, double& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  return out;
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
  throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what, line);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("EMB1: truncated header", 0);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

// --- networks --------------------------------------------------------------

AssociationNetwork load_network(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) parse_fail(path, 1, "missing '# kind=' header");
  ++lineno;
  std::string_view header = strip_cr(line);
  constexpr std::string_view prefix = "# kind=";
  if (header.substr(0, prefix.size()) != prefix) parse_fail(path, 1, "missing '# kind=' header");
  const auto kind = parse_kind(header.substr(prefix.size()));
  if (!kind) parse_fail(path, 1, "unknown network kind '" + std::string(header.substr(prefix.size())) + "'");

  std::vector<std::pair<std::string, std::string>> edges;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text = strip_cr(line);
    if (text.empty()) continue;
    const auto fields = split_tabs(text);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      parse_fail(path, lineno, "expected 'row_id<TAB>col_id'");
    }
    edges.emplace_back(std::string(fields[0]), std::string(fields[1]));
  }

  AssociationNetwork net;
  net.kind = *kind;
  std::set<std::string> rows, cols;
  for (const auto& [r, c] : edges) {
    rows.insert(r);
    cols.insert(c);
  }
  if (is_unipartite(*kind)) {
    rows.insert(cols.begin(), cols.end());
    cols = rows;
  }
  net.row_ids.assign(rows.begin(), rows.end());
  net.col_ids.assign(cols.begin(), cols.end());
  std::unordered_map<std::string, std::size_t> ri, ci;
  for (std::size_t i = 0; i < net.row_ids.size(); ++i) ri.emplace(net.row_ids[i], i);
  for (std::size_t j = 0; j < net.col_ids.size(); ++j) ci.emplace(net.col_ids[j], j);
  net.adjacency = Matrix(net.row_ids.size(), net.col_ids.size());
  for (const auto& [r, c] : edges) {
    net.adjacency(ri.at(r), ci.at(c)) = 1.0;
    if (is_unipartite(*kind)) net.adjacency(ri.at(c), ci.at(r)) = 1.0;
  }
  return net;
}

AssociationNetwork load_network(const std::filesystem::path& path, NetworkKind expected) {
  AssociationNetwork net = load_network(path);
  if (net.kind != expected) {
    throw InputError(path.string() + ": header kind '" + std::string(kind_name(net.kind)) +
                     "' but '" + std::string(kind_name(expected)) + "' was expected");
  }
  return net;
}

void save_network(const AssociationNetwork& net, const std::filesystem::path& path) {
  net.validate();
  auto out = open_out(path);
  out << "# kind=" << kind_name(net.kind) << "\n";
  const bool uni = is_unipartite(net.kind);
  for (std::size_t i = 0; i < net.row_ids.size(); ++i)
    for (std::size_t j = uni ? i : 0; j < net.col_ids.size(); ++j)
      if (net.adjacency(i, j) != 0.0) out << net.row_ids[i] << '\t' << net.col_ids[j] << '\n';
}

// --- EMB1 ------------------------------------------------------------------

void write_emb1(std::ostream& out, const Matrix& m) {
  out.write(kEmbMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
    out.write(b, 8);
  }
}

Matrix read_emb1(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kEmbMagic)) {
    throw ParseError("EMB1: bad magic", 0);
  }
  const std::uint32_t rows = get_u32(in);
  const std::uint32_t cols = get_u32(in);
  Matrix m(rows, cols);
  for (double& v : m.data()) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw ParseError("EMB1: truncated payload", 0);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  return m;
}

void write_emb1(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path, true);
  write_emb1(out, m);
}

Matrix read_emb1(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  try {
    return read_emb1(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

bool is_emb1_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4];
  return in && in.read(magic, 4) && std::equal(magic, magic + 4, kEmbMagic);
}

std::filesystem::path ids_sidecar(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".ids");
}

// --- text embeddings -------------------------------------------------------

void TextEmbedding::validate() const {
  if (embedding.rows() != entity_ids.size()) {
    throw InputError("embedding has " + std::to_string(embedding.rows()) + " rows for " +
                     std::to_string(entity_ids.size()) + " ids");
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < entity_ids.size(); ++i) {
    if (!seen.insert(entity_ids[i]).second) {
      throw InputError("duplicate entity id '" + entity_ids[i] + "' in embedding");
    }
    for (double v : embedding.row(i))
      if (!std::isfinite(v)) throw InputError("non-finite value for entity '" + entity_ids[i] + "'");
  }
}

TextEmbedding load_text_embeddings(const std::filesystem::path& path, Side side) {
  TextEmbedding emb;
  emb.side = side;
  if (is_emb1_file(path)) {
    emb.embedding = read_emb1(path);
    auto in = open_in(ids_sidecar(path));
    std::string line;
    while (std::getline(in, line)) {
      std::string_view id = strip_cr(line);
      if (!id.empty()) emb.entity_ids.emplace_back(id);
    }
    emb.provenance = "emb1:" + path.filename().string();
    emb.validate();
    return emb;
  }

  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text = strip_cr(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      constexpr std::string_view tag = "# provenance=";
      if (text.substr(0, tag.size()) == tag) emb.provenance = std::string(text.substr(tag.size()));
      continue;
    }
    const auto fields = split_tabs(text);
    if (fields.size() < 2 || fields[0].empty()) {
      parse_fail(path, lineno, "expected 'entity_id<TAB>v1...'");
    }
    const std::size_t d = fields.size() - 1;
    if (emb.entity_ids.empty()) {
      dim = d;
    } else if (d != dim) {
      parse_fail(path, lineno,
                 "ragged row: " + std::to_string(d) + " values, expected " + std::to_string(dim));
    }
    for (std::size_t k = 1; k < fields.size(); ++k) {
      double v;
      if (!parse_double(fields[k], v)) {
        parse_fail(path, lineno, "bad number '" + std::string(fields[k]) + "'");
      }
      if (!std::isfinite(v)) {
        throw InputError(path.string() + ":" + std::to_string(lineno) +
                         ": non-finite value for entity '" + std::string(fields[0]) + "'");
      }
      values.push_back(v);
    }
    emb.entity_ids.emplace_back(fields[0]);
  }
  emb.embedding = Matrix(emb.entity_ids.size(), dim, values);
  emb.validate();
  return emb;
}

void save_text_embeddings_tsv(const TextEmbedding& emb, const std::filesystem::path& path) {
  emb.validate();
  auto out = open_out(path);
  if (!emb.provenance.empty()) out << "# provenance=" << emb.provenance << "\n";
  for (std::size_t i = 0; i < emb.entity_ids.size(); ++i) {
    out << emb.entity_ids[i];
    for (double v : emb.embedding.row(i)) out << '\t' << format_double(v);
    out << '\n';
  }
}

void save_embedding_emb1(const std::vector<std::string>& ids, const Matrix& m,
                         const std::filesystem::path& path) {
  if (ids.size() != m.rows()) {
    throw ShapeError("save_embedding_emb1: " + std::to_string(ids.size()) + " ids for " +
                     m.shape_string());
  }
  write_emb1(path, m);
  auto out = open_out(ids_sidecar(path));
  for (const auto& id : ids) out << id << '\n';
}

TextEmbedding synth_embeddings(RandomStream& stream, std::size_t n, std::size_t d,
                               const PlantedFactors* planted, Side side,
                               const std::string& id_prefix) {
  if (n < 1 || d < 1) throw ParameterError("synth_embeddings: n and d must be >= 1");
  TextEmbedding emb;
  emb.side = side;
  emb.provenance = "synthetic";
  emb.entity_ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) emb.entity_ids.push_back(id_prefix + std::to_string(i));

  if (planted == nullptr) {
    emb.embedding = stream.gaussian_matrix(n, d);
    return emb;
  }
  if (planted->factors.rows() != n) {
    throw ShapeError("synth_embeddings: factors " + planted->factors.shape_string() +
                     " for n=" + std::to_string(n));
  }
  const std::size_t k = planted->factors.cols();
  const Matrix loading =
      stream.gaussian_matrix(k, d, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(k, 1))));
  emb.embedding = matmul(planted->factors, loading);
  if (planted->noise > 0.0) axpy(emb.embedding, planted->noise, stream.gaussian_matrix(n, d));
  return emb;
}

// --- datasets --------------------------------------------------------------

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
    default: return "unassigned";
  }
}

std::vector<std::size_t> InteractionDataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(i);
  return out;
}

std::size_t InteractionDataset::count(Split s, int label) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (split[i] == s && pairs[i].label == label) ++n;
  return n;
}

InteractionDataset InteractionDataset::subset(std::span<const std::size_t> rows) const {
  InteractionDataset out;
  out.seed = seed;
  for (std::size_t r : rows) {
    out.pairs.push_back(pairs.at(r));
    out.split.push_back(split.at(r));
  }
  return out;
}

void InteractionDataset::validate() const {
  if (split.size() != pairs.size()) {
    throw InputError("dataset: " + std::to_string(split.size()) + " split entries for " +
                     std::to_string(pairs.size()) + " pairs");
  }
  std::set<PairKey> seen;
  for (const auto& p : pairs) {
    if (p.label != 0 && p.label != 1) throw InputError("dataset: label must be 0 or 1");
    if (!seen.emplace(p.drug, p.protein).second) {
      throw InputError("dataset: duplicate pair (" + p.drug + ", " + p.protein + ")");
    }
  }
}

InteractionDataset sample_negatives(std::span<const PairKey> positives, std::size_t ratio,
                                    RandomStream& stream, const EntityUniverse& universe) {
  if (ratio < 1) throw ParameterError("sample_negatives: ratio must be >= 1");
  std::unordered_map<std::string, std::size_t> di, pi;
  for (std::size_t i = 0; i < universe.drugs.size(); ++i) di.emplace(universe.drugs[i], i);
  for (std::size_t j = 0; j < universe.proteins.size(); ++j) pi.emplace(universe.proteins[j], j);
  const std::size_t np = universe.proteins.size();

  InteractionDataset ds;
  ds.seed = stream.seed();
  std::unordered_set<std::size_t> taken;
  for (const auto& [d, p] : positives) {
    auto a = di.find(d);
    auto b = pi.find(p);
    if (a == di.end() || b == pi.end()) {
      throw InputError("sample_negatives: positive (" + d + ", " + p + ") outside the universe");
    }
    if (!taken.insert(a->second * np + b->second).second) {
      throw InputError("sample_negatives: duplicate positive (" + d + ", " + p + ")");
    }
    ds.pairs.push_back({d, p, 1});
  }

  const std::size_t total = universe.drugs.size() * np;
  const std::size_t candidates = total - positives.size();
  const std::size_t needed = ratio * positives.size();
  if (needed > candidates) {
    throw InputError("sample_negatives: need " + std::to_string(needed) + " negatives but only " +
                     std::to_string(candidates) + " non-positive pairs exist");
  }

  auto emit = [&](std::size_t code) {
    ds.pairs.push_back({universe.drugs[code / np], universe.proteins[code % np], 0});
  };
  if (2 * needed >= candidates) {
    std::vector<std::size_t> pool;
    pool.reserve(candidates);
    for (std::size_t c = 0; c < total; ++c)
      if (!taken.count(c)) pool.push_back(c);
    for (std::size_t i = 0; i < needed; ++i) {
      const std::size_t j = i + stream.index(pool.size() - i);
      std::swap(pool[i], pool[j]);
      emit(pool[i]);
    }
  } else {
    std::size_t drawn = 0;
    while (drawn < needed) {
      const std::size_t c = stream.index(total);
      if (!taken.insert(c).second) continue;
      emit(c);
      ++drawn;
    }
  }
  ds.split.assign(ds.pairs.size(), Split::unassigned);
  return ds;
}

InteractionDataset make_splits(InteractionDataset ds, const SplitFractions& f,
                               RandomStream& stream) {
  if (std::abs(f.train + f.valid + f.test - 1.0) > 1e-9) {
    throw ParameterError("make_splits: fractions must sum to 1");
  }
  if (f.train <= 0.0 || f.valid <= 0.0 || f.test <= 0.0) {
    throw InputError("make_splits: every split needs a positive fraction (got " +
                     std::to_string(f.train) + "/" + std::to_string(f.valid) + "/" +
                     std::to_string(f.test) + ")");
  }
  ds.split.assign(ds.pairs.size(), Split::unassigned);
  for (int label : {0, 1}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.pairs.size(); ++i)
      if (ds.pairs[i].label == label) rows.push_back(i);
    stream.shuffle(rows);
    const auto n = static_cast<double>(rows.size());
    const std::size_t n_train = std::min(rows.size(), static_cast<std::size_t>(std::llround(f.train * n)));
    const std::size_t n_valid =
        std::min(rows.size() - n_train, static_cast<std::size_t>(std::llround(f.valid * n)));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      ds.split[rows[k]] = k < n_train ? Split::train
                          : k < n_train + n_valid ? Split::valid
                                                  : Split::test;
    }
  }
  for (Split s : {Split::train, Split::valid, Split::test}) {
    if (ds.indices(s).empty()) {
      throw InputError("make_splits: " + std::string(split_name(s)) + " split is empty for " +
                       std::to_string(ds.size()) + " pairs");
    }
  }
  return ds;
}

InteractionDataset load_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  InteractionDataset ds;
  std::set<PairKey> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text = strip_cr(line);
    if (text.empty() || text.front() == '#') continue;
    const auto fields = split_tabs(text);
    if (fields.size() != 3 && fields.size() != 4) {
      parse_fail(path, lineno, "expected 'drug_id<TAB>protein_id<TAB>label[<TAB>split]'");
    }
    if (fields[2] != "0" && fields[2] != "1") parse_fail(path, lineno, "label must be 0 or 1");
    Split s = Split::unassigned;
    if (fields.size() == 4) {
      if (fields[3] == "train") s = Split::train;
      else if (fields[3] == "valid") s = Split::valid;
      else if (fields[3] == "test") s = Split::test;
      else if (fields[3] != "unassigned") parse_fail(path, lineno, "unknown split '" + std::string(fields[3]) + "'");
    }
    if (!seen.emplace(std::string(fields[0]), std::string(fields[1])).second) {
      parse_fail(path, lineno, "duplicate pair");
    }
    ds.pairs.push_back({std::string(fields[0]), std::string(fields[1]), fields[2] == "1" ? 1 : 0});
    ds.split.push_back(s);
  }
  return ds;
}

void save_dataset(const InteractionDataset& ds, const std::filesystem::path& path,
                  bool with_split) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    const auto& p = ds.pairs[i];
    out << p.drug << '\t' << p.protein << '\t' << p.label;
    if (with_split) out << '\t' << split_name(ds.split[i]);
    out << '\n';
  }
}

std::vector<PairKey> positive_pairs(const InteractionDataset& ds) {
  std::vector<PairKey> out;
  for (const auto& p : ds.pairs)
    if (p.label == 1) out.emplace_back(p.drug, p.protein);
  return out;
}

}  // namespace llm3dti
