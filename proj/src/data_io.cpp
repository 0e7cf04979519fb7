#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mgnn/dataset.hpp"
#include "mgnn/report_io.hpp"

namespace mgnn {

namespace {

constexpr char kDatasetMagic[4] = {'M', 'G', 'N', 'N'};
constexpr std::uint32_t kDatasetVersion = 1;

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  template <typename T>
  T get(const char* field) {
    require(sizeof(T), field);
    std::array<unsigned char, sizeof(T)> raw;
    std::memcpy(raw.data(), bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    pos_ += sizeof(T);
    return std::bit_cast<T>(raw);
  }

  void require(std::uint64_t n, const char* field) const {
    if (bytes_.size() - pos_ < n)
      throw ParseError(what_ + ": truncated payload reading " + field + ": expected " +
                           std::to_string(pos_ + n) + " bytes, found " + std::to_string(bytes_.size()),
                       bytes_.size());
  }

  void expect_magic(const char (&magic)[4]) {
    require(4, "magic");
    if (std::memcmp(bytes_.data(), magic, 4) != 0)
      throw ParseError(what_ + ": magic mismatch, expected '" + std::string(magic, 4) + "'", 0);
    pos_ = 4;
  }

  void expect_end() const {
    if (pos_ != bytes_.size())
      throw ParseError(what_ + ": " + std::to_string(bytes_.size() - pos_) + " trailing bytes after payload", pos_);
  }

  std::uint64_t pos() const { return pos_; }

 private:
  const std::string& bytes_;
  std::string what_;
  std::uint64_t pos_ = 0;
};

std::string read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_binary_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string dataset_bytes(const EmbeddingDataset& data) {
  data.validate();
  std::string out;
  out.append(kDatasetMagic, 4);
  put_le<std::uint32_t>(out, kDatasetVersion);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(data.size()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(data.dim()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(data.num_classes));
  for (Index i = 0; i < data.size(); ++i)
    for (Index j = 0; j < data.dim(); ++j) put_le<double>(out, data.embeddings(i, j));
  for (int y : data.labels) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(y));
  for (Split s : data.splits) put_le<std::uint8_t>(out, static_cast<std::uint8_t>(s));
  return out;
}

EmbeddingDataset parse_dataset_bytes(const std::string& bytes, const std::string& what) {
  ByteReader r(bytes, what);
  r.expect_magic(kDatasetMagic);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kDatasetVersion)
    throw ParseError(what + ": unsupported version " + std::to_string(version), 4);
  const auto n = r.get<std::uint64_t>("item count");
  const auto m = r.get<std::uint64_t>("dimension");
  const auto c = r.get<std::uint64_t>("class count");
  if (c < 1 || c > (1u << 31)) throw ParseError(what + ": invalid class count", 24);
  // Size check before allocating anything proportional to the header values.
  if (n > (UINT64_MAX / 16) / std::max<std::uint64_t>(m + 1, 1)) throw ParseError(what + ": header sizes overflow", 8);
  r.require(n * m * 8 + n * 4 + n, "payload");

  EmbeddingDataset data;
  data.embeddings.resize(static_cast<Index>(n), static_cast<Index>(m));
  data.num_classes = static_cast<int>(c);
  for (Index i = 0; i < static_cast<Index>(n); ++i)
    for (Index j = 0; j < static_cast<Index>(m); ++j) {
      const std::uint64_t at = r.pos();
      const double v = r.get<double>("embedding");
      if (!std::isfinite(v)) throw ParseError(what + ": non-finite embedding value", at);
      data.embeddings(i, j) = v;
    }
  data.labels.resize(n);
  for (auto& y : data.labels) {
    const std::uint64_t at = r.pos();
    const auto raw = r.get<std::uint32_t>("label");
    if (raw >= c)
      throw ParseError(what + ": label " + std::to_string(raw) + " >= class count " + std::to_string(c), at);
    y = static_cast<int>(raw);
  }
  data.splits.resize(n);
  for (auto& s : data.splits) {
    const std::uint64_t at = r.pos();
    const auto raw = r.get<std::uint8_t>("split tag");
    if (raw > 1) throw ParseError(what + ": split tag must be 0 or 1", at);
    s = static_cast<Split>(raw);
  }
  r.expect_end();
  return data;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::uint64_t line, const std::string& what) {
  T v{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || field.empty())
    throw ParseError(what + ": line " + std::to_string(line) + ": malformed number '" + std::string(field) + "'",
                     line);
  return v;
}

std::vector<Split> assign_splits(Index n, const SplitSpec& spec, const std::string& what) {
  std::vector<Split> splits(static_cast<std::size_t>(n), Split::train);
  if (spec.companion) {
    std::ifstream in(*spec.companion);
    if (!in) throw IoError("cannot open split file '" + spec.companion->string() + "'");
    std::string line;
    std::uint64_t lineno = 0;
    std::size_t i = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (i >= splits.size()) throw ParseError(what + ": split file has more lines than items", lineno);
      if (line == "train") splits[i] = Split::train;
      else if (line == "test") splits[i] = Split::test;
      else throw ParseError(what + ": split file line " + std::to_string(lineno) + " is not train/test", lineno);
      ++i;
    }
    if (i != splits.size()) throw ParseError(what + ": split file has fewer lines than items", lineno);
    return splits;
  }
  if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0))
    throw InvalidInput("test fraction must lie in [0, 1)");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
  if (spec.test_fraction > 0.0 && n >= 2) n_test = std::clamp<std::size_t>(n_test, 1, static_cast<std::size_t>(n - 1));
  for (std::size_t i = 0; i < n_test; ++i) splits[static_cast<std::size_t>(order[i])] = Split::test;
  return splits;
}

EmbeddingDataset parse_dataset_csv(const std::string& text, const CsvOptions& opts, const std::string& what) {
  std::istringstream in(text);
  std::string line;
  std::uint64_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(what + ": empty file", 1);
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() < 2 || header[0] != "label")
    throw ParseError(what + ": header must be 'label,z0,z1,...'", 1);
  for (std::size_t j = 1; j < header.size(); ++j)
    if (header[j] != "z" + std::to_string(j - 1))
      throw ParseError(what + ": header column " + std::to_string(j) + " must be 'z" + std::to_string(j - 1) + "'",
                       1);
  const Index m = static_cast<Index>(header.size() - 1);

  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_fields(line);
    if (static_cast<Index>(fields.size()) != m + 1)
      throw ParseError(what + ": line " + std::to_string(lineno) + ": expected " + std::to_string(m + 1) +
                           " fields, found " + std::to_string(fields.size()),
                       lineno);
    const int y = parse_number<int>(fields[0], lineno, what);
    if (y < 0) throw ParseError(what + ": line " + std::to_string(lineno) + ": negative label", lineno);
    if (opts.num_classes && y >= *opts.num_classes)
      throw ParseError(what + ": line " + std::to_string(lineno) + ": label " + std::to_string(y) +
                           " >= class count " + std::to_string(*opts.num_classes),
                       lineno);
    labels.push_back(y);
    for (Index j = 0; j < m; ++j) {
      const double v = parse_number<double>(fields[static_cast<std::size_t>(j + 1)], lineno, what);
      if (!std::isfinite(v))
        throw ParseError(what + ": line " + std::to_string(lineno) + ": non-finite value", lineno);
      values.push_back(v);
    }
  }
  EmbeddingDataset data;
  const Index n = static_cast<Index>(labels.size());
  data.embeddings = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, m);
  data.labels = std::move(labels);
  data.num_classes = opts.num_classes.value_or(
      data.labels.empty() ? 1 : *std::max_element(data.labels.begin(), data.labels.end()) + 1);
  data.splits = assign_splits(n, opts.split, what);
  return data;
}

}  // namespace

DatasetFormat guess_format(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DatasetFormat::csv : DatasetFormat::binary;
}

EmbeddingDataset read_embeddings(const std::filesystem::path& path, DatasetFormat format, const CsvOptions& csv) {
  const std::string bytes = read_binary_file(path);
  const std::string what = path.filename().string();
  EmbeddingDataset data =
      format == DatasetFormat::binary ? parse_dataset_bytes(bytes, what) : parse_dataset_csv(bytes, csv, what);
  data.provenance = "file:" + path.string();
  data.validate();
  return data;
}

void write_embeddings(const EmbeddingDataset& data, const std::filesystem::path& path, DatasetFormat format) {
  if (format == DatasetFormat::binary) {
    write_binary_file(path, dataset_bytes(data));
    return;
  }
  data.validate();
  std::string out = "label";
  for (Index j = 0; j < data.dim(); ++j) out += ",z" + std::to_string(j);
  out += '\n';
  for (Index i = 0; i < data.size(); ++i) {
    out += std::to_string(data.labels[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < data.dim(); ++j) {
      out += ',';
      out += format_double(data.embeddings(i, j));
    }
    out += '\n';
  }
  write_binary_file(path, out);
}

EmbeddingDataset synth_gaussian_mixture(const GaussianMixtureSpec& spec, Rng& rng) {
  if (spec.classes < 2) throw InvalidInput("gaussian mixture needs at least 2 classes");
  if (spec.dim < 1) throw InvalidInput("gaussian mixture needs dimension >= 1");
  if (spec.per_class < 1) throw InvalidInput("gaussian mixture needs at least one item per class");
  if (!(spec.separation >= 0.0)) throw InvalidInput("class separation must be >= 0");
  const int test_per_class = spec.test_per_class.value_or(spec.per_class / 6);
  if (test_per_class < 0) throw InvalidInput("test items per class must be >= 0");

  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixD centers(spec.classes, spec.dim);
  for (int c = 0; c < spec.classes; ++c) {
    Eigen::RowVectorXd dir(spec.dim);
    do {
      for (int j = 0; j < spec.dim; ++j) dir(j) = normal(rng);
    } while (dir.norm() == 0.0);
    centers.row(c) = spec.separation * dir.normalized();
  }

  const int per = spec.per_class + test_per_class;
  EmbeddingDataset data;
  data.num_classes = spec.classes;
  data.embeddings.resize(static_cast<Index>(spec.classes) * per, spec.dim);
  Index row = 0;
  for (int c = 0; c < spec.classes; ++c)
    for (int i = 0; i < per; ++i, ++row) {
      for (int j = 0; j < spec.dim; ++j) data.embeddings(row, j) = centers(c, j) + normal(rng);
      data.labels.push_back(c);
      data.splits.push_back(i < spec.per_class ? Split::train : Split::test);
    }
  std::ostringstream prov;
  prov << "gaussian_mixture classes=" << spec.classes << " dim=" << spec.dim << " per_class=" << spec.per_class
       << " test_per_class=" << test_per_class << " separation=" << format_double(spec.separation);
  data.provenance = prov.str();
  return data;
}

// Checkpoints share the framing helpers above.

namespace {
constexpr char kCheckpointMagic[4] = {'M', 'G', 'N', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

std::string checkpoint_bytes(const GnnParams& params) {
  params.validate();
  std::string out;
  out.append(kCheckpointMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(params.filter));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(params.gso));
  put_le<std::uint64_t>(out, params.layers.size());
  for (const auto& layer : params.layers) {
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(layer.activation));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(layer.tap_count()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(layer.in_dim()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(layer.out_dim()));
    for (const auto& h : layer.taps)
      for (Index i = 0; i < h.rows(); ++i)
        for (Index j = 0; j < h.cols(); ++j) put_le<double>(out, h(i, j));
  }
  return out;
}

GnnParams parse_checkpoint(const std::string& bytes) {
  const std::string what = "checkpoint";
  ByteReader r(bytes, what);
  r.expect_magic(kCheckpointMagic);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) throw ParseError(what + ": unsupported version " + std::to_string(version), 4);
  GnnParams params;
  const auto filter = r.get<std::uint8_t>("filter kind");
  if (filter > 1) throw ParseError(what + ": invalid filter kind", 8);
  params.filter = static_cast<FilterKind>(filter);
  const auto gso = r.get<std::uint8_t>("shift operator kind");
  if (gso > static_cast<std::uint8_t>(GsoKind::pointcloud_laplacian))
    throw ParseError(what + ": invalid shift operator kind", 9);
  params.gso = static_cast<GsoKind>(gso);
  const auto n_layers = r.get<std::uint64_t>("layer count");
  if (n_layers == 0 || n_layers > 1024) throw ParseError(what + ": invalid layer count", 10);
  for (std::uint64_t l = 0; l < n_layers; ++l) {
    GnnLayer layer;
    const std::uint64_t at = r.pos();
    const auto act = r.get<std::uint8_t>("activation");
    if (act > 2) throw ParseError(what + ": invalid activation", at);
    layer.activation = static_cast<Activation>(act);
    const auto k = r.get<std::uint64_t>("tap count");
    const auto din = r.get<std::uint64_t>("input width");
    const auto dout = r.get<std::uint64_t>("output width");
    if (k == 0 || din == 0 || dout == 0 || k > (1u << 20) || din > (1u << 24) || dout > (1u << 24))
      throw ParseError(what + ": invalid layer shape", at);
    r.require(k * din * dout * 8, "taps");
    for (std::uint64_t t = 0; t < k; ++t) {
      MatrixD h(static_cast<Index>(din), static_cast<Index>(dout));
      for (Index i = 0; i < h.rows(); ++i)
        for (Index j = 0; j < h.cols(); ++j) {
          const std::uint64_t vat = r.pos();
          h(i, j) = r.get<double>("tap");
          if (!std::isfinite(h(i, j))) throw ParseError(what + ": non-finite coefficient", vat);
        }
      layer.taps.push_back(std::move(h));
    }
    params.layers.push_back(std::move(layer));
  }
  r.expect_end();
  try {
    params.validate();
  } catch (const InvalidInput& e) {
    throw ParseError(what + ": " + e.what(), r.pos());
  }
  return params;
}

void write_checkpoint(const GnnParams& params, const std::filesystem::path& path) {
  write_binary_file(path, checkpoint_bytes(params));
}

GnnParams read_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_binary_file(path)); }

void write_text_file(const std::filesystem::path& path, const std::string& text) { write_binary_file(path, text); }

std::string read_text_file(const std::filesystem::path& path) { return read_binary_file(path); }

}  // namespace mgnn
