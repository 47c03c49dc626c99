#include "helu/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "helu/rng.hpp"

namespace helu {

void Dataset::validate() const {
  if (labels.empty()) throw DataError("dataset is empty");
  if (features.rank() != 2 || features.rows() != labels.size()) {
    throw DataError(fmt::format("features {} do not match {} labels", shape_str(features.shape()), labels.size()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) {
      throw DataError(fmt::format("label {} at row {} outside [0, {})", labels[i], i, n_classes));
    }
  }
  if (!all_finite(features)) throw DataError("dataset contains non-finite features");
}

Dataset Dataset::subset(std::span<const std::size_t> index) const {
  Dataset out;
  out.features = gather_rows(features, index);
  out.labels.reserve(index.size());
  for (auto i : index) out.labels.push_back(labels[i]);
  out.n_classes = n_classes;
  return out;
}

namespace {

Dataset shuffled(Dataset data, Rng& rng) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order.begin(), order.end(), rng);
  return data.subset(order);
}

}  // namespace

Dataset gen_blobs(std::size_t n, std::size_t d, int k, double spread, std::uint64_t seed) {
  if (n == 0 || d == 0 || k <= 0) throw std::invalid_argument("gen_blobs: n, d and k must be positive");
  Rng rng(seed);
  Tensor centers(Shape{static_cast<std::size_t>(k), d});
  for (double& c : centers.values()) c = rng.uniform(-4.0, 4.0);

  Dataset data;
  data.n_classes = k;
  data.features = Tensor(Shape{n, d});
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(i % static_cast<std::size_t>(k));
    data.labels[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < d; ++j) data.features.at(i, j) = centers.at(c, j) + spread * rng.normal();
  }
  return shuffled(std::move(data), rng);
}

Dataset gen_spirals(std::size_t n, int k, double noise, std::uint64_t seed) {
  if (n == 0 || k <= 0) throw std::invalid_argument("gen_spirals: n and k must be positive");
  Rng rng(seed);
  Dataset data;
  data.n_classes = k;
  data.features = Tensor(Shape{n, 2});
  data.labels.resize(n);

  const auto kk = static_cast<std::size_t>(k);
  const std::size_t base = n / kk, extra = n % kk;
  std::size_t row = 0;
  for (std::size_t c = 0; c < kk; ++c) {
    const std::size_t count = base + (c < extra ? 1 : 0);
    for (std::size_t i = 0; i < count; ++i, ++row) {
      const double t = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
      const double radius = 0.05 + 0.95 * t;
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(k) + 4.0 * t +
                           noise * rng.normal();
      data.features.at(row, 0) = radius * std::sin(angle);
      data.features.at(row, 1) = radius * std::cos(angle);
      data.labels[row] = static_cast<int>(c);
    }
  }
  return shuffled(std::move(data), rng);
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_field(std::string_view text, T& out) {
  text = trim(text);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && !text.empty();
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));

  std::string line;
  if (!std::getline(in, line)) throw DataError(fmt::format("{}: missing header row", path.string()));
  const auto header = split_commas(line);
  std::size_t label_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (trim(header[i]) == label_column) label_idx = i;
  if (label_idx == header.size()) {
    throw DataError(fmt::format("{}:1: no column named '{}'", path.string(), label_column));
  }

  const std::size_t d = header.size() - 1;
  std::vector<double> features;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw DataError(fmt::format("{}:{}: expected {} fields, got {}", path.string(), line_no, header.size(), fields.size()));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i == label_idx) {
        int y = 0;
        if (!parse_field(fields[i], y) || y < 0) {
          throw DataError(fmt::format("{}:{}: bad class label '{}'", path.string(), line_no, fields[i]));
        }
        labels.push_back(y);
      } else {
        double v = 0.0;
        if (!parse_field(fields[i], v) || !std::isfinite(v)) {
          throw DataError(fmt::format("{}:{}: bad numeric field '{}' in column {}", path.string(), line_no, fields[i], i + 1));
        }
        features.push_back(v);
      }
    }
  }
  if (labels.empty()) throw DataError(fmt::format("{}: no data rows", path.string()));

  Dataset data;
  data.n_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  data.features = Tensor(Shape{labels.size(), d}, std::move(features));
  data.labels = std::move(labels);
  data.validate();
  return data;
}

namespace {

class IdxReader {
 public:
  explicit IdxReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw DataError(fmt::format("cannot open {}", path.string()));
  }

  std::uint32_t u32() {
    std::array<unsigned char, 4> b{};
    read(b.data(), b.size());
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
  }

  void read(unsigned char* dst, std::size_t n) {
    in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw DataError(fmt::format("{}: truncated at byte offset {}", path_.string(), offset_ + static_cast<std::size_t>(in_.gcount())));
    }
    offset_ += n;
  }

  void expect_magic(std::uint32_t want) {
    const std::uint32_t got = u32();
    if (got != want) {
      throw DataError(fmt::format("{}: bad magic 0x{:08x} at byte offset 0, expected 0x{:08x}", path_.string(), got, want));
    }
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t offset_ = 0;
};

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  IdxReader img(images);
  img.expect_magic(0x00000803);
  const std::size_t n = img.u32(), rows = img.u32(), cols = img.u32();
  std::vector<unsigned char> pixels(n * rows * cols);
  img.read(pixels.data(), pixels.size());

  IdxReader lab(labels);
  lab.expect_magic(0x00000801);
  const std::size_t n_labels = lab.u32();
  if (n_labels != n) throw DataError(fmt::format("{} images but {} labels", n, n_labels));
  std::vector<unsigned char> raw(n);
  lab.read(raw.data(), raw.size());

  Dataset data;
  std::vector<double> features(pixels.size());
  std::transform(pixels.begin(), pixels.end(), features.begin(), [](unsigned char p) { return p / 255.0; });
  data.features = Tensor(Shape{n, rows * cols}, std::move(features));
  data.labels.assign(raw.begin(), raw.end());
  data.n_classes = n == 0 ? 0 : *std::max_element(raw.begin(), raw.end()) + 1;
  data.validate();
  return data;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train_fraction must be in (0, 1)");
  const std::size_t n = data.size();
  if (n < 2) throw DataError("split needs at least two rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order.begin(), order.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  std::span<const std::size_t> all(order);
  return {data.subset(all.first(n_train)), data.subset(all.subspan(n_train))};
}

Standardizer Standardizer::fit(const Dataset& data) {
  Standardizer s;
  const Tensor mean = reduce_mean(data.features, 0);
  s.mean.assign(mean.values().begin(), mean.values().end());
  s.stddev.assign(data.dim(), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < data.dim(); ++j) {
      const double c = data.features.at(i, j) - s.mean[j];
      s.stddev[j] += c * c;
    }
  for (double& v : s.stddev) {
    v = std::sqrt(v / static_cast<double>(data.size()));
    if (v == 0.0) v = 1.0;
  }
  return s;
}

void Standardizer::apply(Dataset& data) const {
  if (mean.size() != data.dim()) throw DimensionError("standardizer fitted on a different feature count");
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < data.dim(); ++j) data.features.at(i, j) = (data.features.at(i, j) - mean[j]) / stddev[j];
}

}  // namespace helu
