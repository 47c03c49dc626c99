#include "helu/config.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "helu/io.hpp"
#include "helu/rng.hpp"

namespace helu {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
  text = trim(text);
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument(fmt::format("config key '{}': cannot parse '{}'", key, text));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw std::invalid_argument(fmt::format("config key '{}': expected a boolean, got '{}'", key, text));
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(',', start);
    out.push_back(trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
  std::vector<T> out;
  for (auto item : split_list(text)) out.push_back(parse_value<T>(key, item));
  return out;
}

}  // namespace

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  const std::string v(trim(value));
  if (key == "task" || key == "data.task") data.task = v;
  else if (key == "data.n") data.n = parse_value<std::size_t>(key, v);
  else if (key == "data.dim") data.dim = parse_value<std::size_t>(key, v);
  else if (key == "data.classes") data.classes = parse_value<int>(key, v);
  else if (key == "data.spread") data.spread = parse_value<double>(key, v);
  else if (key == "data.noise") data.noise = parse_value<double>(key, v);
  else if (key == "data.csv") data.csv_path = v;
  else if (key == "data.label_column") data.label_column = v;
  else if (key == "data.images") data.idx_images = v;
  else if (key == "data.labels") data.idx_labels = v;
  else if (key == "data.train_fraction") data.train_fraction = parse_value<double>(key, v);
  else if (key == "data.standardize") data.standardize = parse_bool(key, v);
  else if (key == "data.seed") data.seed = parse_value<std::uint64_t>(key, v);
  else if (key == "model.hidden") hidden = parse_list<std::size_t>(key, v);
  else if (key == "activation") {
    parse_activation(v);
    activation = v;
  } else if (key == "train.lr") train.learning_rate = parse_value<double>(key, v);
  else if (key == "train.momentum") train.momentum = parse_value<double>(key, v);
  else if (key == "train.weight_decay") train.weight_decay = parse_value<double>(key, v);
  else if (key == "train.epochs") train.epochs = parse_value<int>(key, v);
  else if (key == "train.batch_size") train.batch_size = parse_value<int>(key, v);
  else if (key == "train.seed") train.seed = parse_value<std::uint64_t>(key, v);
  else if (key == "sweep.activations") {
    sweep_activations.clear();
    for (auto item : split_list(v)) {
      parse_activation(item);
      sweep_activations.emplace_back(item);
    }
  } else if (key == "sweep.alphas") sweep_alphas = parse_list<double>(key, v);
  else if (key == "sweep.seeds" || key == "seeds") seeds = parse_value<int>(key, v);
  else if (key == "jobs") jobs = parse_value<int>(key, v);
  else if (key == "output_dir") output_dir = v;
  else throw std::invalid_argument(fmt::format("unknown config key '{}'", key));
}

std::string ExperimentConfig::to_text() const {
  std::map<std::string, std::string> kv;
  kv["activation"] = activation;
  kv["data.classes"] = fmt::format("{}", data.classes);
  kv["data.csv"] = data.csv_path;
  kv["data.dim"] = fmt::format("{}", data.dim);
  kv["data.images"] = data.idx_images;
  kv["data.label_column"] = data.label_column;
  kv["data.labels"] = data.idx_labels;
  kv["data.n"] = fmt::format("{}", data.n);
  kv["data.noise"] = fmt_double(data.noise);
  kv["data.seed"] = fmt::format("{}", data.seed);
  kv["data.spread"] = fmt_double(data.spread);
  kv["data.standardize"] = data.standardize ? "true" : "false";
  kv["data.train_fraction"] = fmt_double(data.train_fraction);
  kv["jobs"] = fmt::format("{}", jobs);
  kv["model.hidden"] = fmt::format("{}", fmt::join(hidden, ","));
  kv["output_dir"] = output_dir;
  kv["sweep.activations"] = fmt::format("{}", fmt::join(sweep_activations, ","));
  kv["sweep.alphas"] = fmt::format("{}", fmt::join(sweep_alphas, ","));
  kv["sweep.seeds"] = fmt::format("{}", seeds);
  kv["task"] = data.task;
  kv["train.batch_size"] = fmt::format("{}", train.batch_size);
  kv["train.epochs"] = fmt::format("{}", train.epochs);
  kv["train.lr"] = fmt_double(train.learning_rate);
  kv["train.momentum"] = fmt_double(train.momentum);
  kv["train.seed"] = fmt::format("{}", train.seed);
  kv["train.weight_decay"] = fmt_double(train.weight_decay);
  std::string out;
  for (const auto& [k, v] : kv) out += fmt::format("{}={}\n", k, v);
  return out;
}

std::vector<ActivationSpec> ExperimentConfig::sweep_grid() const {
  std::vector<ActivationSpec> grid;
  for (const auto& a : sweep_activations) grid.push_back(parse_activation(a));
  for (double a : sweep_alphas) grid.push_back(ActivationSpec::helu(a));
  if (grid.empty()) grid.push_back(activation_spec());
  return grid;
}

void ExperimentConfig::validate() const {
  train.validate();
  activation_spec();
  if (hidden.empty()) throw std::invalid_argument("model.hidden needs at least one hidden layer");
  if (seeds < 1) throw std::invalid_argument("seeds must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  for (double a : sweep_alphas)
    if (!(a >= 0.0)) throw DomainError(fmt::format("sweep alpha {} is negative", a));
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw std::invalid_argument(fmt::format("config line {}: expected key=value, got '{}'", line_no, line));
      }
      try {
        base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
      } catch (const std::exception& e) {
        throw std::invalid_argument(fmt::format("config line {}: {}", line_no, e.what()));
      }
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  return parse_config(read_file(path), std::move(base));
}

std::pair<Dataset, Dataset> make_datasets(const DataConfig& config) {
  Dataset all;
  if (config.task == "blobs") {
    all = gen_blobs(config.n, config.dim, config.classes, config.spread, config.seed);
  } else if (config.task == "spirals") {
    all = gen_spirals(config.n, config.classes, config.noise, config.seed);
  } else if (config.task == "csv") {
    all = load_csv(config.csv_path, config.label_column);
  } else if (config.task == "idx") {
    all = load_idx(config.idx_images, config.idx_labels);
  } else {
    throw std::invalid_argument(fmt::format("unknown task '{}'", config.task));
  }
  auto [train, test] = split(all, config.train_fraction, derive_seed(config.seed, {0x5b17}));
  if (config.standardize) {
    const auto s = Standardizer::fit(train);
    s.apply(train);
    s.apply(test);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace helu
