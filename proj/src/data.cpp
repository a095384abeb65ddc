#include "unimodal/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "unimodal/distribution.hpp"

namespace unimodal::data {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, delim)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

ColumnType parse_type(const std::string& s) {
  if (s == "numeric") return ColumnType::Numeric;
  if (s == "categorical") return ColumnType::Categorical;
  if (s == "target") return ColumnType::Target;
  if (s == "ignore") return ColumnType::Ignore;
  throw DataError("descriptor: unknown column type '" + s + "'");
}

double parse_number(const std::string& cell, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != cell.size() || !std::isfinite(v)) {
    throw DataError(where + ": expected a number, got '" + cell + "'");
  }
  return v;
}

// numpy's default (linear) quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

BinStrategy parse_strategy(const std::string& name) {
  if (name == "equal_frequency") return BinStrategy::EqualFrequency;
  if (name == "equal_width") return BinStrategy::EqualWidth;
  throw DataError("unknown binning strategy '" + name + "'");
}

std::string to_string(BinStrategy s) {
  return s == BinStrategy::EqualFrequency ? "equal_frequency" : "equal_width";
}

Descriptor parse_descriptor(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("descriptor: invalid JSON: ") + e.what());
  }
  Descriptor d;
  try {
    d.id = j.at("id").get<std::string>();
    d.file = j.at("file").get<std::string>();
    d.source = j.value("source", "");
    d.sha256 = j.value("sha256", "");
    const std::string delim = j.value("delimiter", ",");
    if (delim.size() != 1) throw DataError("descriptor: delimiter must be one character");
    d.delimiter = delim[0];
    d.header = j.value("header", false);
    int targets = 0;
    for (const auto& c : j.at("columns")) {
      ColumnSpec col;
      col.name = c.at("name").get<std::string>();
      col.type = parse_type(c.at("type").get<std::string>());
      col.categories = c.value("categories", std::vector<std::string>{});
      targets += col.type == ColumnType::Target;
      d.columns.push_back(std::move(col));
    }
    if (targets != 1) throw DataError("descriptor '" + d.id + "': need exactly one target column");
    const auto& t = j.at("target");
    const std::string kind = t.at("kind").get<std::string>();
    if (kind == "categorical") {
      d.target_order = t.at("order").get<std::vector<std::string>>();
      d.target_classes = static_cast<int>(d.target_order.size());
    } else if (kind == "numeric") {
      d.target_classes = t.at("classes").get<int>();
      d.strategy = parse_strategy(t.value("strategy", "equal_frequency"));
    } else {
      throw DataError("descriptor '" + d.id + "': target kind must be categorical or numeric");
    }
    if (j.contains("expected")) {
      d.expected_rows = j["expected"].value("rows", std::size_t{0});
      d.expected_classes = j["expected"].value("classes", 0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("descriptor '" + d.id + "': " + e.what());
  }
  return d;
}

Descriptor read_descriptor(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open descriptor " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_descriptor(ss.str());
}

std::vector<std::size_t> TabularDataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l - 1)];
  return counts;
}

TabularDataset load_csv(const std::filesystem::path& path, const Descriptor& desc) {
  std::ifstream in(path);
  if (!in) throw DataError("dataset file missing: " + path.string());

  TabularDataset ds;
  ds.id = desc.id;
  ds.provenance = desc.source.empty() ? path.string() : desc.source;
  std::vector<std::size_t> numeric_cols, categorical_cols;
  for (std::size_t c = 0; c < desc.columns.size(); ++c) {
    const auto& col = desc.columns[c];
    if (col.type == ColumnType::Numeric) numeric_cols.push_back(c);
    if (col.type == ColumnType::Categorical) categorical_cols.push_back(c);
    if (col.type == ColumnType::Numeric || col.type == ColumnType::Categorical) {
      ds.features.push_back(col);
    }
  }
  ds.categorical.resize(categorical_cols.size());

  std::vector<std::vector<double>> numeric_rows;
  std::vector<std::string> raw_targets;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && desc.header) continue;
    if (trim(line).empty()) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    const auto cells = split(line, desc.delimiter);
    if (cells.size() != desc.columns.size()) {
      throw DataError(where + ": expected " + std::to_string(desc.columns.size()) +
                      " columns, got " + std::to_string(cells.size()));
    }
    for (const auto& cell : cells) {
      if (cell.empty() || cell == "?") throw DataError(where + ": missing value");
    }
    std::vector<double> nums;
    for (std::size_t c : numeric_cols) nums.push_back(parse_number(cells[c], where));
    numeric_rows.push_back(std::move(nums));
    for (std::size_t i = 0; i < categorical_cols.size(); ++i) {
      const auto& col = desc.columns[categorical_cols[i]];
      const auto& value = cells[categorical_cols[i]];
      if (!col.categories.empty() &&
          std::find(col.categories.begin(), col.categories.end(), value) == col.categories.end()) {
        throw DataError(where + ": unknown category '" + value + "' in column " + col.name);
      }
      ds.categorical[i].push_back(value);
    }
    for (std::size_t c = 0; c < desc.columns.size(); ++c) {
      if (desc.columns[c].type == ColumnType::Target) raw_targets.push_back(cells[c]);
    }
  }
  if (raw_targets.empty()) throw DataError(path.string() + ": no data rows");

  const auto n = static_cast<Eigen::Index>(numeric_rows.size());
  ds.numeric.resize(n, static_cast<Eigen::Index>(numeric_cols.size()));
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < ds.numeric.cols(); ++c) {
      ds.numeric(r, c) = numeric_rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }

  if (!desc.target_order.empty()) {
    ds.k = static_cast<int>(desc.target_order.size());
    for (std::size_t r = 0; r < raw_targets.size(); ++r) {
      const auto it = std::find(desc.target_order.begin(), desc.target_order.end(), raw_targets[r]);
      if (it == desc.target_order.end()) {
        throw DataError(path.filename().string() + ": row " + std::to_string(r + 1) +
                        ": unknown class '" + raw_targets[r] + "'");
      }
      ds.labels.push_back(static_cast<int>(it - desc.target_order.begin()) + 1);
    }
  } else {
    std::vector<double> raw;
    raw.reserve(raw_targets.size());
    for (std::size_t r = 0; r < raw_targets.size(); ++r) {
      raw.push_back(parse_number(raw_targets[r], path.filename().string() + " target row " +
                                                     std::to_string(r + 1)));
    }
    auto disc = discretize_target(raw, desc.target_classes, desc.strategy);
    ds.k = desc.target_classes;
    ds.labels = std::move(disc.labels);
    ds.bin_edges = std::move(disc.edges);
  }
  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw DataError(desc.id + ": class " + std::to_string(c + 1) + " has no rows");
    }
  }
  return ds;
}

TabularDataset load_dataset(const std::string& id, const std::filesystem::path& data_dir) {
  const auto desc = read_descriptor(data_dir / "descriptors" / (id + ".json"));
  return load_csv(data_dir / desc.file, desc);
}

std::vector<std::string> available_descriptors(const std::filesystem::path& data_dir) {
  std::vector<std::string> ids;
  const auto dir = data_dir / "descriptors";
  if (!std::filesystem::is_directory(dir)) return ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

Discretized discretize_target(std::span<const double> raw, int k, BinStrategy strategy) {
  if (k < 2) throw DomainError("discretize_target: need K >= 2, got " + std::to_string(k));
  std::vector<double> sorted(raw.begin(), raw.end());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
  if (distinct < k) {
    throw DomainError("discretize_target: " + std::to_string(distinct) +
                      " distinct values cannot fill " + std::to_string(k) + " classes");
  }
  sorted.assign(raw.begin(), raw.end());
  std::sort(sorted.begin(), sorted.end());

  Discretized out;
  out.edges.resize(static_cast<std::size_t>(k) + 1);
  const double lo = sorted.front(), hi = sorted.back();
  for (int j = 0; j <= k; ++j) {
    out.edges[static_cast<std::size_t>(j)] =
        strategy == BinStrategy::EqualFrequency
            ? quantile(sorted, static_cast<double>(j) / k)
            : lo + (hi - lo) * static_cast<double>(j) / k;
  }
  out.edges.back() = hi;
  for (int j = 1; j <= k; ++j) {
    if (!(out.edges[static_cast<std::size_t>(j)] > out.edges[static_cast<std::size_t>(j - 1)])) {
      throw DataError("discretize_target: bin edges collide; too many tied values for " +
                      std::to_string(k) + " " + to_string(strategy) + " bins");
    }
  }
  out.labels.reserve(raw.size());
  for (double v : raw) {
    // First bin whose right edge is >= v; v == min lands in bin 1.
    const auto it = std::lower_bound(out.edges.begin() + 1, out.edges.end(), v);
    out.labels.push_back(static_cast<int>(it - out.edges.begin()));
  }
  return out;
}

FeatureTransform FeatureTransform::fit(const TabularDataset& data, std::span<const int> train_rows) {
  if (train_rows.empty()) throw ContractViolation("FeatureTransform::fit: no training rows");
  FeatureTransform t;
  const Eigen::Index d = data.numeric.cols();
  t.mean_ = Eigen::VectorXd::Zero(d);
  t.std_ = Eigen::VectorXd::Zero(d);
  const double n = static_cast<double>(train_rows.size());
  for (int r : train_rows) t.mean_ += data.numeric.row(r).transpose();
  t.mean_ /= n;
  for (int r : train_rows) {
    t.std_.array() += (data.numeric.row(r).transpose() - t.mean_).array().square();
  }
  t.std_ = (t.std_ / n).array().sqrt().max(kStdFloor);

  std::size_t cat = 0;
  for (const auto& col : data.features) {
    if (col.type != ColumnType::Categorical) continue;
    std::vector<std::string> cats = col.categories;
    if (cats.empty()) {
      for (int r : train_rows) {
        const auto& v = data.categorical[cat][static_cast<std::size_t>(r)];
        if (std::find(cats.begin(), cats.end(), v) == cats.end()) cats.push_back(v);
      }
    }
    t.categories_.push_back(std::move(cats));
    ++cat;
  }
  t.width_ = static_cast<int>(d);
  for (const auto& cats : t.categories_) t.width_ += static_cast<int>(cats.size());
  return t;
}

Eigen::MatrixXd FeatureTransform::apply(const TabularDataset& data, std::span<const int> rows) const {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), width_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    Eigen::Index col = 0, num = 0;
    std::size_t cat = 0;
    // Keep file order: numeric columns and one-hot blocks interleave.
    for (const auto& spec : data.features) {
      if (spec.type == ColumnType::Numeric) {
        x(r, col++) = (data.numeric(rows[i], num) - mean_(num)) / std_(num);
        ++num;
      } else {
        const auto& cats = categories_[cat];
        const auto& v = data.categorical[cat][static_cast<std::size_t>(rows[i])];
        const auto it = std::find(cats.begin(), cats.end(), v);
        if (it == cats.end()) {
          throw ContractViolation("unknown category '" + v + "' in column " + spec.name);
        }
        x(r, col + (it - cats.begin())) = 1.0;
        col += static_cast<Eigen::Index>(cats.size());
        ++cat;
      }
    }
  }
  return x;
}

std::vector<int> FoldSplit::complement(int fold) const {
  std::vector<int> out;
  for (int f = 0; f < static_cast<int>(folds.size()); ++f) {
    if (f != fold) out.insert(out.end(), folds[static_cast<std::size_t>(f)].begin(),
                              folds[static_cast<std::size_t>(f)].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

FoldSplit stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw ContractViolation("stratified_kfold: need k >= 2");
  if (labels.size() < static_cast<std::size_t>(k)) {
    throw ContractViolation("stratified_kfold: fewer rows than folds");
  }
  const int classes = *std::max_element(labels.begin(), labels.end());
  std::vector<std::vector<int>> members(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1) throw ContractViolation("stratified_kfold: labels must be >= 1");
    members[static_cast<std::size_t>(labels[i] - 1)].push_back(static_cast<int>(i));
  }
  FoldSplit split;
  split.k_folds = k;
  split.folds.resize(static_cast<std::size_t>(k));
  std::mt19937_64 rng(seed);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto& m = members[c];
    if (!m.empty() && m.size() < static_cast<std::size_t>(k)) {
      split.warnings.push_back("class " + std::to_string(c + 1) + " has " +
                               std::to_string(m.size()) + " rows, fewer than " +
                               std::to_string(k) + " folds");
    }
    std::shuffle(m.begin(), m.end(), rng);
    for (std::size_t i = 0; i < m.size(); ++i) {
      split.folds[(offset + i) % static_cast<std::size_t>(k)].push_back(m[i]);
    }
    offset += m.size();
  }
  for (auto& f : split.folds) std::sort(f.begin(), f.end());
  return split;
}

void write_sidecars(const TabularDataset& data, const FoldSplit& split,
                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (!data.bin_edges.empty()) {
    std::ofstream bins(dir / (data.id + ".bins.txt"));
    bins << std::setprecision(17);
    for (double e : data.bin_edges) bins << e << '\n';
  }
  std::ofstream folds(dir / (data.id + ".folds.txt"));
  for (std::size_t f = 0; f < split.folds.size(); ++f) {
    folds << "fold " << f + 1 << (static_cast<int>(f) == split.validation_fold ? " validation" : "")
          << ':';
    for (int r : split.folds[f]) folds << ' ' << r;
    folds << '\n';
  }
}

}  // namespace unimodal::data
