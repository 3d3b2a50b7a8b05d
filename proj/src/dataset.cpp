#include "thr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "thr/error.hpp"

namespace thr {

Matrix::Matrix(std::vector<double> data, std::size_t cols)
    : data_(std::move(data)), rows_(cols == 0 ? 0 : data_.size() / cols), cols_(cols) {
  if (cols == 0 || data_.size() % cols != 0) {
    throw ShapeError("Matrix: data length is not a multiple of the column count");
  }
}

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
  Matrix out(idx.size(), cols_);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    auto src = row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Dataset::Dataset(Matrix covariates, std::vector<int> outcomes, std::vector<int> arms)
    : covariates_(std::move(covariates)), outcomes_(std::move(outcomes)), arms_(std::move(arms)) {
  if (outcomes_.size() != arms_.size() || outcomes_.size() != covariates_.rows()) {
    throw ShapeError("Dataset: outcome, arm and covariate row counts differ");
  }
  if (!outcomes_.empty() && covariates_.cols() == 0) {
    throw ShapeError("Dataset: at least one covariate is required");
  }
  for (std::size_t i = 0; i < outcomes_.size(); ++i) {
    if (outcomes_[i] != -1 && outcomes_[i] != 1) {
      throw EncodingError("Dataset: outcome at row " + std::to_string(i) + " is not -1/+1");
    }
    if (arms_[i] != 0 && arms_[i] != 1) {
      throw ParameterError("Dataset: arm at row " + std::to_string(i) + " is not 0/1");
    }
  }
}

std::size_t Dataset::arm_count(int a) const {
  return static_cast<std::size_t>(std::count(arms_.begin(), arms_.end(), a));
}

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
  std::vector<int> y(idx.size()), a(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    y[r] = outcomes_[idx[r]];
    a[r] = arms_[idx[r]];
  }
  return Dataset(covariates_.select_rows(idx), std::move(y), std::move(a));
}

std::vector<std::size_t> Dataset::arm_indices(int a) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < arms_.size(); ++i)
    if (arms_[i] == a) out.push_back(i);
  return out;
}

void Dataset::require_both_arms() const {
  if (arm_count(0) == 0 || arm_count(1) == 0) {
    throw ParameterError("dataset must contain observations in both arms");
  }
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  if (*first == '+') ++first;
  double v = 0;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::string> parse_covariate_cols(const std::string& spec) {
  std::vector<std::string> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Dataset parse_csv(const std::string& text, const CsvSchema& schema) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_line(line);
      break;
    }
  }
  if (header.empty()) throw SchemaError("CSV input has no header row");

  auto find_col = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t y_col = find_col(schema.outcome_col);
  const std::size_t a_col = find_col(schema.arm_col);

  std::vector<std::size_t> x_cols;
  if (schema.covariate_cols.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (c != y_col && c != a_col) x_cols.push_back(c);
  } else if (schema.covariate_cols.size() == 1 && schema.covariate_cols[0].ends_with('*')) {
    const std::string prefix = schema.covariate_cols[0].substr(0, schema.covariate_cols[0].size() - 1);
    for (std::size_t c = 0; c < header.size(); ++c)
      if (c != y_col && c != a_col && header[c].starts_with(prefix)) x_cols.push_back(c);
  } else {
    for (const auto& name : schema.covariate_cols) x_cols.push_back(find_col(name));
  }
  if (x_cols.empty()) throw SchemaError("no covariate columns selected");

  std::vector<double> raw_y;
  std::vector<int> arms;
  std::vector<double> xs;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(header.size()) + " fields, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    auto num = [&](std::size_t c) {
      auto v = parse_number(cells[c]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError("line " + std::to_string(line_no) + ": column '" + header[c] +
                             "' is not a finite number ('" + cells[c] + "')",
                         line_no);
      }
      return *v;
    };
    raw_y.push_back(num(y_col));
    const double a = num(a_col);
    if (a != 0.0 && a != 1.0) {
      throw ParseError("line " + std::to_string(line_no) + ": arm value " + cells[a_col] +
                           " outside {0,1}",
                       line_no);
    }
    arms.push_back(static_cast<int>(a));
    for (auto c : x_cols) xs.push_back(num(c));
  }

  std::set<double> levels(raw_y.begin(), raw_y.end());
  if (levels.size() > 2) {
    throw EncodingError("outcome column '" + schema.outcome_col + "' has " +
                        std::to_string(levels.size()) + " distinct values; expected 2");
  }
  double favorable;
  if (schema.favorable_value) {
    favorable = *schema.favorable_value;
    if (!levels.empty() && !levels.contains(favorable) && levels.size() == 2) {
      throw EncodingError("favorable value " + format_double(favorable) +
                          " does not occur in the outcome column");
    }
  } else {
    const bool zero_one = std::all_of(levels.begin(), levels.end(),
                                      [](double v) { return v == 0.0 || v == 1.0; });
    const bool pm_one = std::all_of(levels.begin(), levels.end(),
                                    [](double v) { return v == -1.0 || v == 1.0; });
    if (!zero_one && !pm_one) {
      throw EncodingError("outcome values are not {0,1} or {-1,1}; set a favorable value");
    }
    favorable = 1.0;
  }
  std::vector<int> outcomes(raw_y.size());
  std::transform(raw_y.begin(), raw_y.end(), outcomes.begin(),
                 [&](double v) { return v == favorable ? 1 : -1; });

  return Dataset(Matrix(std::move(xs), x_cols.size()), std::move(outcomes), std::move(arms));
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema);
}

std::string to_csv(const Dataset& data) {
  std::string out = "y,a";
  for (std::size_t j = 0; j < data.dim(); ++j) out += ",x" + std::to_string(j + 1);
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += std::to_string(data.outcome(i));
    out += ',';
    out += std::to_string(data.arm(i));
    for (double v : data.x(i)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path.string() + "'");
  out << to_csv(data);
}

// ---------------------------------------------------------------------------
// Folds

std::vector<std::size_t> FoldAssignment::members(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldAssignment::complement(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldAssignment::sizes() const {
  std::vector<std::size_t> out(k, 0);
  for (auto f : fold_of) ++out[f];
  return out;
}

FoldAssignment split_folds(std::size_t n, std::size_t k, Rng& rng) {
  if (k < 2 || k > n) {
    throw ParameterError("split_folds: need 2 <= K <= n (K=" + std::to_string(k) +
                         ", n=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  FoldAssignment out{std::vector<std::size_t>(n), k};
  for (std::size_t r = 0; r < n; ++r) out.fold_of[perm[r]] = r % k;
  return out;
}

}  // namespace thr
