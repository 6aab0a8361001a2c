#include "bdarma/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "bdarma/errors.hpp"
#include "bdarma/params.hpp"

namespace bdarma {

namespace {

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

bool parse_int(const std::string& text, long long& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

bool is_month(const std::string& s) {
  return s.size() == 7 && s[4] == '-' && std::isdigit(static_cast<unsigned char>(s[0])) &&
         std::isdigit(static_cast<unsigned char>(s[5])) && std::isdigit(static_cast<unsigned char>(s[6]));
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

void check_name(const std::string& name) {
  if (name.empty() || name.find_first_of(",\n\r") != std::string::npos) {
    throw ValidationError("invalid column name '" + name + "'");
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw IoError("could not format number");
  return std::string(buf, ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int parse_month(const std::string& label) {
  long long year = 0, month = 0;
  if (!is_month(label) || !parse_int(label.substr(0, 4), year) || !parse_int(label.substr(5, 2), month) ||
      month < 1 || month > 12) {
    throw ValidationError("expected a YYYY-MM month, got '" + label + "'");
  }
  return static_cast<int>(year * 12 + (month - 1));
}

std::string format_month(int months) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", months / 12, months % 12 + 1);
  return buf;
}

std::vector<std::string> time_labels(const std::string& start, int count) {
  std::vector<std::string> out;
  const int first = start.empty() ? 0 : parse_month(start);
  for (int i = 0; i < count; ++i) out.push_back(start.empty() ? std::to_string(i + 1) : format_month(first + i));
  return out;
}

bool SeriesFile::monthly() const { return !times.empty() && is_month(times.front()); }

int SeriesFile::index_of(const std::string& label) const {
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] == label) return static_cast<int>(i) + 1;
  }
  throw ValidationError("time '" + label + "' not found in series");
}

int SeriesFile::resolve(const std::string& reference) const {
  if (is_month(reference)) return index_of(reference);
  long long t = 0;
  if (!parse_int(reference, t)) throw ValidationError("cannot interpret time reference '" + reference + "'");
  return static_cast<int>(t);
}

SeriesFile read_series(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ValidationError(path.string() + ": empty series file");
  SeriesFile out;
  const std::vector<std::string> header = split(lines[0]);
  if (header.size() < 4) throw ValidationError(path.string() + ": header needs a time column and >= 3 parts");
  out.time_column = trim(header[0]);
  for (size_t j = 1; j < header.size(); ++j) out.part_names.push_back(trim(header[j]));
  const size_t parts = out.part_names.size();

  bool monthly = false;
  long long previous = 0;
  for (size_t i = 1; i < lines.size(); ++i) {
    const std::string where = path.string() + ": line " + std::to_string(i + 1);
    const std::vector<std::string> f = split(lines[i]);
    if (f.size() != parts + 1) {
      throw ValidationError(where + ": expected " + std::to_string(parts + 1) + " fields, found " +
                            std::to_string(f.size()));
    }
    const std::string label = trim(f[0]);
    long long key = 0;
    if (i == 1) monthly = is_month(label);
    if (monthly) {
      if (!is_month(label)) throw ValidationError(where + ": expected a YYYY-MM time label");
      key = parse_month(label);
    } else if (!parse_int(label, key)) {
      throw ValidationError(where + ": time label '" + label + "' is neither YYYY-MM nor an integer");
    }
    if (i > 1 && key <= previous) throw ValidationError(where + ": time labels must be strictly increasing");
    previous = key;

    Vector raw(static_cast<Eigen::Index>(parts));
    for (size_t j = 0; j < parts; ++j) {
      double v = 0.0;
      if (!parse_double(f[j + 1], v) || !std::isfinite(v)) {
        throw ValidationError(where + ": component '" + out.part_names[j] + "' is not a number");
      }
      if (v < 0.0) throw ValidationError(where + ": component '" + out.part_names[j] + "' is negative");
      raw[static_cast<Eigen::Index>(j)] = v;
    }
    if (!(raw.sum() > 0.0)) throw ValidationError(where + ": all components are zero");
    const bool valid = (raw.array() > 0.0).all() && std::abs(raw.sum() - 1.0) <= Composition::kSumTolerance;
    out.rows.push_back(valid ? Composition(raw) : close_with_floor(raw / raw.sum()));
    out.times.push_back(label);
  }
  if (out.rows.empty()) throw ValidationError(path.string() + ": no data rows");
  return out;
}

void write_series(const std::filesystem::path& path, const SeriesFile& series) {
  if (series.times.size() != series.rows.size()) throw ValidationError("series labels and rows differ in length");
  std::vector<std::string> header{series.time_column};
  for (const auto& n : series.part_names) header.push_back(n);
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < series.rows.size(); ++i) {
    if (static_cast<size_t>(series.rows[i].size()) != series.part_names.size()) {
      throw DimensionError("series row width does not match part names");
    }
    std::vector<std::string> r{series.times[i]};
    for (Eigen::Index j = 0; j < series.rows[i].size(); ++j) r.push_back(format_double(series.rows[i][j]));
    rows.push_back(std::move(r));
  }
  write_table(path, header, rows);
}

void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  for (const auto& h : header) check_name(h);
  std::string out = join(header) + "\n";
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw DimensionError("table row width does not match header");
    out += join(r) + "\n";
  }
  write_file_atomic(path, out);
}

void write_draws(const std::filesystem::path& path, const PosteriorDraws& draws) {
  std::vector<std::string> header{"chain", "iteration"};
  for (const auto& n : draws.names) header.push_back(n);
  header.emplace_back("log_posterior");
  header.emplace_back("divergent");
  std::vector<std::vector<std::string>> rows;
  for (int c = 0; c < draws.num_chains(); ++c) {
    const ChainDraws& ch = draws.chains[c];
    for (Eigen::Index i = 0; i < ch.values.rows(); ++i) {
      std::vector<std::string> r{std::to_string(c + 1), std::to_string(i + 1)};
      for (Eigen::Index p = 0; p < ch.values.cols(); ++p) r.push_back(format_double(ch.values(i, p)));
      r.push_back(format_double(ch.log_posterior[i]));
      r.push_back(ch.divergent[i] ? "1" : "0");
      rows.push_back(std::move(r));
    }
  }
  write_table(path, header, rows);
}

PosteriorDraws read_draws(const std::filesystem::path& path, const ModelSpec& spec) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ValidationError(path.string() + ": empty draws file");
  const ParamLayout layout(spec);
  std::vector<std::string> header = split(lines[0]);
  for (auto& h : header) h = trim(h);
  std::vector<std::string> expected{"chain", "iteration"};
  for (const auto& n : layout.names()) expected.push_back(n);
  expected.emplace_back("log_posterior");
  expected.emplace_back("divergent");
  if (header != expected) {
    throw ValidationError(path.string() + ": draw columns do not match the " + to_string(spec.variant) +
                          " model in the config");
  }
  const int np = layout.size();
  std::vector<std::vector<std::vector<double>>> per_chain;
  std::vector<std::vector<double>> lp;
  std::vector<std::vector<std::uint8_t>> div;
  for (size_t i = 1; i < lines.size(); ++i) {
    const std::string where = path.string() + ": line " + std::to_string(i + 1);
    const std::vector<std::string> f = split(lines[i]);
    if (f.size() != expected.size()) throw ValidationError(where + ": wrong number of fields");
    long long chain = 0, iter = 0, flag = 0;
    if (!parse_int(f[0], chain) || !parse_int(f[1], iter) || chain < 1 || iter < 1) {
      throw ValidationError(where + ": bad chain or iteration");
    }
    if (chain > static_cast<long long>(per_chain.size()) + 1) throw ValidationError(where + ": chains out of order");
    if (chain == static_cast<long long>(per_chain.size()) + 1) {
      per_chain.emplace_back();
      lp.emplace_back();
      div.emplace_back();
    }
    auto& rows = per_chain[chain - 1];
    if (iter != static_cast<long long>(rows.size()) + 1) throw ValidationError(where + ": iterations out of order");
    std::vector<double> values(np);
    for (int p = 0; p < np; ++p) {
      if (!parse_double(f[p + 2], values[p])) throw ValidationError(where + ": non-numeric draw");
    }
    double logp = 0.0;
    if (!parse_double(f[np + 2], logp)) throw ValidationError(where + ": non-numeric log_posterior");
    if (!parse_int(f[np + 3], flag) || (flag != 0 && flag != 1)) throw ValidationError(where + ": bad divergent flag");
    rows.push_back(std::move(values));
    lp[chain - 1].push_back(logp);
    div[chain - 1].push_back(static_cast<std::uint8_t>(flag));
  }
  PosteriorDraws out;
  out.spec = spec;
  out.names = layout.names();
  for (size_t c = 0; c < per_chain.size(); ++c) {
    if (per_chain[c].size() != per_chain[0].size()) throw ValidationError(path.string() + ": chains differ in length");
    ChainDraws ch;
    const auto n = static_cast<Eigen::Index>(per_chain[c].size());
    ch.values.resize(n, np);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int p = 0; p < np; ++p) ch.values(i, p) = per_chain[c][i][p];
    }
    ch.log_posterior = Eigen::Map<const Vector>(lp[c].data(), n);
    ch.divergent = div[c];
    ch.energy_error = Vector::Zero(n);
    ch.accept_stat = Vector::Constant(n, std::nan(""));
    ch.n_leapfrog.assign(static_cast<size_t>(n), 0);
    out.chains.push_back(std::move(ch));
  }
  if (out.chains.empty()) throw ValidationError(path.string() + ": no draws");
  return out;
}

}  // namespace bdarma
