#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rfsgd/error.hpp"
#include "rfsgd/sweep.hpp"

namespace rfsgd {
namespace {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& column, std::size_t line) {
  if (s.empty()) return NAN;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw Error("csv line " + std::to_string(line) + ": bad number '" + s + "' in column " + column);
  return v;
}

long long parse_int(const std::string& s, const std::string& column, std::size_t line) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    throw Error("csv line " + std::to_string(line) + ": bad integer '" + s + "' in column " + column);
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols{
      "ratio", "m",  "n",  "d",  "zeta", "gamma0", "seed",     "test_mse_sgd", "test_mse_minnorm", "train_mse_minnorm",
      "B1",    "B2", "B3", "V1", "V2",   "V3",     "bias",     "variance",     "excess",           "stability_warning"};
  return cols;
}

bool is_metric(const std::string& name) {
  for (const auto& c : sweep_columns())
    if (c == name) return c != "seed";
  return false;
}

double metric_value(const SweepRow& r, const std::string& name) {
  if (name == "ratio") return r.ratio;
  if (name == "m") return double(r.m);
  if (name == "n") return double(r.n);
  if (name == "d") return double(r.d);
  if (name == "zeta") return r.zeta;
  if (name == "gamma0") return r.gamma0;
  if (name == "test_mse_sgd") return r.test_mse_sgd;
  if (name == "test_mse_minnorm") return r.test_mse_minnorm;
  if (name == "train_mse_minnorm") return r.train_mse_minnorm;
  if (name == "B1") return r.B1;
  if (name == "B2") return r.B2;
  if (name == "B3") return r.B3;
  if (name == "V1") return r.V1;
  if (name == "V2") return r.V2;
  if (name == "V3") return r.V3;
  if (name == "bias") return r.bias;
  if (name == "variance") return r.variance;
  if (name == "excess") return r.excess;
  if (name == "stability_warning") return r.stability_warning ? 1.0 : 0.0;
  throw InvalidArgument("unknown metric '" + name + "'");
}

std::string format_csv(const std::vector<SweepRow>& rows, const SweepMeta* meta) {
  std::ostringstream os;
  os << kCsvVersionLine << '\n';
  if (meta)
    os << "# data=" << meta->data_source << " test_count=" << meta->test_count
       << " failed_cells=" << meta->failed_cells << '\n';
  const auto& cols = sweep_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const SweepRow& r : rows) {
    os << fmt_double(r.ratio) << ',' << r.m << ',' << r.n << ',' << r.d << ',' << fmt_double(r.zeta) << ','
       << fmt_double(r.gamma0) << ',' << r.seed << ',' << fmt_double(r.test_mse_sgd) << ','
       << fmt_double(r.test_mse_minnorm) << ',' << fmt_double(r.train_mse_minnorm) << ',' << fmt_double(r.B1)
       << ',' << fmt_double(r.B2) << ',' << fmt_double(r.B3) << ',' << fmt_double(r.V1) << ','
       << fmt_double(r.V2) << ',' << fmt_double(r.V3) << ',' << fmt_double(r.bias) << ','
       << fmt_double(r.variance) << ',' << fmt_double(r.excess) << ',' << (r.stability_warning ? 1 : 0) << '\n';
  }
  return os.str();
}

void write_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path, const SweepMeta* meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << format_csv(rows, meta);
  if (!out) throw Error("short write to '" + path.string() + "'");
}

std::vector<SweepRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  const auto& cols = sweep_columns();
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line);
    if (!have_header) {
      if (f != cols) throw Error("csv line " + std::to_string(lineno) + ": unexpected header");
      have_header = true;
      continue;
    }
    if (f.size() != cols.size())
      throw Error("csv line " + std::to_string(lineno) + ": expected " + std::to_string(cols.size()) +
                  " fields, got " + std::to_string(f.size()));
    SweepRow r;
    r.ratio = parse_double(f[0], cols[0], lineno);
    r.m = Index(parse_int(f[1], cols[1], lineno));
    r.n = Index(parse_int(f[2], cols[2], lineno));
    r.d = Index(parse_int(f[3], cols[3], lineno));
    r.zeta = parse_double(f[4], cols[4], lineno);
    r.gamma0 = parse_double(f[5], cols[5], lineno);
    r.seed = std::strtoull(f[6].c_str(), nullptr, 10);
    double* dst[] = {&r.test_mse_sgd, &r.test_mse_minnorm, &r.train_mse_minnorm, &r.B1, &r.B2, &r.B3,
                     &r.V1,           &r.V2,               &r.V3,                &r.bias, &r.variance, &r.excess};
    for (std::size_t k = 0; k < 12; ++k) *dst[k] = parse_double(f[7 + k], cols[7 + k], lineno);
    r.stability_warning = parse_int(f[19], cols[19], lineno) != 0;
    rows.push_back(r);
  }
  if (!have_header) throw Error("csv: missing header row");
  return rows;
}

std::vector<SweepRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace rfsgd
