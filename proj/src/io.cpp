#include "pgate/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pgate/errors.hpp"

namespace pgate {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("rename to " + path.string() + " failed: " + ec.message());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

double parse_double(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    if (t == "nan") return std::nan("");
    if (t == "inf") return INFINITY;
    if (t == "-inf") return -INFINITY;
    throw IoError("bad number '" + s + "' in " + what);
  }
  return v;
}

std::string trajectory_csv(const Trajectory& t) {
  std::string out = "k,truth,obs,outlier\n";
  for (std::size_t k = 0; k < t.obs.size(); ++k) {
    out += std::to_string(k) + ',' + fmt(t.truth[k]) + ',' + fmt(t.obs[k]) + ',' +
           (t.outlier_flags[k] ? "1" : "0") + '\n';
  }
  return out;
}

Trajectory parse_trajectory_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw IoError("empty trajectory file");
  Trajectory t;
  std::size_t first = 0;
  if (rows[0].size() == 4 && rows[0][0] == "k") first = 1;
  for (std::size_t i = first; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 4) throw IoError("trajectory row " + std::to_string(i) + " has " + std::to_string(r.size()) +
                                     " fields, expected 4");
    t.truth.push_back(parse_double(r[1], "truth"));
    t.obs.push_back(parse_double(r[2], "obs"));
    t.outlier_flags.push_back(r[3] == "1" || r[3] == "true");
  }
  t.n_crossings = count_zero_crossings(t.truth);
  return t;
}

std::string trace_csv(const EstimateTrace& tr) {
  std::string out = "k,mean,variance";
  switch (tr.aux_kind) {
    case AuxKind::Ess: out += ",ess"; break;
    case AuxKind::QAdapt: out += ",q_adapt"; break;
    case AuxKind::Rejected: out += ",rejected"; break;
    case AuxKind::None: break;
  }
  out += '\n';
  for (std::size_t k = 0; k < tr.mean.size(); ++k) {
    out += std::to_string(k) + ',' + fmt(tr.mean[k]) + ',' + fmt(tr.variance[k]);
    if (tr.aux_kind == AuxKind::Rejected) {
      out += tr.aux[k] != 0.0 ? ",1" : ",0";
    } else if (tr.aux_kind != AuxKind::None) {
      out += ',' + fmt(tr.aux[k]);
    }
    out += '\n';
  }
  return out;
}

std::string benchmark_csv(std::span<const BenchmarkRow> rows) {
  std::string out = "filter,rmse_mean,rmse_std,ci_lo,ci_hi,improvement_pct,p_value,n_reps\n";
  for (const auto& r : rows) {
    out += r.filter + ',' + fmt(r.rmse_mean) + ',' + fmt(r.rmse_std) + ',' + fmt(r.ci_lo) + ',' + fmt(r.ci_hi) +
           ',' + fmt(r.improvement_pct) + ',' + (r.p_value ? fmt(*r.p_value) : std::string()) + ',' +
           std::to_string(r.n_reps) + '\n';
  }
  return out;
}

}  // namespace pgate
