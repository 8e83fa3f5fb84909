#include "oraclab/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace oraclab {

namespace {

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

MetricsRow MetricsRow::from_report(const EvalReport& report, std::int64_t episode, double lambda, double entropy_temp,
                                   double delta) {
  MetricsRow r;
  r.step = report.step;
  r.episode = episode;
  r.mean_reward = report.mean_reward;
  r.mean_cost = report.mean_cost;
  r.cvar_cost = report.cvar_cost;
  r.lambda = lambda;
  r.entropy_temp = entropy_temp;
  r.delta = delta;
  r.path_short = report.path_short;
  r.path_long = report.path_long;
  r.path_none = report.path_none;
  return r;
}

std::string MetricsRow::to_csv() const {
  std::ostringstream out;
  out << step << ',' << episode << ',' << real(mean_reward) << ',' << real(mean_cost) << ',' << real(cvar_cost) << ','
      << real(lambda) << ',' << real(entropy_temp) << ',' << real(delta) << ',' << path_short << ',' << path_long
      << ',' << path_none;
  return out.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot replace '" + path.string() + "': " + ec.message());
  }
}

void metrics_init(const std::filesystem::path& path) { write_file_atomic(path, std::string(kMetricsHeader) + "\n"); }

void metrics_append(const std::filesystem::path& path, const MetricsRow& row) {
  std::string content = std::filesystem::exists(path) ? read_file(path) : std::string(kMetricsHeader) + "\n";
  if (!content.empty() && content.back() != '\n') content.push_back('\n');
  content += row.to_csv();
  content.push_back('\n');
  write_file_atomic(path, content);
}

}  // namespace oraclab
