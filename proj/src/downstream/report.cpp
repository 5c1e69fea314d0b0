#include "cstte/downstream/report.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "cstte/error.hpp"

namespace cstte::down {

std::string format_report(const Report& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << "task: " << r.task << '\n'
     << "embedder: " << r.embedder << '\n'
     << "queries: " << r.metrics.queries << '\n'
     << "Acc@1: " << 100.0 * r.metrics.acc1 << '\n'
     << "Acc@5: " << 100.0 * r.metrics.acc5 << '\n'
     << "Acc@10: " << 100.0 * r.metrics.acc10 << '\n'
     << "Acc@20: " << 100.0 * r.metrics.acc20 << '\n'
     << "macro-F1: " << 100.0 * r.metrics.macro_f1 << '\n';
  for (const auto& [k, v] : r.extras) os << k << ": " << 100.0 * v << '\n';
  os << "wall_seconds: " << r.wall_seconds << '\n';
  return os.str();
}

std::string format_kv(const Report& r) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "task=" << r.task << '\n'
     << "embedder=" << r.embedder << '\n'
     << "queries=" << r.metrics.queries << '\n'
     << "acc1=" << r.metrics.acc1 << '\n'
     << "acc5=" << r.metrics.acc5 << '\n'
     << "acc10=" << r.metrics.acc10 << '\n'
     << "acc20=" << r.metrics.acc20 << '\n'
     << "macro_f1=" << r.metrics.macro_f1 << '\n';
  for (const auto& [k, v] : r.extras) os << k << '=' << v << '\n';
  return os.str();
}

void write_report(const std::filesystem::path& text_path, const std::filesystem::path& kv_path,
                  const Report& r) {
  for (const auto& [path, body] :
       {std::pair{text_path, format_report(r)}, std::pair{kv_path, format_kv(r)}}) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << body;
  }
}

}  // namespace cstte::down
