#include "synchronic/harness/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include "synchronic/error.hpp"

namespace synchronic::harness {

std::string Metrics::to_string() const {
  char mean[32];
  std::snprintf(mean, sizeof mean, "%.3f", mean_active);
  std::string out = "cycles=" + std::to_string(cycles) + "\npeak_active=" + std::to_string(peak_active) +
                    "\nmean_active=" + mean + "\nfootprint=" + std::to_string(footprint) + "\nerror=";
  out += error ? *error : "none";
  return out + "\n";
}

Metrics metrics(const std::vector<vm::TraceRecord>& trace, std::optional<std::string> error) {
  if (trace.empty()) throw Error(Stage::Parse, "no cycles in trace");
  Metrics m;
  m.cycles = trace.size();
  std::uint64_t total = 0;
  for (const vm::TraceRecord& r : trace) {
    m.peak_active = std::max(m.peak_active, r.active.size());
    total += r.active.size();
    for (vm::RegIndex a : r.active) m.footprint = std::max(m.footprint, a);
    for (vm::RegIndex a : r.next) m.footprint = std::max(m.footprint, a);
    for (const vm::WriteRecord& w : r.writes) m.footprint = std::max(m.footprint, w.reg);
  }
  m.mean_active = static_cast<double>(total) / static_cast<double>(trace.size());
  m.error = std::move(error);
  return m;
}

Metrics metrics(std::string_view trace_text) {
  vm::ParsedTrace parsed = vm::parse_trace(trace_text);
  return metrics(parsed.records, std::move(parsed.error));
}

}  // namespace synchronic::harness
