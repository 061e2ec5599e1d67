#include "synchronic/vm/trace.hpp"

#include <sstream>

#include "synchronic/error.hpp"
#include "synchronic/util/text.hpp"

namespace synchronic::vm {

namespace {

void put_list(std::ostream& out, const std::vector<RegIndex>& list) {
  out << '[';
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (i) out << ',';
    out << list[i];
  }
  out << ']';
}

class Cursor {
 public:
  Cursor(std::string_view s, std::size_t line) : s_(s), line_(line) {}

  void expect(std::string_view lit) {
    if (s_.substr(pos_, lit.size()) != lit) {
      throw ParseError("malformed trace record, expected '" + std::string(lit) + "'", line_);
    }
    pos_ += lit.size();
  }
  bool accept(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  std::uint64_t number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') ++pos_;
    const auto v = text::parse_uint(s_.substr(start, pos_ - start));
    if (!v) throw ParseError("malformed trace record, expected a number", line_);
    return *v;
  }
  std::vector<RegIndex> list() {
    std::vector<RegIndex> out;
    expect("[");
    if (accept(']')) return out;
    do {
      out.push_back(static_cast<RegIndex>(number()));
    } while (accept(','));
    expect("]");
    return out;
  }
  void space() { expect(" "); }
  bool done() const { return pos_ == s_.size(); }

 private:
  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string format_record(const TraceRecord& rec) {
  std::ostringstream out;
  out << "cycle=" << rec.cycle << " active=";
  put_list(out, rec.active);
  out << " writes=[";
  for (std::size_t i = 0; i < rec.writes.size(); ++i) {
    if (i) out << ',';
    out << '(' << rec.writes[i].reg << ',' << rec.writes[i].bit << ',' << (rec.writes[i].value ? 1 : 0)
        << ')';
  }
  out << "] next=";
  put_list(out, rec.next);
  return out.str();
}

std::string format_trace(const std::vector<TraceRecord>& trace,
                         const std::optional<MachineError>& error) {
  std::string out;
  for (const TraceRecord& rec : trace) {
    out += format_record(rec);
    out += '\n';
  }
  if (error) {
    std::string desc = to_string(*error);
    desc = desc.substr(0, desc.find(" at cycle"));
    out += "error=" + desc + " cycle=" + std::to_string(error->cycle) + '\n';
  }
  return out;
}

ParsedTrace parse_trace(std::string_view source) {
  ParsedTrace parsed;
  for (const text::Line& line : text::logical_lines(source)) {
    if (parsed.error) throw ParseError("trace continues after its error line", line.number);
    if (line.body.substr(0, 6) == "error=") {
      parsed.error = std::string(line.body.substr(6));
      continue;
    }
    Cursor cur(line.body, line.number);
    TraceRecord rec;
    cur.expect("cycle=");
    rec.cycle = cur.number();
    cur.space();
    cur.expect("active=");
    rec.active = cur.list();
    cur.space();
    cur.expect("writes=[");
    if (!cur.accept(']')) {
      do {
        cur.expect("(");
        WriteRecord w;
        w.reg = static_cast<RegIndex>(cur.number());
        cur.expect(",");
        w.bit = static_cast<std::uint32_t>(cur.number());
        cur.expect(",");
        const auto v = cur.number();
        if (v > 1) throw ParseError("write value must be 0 or 1", line.number);
        w.value = v == 1;
        cur.expect(")");
        rec.writes.push_back(w);
      } while (cur.accept(','));
      cur.expect("]");
    }
    cur.space();
    cur.expect("next=");
    rec.next = cur.list();
    if (!cur.done()) throw ParseError("trailing characters in trace record", line.number);
    if (!parsed.records.empty() && rec.cycle != parsed.records.back().cycle + 1) {
      throw ParseError("trace cycles are not consecutive", line.number);
    }
    parsed.records.push_back(std::move(rec));
  }
  return parsed;
}

}  // namespace synchronic::vm
