#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <set>

#include "synchronic/error.hpp"
#include "synchronic/interstring/interstring.hpp"
#include "synchronic/spacec/compiler.hpp"
#include "synchronic/util/text.hpp"

namespace synchronic::spacec {

namespace {

using vm::Opcode;

constexpr std::size_t kUnbound = static_cast<std::size_t>(-1);

/// Straight-line code with a single entry at the front and a fall-through
/// exit at the back. `cycles` counts from the entry being active to the
/// register after the fragment being active.
struct Fragment {
  std::vector<IrInstr> code;
  std::vector<std::pair<std::uint32_t, std::size_t>> bindings;
  std::optional<std::uint64_t> cycles = 0;

  void emit(Opcode op, Ref a, std::uint32_t b) { code.push_back(IrInstr{op, a, b}); }
  void bind(std::uint32_t label) { bindings.emplace_back(label, code.size()); }
  void nop(std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) emit(Opcode::Jmp, Ref::next(), 0);
  }
  void append(Fragment f) {
    const std::size_t offset = code.size();
    for (const auto& [label, pos] : f.bindings) bindings.emplace_back(label, pos + offset);
    code.insert(code.end(), f.code.begin(), f.code.end());
    cycles = (cycles && f.cycles) ? std::optional(*cycles + *f.cycles) : std::nullopt;
  }
};

struct Bit {
  bool constant = true;
  bool value = false;
  Ref reg;
  unsigned index = 0;

  static Bit zero() { return Bit{}; }
  friend bool operator==(const Bit&, const Bit&) = default;
};

/// A variable slot or a literal.
struct Operand {
  bool literal = false;
  std::uint64_t value = 0;
  Ref reg;
  unsigned width = 0;

  Bit bit(long i) const {
    if (i < 0 || i >= static_cast<long>(literal ? 64 : width)) return Bit::zero();
    if (literal) return Bit{true, ((value >> i) & 1U) != 0, {}, 0};
    return Bit{false, false, reg, static_cast<unsigned>(i)};
  }
};

struct Write {
  Ref reg;
  unsigned bit = 0;
  bool value = false;
  friend bool operator==(const Write&, const Write&) = default;
};

struct Target {
  enum class Kind { Exit, Halt, Label };
  Kind kind = Kind::Exit;
  std::uint32_t label = 0;
  friend bool operator==(const Target&, const Target&) = default;
};

struct Leaf {
  std::vector<Write> writes;
  Target next;
  friend bool operator==(const Leaf&, const Leaf&) = default;
};

using LeafFn = std::function<Leaf(const std::vector<bool>&)>;

/// Decision tree over input bits. Constant inputs are folded, repeated
/// registers are tested once and tests whose subtrees agree are dropped.
class Tree {
 public:
  Tree(const std::vector<Bit>& inputs, const LeafFn& leaf) : inputs_(inputs) {
    std::vector<bool> assignment(inputs.size(), false);
    root_ = build(0, assignment, leaf);
  }

  std::uint64_t natural() const { return natural(root_, 0); }

  /// Every leaf is padded so all paths take `total` cycles.
  void emit(Fragment& f, std::uint64_t total, std::uint32_t exit, const std::function<std::uint32_t()>& label,
            std::size_t instance) const {
    emit(f, root_, 0, total, exit, label, instance);
  }

 private:
  struct Node {
    int input = -1;  // -1 for a leaf
    Leaf leaf;
    int one = -1;
    int zero = -1;
  };

  int build(std::size_t i, std::vector<bool>& assignment, const LeafFn& leaf) {
    if (i == inputs_.size()) {
      nodes_.push_back(Node{-1, leaf(assignment), -1, -1});
      return static_cast<int>(nodes_.size()) - 1;
    }
    const Bit& in = inputs_[i];
    if (in.constant) {
      assignment[i] = in.value;
      return build(i + 1, assignment, leaf);
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (inputs_[j] == in) {
        assignment[i] = assignment[j];
        return build(i + 1, assignment, leaf);
      }
    }
    assignment[i] = true;
    const int one = build(i + 1, assignment, leaf);
    assignment[i] = false;
    const int zero = build(i + 1, assignment, leaf);
    if (same(one, zero)) return one;
    nodes_.push_back(Node{static_cast<int>(i), {}, one, zero});
    return static_cast<int>(nodes_.size()) - 1;
  }

  bool same(int a, int b) const {
    const Node& x = nodes_[a];
    const Node& y = nodes_[b];
    if (x.input != y.input) return false;
    if (x.input < 0) return x.leaf == y.leaf;
    return same(x.one, y.one) && same(x.zero, y.zero);
  }

  std::uint64_t natural(int n, std::uint64_t arrival) const {
    const Node& node = nodes_[n];
    if (node.input < 0) return arrival + node.leaf.writes.size() + 1;
    return std::max(natural(node.one, arrival + 1), natural(node.zero, arrival + 2));
  }

  void emit(Fragment& f, int n, std::uint64_t arrival, std::uint64_t total, std::uint32_t exit,
            const std::function<std::uint32_t()>& label, std::size_t instance) const {
    const Node& node = nodes_[n];
    if (node.input < 0) {
      for (const Write& w : node.leaf.writes) f.emit(w.value ? Opcode::Wr1 : Opcode::Wr0, w.reg, w.bit);
      f.nop(total - arrival - node.leaf.writes.size() - 1);
      switch (node.leaf.next.kind) {
        case Target::Kind::Exit:
          f.emit(Opcode::Jmp, Ref::code(instance, exit), 0);
          break;
        case Target::Kind::Halt:
          f.emit(Opcode::Jmp, Ref::sink(), 0);
          break;
        case Target::Kind::Label:
          f.emit(Opcode::Jmp, Ref::code(instance, node.leaf.next.label), 0);
          break;
      }
      return;
    }
    const Bit& in = inputs_[static_cast<std::size_t>(node.input)];
    const std::uint32_t zero = label();
    f.emit(Opcode::Cnd, in.reg, in.index);
    f.emit(Opcode::Jmp, Ref::code(instance, zero), 0);
    emit(f, node.one, arrival + 1, total, exit, label, instance);
    f.bind(zero);
    emit(f, node.zero, arrival + 2, total, exit, label, instance);
  }

  std::vector<Bit> inputs_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Bit-serial machine whose carry/borrow/flag state lives in the program
/// counter: one block per (bit, reachable state).
struct Serial {
  unsigned bits = 0;
  int init = 0;
  std::function<std::vector<Bit>(unsigned)> inputs;
  std::function<std::pair<std::vector<Write>, int>(unsigned, int, const std::vector<bool>&)> step;
  std::function<std::vector<Write>(int)> final;
};

class Lowerer {
 public:
  explicit Lowerer(TypedProgram& program) : program_(program) {}

  Lowered run(std::string_view top) {
    const TypedModule* m = program_.find(top);
    if (m == nullptr) m = &require_builtin(program_, top);
    const std::size_t root = new_instance(std::string(top), *m, 0);
    lower_instance(root, *m);
    return std::move(out_);
  }

 private:
  // -- instances ----------------------------------------------------------

  std::size_t new_instance(std::string name, const TypedModule& m, std::size_t parent) {
    Instance inst;
    inst.name = std::move(name);
    inst.module = m.module.name;
    inst.parent = out_.instances.empty() ? 0 : parent;
    inst.slot_names.push_back("done");
    inst.slot_widths.push_back(1);
    for (const VarInfo& v : m.vars) {
      inst.slot_names.push_back(v.name);
      inst.slot_widths.push_back(v.width);
    }
    inst.port_count = m.module.ins.size() + m.module.outs.size();
    inst.var_count = m.vars.size();
    out_.instances.push_back(std::move(inst));
    return out_.instances.size() - 1;
  }

  Instance& inst() { return out_.instances[cur_]; }

  std::uint32_t label() {
    inst().labels.push_back(kUnbound);
    return static_cast<std::uint32_t>(inst().labels.size() - 1);
  }

  std::uint32_t new_slot(const std::string& name, unsigned width) {
    inst().slot_names.push_back(name);
    inst().slot_widths.push_back(width);
    return static_cast<std::uint32_t>(inst().slot_names.size() - 1);
  }

  Ref code(std::uint32_t l) const { return Ref::code(cur_, l); }
  Ref data(std::uint32_t slot) const { return Ref::data(cur_, slot); }

  Operand var(const std::string& name) const {
    const auto it = mod_->index.find(name);
    if (it == mod_->index.end()) throw CodegenError("unresolved name '" + name + "' in " + mod_->module.name);
    return Operand{false, 0, data(static_cast<std::uint32_t>(1 + it->second)), mod_->vars[it->second].width};
  }

  Operand symbol(const std::string& s) const {
    if (interstring::is_literal(s)) return Operand{true, *text::parse_uint(s), {}, 64};
    return var(s);
  }

  void lower_instance(std::size_t idx, const TypedModule& m) {
    const std::size_t saved_cur = cur_;
    const TypedModule* saved_mod = mod_;
    const bool saved_recording = recording_;
    cur_ = idx;
    mod_ = &m;
    recording_ = recorded_modules_.insert(m.module.name).second;

    Fragment body;
    body.bind(label());  // label 0: entry
    for (const Stmt& s : m.module.body) body.append(stmt(s));

    // epilogue: inputs and locals back to zero
    std::vector<Fragment> zero;
    for (std::size_t i = 0; i < m.vars.size(); ++i) {
      if (m.vars[i].kind == VarKind::Out) continue;
      Fragment t;
      for (unsigned b = 0; b < m.vars[i].width; ++b) t.emit(Opcode::Wr0, data(static_cast<std::uint32_t>(1 + i)), b);
      t.cycles = m.vars[i].width;
      zero.push_back(std::move(t));
    }
    body.append(balanced(std::move(zero)));
    const auto cycles = body.cycles;
    body.emit(Opcode::Wr1, data(0), 0);
    body.emit(Opcode::Jmp, Ref::sink(), 0);

    Instance& self = inst();
    self.code = std::move(body.code);
    for (const auto& [l, pos] : body.bindings) self.labels[l] = pos;
    for (std::size_t l = 0; l < self.labels.size(); ++l) {
      if (self.labels[l] == kUnbound) {
        throw CodegenError("label " + std::to_string(l) + " unbound in " + self.name);
      }
    }
    self.cycles = cycles;
    if (recording_) out_.schedule.modules.emplace_back(m.module.name, cycles);

    cur_ = saved_cur;
    mod_ = saved_mod;
    recording_ = saved_recording;
  }

  // -- building blocks ----------------------------------------------------

  Fragment tree(const std::vector<Bit>& inputs, const LeafFn& leaf) {
    const Tree t(inputs, leaf);
    Fragment f;
    const std::uint32_t exit = label();
    const std::uint64_t total = t.natural();
    t.emit(f, total, exit, [this] { return label(); }, cur_);
    f.bind(exit);
    f.cycles = total;
    return f;
  }

  /// Copies bit `src` to `dst`; `clear_src` also zeroes a set source bit.
  Fragment copy_bit(const Bit& src, Ref dst, unsigned bit, bool dst_is_zero, bool clear_src) {
    return tree({src}, [&](const std::vector<bool>& v) {
      Leaf leaf;
      if (v[0] || !dst_is_zero) leaf.writes.push_back(Write{dst, bit, v[0]});
      if (v[0] && clear_src) leaf.writes.push_back(Write{src.reg, src.index, false});
      return leaf;
    });
  }

  /// Fan-out ladder: one JMP with offset activates k JMPs, one per thread.
  /// Threads are padded to equal length; thread 0 continues, the rest halt.
  Fragment balanced(std::vector<Fragment> threads) {
    std::erase_if(threads, [](const Fragment& t) { return t.code.empty(); });
    if (threads.empty()) return Fragment{};
    if (threads.size() == 1) return std::move(threads.front());
    std::uint64_t longest = 0;
    for (const Fragment& t : threads) {
      if (!t.cycles) throw CodegenError("balanced group with a dynamic thread");
      longest = std::max(longest, *t.cycles);
    }
    Fragment g;
    const std::uint32_t ladder = label();
    const std::uint32_t exit = label();
    std::vector<std::uint32_t> starts;
    g.emit(Opcode::Jmp, code(ladder), static_cast<std::uint32_t>(threads.size() - 1));
    g.bind(ladder);
    for (std::size_t i = 0; i < threads.size(); ++i) {
      starts.push_back(label());
      g.emit(Opcode::Jmp, code(starts.back()), 0);
    }
    for (std::size_t i = 0; i < threads.size(); ++i) {
      const std::uint64_t own = *threads[i].cycles;
      g.bind(starts[i]);
      g.append(std::move(threads[i]));
      g.nop(longest - own);
      g.emit(Opcode::Jmp, i == 0 ? code(exit) : Ref::sink(), 0);
    }
    g.bind(exit);
    g.cycles = 2 + longest + 1;
    return g;
  }

  /// Each thread sets its completion flag and halts; a poller spins on the
  /// flags in order, clears them and continues.
  Fragment polled(std::vector<Fragment> threads, std::size_t line) {
    const unsigned w = program_.max_width;
    std::vector<std::pair<std::uint32_t, unsigned>> flags;
    std::uint32_t slot = 0;
    for (std::size_t i = 0; i < threads.size(); ++i) {
      if (i % w == 0) {
        const auto remaining = static_cast<unsigned>(std::min<std::size_t>(w, threads.size() - i));
        slot = new_slot("par@" + std::to_string(line) + ".flags" + std::to_string(i / w), remaining);
      }
      flags.emplace_back(slot, static_cast<unsigned>(i % w));
    }
    Fragment g;
    const std::uint32_t ladder = label();
    const std::uint32_t poll = label();
    std::vector<std::uint32_t> starts;
    g.emit(Opcode::Jmp, code(ladder), static_cast<std::uint32_t>(threads.size()));
    g.bind(ladder);
    for (std::size_t i = 0; i < threads.size(); ++i) {
      starts.push_back(label());
      g.emit(Opcode::Jmp, code(starts.back()), 0);
    }
    g.emit(Opcode::Jmp, code(poll), 0);
    for (std::size_t i = 0; i < threads.size(); ++i) {
      g.bind(starts[i]);
      g.append(std::move(threads[i]));
      g.emit(Opcode::Wr1, data(flags[i].first), flags[i].second);
      g.emit(Opcode::Jmp, Ref::sink(), 0);
    }
    g.bind(poll);
    for (const auto& [s, b] : flags) {
      const std::uint32_t spin = label();
      g.bind(spin);
      g.emit(Opcode::Cnd, data(s), b);
      g.emit(Opcode::Jmp, code(spin), 0);
    }
    for (const auto& [s, b] : flags) g.emit(Opcode::Wr0, data(s), b);
    g.cycles = std::nullopt;
    return g;
  }

  Fragment serial(const Serial& spec) {
    std::map<std::pair<unsigned, int>, std::uint32_t> blocks;
    auto block = [&](unsigned bit, int state) {
      const auto [it, fresh] = blocks.emplace(std::pair{bit, state}, 0);
      if (fresh) it->second = label();
      return it->second;
    };
    const std::uint32_t exit = label();
    std::vector<std::vector<std::pair<int, Tree>>> trees(spec.bits);
    std::set<int> states{spec.init};
    for (unsigned i = 0; i < spec.bits; ++i) {
      std::set<int> next;
      for (const int s : states) {
        const bool last = i + 1 == spec.bits;
        trees[i].emplace_back(s, Tree(spec.inputs(i), [&](const std::vector<bool>& v) {
                                auto [writes, ns] = spec.step(i, s, v);
                                next.insert(ns);
                                Leaf leaf;
                                leaf.writes = std::move(writes);
                                if (last) {
                                  const auto tail = spec.final ? spec.final(ns) : std::vector<Write>{};
                                  leaf.writes.insert(leaf.writes.end(), tail.begin(), tail.end());
                                } else {
                                  leaf.next = Target{Target::Kind::Label, block(i + 1, ns)};
                                }
                                return leaf;
                              }));
      }
      states = std::move(next);
    }
    Fragment f;
    std::uint64_t total = 0;
    for (unsigned i = 0; i < spec.bits; ++i) {
      std::uint64_t longest = 0;
      for (const auto& [s, t] : trees[i]) longest = std::max(longest, t.natural());
      for (const auto& [s, t] : trees[i]) {
        if (i > 0) f.bind(block(i, s));
        t.emit(f, longest, exit, [this] { return label(); }, cur_);
      }
      total += longest;
    }
    f.bind(exit);
    f.cycles = total;
    return f;
  }

  // -- operators ----------------------------------------------------------

  Fragment op(const std::string& name, const Operand& d, const std::vector<Operand>& srcs, unsigned operand_width) {
    for (const Operand& s : srcs) {
      if (!s.literal && s.reg == d.reg) throw CodegenError("destination aliases a source of '" + name + "'");
    }
    const Operand& x = srcs.at(0);
    const Operand none{true, 0, {}, 64};
    const Operand& y = srcs.size() > 1 ? srcs[1] : none;

    if (name == "and" || name == "or" || name == "xor" || name == "not" || name == "mov" || name == "shl" ||
        name == "shr") {
      std::vector<Fragment> threads;
      for (unsigned i = 0; i < d.width; ++i) {
        std::vector<Bit> inputs;
        if (name == "shl" || name == "shr") {
          const long k = static_cast<long>(std::min<std::uint64_t>(y.value, 64));
          const long j = name == "shl" ? static_cast<long>(i) - k : static_cast<long>(i) + k;
          inputs = {x.bit(j < static_cast<long>(d.width) ? j : -1)};
        } else {
          inputs = {x.bit(i), y.bit(i)};
        }
        threads.push_back(tree(inputs, [&](const std::vector<bool>& v) {
          bool r = v[0];
          if (name == "and") r = v[0] && v[1];
          if (name == "or") r = v[0] || v[1];
          if (name == "xor") r = v[0] != v[1];
          if (name == "not") r = !v[0];
          return Leaf{{Write{d.reg, i, r}}, {}};
        }));
      }
      return balanced(std::move(threads));
    }
    if (name == "add" || name == "sub") {
      const bool add = name == "add";
      return serial(Serial{
          d.width, 0, [&](unsigned i) { return std::vector<Bit>{x.bit(i), y.bit(i)}; },
          [&, add](unsigned i, int c, const std::vector<bool>& v) {
            const bool a = v[0];
            const bool b = v[1];
            const bool s = a != b ? !c : c != 0;
            const bool carry = add ? ((a && b) || (c && (a != b))) : ((!a && b) || (c && a == b));
            return std::pair{std::vector<Write>{Write{d.reg, i, s}}, int{carry}};
          },
          {}});
    }
    if (name == "eq" || name == "lt") {
      const bool eq = name == "eq";
      return serial(Serial{
          operand_width, eq ? 1 : 0, [&](unsigned i) { return std::vector<Bit>{x.bit(i), y.bit(i)}; },
          [eq](unsigned, int s, const std::vector<bool>& v) {
            const bool a = v[0];
            const bool b = v[1];
            const bool ns = eq ? (s && a == b) : ((!a && b) || (a == b && s));
            return std::pair{std::vector<Write>{}, int{ns}};
          },
          [&](int s) { return std::vector<Write>{Write{d.reg, 0, s != 0}}; }});
    }
    if (name == "mul") return mul(d, x, y);
    throw CodegenError("no lowering for operator '" + name + "'");
  }

  /// Shift-and-add: clear d, then for every set bit j of y add x << j into
  /// bits j.. of d. Unset bits run an equally long chain of no-ops.
  Fragment mul(const Operand& d, const Operand& x, const Operand& y) {
    std::vector<Fragment> clear;
    for (unsigned i = 0; i < d.width; ++i) {
      Fragment t;
      t.emit(Opcode::Wr0, d.reg, i);
      t.cycles = 1;
      clear.push_back(std::move(t));
    }
    Fragment f = balanced(std::move(clear));
    for (unsigned j = 0; j < d.width; ++j) {
      const Bit yj = y.bit(j);
      if (yj.constant && !yj.value) continue;
      Fragment partial = serial(Serial{
          d.width - j, 0,
          [&](unsigned k) {
            return std::vector<Bit>{Bit{false, false, d.reg, j + k}, x.bit(k)};
          },
          [&](unsigned k, int c, const std::vector<bool>& v) {
            const bool a = v[0];
            const bool b = v[1];
            const bool s = a != b ? !c : c != 0;
            const bool carry = (a && b) || (c && (a != b));
            return std::pair{std::vector<Write>{Write{d.reg, j + k, s}}, int{carry}};
          },
          {}});
      if (yj.constant) {
        f.append(std::move(partial));
        continue;
      }
      const std::uint64_t span = *partial.cycles;
      Fragment br;
      const std::uint32_t skip = label();
      const std::uint32_t end = label();
      br.emit(Opcode::Cnd, yj.reg, yj.index);
      br.emit(Opcode::Jmp, code(skip), 0);
      br.append(std::move(partial));
      br.emit(Opcode::Jmp, code(end), 0);
      br.bind(skip);
      br.nop(span);
      br.bind(end);
      br.cycles = span + 2;
      f.append(std::move(br));
    }
    return f;
  }

  // -- statements ---------------------------------------------------------

  static std::string_view kind_name(Stmt::Kind k) {
    switch (k) {
      case Stmt::Kind::Decl: return "var";
      case Stmt::Kind::Call: return "call";
      case Stmt::Kind::Seq: return "seq";
      case Stmt::Kind::Par: return "par";
      case Stmt::Kind::If: return "if";
      case Stmt::Kind::Repeat: return "repeat";
      case Stmt::Kind::Layers: return "interstring";
    }
    return "?";
  }

  Fragment sequence(const std::vector<Stmt>& body) {
    Fragment f;
    for (const Stmt& s : body) f.append(stmt(s));
    return f;
  }

  Fragment stmt(const Stmt& s) {
    if (s.kind == Stmt::Kind::Decl) return Fragment{};
    std::size_t record = kUnbound;
    if (recording_ && recorded_stmts_.insert(&s).second) {
      record = out_.schedule.statements.size();
      out_.schedule.statements.push_back(StatementSchedule{mod_->module.name, s.line, std::string(kind_name(s.kind)), std::nullopt, JoinStrategy::None});
    }
    JoinStrategy join = JoinStrategy::None;
    Fragment f;
    switch (s.kind) {
      case Stmt::Kind::Decl:
        break;
      case Stmt::Kind::Seq:
        f = sequence(s.body);
        break;
      case Stmt::Kind::Par:
        f = par(s, join);
        break;
      case Stmt::Kind::If:
        f = branch(s);
        break;
      case Stmt::Kind::Repeat:
        f = repeat(s);
        break;
      case Stmt::Kind::Call:
        f = call(s);
        break;
      case Stmt::Kind::Layers:
        f = layers(s);
        break;
    }
    if (record != kUnbound) {
      out_.schedule.statements[record].cycles = f.cycles;
      out_.schedule.statements[record].join = join;
    }
    return f;
  }

  Fragment par(const Stmt& s, JoinStrategy& join) {
    std::vector<Fragment> threads;
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    bool all_static = true;
    for (const Stmt& b : s.body) {
      const std::size_t lo = out_.instances.size();
      threads.push_back(stmt(b));
      ranges.emplace_back(lo, out_.instances.size());
      all_static = all_static && threads.back().cycles.has_value();
    }
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      for (std::size_t j = i + 1; j < ranges.size(); ++j) {
        for (std::size_t a = ranges[i].first; a < ranges[i].second; ++a) {
          for (std::size_t b = ranges[j].first; b < ranges[j].second; ++b) out_.exclusive.emplace_back(a, b);
        }
      }
    }
    if (threads.size() <= 1) {
      return threads.empty() ? Fragment{} : std::move(threads.front());
    }
    if (all_static) {
      join = JoinStrategy::CycleBalanced;
      return balanced(std::move(threads));
    }
    join = JoinStrategy::FlagPolled;
    return polled(std::move(threads), s.line);
  }

  Fragment branch(const Stmt& s) {
    const Operand c = var(s.cond);
    Fragment f;
    const std::uint32_t other = label();
    const std::uint32_t end = label();
    f.emit(Opcode::Cnd, c.reg, 0);
    f.emit(Opcode::Jmp, code(other), 0);
    f.append(sequence(s.body));
    f.emit(Opcode::Jmp, code(end), 0);
    f.bind(other);
    f.append(sequence(s.else_body));
    f.bind(end);
    f.cycles = std::nullopt;
    return f;
  }

  Fragment repeat(const Stmt& s) {
    if (s.unroll) {
      Fragment f;
      for (std::uint64_t i = 0; i < s.count; ++i) f.append(sequence(s.body));
      return f;
    }
    const unsigned width = std::max(1U, static_cast<unsigned>(std::bit_width(s.count)));
    if (width > program_.max_width) throw CodegenError("repeat count does not fit a register");
    const std::uint32_t counter = new_slot("repeat@" + std::to_string(s.line), width);
    Fragment f;
    for (unsigned i = 0; i < width; ++i) {
      if ((s.count >> i) & 1U) f.emit(Opcode::Wr1, data(counter), i);
    }
    const std::uint32_t loop = label();
    const std::uint32_t body = label();
    const std::uint32_t exit = label();
    std::vector<Bit> bits;
    for (unsigned i = 0; i < width; ++i) bits.push_back(Bit{false, false, data(counter), i});
    f.bind(loop);
    const Tree test(bits, [&](const std::vector<bool>& v) {
      const bool any = std::find(v.begin(), v.end(), true) != v.end();
      return Leaf{{}, Target{Target::Kind::Label, any ? body : exit}};
    });
    const std::uint64_t dt = test.natural();
    test.emit(f, dt, exit, [this] { return label(); }, cur_);
    f.bind(body);
    Fragment inner = sequence(s.body);
    const auto db = inner.cycles;
    f.append(std::move(inner));
    Fragment dec = serial(Serial{
        width, 1, [&](unsigned i) { return std::vector<Bit>{bits[i]}; },
        [&](unsigned i, int borrow, const std::vector<bool>& v) {
          std::vector<Write> w;
          if (borrow) w.push_back(Write{data(counter), i, !v[0]});
          return std::pair{w, int{borrow && !v[0]}};
        },
        {}});
    const std::uint64_t dd = *dec.cycles;
    f.append(std::move(dec));
    f.emit(Opcode::Jmp, code(loop), 0);
    f.bind(exit);
    if (db) {
      f.cycles = static_cast<std::uint64_t>(std::popcount(s.count)) + s.count * (dt + *db + dd + 1) + dt;
    } else {
      f.cycles = std::nullopt;
    }
    return f;
  }

  /// Copy-in, activate the callee while polling its completion flag, clear
  /// the flag, copy-out (zeroing the callee's outputs).
  Fragment call(const Stmt& s) {
    const TypedModule* callee = program_.resolve(s.callee);
    if (callee == nullptr) throw CodegenError("unresolved module '" + s.callee + "'");
    const std::size_t k = ++children_[cur_];
    const std::size_t child = new_instance(inst().name + "/" + s.callee + "@" + std::to_string(k), *callee, cur_);
    lower_instance(child, *callee);
    const std::optional<std::uint64_t> e = out_.instances[child].cycles;

    Fragment f;
    std::vector<Fragment> in;
    for (std::size_t j = 0; j < s.args.size(); ++j) {
      const Arg& a = s.args[j];
      const Operand src = a.literal ? Operand{true, *a.literal, {}, 64} : var(a.name);
      const Ref dst = Ref::data(child, static_cast<std::uint32_t>(1 + j));
      for (unsigned i = 0; i < callee->vars[j].width; ++i) {
        const Bit b = src.bit(i);
        if (b.constant && !b.value) continue;
        in.push_back(copy_bit(b, dst, i, true, false));
      }
    }
    f.append(balanced(std::move(in)));

    Fragment core;
    const std::uint32_t spawn = label();
    const std::uint32_t poll = label();
    core.emit(Opcode::Jmp, code(spawn), 1);
    core.bind(spawn);
    core.emit(Opcode::Jmp, Ref::code(child, 0), 0);
    core.bind(poll);
    core.emit(Opcode::Cnd, Ref::data(child, 0), 0);
    core.emit(Opcode::Jmp, code(poll), 0);
    core.emit(Opcode::Wr0, Ref::data(child, 0), 0);
    if (e) {
      // the poll reads the flag on odd cycles; the flag is visible from e + 3
      const std::uint64_t seen = (*e + 3) | 1U;
      core.cycles = seen + 2;
    } else {
      core.cycles = std::nullopt;
    }
    f.append(std::move(core));

    std::vector<Fragment> out;
    const std::size_t n_in = callee->module.ins.size();
    for (std::size_t j = 0; j < s.outs.size(); ++j) {
      const Operand dst = var(s.outs[j]);
      const Ref src = Ref::data(child, static_cast<std::uint32_t>(1 + n_in + j));
      for (unsigned i = 0; i < dst.width; ++i) {
        out.push_back(copy_bit(Bit{false, false, src, i}, dst.reg, i, false, true));
      }
    }
    f.append(balanced(std::move(out)));
    return f;
  }

  /// Each layer is one balanced group of cells. A cell whose destination is
  /// read elsewhere in the layer writes a temporary, committed afterwards.
  Fragment layers(const Stmt& s) {
    Fragment f;
    for (const auto& layer : s.layers.layers) {
      std::set<std::string> read;
      for (const auto& cell : layer.cells) {
        for (const std::string& src : cell.sources()) {
          if (!interstring::is_literal(src)) read.insert(src);
        }
      }
      std::vector<Fragment> cells;
      std::vector<std::pair<Operand, Operand>> commits;  // temp, destination
      for (const auto& cell : layer.cells) {
        const Operand dst = var(cell.destination());
        Operand target = dst;
        if (read.count(cell.destination())) {
          const std::uint32_t slot = new_slot(cell.destination() + "'" + std::to_string(s.line + layer.line - 1),
                                              dst.width);
          target = Operand{false, 0, data(slot), dst.width};
          commits.emplace_back(target, dst);
        }
        std::vector<Operand> args;
        unsigned ow = dst.width;
        for (const std::string& src : cell.sources()) {
          args.push_back(symbol(src));
          if (!args.back().literal && (cell.op() == "eq" || cell.op() == "lt")) ow = args.back().width;
        }
        cells.push_back(op(cell.op(), target, args, ow));
      }
      f.append(balanced(std::move(cells)));
      std::vector<Fragment> commit;
      for (const auto& [tmp, dst] : commits) {
        for (unsigned i = 0; i < dst.width; ++i) {
          commit.push_back(copy_bit(Bit{false, false, tmp.reg, i}, dst.reg, i, false, true));
        }
      }
      f.append(balanced(std::move(commit)));
    }
    return f;
  }

  TypedProgram& program_;
  Lowered out_;
  std::size_t cur_ = 0;
  const TypedModule* mod_ = nullptr;
  bool recording_ = false;
  std::set<std::string> recorded_modules_;
  std::set<const Stmt*> recorded_stmts_;
  std::map<std::size_t, std::size_t> children_;
};

}  // namespace

std::string_view join_name(JoinStrategy join) {
  switch (join) {
    case JoinStrategy::None: return "none";
    case JoinStrategy::CycleBalanced: return "CycleBalanced";
    case JoinStrategy::FlagPolled: return "FlagPolled";
  }
  return "none";
}

Lowered lower(TypedProgram& program, std::string_view top) { return Lowerer(program).run(top); }

}  // namespace synchronic::spacec
