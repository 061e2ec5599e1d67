#include "synchronic/error.hpp"
#include "synchronic/spacec/ast.hpp"
#include "synchronic/spacec/compiler.hpp"

namespace synchronic::spacec {

AllocationMap allocate(const Lowered& lowered, const vm::MachineConfig& config) {
  AllocationMap map;
  std::uint64_t need = 0;
  for (const Instance& inst : lowered.instances) need += inst.size();
  const std::uint64_t available = config.n_registers - 1;  // register 0 is the sink
  if (need > available) {
    throw AllocError("out of registers: program needs " + std::to_string(need) + ", machine has " +
                     std::to_string(available));
  }
  // the free list is a single block [free_start, n); first fit takes its front
  map.free_start = 1;
  map.free_end = config.n_registers;
  for (const Instance& inst : lowered.instances) {
    InstanceRegion r;
    r.name = inst.name;
    r.start = map.free_start;
    r.data = r.start + static_cast<vm::RegIndex>(inst.code.size());
    r.end = r.start + static_cast<vm::RegIndex>(inst.size());
    map.free_start = r.end;
    map.regions.push_back(std::move(r));
  }
  for (const auto& [a, b] : lowered.exclusive) {
    const InstanceRegion& x = map.regions[a];
    const InstanceRegion& y = map.regions[b];
    if (!(x.end <= y.start || y.end <= x.start)) {
      throw CodegenError("regions of " + x.name + " and " + y.name + " overlap");
    }
    map.facts.push_back(DisjointFact{a, b});
  }
  return map;
}

CompileResult codegen(Lowered lowered, const AllocationMap& alloc, const vm::MachineConfig& config) {
  CompileResult out;
  out.image.n_registers = config.n_registers;
  out.image.word_width = config.word_width;
  auto resolve = [&](const Ref& ref, vm::RegIndex here) -> vm::RegIndex {
    switch (ref.kind) {
      case Ref::Kind::Sink:
        return 0;
      case Ref::Kind::Next:
        return here + 1;
      case Ref::Kind::Code:
        return alloc.regions[ref.instance].start +
               static_cast<vm::RegIndex>(lowered.instances[ref.instance].labels.at(ref.index));
      case Ref::Kind::Data:
        return alloc.slot(ref.instance, ref.index);
    }
    return 0;
  };
  for (std::size_t i = 0; i < lowered.instances.size(); ++i) {
    const Instance& inst = lowered.instances[i];
    const InstanceRegion& region = alloc.regions[i];
    for (std::size_t pos = 0; pos < inst.code.size(); ++pos) {
      const vm::RegIndex here = region.start + static_cast<vm::RegIndex>(pos);
      const IrInstr& ir = inst.code[pos];
      try {
        out.image.words[here] = vm::encode(vm::Instruction{ir.op, resolve(ir.a, here), ir.b}, config);
      } catch (const Error& e) {
        throw CodegenError("register " + std::to_string(here) + " in " + inst.name + ": " + e.detail());
      }
    }
    for (std::size_t s = 0; s < inst.slot_names.size(); ++s) {
      const vm::RegIndex reg = alloc.slot(i, s);
      out.image.data.insert(reg);
      if (s <= inst.var_count) out.symbols.labels[inst.name + "." + inst.slot_names[s]] = reg;
    }
    out.symbols.labels[inst.name] = region.start;
    out.symbols.regions.push_back(earth::Region{inst.name, region.start, region.end - 1});
  }
  out.image.entry = {alloc.regions.at(0).start};

  out.done = alloc.slot(0, 0);
  out.schedule = lowered.schedule;
  out.allocation = alloc;
  out.lowered = std::move(lowered);
  return out;
}

CompileResult compile(std::string_view source, const CompileOptions& options) {
  const Program program = parse_space(source);
  TypedProgram typed = typecheck(program, options.config.word_width);
  std::string top = options.module;
  if (top.empty()) {
    if (program.modules.empty()) throw TypeError("no module to compile");
    top = program.modules.back().name;
  }
  const TypedModule* m = typed.find(top);
  if (m == nullptr) m = &require_builtin(typed, top);
  std::vector<Port> inputs;
  std::vector<Port> outputs;
  for (const VarDecl& d : m->module.ins) inputs.push_back(Port{d.name, d.width, 0});
  for (const VarDecl& d : m->module.outs) outputs.push_back(Port{d.name, d.width, 0});

  Lowered lowered = lower(typed, top);
  const AllocationMap alloc = allocate(lowered, options.config);
  CompileResult result = codegen(std::move(lowered), alloc, options.config);
  for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i].reg = alloc.slot(0, 1 + i);
  for (std::size_t j = 0; j < outputs.size(); ++j) outputs[j].reg = alloc.slot(0, 1 + inputs.size() + j);
  result.inputs = std::move(inputs);
  result.outputs = std::move(outputs);
  return result;
}

std::string format_schedule(const CompileResult& result) {
  auto cycles = [](const std::optional<std::uint64_t>& c) {
    return c ? std::to_string(*c) : std::string("dynamic");
  };
  std::string out = "# module cycles: entry to completion flag\n";
  for (const auto& [name, c] : result.schedule.modules) out += "module " + name + " cycles " + cycles(c) + "\n";
  out += "# statements\n";
  for (const StatementSchedule& s : result.schedule.statements) {
    out += "stmt " + s.module + " line " + std::to_string(s.line) + " " + s.kind + " cycles " + cycles(s.cycles);
    if (s.join != JoinStrategy::None) out += " join " + std::string(join_name(s.join));
    out += "\n";
  }
  out += "# regions: instance first data-start end (end exclusive)\n";
  for (const InstanceRegion& r : result.allocation.regions) {
    out += "region " + r.name + " " + std::to_string(r.start) + " " + std::to_string(r.data) + " " +
           std::to_string(r.end) + "\n";
  }
  out += "# disjoint regions of simultaneously live instances\n";
  for (const DisjointFact& f : result.allocation.facts) {
    const InstanceRegion& a = result.allocation.regions[f.first];
    const InstanceRegion& b = result.allocation.regions[f.second];
    out += "disjoint " + a.name + " [" + std::to_string(a.start) + "," + std::to_string(a.end) + ") " + b.name +
           " [" + std::to_string(b.start) + "," + std::to_string(b.end) + ")\n";
  }
  return out;
}

}  // namespace synchronic::spacec
