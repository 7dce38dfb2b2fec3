#include "structflow/gen.hpp"

#include "structflow/layout.hpp"
#include "structflow/parser.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

namespace structflow {

namespace {

struct GenType {
  std::string name;
  bool is_class = false;
  std::uint64_t size = 1;
  std::string first; // type of the leading member; casts between equal ones line up
  std::vector<std::string> paths; // "T.f", "T.f.g", "T.Base"
};

struct FnState {
  std::string name;
  std::vector<std::string> lines;
  std::vector<std::string> pool;            // pointer-ish variables in scope
  std::map<std::string, std::string> hint;  // variable -> last structure type
  int next_var = 0;
  int next_block = 1;
  std::string block = "entry";
  std::size_t index = 0; // position among functions; calls only go backwards
};

class Generator {
public:
  explicit Generator(const GenConfig &cfg) : cfg_(cfg), rng_(cfg.seed) {}

  std::string run() {
    remaining_ = std::max(cfg_.max_instructions, 1);
    make_types();
    std::ostringstream out;
    out << type_text_;

    int nglobals = remaining_ >= 12 ? uniform(0, 2) : 0;
    for (int i = 0; i < nglobals; ++i) {
      std::string name = "g" + std::to_string(i);
      std::string ty = types_.empty() || chance(0.3) ? "ptr" : pick(types_).name;
      out << "global " << name << " = alloca " << ty << ", " << size_of(ty) << "\n";
      globals_.push_back(name);
      --remaining_;
    }

    // Helpers first, each getting a slice of the budget; main takes the rest.
    int nhelpers = remaining_ >= 16 ? uniform(0, 2) : 0;
    std::vector<FnState> fns;
    for (int i = 0; i < nhelpers; ++i) {
      FnState fn;
      fn.name = "h" + std::to_string(i);
      fn.index = static_cast<std::size_t>(i);
      arity_.push_back(uniform(1, 2));
      for (int p = 0; p < arity_.back(); ++p)
        fn.pool.push_back("a" + std::to_string(p));
      int budget = remaining_ / (nhelpers + 2 - i);
      body(fn, budget, true);
      helpers_.push_back(fn.name);
      fns.push_back(std::move(fn));
    }
    FnState main;
    main.name = "main";
    main.index = fns.size();
    body(main, remaining_, false);
    fns.push_back(std::move(main));

    for (const FnState &fn : fns) {
      out << "\nfunc " << fn.name << "(";
      if (fn.name != "main")
        for (int p = 0; p < arity_[fn.index]; ++p)
          out << (p ? ", " : "") << "a" << p;
      out << ") {\nentry:\n";
      for (const std::string &l : fn.lines)
        out << l << "\n";
      out << "}\n";
    }
    return out.str();
  }

private:
  bool chance(double p) { return std::bernoulli_distribution(std::clamp(p, 0.0, 1.0))(rng_); }
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  template <typename T> const T &pick(const std::vector<T> &v) {
    return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))];
  }

  std::uint64_t size_of(const std::string &ty) const {
    static const std::map<std::string, std::uint64_t> prim = {
        {"i8", 1}, {"i16", 2}, {"i32", 4}, {"i64", 8}, {"ptr", 8}};
    if (auto it = prim.find(ty); it != prim.end())
      return it->second;
    for (const GenType &t : types_)
      if (t.name == ty)
        return t.size;
    return 8;
  }

  // Types ------------------------------------------------------------------

  void make_types() {
    if (cfg_.max_types <= 0)
      return;
    std::ostringstream os;
    int total = uniform(std::min(2, cfg_.max_types), cfg_.max_types);
    int nclasses = cfg_.allow_classes && total >= 2 ? uniform(0, std::min(3, total - 1)) : 0;
    int nstructs = total - nclasses;
    const std::vector<std::string> prims = {"i8", "i32", "i64", "ptr", "ptr"};
    std::vector<std::string> first_fields;
    std::vector<std::string> names;
    std::map<std::string, std::string> first_of;
    auto member_type = [&]() -> std::string {
      int r = uniform(0, 9);
      if (r < 6 || names.empty())
        return r == 9 ? "[" + std::to_string(uniform(2, 4)) + " x " + pick(prims) + "]" : pick(prims);
      if (r < 8)
        return pick(names);
      return "[" + std::to_string(uniform(2, 3)) + " x " + pick(prims) + "]";
    };
    for (int i = 0; i < nstructs; ++i) {
      std::string name = "S" + std::to_string(i);
      int nf = uniform(1, std::max(1, cfg_.max_fields_per_struct));
      os << "type " << name << " = struct {";
      for (int f = 0; f < nf; ++f) {
        std::string ty;
        if (f == 0 && !first_fields.empty() && chance(0.4))
          ty = pick(first_fields); // shares a prefix with an earlier struct
        else
          ty = member_type();
        if (f == 0) {
          first_fields.push_back(ty);
          first_of[name] = ty;
        }
        os << (f ? ", " : " ") << "f" << f << ": " << ty;
      }
      os << " }\n";
      names.push_back(name);
    }
    std::vector<std::string> classes;
    for (int i = 0; i < nclasses; ++i) {
      std::string name = "K" + std::to_string(i);
      std::vector<std::string> bases;
      if (!classes.empty() && chance(0.75)) {
        bases.push_back(pick(classes));
        if (classes.size() > 1 && chance(0.4)) {
          std::string other = pick(classes);
          if (other != bases.front())
            bases.push_back(other);
        }
      }
      os << "type " << name << " = class(";
      for (std::size_t b = 0; b < bases.size(); ++b)
        os << (b ? ", " : "") << bases[b];
      os << ")" << (bases.empty() || chance(0.5) ? " virtual" : "") << " {";
      int nm = uniform(0, 2);
      for (int m = 0; m < nm; ++m)
        os << (m ? ", " : " ") << "m" << m << ": " << pick(prims);
      os << (nm ? " }" : "}") << "\n";
      classes.push_back(name);
      names.push_back(name);
    }
    type_text_ = os.str();

    // Measure the declared types through the real layout engine.
    Program stub = parse_or_throw(type_text_ + "func main() {\nentry:\n  ret\n}\n");
    LayoutTable layouts(stub.types);
    for (const std::string &n : names) {
      TypeId id = *stub.types.lookup(n);
      GenType gt;
      gt.name = n;
      gt.is_class = stub.types.is_class(id);
      gt.size = layouts.size(id);
      gt.first = first_of.count(n) ? first_of[n] : "";
      collect_paths(stub, layouts, id, n, 0, gt.paths);
      types_.push_back(std::move(gt));
    }
  }

  void collect_paths(const Program &stub, const LayoutTable &layouts, TypeId t, const std::string &prefix,
                     int depth, std::vector<std::string> &out) {
    if (depth > 1)
      return;
    for (const Placement &p : layouts.layout(t).placements) {
      if (p.kind == Placement::Kind::VtableSlot)
        continue;
      std::string path = prefix + "." + p.name;
      out.push_back(path);
      TypeKind k = stub.types[p.type].kind;
      if (k == TypeKind::Struct || k == TypeKind::Class)
        collect_paths(stub, layouts, p.type, path, depth + 1, out);
    }
  }

  const GenType *find_type(const std::string &name) const {
    for (const GenType &t : types_)
      if (t.name == name)
        return &t;
    return nullptr;
  }

  // Bodies -----------------------------------------------------------------

  std::string fresh(FnState &fn) { return "v" + std::to_string(fn.next_var++); }

  void emit(FnState &fn, const std::string &line) {
    fn.lines.push_back("  " + line);
    --remaining_;
  }

  void label(FnState &fn, const std::string &name) {
    fn.lines.push_back(name + ":");
    fn.block = name;
  }

  std::string any_value(FnState &fn) {
    if (!fn.pool.empty() && chance(0.8))
      return pick(fn.pool);
    if (!globals_.empty() && chance(0.5))
      return pick(globals_);
    return "0";
  }

  std::string pointer(FnState &fn) {
    std::vector<std::string> cands = fn.pool;
    cands.insert(cands.end(), globals_.begin(), globals_.end());
    if (cands.empty())
      return allocate(fn);
    return pick(cands);
  }

  void define(FnState &fn, const std::string &v, const std::string &hint = "") {
    fn.pool.push_back(v);
    if (!hint.empty())
      fn.hint[v] = hint;
  }

  std::string allocate(FnState &fn) {
    std::string v = fresh(fn);
    if (!types_.empty() && chance(0.5)) {
      const GenType &t = pick(types_);
      std::uint64_t n = chance(0.15) ? t.size * 2 : t.size;
      emit(fn, v + " = alloca " + t.name + ", " + std::to_string(n));
      define(fn, v, t.name);
    } else if (chance(0.3)) {
      emit(fn, v + " = alloca ptr, 8");
      define(fn, v);
    } else {
      std::uint64_t n = types_.empty() ? 16 : std::max<std::uint64_t>(8, pick(types_).size);
      emit(fn, v + " = malloc " + std::to_string(n));
      define(fn, v);
    }
    return v;
  }

  std::vector<std::string> callable(const FnState &fn, bool helper) const {
    if (!helper)
      return helpers_;
    return {helpers_.begin(), helpers_.begin() + static_cast<std::ptrdiff_t>(fn.index)};
  }

  std::string call_args(FnState &fn, int n) {
    std::string s;
    for (int i = 0; i < n; ++i)
      s += (i ? ", " : "") + any_value(fn);
    return s;
  }

  void statement(FnState &fn, bool helper) {
    if (fn.pool.empty() || chance(0.12)) {
      allocate(fn);
      return;
    }
    if (!types_.empty() && chance(cfg_.p_cast)) {
      std::string src = pointer(fn);
      std::string ty;
      auto it = fn.hint.find(src);
      const GenType *from = it == fn.hint.end() ? nullptr : find_type(it->second);
      if (from && !from->first.empty() && chance(0.6)) {
        std::vector<std::string> same;
        for (const GenType &t : types_)
          if (t.first == from->first)
            same.push_back(t.name);
        ty = pick(same);
      }
      if (ty.empty())
        ty = pick(types_).name;
      std::string v = fresh(fn);
      emit(fn, v + " = cast " + ty + "*, " + src);
      define(fn, v, ty);
      return;
    }
    if (!types_.empty() && chance(cfg_.p_field)) {
      std::string src = pointer(fn);
      std::string v = fresh(fn);
      int r = uniform(0, 9);
      if (r < 6) {
        const GenType *t = nullptr;
        auto it = fn.hint.find(src);
        if (it != fn.hint.end() && chance(0.7))
          t = find_type(it->second);
        if (!t || t->paths.empty())
          t = &pick(types_);
        if (t->paths.empty()) {
          emit(fn, v + " = array i8, " + src + ", " + std::to_string(uniform(0, 3)));
        } else {
          emit(fn, v + " = field " + src + ", " + pick(t->paths));
        }
      } else if (r < 8) {
        static const std::vector<std::string> elems = {"i8", "i32", "i64", "ptr"};
        std::string ty = chance(0.6) ? pick(elems) : pick(types_).name;
        emit(fn, v + " = array " + ty + ", " + src + ", " + std::to_string(uniform(0, 3)));
      } else {
        std::string sel = pick(fn.pool);
        if (chance(0.5))
          emit(fn, v + " = field " + src + ", " + sel);
        else
          emit(fn, v + " = array " + pick(types_).name + ", " + src + ", " + sel);
      }
      define(fn, v);
      return;
    }
    if (chance(cfg_.p_store)) {
      std::string dst = pointer(fn);
      std::vector<std::string> fns = callable(fn, helper);
      std::string val = !fns.empty() && chance(0.15) ? pick(fns) : any_value(fn);
      emit(fn, "store " + dst + ", " + val);
      return;
    }
    std::vector<std::string> fns = callable(fn, helper);
    if (!fns.empty() && chance(cfg_.p_call)) {
      std::string v = fresh(fn);
      if (chance(0.7)) {
        std::string target = pick(fns);
        std::size_t idx = static_cast<std::size_t>(std::stoi(target.substr(1)));
        emit(fn, v + " = call " + target + "(" + call_args(fn, arity_[idx]) + ")");
      } else {
        std::string fp = chance(0.5) ? pick(fns) : pick(fn.pool);
        if (std::find(fns.begin(), fns.end(), fp) != fns.end()) {
          std::string f = fresh(fn);
          emit(fn, f + " = " + fp);
          fp = f;
        }
        emit(fn, v + " = call " + fp + "(" + call_args(fn, 2) + ")");
      }
      define(fn, v);
      return;
    }
    int r = uniform(0, 9);
    std::vector<const GenType *> classes;
    for (const GenType &t : types_)
      if (t.is_class)
        classes.push_back(&t);
    if (r < 2 && !classes.empty()) {
      const GenType *k = pick(classes);
      std::string src = pointer(fn);
      if (chance(0.5)) {
        emit(fn, "constructor " + k->name + ", " + src);
      } else {
        std::string v = fresh(fn);
        emit(fn, v + " = dyncast " + k->name + "*, " + src);
        define(fn, v, k->name);
      }
      return;
    }
    std::string v = fresh(fn);
    if (r < 8) {
      emit(fn, v + " = load " + pointer(fn));
    } else {
      emit(fn, v + " = " + pointer(fn));
      if (auto it = fn.hint.find(fn.pool.back()); it != fn.hint.end())
        fn.hint[v] = it->second;
    }
    define(fn, v);
  }

  // Statements cost at most two instructions.
  static constexpr int kStmt = 2;

  void straight(FnState &fn, int count, int reserve, bool helper) {
    for (int i = 0; i < count && remaining_ - kStmt >= reserve; ++i)
      statement(fn, helper);
  }

  void diamond(FnState &fn, int reserve, bool helper) {
    std::string id = std::to_string(fn.next_block++);
    std::string then_b = "then" + id, else_b = "else" + id, join_b = "join" + id;
    emit(fn, "br " + any_value(fn) + ", " + then_b + ", " + else_b);
    std::vector<std::string> before = fn.pool;
    auto hints = fn.hint;

    label(fn, then_b);
    straight(fn, uniform(1, 3), reserve + 6, helper);
    emit(fn, "jmp " + join_b);
    std::vector<std::string> then_pool = fn.pool;

    fn.pool = before;
    label(fn, else_b);
    straight(fn, uniform(0, 3), reserve + 4, helper);
    emit(fn, "jmp " + join_b);
    std::vector<std::string> else_pool = fn.pool;

    fn.pool = before;
    fn.hint = hints;
    label(fn, join_b);
    int nphi = std::min(2, remaining_ - reserve);
    for (int i = 0; i < nphi && !then_pool.empty() && !else_pool.empty(); ++i) {
      std::string v = fresh(fn);
      emit(fn, v + " = phi [" + pick(then_pool) + ", " + then_b + "], [" + pick(else_pool) + ", " +
                   else_b + "]");
      define(fn, v);
    }
  }

  void loop(FnState &fn, int reserve, bool helper) {
    std::string id = std::to_string(fn.next_block++);
    std::string head = "loop" + id, body_b = "body" + id, exit_b = "exit" + id;
    std::string init = pointer(fn);
    std::string x = fresh(fn), y = fresh(fn);
    emit(fn, "jmp " + head);
    std::string pred = fn.block;
    label(fn, head);
    emit(fn, x + " = phi [" + init + ", " + pred + "], [" + y + ", " + body_b + "]");
    emit(fn, "br " + any_value(fn) + ", " + body_b + ", " + exit_b);
    std::vector<std::string> before = fn.pool;
    before.push_back(x);
    fn.pool.push_back(x);

    label(fn, body_b);
    straight(fn, uniform(0, 2), reserve + 3, helper);
    int r = uniform(0, 2);
    std::vector<std::string> paths;
    for (const GenType &t : types_)
      paths.insert(paths.end(), t.paths.begin(), t.paths.end());
    if (r == 0 && !paths.empty())
      emit(fn, y + " = field " + x + ", " + pick(paths));
    else if (r == 1)
      emit(fn, y + " = load " + x);
    else
      emit(fn, y + " = " + pick(fn.pool));
    emit(fn, "jmp " + head);

    fn.pool = before;
    label(fn, exit_b);
  }

  void body(FnState &fn, int budget, bool helper) {
    int floor = remaining_ - budget; // instructions left for later functions
    int reserve = floor + 1;         // final ret
    while (remaining_ - kStmt >= reserve) {
      if (remaining_ - reserve >= 10 && chance(0.15)) {
        diamond(fn, reserve, helper);
        continue;
      }
      if (cfg_.allow_loops && remaining_ - reserve >= 10 && chance(0.12)) {
        loop(fn, reserve, helper);
        continue;
      }
      statement(fn, helper);
    }
    if (helper && (!fn.pool.empty()))
      emit(fn, "ret " + pick(fn.pool));
    else
      emit(fn, "ret");
  }

  const GenConfig &cfg_;
  std::mt19937_64 rng_;
  int remaining_ = 0;
  std::string type_text_;
  std::vector<GenType> types_;
  std::vector<std::string> globals_;
  std::vector<std::string> helpers_;
  std::vector<int> arity_;
};

} // namespace

std::string generate_text(const GenConfig &cfg) { return Generator(cfg).run(); }

Program generate(const GenConfig &cfg) { return parse_or_throw(generate_text(cfg)); }

} // namespace structflow
