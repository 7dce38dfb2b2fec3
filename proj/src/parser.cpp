#include "structflow/parser.hpp"

#include "structflow/cfg.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace structflow {

std::string_view diag_kind_name(DiagKind kind) {
  switch (kind) {
  case DiagKind::SyntaxError: return "SyntaxError";
  case DiagKind::ResolveError: return "ResolveError";
  case DiagKind::SsaViolation: return "SsaViolation";
  case DiagKind::CfgError: return "CfgError";
  }
  return "?";
}

std::string format_diagnostic(const Diagnostic &d) {
  std::ostringstream os;
  os << d.line << ":" << d.column << ": " << diag_kind_name(d.kind) << ": " << d.message;
  return os.str();
}

bool ParseResult::syntax_only() const {
  return std::all_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic &d) { return d.kind == DiagKind::SyntaxError; });
}

namespace {

//===----------------------------------------------------------------------===//
// Lexing
//===----------------------------------------------------------------------===//

struct Token {
  enum class Kind { Ident, Int, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  std::int64_t value = 0;
  int col = 0;
};

struct SyntaxFailure {
  int col;
  std::string message;
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    int col = static_cast<int>(i) + 1;
    if (c == ';')
      break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < line.size() && is_ident_char(line[j]))
        ++j;
      out.push_back({Token::Kind::Ident, std::string(line.substr(i, j - i)), 0, col});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
      std::size_t j = i + 1;
      while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j])))
        ++j;
      std::string text(line.substr(i, j - i));
      Token tok{Token::Kind::Int, text, 0, col};
      try {
        tok.value = std::stoll(text);
      } catch (const std::out_of_range &) {
        throw SyntaxFailure{col, "integer literal out of range"};
      }
      out.push_back(std::move(tok));
      i = j;
      continue;
    }
    if (std::string_view("=,(){}[]:*").find(c) != std::string_view::npos) {
      out.push_back({Token::Kind::Punct, std::string(1, c), 0, col});
      ++i;
      continue;
    }
    throw SyntaxFailure{col, std::string("unexpected character '") + c + "'"};
  }
  out.push_back({Token::Kind::End, "", 0, static_cast<int>(line.size()) + 1});
  return out;
}

class Cursor {
public:
  explicit Cursor(std::vector<Token> toks) : toks_(std::move(toks)) {}

  const Token &peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool is_punct(char c, std::size_t ahead = 0) const {
    const Token &t = peek(ahead);
    return t.kind == Token::Kind::Punct && t.text[0] == c;
  }
  bool is_ident(std::string_view s, std::size_t ahead = 0) const {
    const Token &t = peek(ahead);
    return t.kind == Token::Kind::Ident && t.text == s;
  }
  bool accept(char c) {
    if (!is_punct(c))
      return false;
    ++pos_;
    return true;
  }
  void expect(char c) {
    if (!accept(c))
      fail(std::string("expected '") + c + "'");
  }
  const Token &expect_ident(std::string_view what = "identifier") {
    if (peek().kind != Token::Kind::Ident)
      fail("expected " + std::string(what));
    return toks_[pos_++];
  }
  void expect_keyword(std::string_view kw) {
    if (!is_ident(kw))
      fail("expected '" + std::string(kw) + "'");
    ++pos_;
  }
  const Token &expect_int() {
    if (peek().kind != Token::Kind::Int)
      fail("expected integer");
    return toks_[pos_++];
  }
  const Token &next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  void expect_end() {
    if (!at_end())
      fail("unexpected '" + peek().text + "'");
  }
  [[noreturn]] void fail(std::string msg) const { throw SyntaxFailure{peek().col, std::move(msg)}; }

private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

//===----------------------------------------------------------------------===//
// Raw syntax tree
//===----------------------------------------------------------------------===//

struct RawTypeRef {
  std::string name;
  std::uint64_t count = 0;
  std::vector<RawTypeRef> elem; // one element for array refs
  int col = 0;

  bool is_array() const { return !elem.empty(); }
};

struct RawOperand {
  std::string name;
  bool is_int = false;
  std::int64_t value = 0;
  int col = 0;
};

struct RawInst {
  Opcode op = Opcode::Copy;
  std::string result;
  int result_col = 0;
  std::vector<RawOperand> operands;
  std::vector<std::pair<std::string, int>> blocks;
  std::optional<RawTypeRef> type;
  std::int64_t bytes = 0;
  std::string path;
  int path_col = 0;
  bool variable_index = false;
  std::int64_t index = 0;
  int line = 0;
  int col = 0;
};

struct RawBlock {
  std::string name;
  int line = 0;
  std::vector<RawInst> insts;
};

struct RawFunction {
  std::string name;
  int line = 0;
  std::vector<std::pair<std::string, int>> params;
  std::vector<RawBlock> blocks;
};

struct RawMember {
  std::string name;
  RawTypeRef type;
  int col = 0;
};

struct RawType {
  std::string name;
  int line = 0;
  int col = 0;
  TypeKind kind = TypeKind::Struct;
  std::vector<RawMember> members;
  std::vector<std::pair<std::string, int>> bases;
  bool declares_virtual = false;
  std::optional<RawTypeRef> array;
};

struct RawGlobal {
  std::string name;
  int line = 0;
  int col = 0;
  RawTypeRef type;
  std::int64_t bytes = 0;
};

struct RawProgram {
  std::vector<RawType> types;
  std::vector<RawGlobal> globals;
  std::vector<RawFunction> functions;
};

const std::unordered_set<std::string> &keywords() {
  static const std::unordered_set<std::string> kw = {
      "type", "global", "func", "struct", "class", "virtual", "alloca", "malloc",
      "cast", "load", "store", "phi", "array", "field", "constructor", "dyncast",
      "call", "ret", "br", "jmp"};
  return kw;
}

//===----------------------------------------------------------------------===//
// Line parser
//===----------------------------------------------------------------------===//

class LineParser {
public:
  explicit LineParser(std::vector<Diagnostic> &diags) : diags_(diags) {}

  RawProgram run(std::string_view text) {
    int lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos)
        end = text.size();
      ++lineno;
      std::string_view line = text.substr(start, end - start);
      if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);
      handle_line(line, lineno);
      if (end == text.size())
        break;
      start = end + 1;
    }
    if (current_)
      diags_.push_back({DiagKind::SyntaxError, lineno, 1,
                        "unterminated function '" + current_->name + "'"});
    if (current_) {
      prog_.functions.push_back(std::move(*current_));
      current_.reset();
    }
    return std::move(prog_);
  }

private:
  void handle_line(std::string_view line, int lineno) {
    try {
      Cursor cur(tokenize(line));
      if (cur.at_end())
        return;
      if (current_)
        function_line(cur, lineno);
      else
        top_line(cur, lineno);
    } catch (const SyntaxFailure &f) {
      diags_.push_back({DiagKind::SyntaxError, lineno, f.col, f.message});
    }
  }

  void top_line(Cursor &cur, int lineno) {
    if (cur.is_ident("type"))
      return type_decl(cur, lineno);
    if (cur.is_ident("global"))
      return global_decl(cur, lineno);
    if (cur.is_ident("func"))
      return func_header(cur, lineno);
    cur.fail("expected 'type', 'global' or 'func'");
  }

  RawTypeRef type_ref(Cursor &cur) {
    RawTypeRef ref;
    ref.col = cur.peek().col;
    if (cur.accept('[')) {
      const Token &n = cur.expect_int();
      if (n.value < 0)
        throw SyntaxFailure{n.col, "array count must be non-negative"};
      ref.count = static_cast<std::uint64_t>(n.value);
      cur.expect_keyword("x");
      ref.elem.push_back(type_ref(cur));
      cur.expect(']');
      return ref;
    }
    ref.name = cur.expect_ident("type name").text;
    return ref;
  }

  void type_decl(Cursor &cur, int lineno) {
    cur.next();
    RawType t;
    t.line = lineno;
    t.col = cur.peek().col;
    t.name = cur.expect_ident("type name").text;
    cur.expect('=');
    if (cur.is_punct('[')) {
      t.kind = TypeKind::Array;
      t.array = type_ref(cur);
      cur.expect_end();
      prog_.types.push_back(std::move(t));
      return;
    }
    if (cur.is_ident("struct")) {
      cur.next();
      t.kind = TypeKind::Struct;
    } else if (cur.is_ident("class")) {
      cur.next();
      t.kind = TypeKind::Class;
      cur.expect('(');
      if (!cur.accept(')')) {
        do {
          const Token &b = cur.expect_ident("base class");
          t.bases.emplace_back(b.text, b.col);
        } while (cur.accept(','));
        cur.expect(')');
      }
      if (cur.is_ident("virtual")) {
        cur.next();
        t.declares_virtual = true;
      }
    } else {
      cur.fail("expected 'struct', 'class' or '['");
    }
    cur.expect('{');
    if (!cur.accept('}')) {
      do {
        RawMember m;
        m.col = cur.peek().col;
        m.name = cur.expect_ident("member name").text;
        cur.expect(':');
        m.type = type_ref(cur);
        t.members.push_back(std::move(m));
      } while (cur.accept(','));
      cur.expect('}');
    }
    cur.expect_end();
    prog_.types.push_back(std::move(t));
  }

  void global_decl(Cursor &cur, int lineno) {
    cur.next();
    RawGlobal g;
    g.line = lineno;
    g.col = cur.peek().col;
    g.name = cur.expect_ident("global name").text;
    cur.expect('=');
    cur.expect_keyword("alloca");
    g.type = type_ref(cur);
    cur.expect(',');
    g.bytes = cur.expect_int().value;
    cur.expect_end();
    prog_.globals.push_back(std::move(g));
  }

  void func_header(Cursor &cur, int lineno) {
    cur.next();
    RawFunction f;
    f.line = lineno;
    f.name = cur.expect_ident("function name").text;
    cur.expect('(');
    if (!cur.accept(')')) {
      do {
        const Token &p = cur.expect_ident("parameter");
        f.params.emplace_back(p.text, p.col);
      } while (cur.accept(','));
      cur.expect(')');
    }
    cur.expect('{');
    cur.expect_end();
    current_ = std::move(f);
  }

  void function_line(Cursor &cur, int lineno) {
    if (cur.is_punct('}')) {
      cur.next();
      cur.expect_end();
      prog_.functions.push_back(std::move(*current_));
      current_.reset();
      return;
    }
    if (cur.peek().kind == Token::Kind::Ident && cur.is_punct(':', 1) &&
        cur.peek(2).kind == Token::Kind::End) {
      RawBlock b;
      b.name = cur.next().text;
      b.line = lineno;
      current_->blocks.push_back(std::move(b));
      return;
    }
    if (current_->blocks.empty())
      cur.fail("instruction outside of a block");
    RawInst inst = instruction(cur);
    inst.line = lineno;
    current_->blocks.back().insts.push_back(std::move(inst));
  }

  RawOperand operand(Cursor &cur) {
    const Token &t = cur.peek();
    RawOperand op;
    op.col = t.col;
    if (t.kind == Token::Kind::Int) {
      op.is_int = true;
      op.value = t.value;
      cur.next();
      return op;
    }
    if (t.kind != Token::Kind::Ident)
      cur.fail("expected operand");
    if (t.text.find('.') != std::string::npos)
      cur.fail("'.' is not allowed in a variable name");
    op.name = t.text;
    cur.next();
    return op;
  }

  std::pair<std::string, int> block_ref(Cursor &cur) {
    const Token &t = cur.expect_ident("block label");
    return {t.text, t.col};
  }

  void pointer_type(Cursor &cur, RawInst &inst) {
    inst.type = type_ref(cur);
    cur.expect('*');
  }

  RawInst instruction(Cursor &cur) {
    RawInst inst;
    inst.col = cur.peek().col;
    if (cur.peek().kind == Token::Kind::Ident && cur.is_punct('=', 1)) {
      const Token &res = cur.next();
      if (keywords().count(res.text))
        throw SyntaxFailure{res.col, "'" + res.text + "' is a reserved word"};
      if (res.text.find('.') != std::string::npos)
        throw SyntaxFailure{res.col, "'.' is not allowed in a variable name"};
      inst.result = res.text;
      inst.result_col = res.col;
      cur.next();
      defining(cur, inst);
    } else {
      effect(cur, inst);
    }
    cur.expect_end();
    return inst;
  }

  void call_tail(Cursor &cur, RawInst &inst) {
    inst.op = Opcode::Call;
    inst.operands.push_back(operand(cur));
    cur.expect('(');
    if (!cur.accept(')')) {
      do
        inst.operands.push_back(operand(cur));
      while (cur.accept(','));
      cur.expect(')');
    }
  }

  void defining(Cursor &cur, RawInst &inst) {
    const Token &kw = cur.peek();
    bool keyword = kw.kind == Token::Kind::Ident && keywords().count(kw.text);
    if (!keyword) {
      inst.op = Opcode::Copy;
      inst.operands.push_back(operand(cur));
      return;
    }
    std::string word = kw.text;
    cur.next();
    if (word == "alloca") {
      inst.op = Opcode::Alloca;
      inst.type = type_ref(cur);
      cur.expect(',');
      inst.bytes = cur.expect_int().value;
    } else if (word == "malloc") {
      inst.op = Opcode::Malloc;
      inst.bytes = cur.expect_int().value;
    } else if (word == "cast" || word == "dyncast") {
      inst.op = word == "cast" ? Opcode::Cast : Opcode::DynCast;
      pointer_type(cur, inst);
      cur.expect(',');
      inst.operands.push_back(operand(cur));
    } else if (word == "load") {
      inst.op = Opcode::Load;
      inst.operands.push_back(operand(cur));
    } else if (word == "phi") {
      inst.op = Opcode::Phi;
      do {
        cur.expect('[');
        inst.operands.push_back(operand(cur));
        cur.expect(',');
        inst.blocks.push_back(block_ref(cur));
        cur.expect(']');
      } while (cur.accept(','));
    } else if (word == "array") {
      inst.op = Opcode::Array;
      inst.type = type_ref(cur);
      cur.expect(',');
      inst.operands.push_back(operand(cur));
      cur.expect(',');
      if (cur.peek().kind == Token::Kind::Int) {
        const Token &c = cur.next();
        if (c.value < 0)
          throw SyntaxFailure{c.col, "array index must be non-negative"};
        inst.index = c.value;
      } else {
        inst.variable_index = true;
        inst.operands.push_back(operand(cur));
      }
    } else if (word == "field") {
      inst.op = Opcode::Field;
      inst.operands.push_back(operand(cur));
      cur.expect(',');
      const Token &sel = cur.expect_ident("field path or selector variable");
      if (sel.text.find('.') != std::string::npos) {
        inst.path = sel.text;
        inst.path_col = sel.col;
      } else {
        inst.variable_index = true;
        inst.operands.push_back(RawOperand{sel.text, false, 0, sel.col});
      }
    } else if (word == "call") {
      call_tail(cur, inst);
    } else {
      throw SyntaxFailure{kw.col, "'" + word + "' does not produce a value"};
    }
  }

  void effect(Cursor &cur, RawInst &inst) {
    const Token &kw = cur.peek();
    if (kw.kind != Token::Kind::Ident)
      cur.fail("expected instruction");
    std::string word = kw.text;
    cur.next();
    if (word == "store") {
      inst.op = Opcode::Store;
      inst.operands.push_back(operand(cur));
      cur.expect(',');
      inst.operands.push_back(operand(cur));
    } else if (word == "constructor") {
      inst.op = Opcode::Constructor;
      inst.type = type_ref(cur);
      cur.expect(',');
      inst.operands.push_back(operand(cur));
    } else if (word == "call") {
      call_tail(cur, inst);
    } else if (word == "ret") {
      inst.op = Opcode::Ret;
      if (!cur.at_end())
        inst.operands.push_back(operand(cur));
    } else if (word == "br") {
      inst.op = Opcode::Br;
      inst.operands.push_back(operand(cur));
      cur.expect(',');
      inst.blocks.push_back(block_ref(cur));
      cur.expect(',');
      inst.blocks.push_back(block_ref(cur));
    } else if (word == "jmp") {
      inst.op = Opcode::Jmp;
      inst.blocks.push_back(block_ref(cur));
    } else {
      throw SyntaxFailure{kw.col, "unknown instruction '" + word + "'"};
    }
  }

  std::vector<Diagnostic> &diags_;
  RawProgram prog_;
  std::optional<RawFunction> current_;
};

//===----------------------------------------------------------------------===//
// Resolution and validation
//===----------------------------------------------------------------------===//

class Resolver {
public:
  Resolver(std::vector<Diagnostic> &diags) : diags_(diags) {}

  std::optional<Program> run(const RawProgram &raw) {
    resolve_types(raw);
    declare_functions(raw);
    resolve_globals(raw);
    for (std::size_t f = 0; f < raw.functions.size(); ++f)
      resolve_function(raw.functions[f], static_cast<FuncId>(f));
    if (!prog_.find_function("main"))
      error(DiagKind::ResolveError, 1, 1, "program has no 'main' function");
    else
      prog_.main = *prog_.find_function("main");
    if (!diags_.empty())
      return std::nullopt;
    prog_.index_labels();
    return std::move(prog_);
  }

private:
  void error(DiagKind kind, int line, int col, std::string msg) {
    diags_.push_back({kind, line, col, std::move(msg)});
  }

  // Types ------------------------------------------------------------------

  std::optional<TypeId> resolve_ref(const RawTypeRef &ref, int line) {
    if (ref.is_array()) {
      if (ref.count < 1) {
        error(DiagKind::ResolveError, line, ref.col, "array count must be at least 1");
        return std::nullopt;
      }
      auto elem = resolve_ref(ref.elem.front(), line);
      if (!elem)
        return std::nullopt;
      return prog_.types.array_of(*elem, ref.count);
    }
    auto id = prog_.types.lookup(ref.name);
    if (!id)
      error(DiagKind::ResolveError, line, ref.col, "unknown type '" + ref.name + "'");
    return id;
  }

  void resolve_types(const RawProgram &raw) {
    std::vector<TypeId> ids(raw.types.size(), kNone);
    for (std::size_t i = 0; i < raw.types.size(); ++i) {
      const RawType &t = raw.types[i];
      if (prog_.types.lookup(t.name)) {
        error(DiagKind::ResolveError, t.line, t.col, "type '" + t.name + "' is already defined");
        continue;
      }
      TypeDef def;
      def.name = t.name;
      def.kind = t.kind;
      def.declares_virtual = t.declares_virtual;
      ids[i] = prog_.types.add(std::move(def));
    }
    for (std::size_t i = 0; i < raw.types.size(); ++i) {
      if (ids[i] == kNone)
        continue;
      const RawType &t = raw.types[i];
      if (t.kind == TypeKind::Array) {
        const RawTypeRef &arr = *t.array;
        if (!arr.is_array()) {
          // `type N = [..]` always parses as an array ref.
          continue;
        }
        if (arr.count < 1) {
          error(DiagKind::ResolveError, t.line, arr.col, "array count must be at least 1");
          continue;
        }
        auto elem = resolve_ref(arr.elem.front(), t.line);
        if (!elem)
          continue;
        TypeDef &def = prog_.types.mutable_def(ids[i]);
        def.element = *elem;
        def.count = arr.count;
        continue;
      }
      std::vector<Member> members;
      std::set<std::string> seen;
      for (const RawMember &m : t.members) {
        if (!seen.insert(m.name).second)
          error(DiagKind::ResolveError, t.line, m.col, "duplicate member '" + m.name + "'");
        auto ty = resolve_ref(m.type, t.line);
        if (ty)
          members.push_back({m.name, *ty});
      }
      std::vector<TypeId> bases;
      for (const auto &[bname, bcol] : t.bases) {
        auto b = prog_.types.lookup(bname);
        if (!b) {
          error(DiagKind::ResolveError, t.line, bcol, "unknown base class '" + bname + "'");
          continue;
        }
        if (!prog_.types.is_class(*b)) {
          error(DiagKind::ResolveError, t.line, bcol, "base '" + bname + "' is not a class");
          continue;
        }
        if (std::find(bases.begin(), bases.end(), *b) != bases.end()) {
          error(DiagKind::ResolveError, t.line, bcol, "duplicate direct base '" + bname + "'");
          continue;
        }
        bases.push_back(*b);
      }
      TypeDef &def = prog_.types.mutable_def(ids[i]);
      def.members = std::move(members);
      def.bases = std::move(bases);
    }
    check_containment_cycles(raw, ids);
  }

  void check_containment_cycles(const RawProgram &raw, const std::vector<TypeId> &ids) {
    const TypeTable &types = prog_.types;
    std::vector<int> state(types.size(), 0);
    std::vector<bool> reported(types.size(), false);
    std::function<bool(TypeId)> visit = [&](TypeId t) -> bool {
      if (state[t] == 2)
        return false;
      if (state[t] == 1)
        return true;
      state[t] = 1;
      const TypeDef &def = types[t];
      std::vector<TypeId> contained;
      for (const Member &m : def.members)
        contained.push_back(m.type);
      for (TypeId b : def.bases)
        contained.push_back(b);
      if (def.kind == TypeKind::Array && def.element != kNone)
        contained.push_back(def.element);
      bool cyc = false;
      for (TypeId c : contained)
        if (c < state.size() && visit(c))
          cyc = true;
      state[t] = 2;
      return cyc;
    };
    for (std::size_t i = 0; i < raw.types.size(); ++i) {
      if (ids[i] == kNone)
        continue;
      std::fill(state.begin(), state.end(), 0);
      state.resize(types.size(), 0);
      if (visit(ids[i]) && !reported[ids[i]]) {
        reported[ids[i]] = true;
        error(DiagKind::ResolveError, raw.types[i].line, raw.types[i].col,
              "type '" + raw.types[i].name + "' contains itself by value");
      }
    }
  }

  // Globals and functions --------------------------------------------------

  void declare_functions(const RawProgram &raw) {
    for (const RawFunction &rf : raw.functions) {
      if (function_ids_.count(rf.name)) {
        error(DiagKind::ResolveError, rf.line, 1, "function '" + rf.name + "' is already defined");
        function_ids_.emplace(rf.name + "#dup" + std::to_string(rf.line), 0);
      } else {
        function_ids_.emplace(rf.name, static_cast<FuncId>(prog_.functions.size()));
      }
      Function f;
      f.name = rf.name;
      prog_.functions.push_back(std::move(f));
      arity_.push_back(rf.params.size());
    }
  }

  void resolve_globals(const RawProgram &raw) {
    for (const RawGlobal &g : raw.globals) {
      if (global_ids_.count(g.name) || function_ids_.count(g.name)) {
        error(DiagKind::ResolveError, g.line, g.col, "name '" + g.name + "' is already defined");
        continue;
      }
      auto ty = resolve_ref(g.type, g.line);
      if (g.bytes < 1)
        error(DiagKind::ResolveError, g.line, g.col, "allocation size must be at least 1 byte");
      VarId v = static_cast<VarId>(prog_.vars.size());
      Instruction inst;
      inst.label = next_label_++;
      inst.op = Opcode::Alloca;
      inst.result = v;
      inst.type = ty.value_or(0);
      inst.bytes = static_cast<std::uint64_t>(std::max<std::int64_t>(g.bytes, 0));
      inst.line = g.line;
      prog_.vars.push_back({g.name, kNone, inst.label, false});
      global_ids_.emplace(g.name, v);
      prog_.globals.push_back(std::move(inst));
    }
  }

  struct Scope {
    std::unordered_map<std::string, VarId> locals;
  };

  std::optional<Operand> resolve_operand(const RawOperand &op, const Scope &scope, int line,
                                         bool allow_const) {
    if (op.is_int) {
      if (!allow_const) {
        error(DiagKind::ResolveError, line, op.col, "a constant cannot be used as a pointer here");
        return std::nullopt;
      }
      return Operand::constant(op.value);
    }
    if (auto it = scope.locals.find(op.name); it != scope.locals.end())
      return Operand::var(it->second);
    if (auto it = global_ids_.find(op.name); it != global_ids_.end())
      return Operand::var(it->second);
    if (auto it = function_ids_.find(op.name); it != function_ids_.end())
      return Operand::func(it->second);
    error(DiagKind::ResolveError, line, op.col, "unknown name '" + op.name + "'");
    return std::nullopt;
  }

  bool name_is_module_level(const std::string &name) const {
    return global_ids_.count(name) || function_ids_.count(name);
  }

  std::optional<std::vector<std::string>> resolve_field_path(const RawInst &ri, TypeId &root) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      std::size_t dot = ri.path.find('.', start);
      parts.push_back(ri.path.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
      if (dot == std::string::npos)
        break;
      start = dot + 1;
    }
    auto ty = prog_.types.lookup(parts.front());
    if (!ty) {
      error(DiagKind::ResolveError, ri.line, ri.path_col, "unknown type '" + parts.front() + "'");
      return std::nullopt;
    }
    root = *ty;
    TypeId cur = *ty;
    std::vector<std::string> path(parts.begin() + 1, parts.end());
    for (const std::string &name : path) {
      const TypeDef &def = prog_.types[cur];
      if (name.empty() || (def.kind != TypeKind::Struct && def.kind != TypeKind::Class)) {
        error(DiagKind::ResolveError, ri.line, ri.path_col,
              "no field '" + name + "' in '" + def.name + "'");
        return std::nullopt;
      }
      auto mem = std::find_if(def.members.begin(), def.members.end(),
                              [&](const Member &m) { return m.name == name; });
      if (mem != def.members.end()) {
        cur = mem->type;
        continue;
      }
      auto base = std::find_if(def.bases.begin(), def.bases.end(),
                               [&](TypeId b) { return prog_.types[b].name == name; });
      if (base != def.bases.end()) {
        cur = *base;
        continue;
      }
      error(DiagKind::ResolveError, ri.line, ri.path_col,
            "no field '" + name + "' in '" + def.name + "'");
      return std::nullopt;
    }
    return path;
  }

  void resolve_function(const RawFunction &rf, FuncId fid) {
    Function &fn = prog_.functions[fid];
    Scope scope;
    for (const auto &[pname, pcol] : rf.params) {
      if (scope.locals.count(pname)) {
        error(DiagKind::SsaViolation, rf.line, pcol, "parameter '" + pname + "' is defined twice");
        continue;
      }
      if (name_is_module_level(pname))
        error(DiagKind::ResolveError, rf.line, pcol, "parameter '" + pname + "' shadows a global name");
      VarId v = static_cast<VarId>(prog_.vars.size());
      prog_.vars.push_back({pname, fid, kNone, true});
      scope.locals.emplace(pname, v);
      fn.params.push_back(v);
    }
    if (rf.blocks.empty()) {
      error(DiagKind::CfgError, rf.line, 1, "function '" + rf.name + "' has no blocks");
      return;
    }

    // Block labels.
    std::unordered_map<std::string, BlockId> block_ids;
    for (const RawBlock &rb : rf.blocks) {
      if (block_ids.count(rb.name)) {
        error(DiagKind::CfgError, rb.line, 1, "block '" + rb.name + "' is defined twice");
        continue;
      }
      block_ids.emplace(rb.name, static_cast<BlockId>(block_ids.size()));
    }
    if (block_ids.size() != rf.blocks.size())
      return;

    // Definitions, so uses may precede definitions textually (loops).
    std::vector<std::vector<Label>> labels(rf.blocks.size());
    for (std::size_t b = 0; b < rf.blocks.size(); ++b) {
      for (const RawInst &ri : rf.blocks[b].insts) {
        Label l = next_label_++;
        labels[b].push_back(l);
        if (ri.result.empty())
          continue;
        if (scope.locals.count(ri.result)) {
          error(DiagKind::SsaViolation, ri.line, ri.result_col,
                "variable '" + ri.result + "' is defined more than once");
          continue;
        }
        if (name_is_module_level(ri.result)) {
          error(DiagKind::ResolveError, ri.line, ri.result_col,
                "variable '" + ri.result + "' shadows a global name");
          continue;
        }
        VarId v = static_cast<VarId>(prog_.vars.size());
        prog_.vars.push_back({ri.result, fid, l, false});
        scope.locals.emplace(ri.result, v);
      }
    }

    for (std::size_t b = 0; b < rf.blocks.size(); ++b) {
      const RawBlock &rb = rf.blocks[b];
      Block block;
      block.name = rb.name;
      for (std::size_t i = 0; i < rb.insts.size(); ++i)
        block.insts.push_back(resolve_inst(rb.insts[i], labels[b][i], scope, block_ids));
      fn.blocks.push_back(std::move(block));
    }
    validate_cfg(rf, fn);
  }

  Instruction resolve_inst(const RawInst &ri, Label label, const Scope &scope,
                           const std::unordered_map<std::string, BlockId> &block_ids) {
    Instruction inst;
    inst.label = label;
    inst.op = ri.op;
    inst.line = ri.line;
    inst.bytes = static_cast<std::uint64_t>(std::max<std::int64_t>(ri.bytes, 0));
    inst.index = ri.index;
    inst.variable_index = ri.variable_index;
    if (!ri.result.empty()) {
      auto it = scope.locals.find(ri.result);
      if (it != scope.locals.end() && prog_.vars[it->second].def == label)
        inst.result = it->second;
    }
    if (ri.type) {
      auto ty = resolve_ref(*ri.type, ri.line);
      inst.type = ty.value_or(0);
    }

    auto pointer_operand = [&](std::size_t i) {
      if (auto op = resolve_operand(ri.operands[i], scope, ri.line, false))
        inst.operands.push_back(*op);
      else
        inst.operands.push_back(Operand::constant(0));
    };
    auto value_operand = [&](std::size_t i) {
      if (auto op = resolve_operand(ri.operands[i], scope, ri.line, true))
        inst.operands.push_back(*op);
      else
        inst.operands.push_back(Operand::constant(0));
    };

    switch (ri.op) {
    case Opcode::Alloca:
    case Opcode::Malloc:
      if (ri.bytes < 1)
        error(DiagKind::ResolveError, ri.line, ri.col, "allocation size must be at least 1 byte");
      break;
    case Opcode::Copy:
      value_operand(0);
      break;
    case Opcode::Cast:
    case Opcode::Load:
      pointer_operand(0);
      break;
    case Opcode::DynCast:
      pointer_operand(0);
      if (ri.type && inst.type < prog_.types.size() && !prog_.types.is_class(inst.type))
        error(DiagKind::ResolveError, ri.line, ri.type->col, "dyncast target must be a class");
      break;
    case Opcode::Constructor:
      pointer_operand(0);
      break;
    case Opcode::Store:
      pointer_operand(0);
      value_operand(1);
      break;
    case Opcode::Phi:
      for (std::size_t i = 0; i < ri.operands.size(); ++i)
        value_operand(i);
      break;
    case Opcode::Array:
      pointer_operand(0);
      if (ri.variable_index)
        value_operand(1);
      break;
    case Opcode::Field:
      pointer_operand(0);
      if (ri.variable_index) {
        value_operand(1);
      } else {
        TypeId root = 0;
        if (auto path = resolve_field_path(ri, root)) {
          inst.type = root;
          inst.field_path = std::move(*path);
        }
      }
      break;
    case Opcode::Call: {
      pointer_operand(0);
      for (std::size_t i = 1; i < ri.operands.size(); ++i)
        value_operand(i);
      const Operand &callee = inst.operands.front();
      if (callee.kind == Operand::Kind::Func && arity_[callee.id] != ri.operands.size() - 1)
        error(DiagKind::ResolveError, ri.line, ri.operands.front().col,
              "call to '" + prog_.functions[callee.id].name + "' passes " +
                  std::to_string(ri.operands.size() - 1) + " arguments, expected " +
                  std::to_string(arity_[callee.id]));
      break;
    }
    case Opcode::Ret:
      if (!ri.operands.empty())
        value_operand(0);
      break;
    case Opcode::Br:
      value_operand(0);
      break;
    case Opcode::Jmp:
      break;
    }

    for (const auto &[name, col] : ri.blocks) {
      auto it = block_ids.find(name);
      if (it == block_ids.end()) {
        error(DiagKind::CfgError, ri.line, col, "unknown block '" + name + "'");
        inst.blocks.push_back(0);
      } else {
        inst.blocks.push_back(it->second);
      }
    }
    return inst;
  }

  void validate_cfg(const RawFunction &rf, const Function &fn) {
    std::size_t before = diags_.size();
    for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
      const Block &blk = fn.blocks[b];
      const RawBlock &rb = rf.blocks[b];
      if (blk.insts.empty() || !blk.insts.back().is_terminator()) {
        error(DiagKind::CfgError, rb.line, 1, "block '" + blk.name + "' does not end in br, jmp or ret");
      }
      bool seen_non_phi = false;
      for (std::size_t i = 0; i < blk.insts.size(); ++i) {
        const Instruction &inst = blk.insts[i];
        if (inst.is_terminator() && i + 1 != blk.insts.size())
          error(DiagKind::CfgError, inst.line, 1, "terminator in the middle of block '" + blk.name + "'");
        if (inst.op == Opcode::Phi) {
          if (seen_non_phi)
            error(DiagKind::CfgError, inst.line, 1, "phi after a non-phi instruction");
          if (b == 0)
            error(DiagKind::CfgError, inst.line, 1, "entry block cannot contain phi");
        } else {
          seen_non_phi = true;
        }
      }
    }
    if (diags_.size() != before)
      return;

    Cfg cfg = build_cfg(fn);
    if (!cfg.preds[0].empty())
      error(DiagKind::CfgError, rf.blocks[0].line, 1,
            "entry block '" + fn.blocks[0].name + "' cannot be a branch target");
    for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
      for (const Instruction &inst : fn.blocks[b].insts) {
        if (inst.op != Opcode::Phi)
          continue;
        std::vector<BlockId> incoming = inst.blocks;
        std::vector<BlockId> preds = cfg.preds[b];
        std::sort(incoming.begin(), incoming.end());
        std::sort(preds.begin(), preds.end());
        if (incoming != preds)
          error(DiagKind::CfgError, inst.line, 1,
                "phi must name exactly one incoming value per predecessor of '" +
                    fn.blocks[b].name + "'");
      }
    }
    std::vector<bool> reach = reachable_blocks(cfg);
    for (std::size_t b = 0; b < fn.blocks.size(); ++b)
      if (!reach[b])
        error(DiagKind::CfgError, rf.blocks[b].line, 1,
              "block '" + fn.blocks[b].name + "' is unreachable");
    if (diags_.size() == before)
      check_dominance(fn, cfg);
  }

  // Every use of a local must be dominated by its definition; a phi operand
  // must be available at the end of its incoming block.
  void check_dominance(const Function &fn, const Cfg &cfg) {
    DominatorTree dom(cfg);
    std::unordered_map<VarId, std::pair<BlockId, std::size_t>> def;
    for (BlockId b = 0; b < fn.blocks.size(); ++b)
      for (std::size_t i = 0; i < fn.blocks[b].insts.size(); ++i)
        if (fn.blocks[b].insts[i].result != kNone)
          def[fn.blocks[b].insts[i].result] = {b, i};
    for (BlockId b = 0; b < fn.blocks.size(); ++b) {
      for (std::size_t i = 0; i < fn.blocks[b].insts.size(); ++i) {
        const Instruction &inst = fn.blocks[b].insts[i];
        for (std::size_t k = 0; k < inst.operands.size(); ++k) {
          const Operand &op = inst.operands[k];
          if (!op.is_var())
            continue;
          auto it = def.find(op.id);
          if (it == def.end())
            continue; // parameter or global
          auto [db, di] = it->second;
          bool ok;
          if (inst.op == Opcode::Phi)
            ok = dom.dominates(db, inst.blocks[k]);
          else
            ok = db == b ? di < i : dom.dominates(db, b);
          if (!ok)
            error(DiagKind::SsaViolation, inst.line, 1,
                  "use of '" + prog_.vars[op.id].name + "' is not dominated by its definition");
        }
      }
    }
  }

  std::vector<Diagnostic> &diags_;
  Program prog_;
  std::unordered_map<std::string, FuncId> function_ids_;
  std::unordered_map<std::string, VarId> global_ids_;
  std::vector<std::size_t> arity_;
  Label next_label_ = 0;
};

} // namespace

ParseResult parse_program(std::string_view text) {
  ParseResult result;
  LineParser lines(result.diagnostics);
  RawProgram raw = lines.run(text);
  if (!result.diagnostics.empty())
    return result;
  Resolver resolver(result.diagnostics);
  result.program = resolver.run(raw);
  return result;
}

Program parse_or_throw(std::string_view text) {
  ParseResult r = parse_program(text);
  if (!r.ok()) {
    std::string msg;
    for (const Diagnostic &d : r.diagnostics)
      msg += format_diagnostic(d) + "\n";
    throw std::runtime_error(msg);
  }
  return std::move(*r.program);
}

} // namespace structflow
