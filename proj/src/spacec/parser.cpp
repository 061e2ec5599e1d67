#include <algorithm>
#include <cctype>

#include "synchronic/error.hpp"
#include "synchronic/spacec/ast.hpp"
#include "synchronic/util/text.hpp"

namespace synchronic::spacec {

const Module* Program::find(std::string_view name) const {
  for (const Module& m : modules) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

namespace {

enum class Tok { Ident, Int, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t line = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

  bool accept(std::string_view punct) {
    if (tok_.kind == Tok::Punct && tok_.text == punct) {
      advance();
      return true;
    }
    return false;
  }

  bool accept_keyword(std::string_view word) {
    if (tok_.kind == Tok::Ident && tok_.text == word) {
      advance();
      return true;
    }
    return false;
  }

  void expect(std::string_view punct) {
    if (!accept(punct)) fail("expected '" + std::string(punct) + "'");
  }

  std::string identifier() {
    if (tok_.kind != Tok::Ident) fail("expected a name");
    return take().text;
  }

  std::uint64_t integer() {
    if (tok_.kind != Tok::Int) fail("expected an integer");
    const auto v = text::parse_uint(tok_.text);
    if (!v) fail("integer literal too large");
    advance();
    return *v;
  }

  /// Raw text between the '{' lookahead and the next '}'; both are consumed.
  std::pair<std::string, std::size_t> raw_block() {
    const std::size_t line = tok_.line;
    const std::size_t open = tok_start_ + 1;
    const std::size_t close = src_.find('}', open);
    if (close == std::string_view::npos) fail("unterminated interstring block");
    std::string body(src_.substr(open, close - open));
    pos_ = close + 1;
    line_ = line + static_cast<std::size_t>(std::count(body.begin(), body.end(), '\n'));
    advance();
    return {std::move(body), line};
  }

  [[noreturn]] void fail(const std::string& msg) const {
    const std::string near = tok_.kind == Tok::End ? "end of input" : "'" + tok_.text + "'";
    throw ParseError(msg + " near " + near, tok_.line);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#' || (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/')) {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  void advance() {
    skip_space_and_comments();
    tok_start_ = pos_;
    tok_.line = line_;
    if (pos_ >= src_.size()) {
      tok_.kind = Tok::End;
      tok_.text.clear();
      return;
    }
    const char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
      tok_.kind = Tok::Ident;
      tok_.text = std::string(src_.substr(start, pos_ - start));
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      tok_.kind = Tok::Int;
      tok_.text = std::string(src_.substr(start, pos_ - start));
    } else if (std::string_view("(){},;:=").find(c) != std::string_view::npos) {
      tok_.kind = Tok::Punct;
      tok_.text = std::string(1, c);
      ++pos_;
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", line_);
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t tok_start_ = 0;
  Token tok_;
};

unsigned parse_type(Lexer& lx) {
  const Token t = lx.peek();
  const std::string name = lx.identifier();
  if (name.rfind("uint", 0) != 0 || name.size() == 4) {
    throw ParseError("expected a type uint<N>, got '" + name + "'", t.line);
  }
  const auto width = text::parse_uint(std::string_view(name).substr(4));
  if (!width || *width == 0 || *width > 64) throw ParseError("bad width in type '" + name + "'", t.line);
  return static_cast<unsigned>(*width);
}

VarDecl parse_decl(Lexer& lx) {
  VarDecl d;
  d.line = lx.peek().line;
  d.name = lx.identifier();
  lx.expect(":");
  d.width = parse_type(lx);
  return d;
}

std::vector<VarDecl> parse_decl_list(Lexer& lx) {
  std::vector<VarDecl> out{parse_decl(lx)};
  while (lx.accept(",")) out.push_back(parse_decl(lx));
  return out;
}

std::vector<Stmt> parse_block(Lexer& lx);

Arg parse_arg(Lexer& lx) {
  Arg a;
  if (lx.peek().kind == Tok::Int) {
    a.literal = lx.integer();
  } else {
    a.name = lx.identifier();
  }
  return a;
}

void parse_call_tail(Lexer& lx, Stmt& s) {
  lx.expect("(");
  if (!lx.accept(")")) {
    do {
      s.args.push_back(parse_arg(lx));
    } while (lx.accept(","));
    lx.expect(")");
  }
  lx.expect(";");
}

// Appends one or two statements (a declaring assignment becomes Decl + Call).
void parse_stmt(Lexer& lx, std::vector<Stmt>& out) {
  Stmt s;
  s.line = lx.peek().line;
  if (lx.accept_keyword("var")) {
    s.kind = Stmt::Kind::Decl;
    s.decls = parse_decl_list(lx);
    lx.expect(";");
  } else if (lx.accept_keyword("seq")) {
    s.kind = Stmt::Kind::Seq;
    s.body = parse_block(lx);
  } else if (lx.accept_keyword("par")) {
    s.kind = Stmt::Kind::Par;
    s.body = parse_block(lx);
  } else if (lx.accept_keyword("if")) {
    s.kind = Stmt::Kind::If;
    lx.expect("(");
    s.cond = lx.identifier();
    lx.expect(")");
    s.body = parse_block(lx);
    if (lx.accept_keyword("else")) s.else_body = parse_block(lx);
  } else if (lx.accept_keyword("repeat")) {
    s.kind = Stmt::Kind::Repeat;
    if (lx.peek().kind == Tok::Int) {
      s.count = lx.integer();
    } else {
      s.count_name = lx.identifier();
    }
    s.unroll = lx.accept_keyword("unroll");
    s.body = parse_block(lx);
  } else if (lx.accept_keyword("interstring")) {
    s.kind = Stmt::Kind::Layers;
    if (lx.peek().kind != Tok::Punct || lx.peek().text != "{") lx.fail("expected '{'");
    auto [body, line] = lx.raw_block();
    try {
      s.layers = interstring::parse_interstring(body);
    } catch (const ParseError& e) {
      throw ParseError(e.detail(), line + (e.line() ? e.line() - 1 : 0));
    }
  } else {
    // call, with optional targets: `a, b:uint4 = f(x, 3);` or `f(x);`
    s.kind = Stmt::Kind::Call;
    const std::string first = lx.identifier();
    if (lx.peek().kind == Tok::Punct && lx.peek().text == "(") {
      s.callee = first;
      parse_call_tail(lx, s);
      out.push_back(std::move(s));
      return;
    }
    Stmt decl;
    decl.kind = Stmt::Kind::Decl;
    decl.line = s.line;
    std::string name = first;
    while (true) {
      if (lx.accept(":")) decl.decls.push_back(VarDecl{name, parse_type(lx), s.line});
      s.outs.push_back(name);
      if (!lx.accept(",")) break;
      name = lx.identifier();
    }
    lx.expect("=");
    s.callee = lx.identifier();
    parse_call_tail(lx, s);
    if (!decl.decls.empty()) out.push_back(std::move(decl));
    out.push_back(std::move(s));
    return;
  }
  out.push_back(std::move(s));
}

std::vector<Stmt> parse_block(Lexer& lx) {
  lx.expect("{");
  std::vector<Stmt> body;
  while (!lx.accept("}")) {
    if (lx.peek().kind == Tok::End) lx.fail("unterminated block");
    parse_stmt(lx, body);
  }
  return body;
}

Module parse_module(Lexer& lx) {
  Module m;
  m.line = lx.peek().line;
  m.name = lx.identifier();
  lx.expect("(");
  if (lx.accept_keyword("in")) m.ins = parse_decl_list(lx);
  const bool separated = lx.accept(";");
  if ((separated || m.ins.empty()) && lx.accept_keyword("out")) m.outs = parse_decl_list(lx);
  lx.expect(")");
  m.body = parse_block(lx);
  return m;
}

}  // namespace

Program parse_space(std::string_view source) {
  Lexer lx(source);
  Program prog;
  while (lx.peek().kind != Tok::End) {
    if (lx.accept_keyword("const")) {
      const std::size_t line = lx.peek().line;
      const std::string name = lx.identifier();
      lx.expect("=");
      const std::uint64_t value = lx.integer();
      lx.expect(";");
      if (!prog.consts.emplace(name, value).second) throw ParseError("duplicate const '" + name + "'", line);
    } else if (lx.accept_keyword("module")) {
      prog.modules.push_back(parse_module(lx));
    } else {
      lx.fail("expected 'module' or 'const'");
    }
  }
  return prog;
}

}  // namespace synchronic::spacec
