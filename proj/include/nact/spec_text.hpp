#pragma once

#include <cctype>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "nact/errors.hpp"
#include "nact/spec.hpp"

namespace nact {

// Declarative spec document, one protocol per document:
//
//   protocol minip
//
//   schema ping_frame wire 0x01 {
//     data: bytes[65535]
//   }
//
//   component ping_frame_rules {
//     layer frame
//     subject ping_frame
//     event ping_frame.ping.handle
//     require f.data = "ping"
//     require f.data.end = 4
//   }
//
//   guarantee ping_frame_rules -> client_packet_rules
//
// Requirement expressions mirror the handler-snippet style: `=`, `~=`, `<`,
// `<=`, `>`, `>=`, `&`, `|`, `~`, `exists I. I < <bound> & (<body>)`,
// `f.<field>`, `f.<field>.end`, `f.<field>.value(<index>)`, decimal or 0x
// integers, `"ascii"` or `x"68656c6c6f"` byte strings. `#` starts a comment.

namespace spec_text_detail {

struct Token {
  enum class Kind { ident, integer, str, hexstr, punct, eof };
  Kind kind = Kind::eof;
  std::string text;
  std::int64_t value = 0;
  Bytes bytes;
  int line = 0;
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

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("line " + std::to_string(tok_.line) + ": " + msg);
  }

 private:
  void advance() {
    skip_ws();
    tok_ = Token{};
    tok_.line = line_;
    if (pos_ >= src_.size()) return;
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      tok_.kind = Token::Kind::ident;
      tok_.text = std::string(src_.substr(start, pos_ - start));
      if (tok_.text == "x" && pos_ < src_.size() && src_[pos_] == '"') {
        lex_string();
        auto parsed = from_hex(std::string(tok_.bytes.begin(), tok_.bytes.end()));
        if (!parsed) throw ParseError("line " + std::to_string(line_) + ": bad hex literal");
        tok_.kind = Token::Kind::hexstr;
        tok_.bytes = *parsed;
      }
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      int base = 10;
      if (c == '0' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X')) {
        base = 16;
        pos_ += 2;
        start = pos_;
      }
      while (pos_ < src_.size() &&
             std::isxdigit(static_cast<unsigned char>(src_[pos_])))
        ++pos_;
      tok_.kind = Token::Kind::integer;
      tok_.text = std::string(src_.substr(start, pos_ - start));
      tok_.value = std::stoll(tok_.text, nullptr, base);
      return;
    }
    if (c == '"') {
      lex_string();
      tok_.kind = Token::Kind::str;
      return;
    }
    // multi-char punct
    for (const char* p : {"->", "~=", "!=", "<=", ">="}) {
      if (src_.substr(pos_).starts_with(p)) {
        tok_.kind = Token::Kind::punct;
        tok_.text = p;
        pos_ += 2;
        return;
      }
    }
    tok_.kind = Token::Kind::punct;
    tok_.text = std::string(1, c);
    ++pos_;
  }

  void lex_string() {
    // pos_ at opening quote
    ++pos_;
    Bytes out;
    while (pos_ < src_.size() && src_[pos_] != '"') {
      if (src_[pos_] == '\n') throw ParseError("line " + std::to_string(line_) + ": unterminated string");
      out.push_back(static_cast<std::uint8_t>(src_[pos_]));
      ++pos_;
    }
    if (pos_ >= src_.size()) throw ParseError("line " + std::to_string(line_) + ": unterminated string");
    ++pos_;
    tok_.bytes = std::move(out);
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  ProtocolSpec parse_document() {
    expect_ident("protocol");
    spec_.name = parse_name(true);
    if (peek_ident("composite")) {
      lex_.take();
      spec_.composite = true;
    }
    while (lex_.peek().kind != Token::Kind::eof) {
      if (peek_ident("schema")) {
        parse_schema();
      } else if (peek_ident("component")) {
        parse_component();
      } else if (peek_ident("guarantee")) {
        lex_.take();
        GuaranteeEdge g;
        g.producer = parse_name();
        expect_punct("->");
        g.consumer = parse_name();
        spec_.guarantees.push_back(std::move(g));
      } else if (peek_ident("bridge")) {
        lex_.take();
        BridgeRule b;
        b.from_event = parse_name();
        expect_punct("->");
        b.to_component = parse_name();
        spec_.bridges.push_back(std::move(b));
      } else {
        lex_.fail("expected schema, component, guarantee, or bridge");
      }
    }
    return spec_;
  }

  // Parses a single requirement expression against an already-built spec.
  static Predicate parse_expression(std::string_view text, const ProtocolSpec& spec,
                                    const std::string& subject_kind) {
    Parser p(text);
    p.spec_ = spec;
    const SchemaKind* k = p.spec_.find_kind(subject_kind);
    if (!k) throw ParseError("unknown subject kind '" + subject_kind + "'");
    Predicate out = p.parse_or(*k);
    if (p.lex_.peek().kind != Token::Kind::eof) p.lex_.fail("trailing input after expression");
    return out;
  }

 private:
  bool peek_ident(std::string_view word) const {
    return lex_.peek().kind == Token::Kind::ident && lex_.peek().text == word;
  }
  void expect_ident(std::string_view word) {
    if (!peek_ident(word)) lex_.fail("expected '" + std::string(word) + "'");
    lex_.take();
  }
  bool peek_punct(std::string_view p) const {
    return lex_.peek().kind == Token::Kind::punct && lex_.peek().text == p;
  }
  void expect_punct(std::string_view p) {
    if (!peek_punct(p)) lex_.fail("expected '" + std::string(p) + "'");
    lex_.take();
  }
  std::string take_ident() {
    if (lex_.peek().kind != Token::Kind::ident) lex_.fail("expected identifier");
    return lex_.take().text;
  }

  // Dotted identifier; protocol names may additionally join parts with '+'.
  std::string parse_name(bool allow_plus = false) {
    std::string name = take_ident();
    while (true) {
      if (peek_punct(".")) {
        lex_.take();
        name += "." + take_ident();
      } else if (allow_plus && peek_punct("+")) {
        lex_.take();
        name += "+" + take_ident();
      } else {
        break;
      }
    }
    return name;
  }

  void parse_schema() {
    lex_.take();
    SchemaKind kind;
    kind.name = parse_name();
    if (peek_ident("wire")) {
      lex_.take();
      if (lex_.peek().kind != Token::Kind::integer) lex_.fail("expected wire type byte");
      std::int64_t v = lex_.take().value;
      if (v < 0 || v > 255) lex_.fail("wire type byte out of range");
      kind.wire_type = static_cast<std::uint8_t>(v);
    }
    expect_punct("{");
    while (!peek_punct("}")) {
      FieldDecl f;
      f.name = take_ident();
      expect_punct(":");
      std::string ty = take_ident();
      if (ty == "bytes") {
        f.type = FieldDecl::Type::bytes;
        expect_punct("[");
        if (lex_.peek().kind != Token::Kind::integer) lex_.fail("expected max length");
        f.max_len = static_cast<std::uint32_t>(lex_.take().value);
        expect_punct("]");
      } else if (ty.starts_with("uint")) {
        f.type = FieldDecl::Type::uint;
        f.bits = std::stoi(ty.substr(4));
      } else {
        lex_.fail("unknown field type '" + ty + "'");
      }
      kind.fields.push_back(std::move(f));
    }
    lex_.take();
    spec_.schema.push_back(std::move(kind));
  }

  void parse_component() {
    lex_.take();
    SpecComponent c;
    c.name = parse_name();
    expect_punct("{");
    const SchemaKind* subject = nullptr;
    while (!peek_punct("}")) {
      std::string head = take_ident();
      if (head == "layer") {
        std::string l = take_ident();
        if (l == "frame") c.layer = Layer::frame;
        else if (l == "packet") c.layer = Layer::packet;
        else if (l == "shim") c.layer = Layer::shim;
        else lex_.fail("unknown layer '" + l + "'");
      } else if (head == "subject") {
        c.subject_kind = parse_name();
        subject = spec_.find_kind(c.subject_kind);
        if (!subject) lex_.fail("unknown subject kind '" + c.subject_kind + "'");
      } else if (head == "event") {
        c.event = parse_name();
      } else if (head == "direction") {
        std::string d = take_ident();
        if (d == "any") c.direction = Direction::any;
        else if (d == "client_to_server") c.direction = Direction::client_to_server;
        else if (d == "server_to_client") c.direction = Direction::server_to_client;
        else lex_.fail("unknown direction '" + d + "'");
      } else if (head == "override") {
        c.generation_override = true;
      } else if (head == "require") {
        if (!subject) lex_.fail("require before subject declaration");
        c.requirements.push_back(parse_or(*subject));
      } else if (head == "timing") {
        expect_ident("after");
        TimingRule t;
        t.after_event = parse_name();
        expect_ident("within");
        if (lex_.peek().kind != Token::Kind::integer) lex_.fail("expected deadline ms");
        t.deadline_ms = lex_.take().value;
        if (peek_ident("idle")) {
          lex_.take();
          t.idle = true;
        }
        c.timing = std::move(t);
      } else {
        lex_.fail("unknown component item '" + head + "'");
      }
    }
    lex_.take();
    if (c.subject_kind.empty()) lex_.fail("component '" + c.name + "' missing subject");
    if (c.event.empty()) lex_.fail("component '" + c.name + "' missing event");
    spec_.components.push_back(std::move(c));
  }

  // --- expressions ---------------------------------------------------------

  Predicate parse_or(const SchemaKind& subject) {
    std::vector<Predicate> terms{parse_and(subject)};
    while (peek_punct("|")) {
      lex_.take();
      terms.push_back(parse_and(subject));
    }
    return terms.size() == 1 ? terms[0] : Predicate::disj(std::move(terms));
  }

  Predicate parse_and(const SchemaKind& subject) {
    std::vector<Predicate> terms{parse_unary(subject)};
    while (peek_punct("&")) {
      lex_.take();
      terms.push_back(parse_unary(subject));
    }
    return terms.size() == 1 ? terms[0] : Predicate::conj(std::move(terms));
  }

  Predicate parse_unary(const SchemaKind& subject) {
    if (peek_punct("~") || peek_punct("!")) {
      lex_.take();
      return Predicate::neg(parse_unary(subject));
    }
    if (peek_ident("exists")) return parse_exists(subject);
    if (peek_ident("true")) {
      lex_.take();
      return Predicate::truth();
    }
    if (peek_punct("(")) {
      // Could be a grouped predicate or a parenthesized arithmetic term; try
      // the predicate reading first and fall back on comparison parsing.
      std::size_t depth = 0;
      // Peek-based disambiguation is messy with a one-token lexer; parse a
      // term and see whether a comparison operator follows.
      lex_.take();
      Predicate inner = parse_or(subject);
      expect_punct(")");
      return inner;
    }
    return parse_comparison(subject);
  }

  Predicate parse_exists(const SchemaKind& subject) {
    lex_.take();
    std::string var = take_ident();
    expect_punct(".");
    vars_.push_back(var);
    Predicate body = parse_or(subject);
    vars_.pop_back();
    // The snippet form opens with the range bound: exists I. I < <bound> & ...
    if (body.kind() == Predicate::Kind::conj && !body.children().empty()) {
      const Predicate& first = body.children()[0];
      if (first.kind() == Predicate::Kind::cmp && first.op() == CmpOp::lt &&
          first.lhs().kind() == Expr::Kind::var && first.lhs().var_name() == var) {
        std::vector<Predicate> rest(body.children().begin() + 1, body.children().end());
        Predicate inner = rest.size() == 1 ? rest[0] : Predicate::conj(std::move(rest));
        return Predicate::exists(var, first.rhs(), std::move(inner));
      }
    }
    if (body.kind() == Predicate::Kind::cmp && body.op() == CmpOp::lt &&
        body.lhs().kind() == Expr::Kind::var && body.lhs().var_name() == var) {
      return Predicate::exists(var, body.rhs(), Predicate::truth());
    }
    lex_.fail("existential must open with its range bound: exists " + var + ". " + var +
              " < <bound> & ...");
  }

  Predicate parse_comparison(const SchemaKind& subject) {
    Expr lhs = parse_sum(subject);
    CmpOp op;
    if (peek_punct("=")) op = CmpOp::eq;
    else if (peek_punct("~=") || peek_punct("!=")) op = CmpOp::ne;
    else if (peek_punct("<")) op = CmpOp::lt;
    else if (peek_punct("<=")) op = CmpOp::le;
    else if (peek_punct(">")) op = CmpOp::gt;
    else if (peek_punct(">=")) op = CmpOp::ge;
    else {
      lex_.fail("expected comparison operator");
    }
    lex_.take();
    Expr rhs = parse_sum(subject);
    try {
      return Predicate::cmp(op, std::move(lhs), std::move(rhs));
    } catch (const TypeMismatchError& e) {
      lex_.fail(e.what());
    }
  }

  Expr parse_sum(const SchemaKind& subject) {
    Expr e = parse_product(subject);
    while (peek_punct("+") || peek_punct("-")) {
      bool add = lex_.take().text == "+";
      Expr rhs = parse_product(subject);
      e = Expr::arith(add ? Expr::Kind::add : Expr::Kind::sub, std::move(e), std::move(rhs));
    }
    return e;
  }

  Expr parse_product(const SchemaKind& subject) {
    Expr e = parse_primary(subject);
    while (peek_punct("*")) {
      lex_.take();
      Expr rhs = parse_primary(subject);
      e = Expr::arith(Expr::Kind::mul, std::move(e), std::move(rhs));
    }
    return e;
  }

  Expr parse_primary(const SchemaKind& subject) {
    const Token& t = lex_.peek();
    if (t.kind == Token::Kind::integer) return Expr::int_lit(lex_.take().value);
    if (t.kind == Token::Kind::str || t.kind == Token::Kind::hexstr)
      return Expr::bytes_lit(lex_.take().bytes);
    if (peek_punct("(")) {
      lex_.take();
      Expr e = parse_sum(subject);
      expect_punct(")");
      return e;
    }
    if (t.kind == Token::Kind::ident) {
      if (t.text == "f") return parse_field_ref(subject);
      for (const auto& v : vars_)
        if (v == t.text) {
          lex_.take();
          return Expr::var(v);
        }
      lex_.fail("unknown name '" + t.text + "' (fields are referenced as f.<name>)");
    }
    lex_.fail("expected a term");
  }

  Expr parse_field_ref(const SchemaKind& subject) {
    lex_.take();  // 'f'
    expect_punct(".");
    std::string field = take_ident();
    const FieldDecl* decl = subject.find(field);
    if (!decl) lex_.fail("unresolved field path f." + field + " on kind '" + subject.name + "'");
    FieldPath path{subject.name, field, false};
    if (peek_punct(".")) {
      lex_.take();
      std::string acc = take_ident();
      if (acc == "end") {
        if (decl->type != FieldDecl::Type::bytes)
          lex_.fail(".end applies to byte-string fields only");
        return Expr::field_len(std::move(path));
      }
      if (acc == "value") {
        if (decl->type != FieldDecl::Type::bytes)
          lex_.fail(".value applies to byte-string fields only");
        expect_punct("(");
        Expr idx = parse_sum(subject);
        expect_punct(")");
        return Expr::field_byte_at(std::move(path), std::move(idx));
      }
      lex_.fail("unknown accessor '." + acc + "'");
    }
    if (decl->type == FieldDecl::Type::bytes) return Expr::field_bytes(std::move(path));
    return Expr::field_int(std::move(path));
  }

  Lexer lex_;
  ProtocolSpec spec_;
  std::vector<std::string> vars_;
};

}  // namespace spec_text_detail

inline ProtocolSpec parse_spec(std::string_view text) {
  spec_text_detail::Parser p(text);
  ProtocolSpec spec = p.parse_document();
  auto diags = spec.validate();
  if (!diags.empty()) throw ParseError("spec '" + spec.name + "': " + diags.front());
  return spec;
}

inline Predicate parse_predicate(std::string_view text, const ProtocolSpec& spec,
                                 const std::string& subject_kind) {
  return spec_text_detail::Parser::parse_expression(text, spec, subject_kind);
}

inline std::string serialize_spec(const ProtocolSpec& spec) {
  std::ostringstream os;
  os << "protocol " << spec.name;
  if (spec.composite) os << " composite";
  os << "\n";
  for (const auto& k : spec.schema) {
    os << "\nschema " << k.name;
    if (k.wire_type) os << " wire 0x" << to_hex({*k.wire_type});
    os << " {\n";
    for (const auto& f : k.fields) {
      os << "  " << f.name << ": ";
      if (f.type == FieldDecl::Type::bytes)
        os << "bytes[" << f.max_len << "]";
      else
        os << "uint" << f.bits;
      os << "\n";
    }
    os << "}\n";
  }
  for (const auto& c : spec.components) {
    os << "\ncomponent " << c.name << " {\n";
    os << "  layer " << layer_text(c.layer) << "\n";
    os << "  subject " << c.subject_kind << "\n";
    os << "  event " << c.event << "\n";
    if (c.direction != Direction::any)
      os << "  direction " << direction_text(c.direction) << "\n";
    if (c.generation_override) os << "  override\n";
    for (const auto& r : c.requirements) os << "  require " << r.to_string() << "\n";
    if (c.timing) {
      os << "  timing after " << c.timing->after_event << " within "
         << c.timing->deadline_ms;
      if (c.timing->idle) os << " idle";
      os << "\n";
    }
    os << "}\n";
  }
  if (!spec.guarantees.empty()) os << "\n";
  for (const auto& g : spec.guarantees)
    os << "guarantee " << g.producer << " -> " << g.consumer << "\n";
  for (const auto& b : spec.bridges)
    os << "bridge " << b.from_event << " -> " << b.to_component << "\n";
  return os.str();
}

inline bool spec_equal(const ProtocolSpec& a, const ProtocolSpec& b) {
  return serialize_spec(a) == serialize_spec(b);
}

}  // namespace nact
