#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "nact/bytes.hpp"
#include "nact/errors.hpp"

namespace nact {

// ---------------------------------------------------------------------------
// Field paths
// ---------------------------------------------------------------------------

// Names a field of a frame/packet kind. `length` selects the `.end` accessor
// of a byte-string field; indexed access `f.data.value(I)` is an expression
// node holding the index term.
struct FieldPath {
  std::string kind;
  std::string field;
  bool length = false;

  friend bool operator==(const FieldPath& a, const FieldPath& b) {
    return a.kind == b.kind && a.field == b.field && a.length == b.length;
  }
  friend bool operator<(const FieldPath& a, const FieldPath& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.field != b.field) return a.field < b.field;
    return a.length < b.length;
  }

  std::string to_string() const {
    std::string s = "f." + field;
    if (length) s += ".end";
    return s;
  }
};

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

// Terms of the closed predicate grammar. Integer terms: literals, field
// lengths, integer fields, indexed byte access, the existential's bound
// variable, and +,-,* arithmetic. Byte terms: literals and whole byte-string
// fields. Well-typedness is enforced at construction.
class Expr {
 public:
  enum class Kind {
    int_lit,
    bytes_lit,
    field_bytes,   // whole byte-string field
    field_len,     // f.<field>.end
    field_int,     // integer field
    field_byte_at, // f.<field>.value(<index expr>)
    var,           // bound variable of an existential
    add,
    sub,
    mul,
  };
  enum class Type { integer, bytes };

  static Expr int_lit(std::int64_t v) {
    Expr e(Kind::int_lit);
    e.n_->int_lit = v;
    return e;
  }
  static Expr bytes_lit(Bytes v) {
    Expr e(Kind::bytes_lit);
    e.n_->bytes_lit = std::move(v);
    return e;
  }
  static Expr field_bytes(FieldPath p) {
    Expr e(Kind::field_bytes);
    e.n_->path = std::move(p);
    return e;
  }
  static Expr field_len(FieldPath p) {
    Expr e(Kind::field_len);
    e.n_->path = std::move(p);
    e.n_->path.length = true;
    return e;
  }
  static Expr field_int(FieldPath p) {
    Expr e(Kind::field_int);
    e.n_->path = std::move(p);
    return e;
  }
  static Expr field_byte_at(FieldPath p, Expr index) {
    if (index.type() != Type::integer)
      throw TypeMismatchError("byte index must be an integer expression");
    Expr e(Kind::field_byte_at);
    e.n_->path = std::move(p);
    e.n_->a = index.n_;
    return e;
  }
  static Expr var(std::string name) {
    Expr e(Kind::var);
    e.n_->var = std::move(name);
    return e;
  }
  static Expr arith(Kind k, Expr lhs, Expr rhs) {
    if (k != Kind::add && k != Kind::sub && k != Kind::mul)
      throw TypeMismatchError("not an arithmetic kind");
    if (lhs.type() != Type::integer || rhs.type() != Type::integer)
      throw TypeMismatchError("arithmetic over non-integer terms");
    Expr e(k);
    e.n_->a = lhs.n_;
    e.n_->b = rhs.n_;
    return e;
  }

  Kind kind() const { return n_->kind; }
  Type type() const {
    switch (n_->kind) {
      case Kind::bytes_lit:
      case Kind::field_bytes:
        return Type::bytes;
      default:
        return Type::integer;
    }
  }

  std::int64_t int_value() const { return n_->int_lit; }
  const Bytes& bytes_value() const { return n_->bytes_lit; }
  const FieldPath& path() const { return n_->path; }
  const std::string& var_name() const { return n_->var; }
  Expr lhs() const { return Expr(n_->a); }
  Expr rhs() const { return Expr(n_->b); }

  void collect_paths(std::vector<FieldPath>& out) const {
    switch (n_->kind) {
      case Kind::field_bytes:
      case Kind::field_len:
      case Kind::field_int:
        out.push_back(n_->path);
        break;
      case Kind::field_byte_at:
        out.push_back(n_->path);
        lhs().collect_paths(out);
        break;
      case Kind::add:
      case Kind::sub:
      case Kind::mul:
        lhs().collect_paths(out);
        rhs().collect_paths(out);
        break;
      default:
        break;
    }
  }

  std::string to_string() const {
    switch (n_->kind) {
      case Kind::int_lit: {
        std::ostringstream os;
        os << n_->int_lit;
        return os.str();
      }
      case Kind::bytes_lit: {
        // ASCII-printable literals render as strings, others as hex.
        bool printable = !n_->bytes_lit.empty();
        for (auto b : n_->bytes_lit)
          if (b < 0x20 || b > 0x7e || b == '"') printable = false;
        if (printable)
          return "\"" + std::string(n_->bytes_lit.begin(), n_->bytes_lit.end()) + "\"";
        return "x\"" + to_hex(n_->bytes_lit) + "\"";
      }
      case Kind::field_bytes:
        return "f." + n_->path.field;
      case Kind::field_len:
        return "f." + n_->path.field + ".end";
      case Kind::field_int:
        return "f." + n_->path.field;
      case Kind::field_byte_at:
        return "f." + n_->path.field + ".value(" + lhs().to_string() + ")";
      case Kind::var:
        return n_->var;
      case Kind::add:
        return "(" + lhs().to_string() + " + " + rhs().to_string() + ")";
      case Kind::sub:
        return "(" + lhs().to_string() + " - " + rhs().to_string() + ")";
      case Kind::mul:
        return "(" + lhs().to_string() + " * " + rhs().to_string() + ")";
    }
    return "?";
  }

 private:
  struct Node {
    Kind kind;
    std::int64_t int_lit = 0;
    Bytes bytes_lit;
    FieldPath path;
    std::string var;
    std::shared_ptr<const Node> a, b;
  };

  explicit Expr(Kind k) : n_(std::make_shared<Node>()) {
    const_cast<Node*>(n_.get())->kind = k;
  }
  explicit Expr(std::shared_ptr<const Node> n) : n_(std::move(n)) {}

  std::shared_ptr<const Node> n_;
};

// ---------------------------------------------------------------------------
// Predicates
// ---------------------------------------------------------------------------

enum class CmpOp { eq, ne, lt, le, gt, ge };

inline const char* cmp_op_text(CmpOp op) {
  switch (op) {
    case CmpOp::eq: return "=";
    case CmpOp::ne: return "~=";
    case CmpOp::lt: return "<";
    case CmpOp::le: return "<=";
    case CmpOp::gt: return ">";
    case CmpOp::ge: return ">=";
  }
  return "?";
}

class Predicate {
 public:
  enum class Kind { truth, cmp, conj, disj, neg, exists };

  Predicate() : Predicate(make(Kind::truth)) {}

  static Predicate truth() { return Predicate(make(Kind::truth)); }

  static Predicate cmp(CmpOp op, Expr lhs, Expr rhs) {
    if (lhs.type() != rhs.type())
      throw TypeMismatchError("comparison relates " +
                              std::string(lhs.type() == Expr::Type::bytes ? "bytes" : "integer") +
                              " to " +
                              std::string(rhs.type() == Expr::Type::bytes ? "bytes" : "integer"));
    if (lhs.type() == Expr::Type::bytes && op != CmpOp::eq && op != CmpOp::ne)
      throw TypeMismatchError("byte strings admit only = and ~=");
    auto n = make(Kind::cmp);
    n->op = op;
    n->lhs = lhs;
    n->rhs = rhs;
    return Predicate(n);
  }

  static Predicate conj(std::vector<Predicate> terms) {
    auto n = make(Kind::conj);
    n->children = std::move(terms);
    return Predicate(n);
  }
  static Predicate disj(std::vector<Predicate> terms) {
    auto n = make(Kind::disj);
    n->children = std::move(terms);
    return Predicate(n);
  }
  static Predicate neg(Predicate p) {
    auto n = make(Kind::neg);
    n->children = {std::move(p)};
    return Predicate(n);
  }
  // exists VAR . VAR < bound & body  (range is [0, bound), scanned exhaustively)
  static Predicate exists(std::string var, Expr bound, Predicate body) {
    if (bound.type() != Expr::Type::integer)
      throw TypeMismatchError("existential bound must be an integer expression");
    auto n = make(Kind::exists);
    n->var = std::move(var);
    n->bound = bound;
    n->children = {std::move(body)};
    return Predicate(n);
  }

  Kind kind() const { return n_->kind; }
  CmpOp op() const { return n_->op; }
  const Expr& lhs() const { return *n_->lhs; }
  const Expr& rhs() const { return *n_->rhs; }
  const std::vector<Predicate>& children() const { return n_->children; }
  const std::string& var_name() const { return n_->var; }
  const Expr& bound() const { return *n_->bound; }

  void collect_paths(std::vector<FieldPath>& out) const {
    switch (n_->kind) {
      case Kind::truth:
        break;
      case Kind::cmp:
        n_->lhs->collect_paths(out);
        n_->rhs->collect_paths(out);
        break;
      case Kind::exists:
        n_->bound->collect_paths(out);
        n_->children[0].collect_paths(out);
        break;
      default:
        for (const auto& c : n_->children) c.collect_paths(out);
    }
  }

  std::vector<FieldPath> paths() const {
    std::vector<FieldPath> out;
    collect_paths(out);
    return out;
  }

  std::string to_string() const {
    switch (n_->kind) {
      case Kind::truth:
        return "true";
      case Kind::cmp:
        return n_->lhs->to_string() + " " + cmp_op_text(n_->op) + " " + n_->rhs->to_string();
      case Kind::conj: {
        std::string s;
        for (std::size_t i = 0; i < n_->children.size(); ++i) {
          if (i) s += " & ";
          s += wrap(n_->children[i], Kind::conj);
        }
        return n_->children.empty() ? "true" : s;
      }
      case Kind::disj: {
        std::string s;
        for (std::size_t i = 0; i < n_->children.size(); ++i) {
          if (i) s += " | ";
          s += wrap(n_->children[i], Kind::disj);
        }
        return n_->children.empty() ? "true" : s;
      }
      case Kind::neg:
        return "~(" + n_->children[0].to_string() + ")";
      case Kind::exists:
        return "exists " + n_->var + ". " + n_->var + " < " + n_->bound->to_string() +
               " & (" + n_->children[0].to_string() + ")";
    }
    return "?";
  }

  friend bool operator==(const Predicate& a, const Predicate& b) {
    return a.to_string() == b.to_string();
  }

 private:
  struct Node {
    Kind kind = Kind::truth;
    CmpOp op = CmpOp::eq;
    std::optional<Expr> lhs, rhs, bound;
    std::string var;
    std::vector<Predicate> children;
  };

  static std::string wrap(const Predicate& p, Kind parent) {
    bool needs = (parent == Kind::conj && (p.kind() == Kind::disj || p.kind() == Kind::exists)) ||
                 (parent == Kind::disj && p.kind() == Kind::exists);
    return needs ? "(" + p.to_string() + ")" : p.to_string();
  }

  static std::shared_ptr<Node> make(Kind k) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    return n;
  }
  explicit Predicate(std::shared_ptr<Node> n) : n_(std::move(n)) {}

  std::shared_ptr<const Node> n_;
};

// ---------------------------------------------------------------------------
// Subjects (concrete frames / packets)
// ---------------------------------------------------------------------------

using FieldValue = std::variant<Bytes, std::uint64_t>;

struct Subject {
  std::string kind;
  std::map<std::string, FieldValue> fields;

  static Subject of(std::string kind) {
    Subject s;
    s.kind = std::move(kind);
    return s;
  }
  Subject& set(const std::string& field, Bytes v) {
    fields[field] = std::move(v);
    return *this;
  }
  Subject& set(const std::string& field, std::uint64_t v) {
    fields[field] = v;
    return *this;
  }

  const FieldValue* find(const std::string& field) const {
    auto it = fields.find(field);
    return it == fields.end() ? nullptr : &it->second;
  }

  // Canonical snapshot, hex dumped; violations carry it for reproduction.
  std::string snapshot() const {
    std::string s = kind + "{";
    bool first = true;
    for (const auto& [name, value] : fields) {
      if (!first) s += ", ";
      first = false;
      s += name + "=";
      if (std::holds_alternative<Bytes>(value))
        s += "x" + to_hex(std::get<Bytes>(value));
      else
        s += std::to_string(std::get<std::uint64_t>(value));
    }
    return s + "}";
  }

  friend bool operator==(const Subject& a, const Subject& b) {
    return a.kind == b.kind && a.fields == b.fields;
  }
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

// Byte offsets can never exceed the 16-bit wire length bound by much; the
// scan cap keeps hostile bounds (e.g. literal 100000) finite while staying
// beyond every reachable field length.
constexpr std::int64_t max_exists_scan = 1 << 17;

struct EvalEnv {
  const Subject* subject;
  std::map<std::string, std::int64_t> vars;
};

inline const FieldValue& resolve(const FieldPath& p, const EvalEnv& env) {
  if (p.kind != env.subject->kind)
    throw UnresolvedFieldError("field path targets kind '" + p.kind +
                               "' but subject is '" + env.subject->kind + "'");
  const FieldValue* v = env.subject->find(p.field);
  if (!v)
    throw UnresolvedFieldError("no field '" + p.field + "' on subject kind '" +
                               env.subject->kind + "'");
  return *v;
}

inline const Bytes& resolve_bytes(const FieldPath& p, const EvalEnv& env) {
  const FieldValue& v = resolve(p, env);
  if (!std::holds_alternative<Bytes>(v))
    throw TypeMismatchError("field '" + p.field + "' is not a byte string");
  return std::get<Bytes>(v);
}

// Integer evaluation. nullopt marks an out-of-range indexed byte access;
// any comparison over a missing operand is false (closed-world rule mirrored
// by the test oracles).
inline std::optional<std::int64_t> eval_int(const Expr& e, const EvalEnv& env) {
  switch (e.kind()) {
    case Expr::Kind::int_lit:
      return e.int_value();
    case Expr::Kind::field_len:
      return static_cast<std::int64_t>(resolve_bytes(e.path(), env).size());
    case Expr::Kind::field_int: {
      const FieldValue& v = resolve(e.path(), env);
      if (!std::holds_alternative<std::uint64_t>(v))
        throw TypeMismatchError("field '" + e.path().field + "' is not an integer");
      return static_cast<std::int64_t>(std::get<std::uint64_t>(v));
    }
    case Expr::Kind::field_byte_at: {
      const Bytes& data = resolve_bytes(e.path(), env);
      auto idx = eval_int(e.lhs(), env);
      if (!idx) return std::nullopt;
      if (*idx < 0 || static_cast<std::size_t>(*idx) >= data.size()) return std::nullopt;
      return static_cast<std::int64_t>(data[static_cast<std::size_t>(*idx)]);
    }
    case Expr::Kind::var: {
      auto it = env.vars.find(e.var_name());
      if (it == env.vars.end())
        throw UnresolvedFieldError("unbound variable '" + e.var_name() + "'");
      return it->second;
    }
    case Expr::Kind::add:
    case Expr::Kind::sub:
    case Expr::Kind::mul: {
      auto a = eval_int(e.lhs(), env);
      auto b = eval_int(e.rhs(), env);
      if (!a || !b) return std::nullopt;
      if (e.kind() == Expr::Kind::add) return *a + *b;
      if (e.kind() == Expr::Kind::sub) return *a - *b;
      return *a * *b;
    }
    default:
      throw TypeMismatchError("byte-valued term in integer position");
  }
}

inline bool eval_pred(const Predicate& p, EvalEnv& env) {
  switch (p.kind()) {
    case Predicate::Kind::truth:
      return true;
    case Predicate::Kind::cmp: {
      if (p.lhs().type() == Expr::Type::bytes) {
        auto bytes_of = [&](const Expr& e) -> const Bytes& {
          return e.kind() == Expr::Kind::bytes_lit ? e.bytes_value()
                                                   : resolve_bytes(e.path(), env);
        };
        const Bytes& a = bytes_of(p.lhs());
        const Bytes& b = bytes_of(p.rhs());
        return p.op() == CmpOp::eq ? a == b : a != b;
      }
      auto a = eval_int(p.lhs(), env);
      auto b = eval_int(p.rhs(), env);
      if (!a || !b) return false;
      switch (p.op()) {
        case CmpOp::eq: return *a == *b;
        case CmpOp::ne: return *a != *b;
        case CmpOp::lt: return *a < *b;
        case CmpOp::le: return *a <= *b;
        case CmpOp::gt: return *a > *b;
        case CmpOp::ge: return *a >= *b;
      }
      return false;
    }
    case Predicate::Kind::conj:
      for (const auto& c : p.children())
        if (!eval_pred(c, env)) return false;
      return true;
    case Predicate::Kind::disj:
      for (const auto& c : p.children())
        if (eval_pred(c, env)) return true;
      return false;
    case Predicate::Kind::neg:
      return !eval_pred(p.children()[0], env);
    case Predicate::Kind::exists: {
      auto bound = eval_int(p.bound(), env);
      if (!bound) return false;
      std::int64_t hi = std::min(*bound, max_exists_scan);
      for (std::int64_t i = 0; i < hi; ++i) {
        env.vars[p.var_name()] = i;
        bool ok = eval_pred(p.children()[0], env);
        env.vars.erase(p.var_name());
        if (ok) return true;
      }
      return false;
    }
  }
  return false;
}

}  // namespace detail

inline bool evaluate(const Predicate& pred, const Subject& subject) {
  detail::EvalEnv env{&subject, {}};
  return detail::eval_pred(pred, env);
}

// ---------------------------------------------------------------------------
// Specification components
// ---------------------------------------------------------------------------

enum class Layer { frame, packet, shim };
enum class Direction { any, client_to_server, server_to_client };

inline const char* layer_text(Layer l) {
  switch (l) {
    case Layer::frame: return "frame";
    case Layer::packet: return "packet";
    case Layer::shim: return "shim";
  }
  return "?";
}

inline const char* direction_text(Direction d) {
  switch (d) {
    case Direction::any: return "any";
    case Direction::client_to_server: return "client_to_server";
    case Direction::server_to_client: return "server_to_client";
  }
  return "?";
}

struct FieldDecl {
  enum class Type { bytes, uint };
  std::string name;
  Type type = Type::bytes;
  std::uint32_t max_len = 2048;  // bytes fields
  int bits = 64;                 // uint fields

  friend bool operator==(const FieldDecl&, const FieldDecl&) = default;
};

struct SchemaKind {
  std::string name;
  std::optional<std::uint8_t> wire_type;  // frame kinds carry a type byte
  std::vector<FieldDecl> fields;

  const FieldDecl* find(const std::string& field) const {
    for (const auto& f : fields)
      if (f.name == field) return &f;
    return nullptr;
  }

  friend bool operator==(const SchemaKind&, const SchemaKind&) = default;
};

// Deadline measured from the paired triggering event. `idle` marks the
// disconnect-by-silence rule, which closes a connection instead of flagging
// a violation.
struct TimingRule {
  std::string after_event;
  std::int64_t deadline_ms = 0;
  bool idle = false;

  friend bool operator==(const TimingRule&, const TimingRule&) = default;
};

struct SpecComponent {
  std::string name;
  Layer layer = Layer::frame;
  std::string subject_kind;
  std::string event;
  Direction direction = Direction::any;
  bool generation_override = false;
  std::vector<Predicate> requirements;
  std::optional<TimingRule> timing;
};

struct GuaranteeEdge {
  std::string producer;
  std::string consumer;
  friend bool operator==(const GuaranteeEdge&, const GuaranteeEdge&) = default;
};

struct BridgeRule {
  std::string from_event;
  std::string to_component;
  friend bool operator==(const BridgeRule&, const BridgeRule&) = default;
};

struct ProtocolSpec {
  std::string name;
  bool composite = false;
  std::vector<SchemaKind> schema;
  std::vector<SpecComponent> components;
  std::vector<GuaranteeEdge> guarantees;
  std::vector<BridgeRule> bridges;

  const SchemaKind* find_kind(const std::string& kind) const {
    for (const auto& k : schema)
      if (k.name == kind) return &k;
    return nullptr;
  }
  const SchemaKind* find_kind_by_wire(std::uint8_t type_byte) const {
    for (const auto& k : schema)
      if (k.wire_type && *k.wire_type == type_byte) return &k;
    return nullptr;
  }
  const SpecComponent* find_component(const std::string& comp) const {
    for (const auto& c : components)
      if (c.name == comp) return &c;
    return nullptr;
  }

  // Structural diagnostics; empty result means the spec is well-formed.
  std::vector<std::string> validate() const {
    std::vector<std::string> diags;
    std::set<std::string> kind_names;
    for (const auto& k : schema) {
      if (!kind_names.insert(k.name).second)
        diags.push_back("duplicate schema kind '" + k.name + "'");
      std::set<std::string> field_names;
      for (const auto& f : k.fields) {
        if (!field_names.insert(f.name).second)
          diags.push_back("duplicate field '" + f.name + "' in kind '" + k.name + "'");
        if (f.type == FieldDecl::Type::bytes && (f.max_len < 1 || f.max_len > 65535))
          diags.push_back("kind '" + k.name + "' field '" + f.name +
                          "': bytes max_len out of [1,65535]");
        if (f.type == FieldDecl::Type::uint && f.bits != 8 && f.bits != 16 &&
            f.bits != 32 && f.bits != 64)
          diags.push_back("kind '" + k.name + "' field '" + f.name +
                          "': uint bits not in {8,16,32,64}");
      }
    }
    std::set<std::string> comp_names, event_names;
    for (const auto& c : components) {
      if (!comp_names.insert(c.name).second)
        diags.push_back("duplicate component '" + c.name + "'");
      if (!event_names.insert(c.event).second)
        diags.push_back("duplicate event '" + c.event + "'");
      const SchemaKind* k = find_kind(c.subject_kind);
      if (!k) {
        diags.push_back("component '" + c.name + "' subject kind '" +
                        c.subject_kind + "' not declared");
        continue;
      }
      if (c.timing && c.timing->deadline_ms <= 0)
        diags.push_back("component '" + c.name + "' timing deadline must be positive");
      for (std::size_t i = 0; i < c.requirements.size(); ++i) {
        for (const FieldPath& p : c.requirements[i].paths()) {
          if (p.kind != c.subject_kind) {
            diags.push_back("component '" + c.name + "' requirement " +
                            std::to_string(i) + ": path kind '" + p.kind +
                            "' does not match subject '" + c.subject_kind + "'");
            continue;
          }
          const FieldDecl* f = k->find(p.field);
          if (!f) {
            diags.push_back("component '" + c.name + "' requirement " +
                            std::to_string(i) + ": unresolved field path f." + p.field);
          } else if (p.length && f->type != FieldDecl::Type::bytes) {
            diags.push_back("component '" + c.name + "' requirement " +
                            std::to_string(i) + ": .end on non-bytes field f." + p.field);
          }
        }
      }
    }
    for (const auto& g : guarantees) {
      if (!comp_names.count(g.producer))
        diags.push_back("guarantee references unknown producer '" + g.producer + "'");
      if (!comp_names.count(g.consumer))
        diags.push_back("guarantee references unknown consumer '" + g.consumer + "'");
    }
    if (cyclic()) diags.push_back("guarantee graph is cyclic");
    for (const auto& b : bridges) {
      if (!event_names.count(b.from_event))
        diags.push_back("bridge references unknown event '" + b.from_event + "'");
      if (!comp_names.count(b.to_component))
        diags.push_back("bridge references unknown component '" + b.to_component + "'");
    }
    return diags;
  }

  void ensure_valid() const {
    auto diags = validate();
    if (!diags.empty()) throw Error("invalid spec '" + name + "': " + diags.front());
  }

 private:
  bool cyclic() const {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& g : guarantees) adj[g.producer].push_back(g.consumer);
    std::map<std::string, int> state;  // 0 new, 1 active, 2 done
    std::vector<std::pair<std::string, std::size_t>> stack;
    for (const auto& [start, _] : adj) {
      if (state[start]) continue;
      stack.push_back({start, 0});
      state[start] = 1;
      while (!stack.empty()) {
        auto& [node, next] = stack.back();
        auto& edges = adj[node];
        if (next < edges.size()) {
          const std::string& to = edges[next++];
          if (state[to] == 1) return true;
          if (state[to] == 0) {
            state[to] = 1;
            stack.push_back({to, 0});
          }
        } else {
          state[node] = 2;
          stack.pop_back();
        }
      }
    }
    return false;
  }
};

// ---------------------------------------------------------------------------
// check_event
// ---------------------------------------------------------------------------

struct Violation {
  std::string component;
  std::size_t requirement_index = 0;
  bool timing = false;
  std::string predicate_text;
  std::string subject_snapshot;
  std::int64_t clock_ms = 0;

  std::string to_string() const {
    std::string s = component + " requirement " + std::to_string(requirement_index);
    if (timing) s = component + " timing";
    return s + " violated [" + predicate_text + "] on " + subject_snapshot +
           " at t=" + std::to_string(clock_ms) + "ms";
  }
};

// Checks one component against a subject; `clock_ms` is elapsed time since
// the component's paired trigger event (ignored without a timing rule).
inline void check_component(const SpecComponent& c, const Subject& subject,
                            std::int64_t clock_ms, std::vector<Violation>& out) {
  for (std::size_t i = 0; i < c.requirements.size(); ++i) {
    if (!evaluate(c.requirements[i], subject)) {
      Violation v;
      v.component = c.name;
      v.requirement_index = i;
      v.predicate_text = c.requirements[i].to_string();
      v.subject_snapshot = subject.snapshot();
      v.clock_ms = clock_ms;
      out.push_back(std::move(v));
    }
  }
  if (c.timing && !c.timing->idle && clock_ms > c.timing->deadline_ms) {
    Violation v;
    v.component = c.name;
    v.timing = true;
    v.predicate_text = "response within " + std::to_string(c.timing->deadline_ms) +
                       "ms of " + c.timing->after_event;
    v.subject_snapshot = subject.snapshot();
    v.clock_ms = clock_ms;
    out.push_back(std::move(v));
  }
}

inline std::vector<Violation> check_event(const ProtocolSpec& spec,
                                          const std::string& event,
                                          const Subject& subject,
                                          std::int64_t clock_ms) {
  std::vector<const SpecComponent*> targets;
  for (const auto& c : spec.components)
    if (c.event == event) targets.push_back(&c);
  for (const auto& b : spec.bridges) {
    if (b.from_event != event) continue;
    const SpecComponent* c = spec.find_component(b.to_component);
    if (c) targets.push_back(c);
  }
  if (targets.empty()) throw UnknownEventError("unknown event '" + event + "'");
  std::vector<Violation> out;
  for (const SpecComponent* c : targets) check_component(*c, subject, clock_ms, out);
  return out;
}

// ---------------------------------------------------------------------------
// compose
// ---------------------------------------------------------------------------

namespace detail {

inline Expr qualify_expr(const Expr& e, const std::string& prefix);

inline FieldPath qualify_path(FieldPath p, const std::string& prefix) {
  p.kind = prefix + p.kind;
  return p;
}

inline Expr qualify_expr(const Expr& e, const std::string& prefix) {
  switch (e.kind()) {
    case Expr::Kind::int_lit:
    case Expr::Kind::bytes_lit:
    case Expr::Kind::var:
      return e;
    case Expr::Kind::field_bytes:
      return Expr::field_bytes(qualify_path(e.path(), prefix));
    case Expr::Kind::field_len:
      return Expr::field_len(qualify_path(e.path(), prefix));
    case Expr::Kind::field_int:
      return Expr::field_int(qualify_path(e.path(), prefix));
    case Expr::Kind::field_byte_at:
      return Expr::field_byte_at(qualify_path(e.path(), prefix),
                                 qualify_expr(e.lhs(), prefix));
    case Expr::Kind::add:
    case Expr::Kind::sub:
    case Expr::Kind::mul:
      return Expr::arith(e.kind(), qualify_expr(e.lhs(), prefix),
                         qualify_expr(e.rhs(), prefix));
  }
  return e;
}

inline Predicate qualify_pred(const Predicate& p, const std::string& prefix) {
  switch (p.kind()) {
    case Predicate::Kind::truth:
      return p;
    case Predicate::Kind::cmp:
      return Predicate::cmp(p.op(), qualify_expr(p.lhs(), prefix),
                            qualify_expr(p.rhs(), prefix));
    case Predicate::Kind::conj: {
      std::vector<Predicate> cs;
      for (const auto& c : p.children()) cs.push_back(qualify_pred(c, prefix));
      return Predicate::conj(std::move(cs));
    }
    case Predicate::Kind::disj: {
      std::vector<Predicate> cs;
      for (const auto& c : p.children()) cs.push_back(qualify_pred(c, prefix));
      return Predicate::disj(std::move(cs));
    }
    case Predicate::Kind::neg:
      return Predicate::neg(qualify_pred(p.children()[0], prefix));
    case Predicate::Kind::exists:
      return Predicate::exists(p.var_name(), qualify_expr(p.bound(), prefix),
                               qualify_pred(p.children()[0], prefix));
  }
  return p;
}

// Prefixes every name in a single-protocol spec with "<proto>.". Composite
// inputs pass through unchanged, which keeps compose associative on the
// component sets.
inline ProtocolSpec qualify_spec(const ProtocolSpec& s) {
  if (s.composite) return s;
  const std::string prefix = s.name + ".";
  ProtocolSpec out = s;
  for (auto& k : out.schema) k.name = prefix + k.name;
  for (auto& c : out.components) {
    c.name = prefix + c.name;
    c.event = prefix + c.event;
    c.subject_kind = prefix + c.subject_kind;
    for (auto& r : c.requirements) r = qualify_pred(r, prefix);
    if (c.timing) c.timing->after_event = prefix + c.timing->after_event;
  }
  for (auto& g : out.guarantees) {
    g.producer = prefix + g.producer;
    g.consumer = prefix + g.consumer;
  }
  for (auto& b : out.bridges) {
    b.from_event = prefix + b.from_event;
    b.to_component = prefix + b.to_component;
  }
  return out;
}

}  // namespace detail

inline ProtocolSpec compose(const ProtocolSpec& base, const ProtocolSpec& other,
                            std::vector<BridgeRule> bridge = {}) {
  ProtocolSpec a = detail::qualify_spec(base);
  ProtocolSpec b = detail::qualify_spec(other);
  ProtocolSpec out;
  out.name = base.name + "+" + other.name;
  out.composite = true;
  out.schema = a.schema;
  out.schema.insert(out.schema.end(), b.schema.begin(), b.schema.end());
  out.components = a.components;
  out.components.insert(out.components.end(), b.components.begin(), b.components.end());
  out.guarantees = a.guarantees;
  out.guarantees.insert(out.guarantees.end(), b.guarantees.begin(), b.guarantees.end());
  out.bridges = a.bridges;
  out.bridges.insert(out.bridges.end(), b.bridges.begin(), b.bridges.end());

  std::set<std::string> comp_names, event_names, kind_names;
  for (const auto& k : out.schema)
    if (!kind_names.insert(k.name).second)
      throw NameCollisionError("schema kind '" + k.name + "' exists in both specs");
  for (const auto& c : out.components) {
    if (!comp_names.insert(c.name).second)
      throw NameCollisionError("component '" + c.name + "' exists in both specs");
    event_names.insert(c.event);
  }
  for (auto& rule : bridge) {
    if (!event_names.count(rule.from_event))
      throw DanglingBridgeError("bridge references unknown event '" + rule.from_event + "'");
    if (!comp_names.count(rule.to_component))
      throw DanglingBridgeError("bridge references unknown component '" +
                                rule.to_component + "'");
    out.bridges.push_back(std::move(rule));
  }
  return out;
}

}  // namespace nact
